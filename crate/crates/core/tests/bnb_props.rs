mod common;

use common::{random_problem, rng, sample_point};
use subdiv::bnb::{solve_with, SolverResult};
use subdiv::dag::{eval_real, eval_real_all, parse_problem, print_problem};
use subdiv::{solve, Bounder, BoundingEngine, PartitionStrategy, Problem, SolverConfig, Status};

fn config(bounder: Bounder, subdomains: usize) -> SolverConfig {
    SolverConfig { bounder, target_subdomains: subdomains, workers: 1, max_iter: 3000, ..SolverConfig::default() }
}

/// Everything except wall-clock times.
fn same_run(a: &SolverResult, b: &SolverResult) -> bool {
    let key = |r: &SolverResult| {
        (
            r.status,
            r.incumbent.as_ref().map(|x| x.iter().map(|v| v.to_bits()).collect::<Vec<_>>()),
            r.ub.to_bits(),
            r.lb.to_bits(),
            r.root_lb.to_bits(),
            r.iterations,
            r.nodes_created,
            r.nodes_pruned_bound,
            r.nodes_pruned_infeasible,
            r.history.iter().map(|h| (h.iteration, h.nodes_open, h.lb.to_bits(), h.ub.to_bits())).collect::<Vec<_>>(),
        )
    };
    key(a) == key(b)
}

fn feasible(p: &Problem, x: &[f64], tol: f64) -> Option<f64> {
    let vals = eval_real_all(p, x);
    let ni = p.ineq().len();
    let mut it = vals.into_iter();
    let f = it.next()?.ok()?;
    for (k, v) in it.enumerate() {
        let v = v.ok()?;
        let ok = if k < ni { v <= tol } else { v.abs() <= tol };
        if !ok {
            return None;
        }
    }
    Some(f)
}

fn check_history(r: &SolverResult) {
    for w in r.history.windows(2) {
        assert!(w[1].lb >= w[0].lb, "lb decreased: {} -> {}", w[0].lb, w[1].lb);
        assert!(w[1].ub <= w[0].ub, "ub increased: {} -> {}", w[0].ub, w[1].ub);
        assert_eq!(w[1].iteration, w[0].iteration + 1);
    }
    for h in &r.history {
        assert!(h.lb <= h.ub || h.ub == f64::INFINITY && h.lb == f64::INFINITY, "{} > {}", h.lb, h.ub);
    }
}

#[test]
fn random_problems_are_solved_soundly() {
    let mut r = rng(40);
    let mut solved = 0;
    for _ in 0..40 {
        let p = random_problem(&mut r, 3, false);
        let mut best_sample = f64::INFINITY;
        for _ in 0..2000 {
            if let Ok(v) = eval_real(&p, p.objective(), &sample_point(&mut r, p.domain())) {
                best_sample = best_sample.min(v);
            }
        }
        for bounder in [Bounder::Nie, Bounder::Mvf] {
            let res = solve(&p, &config(bounder, 16)).unwrap();
            check_history(&res);
            assert!(res.lb <= best_sample, "{bounder:?}: lb {} above sampled {best_sample}\n{}", res.lb, print_problem(&p));
            if let Some(x) = &res.incumbent {
                assert!(p.domain().contains(x));
                assert_eq!(eval_real(&p, p.objective(), x).unwrap(), res.ub);
            }
            if res.status == Status::Optimal {
                assert!(res.ub - res.lb <= 1e-4 || res.ub - res.lb <= 1e-4 * res.ub.abs().max(1.0));
                solved += 1;
            }
        }
    }
    assert!(solved >= 40, "only {solved} runs converged");
}

#[test]
fn constrained_random_problems_keep_feasible_incumbents() {
    let mut r = rng(41);
    for _ in 0..30 {
        let p = random_problem(&mut r, 3, true);
        let c = config(Bounder::Mvf, 16);
        let res = solve(&p, &c).unwrap();
        check_history(&res);
        if let Some(x) = &res.incumbent {
            let f = feasible(&p, x, c.feas_tol).unwrap_or_else(|| panic!("infeasible incumbent {x:?}\n{}", print_problem(&p)));
            assert_eq!(f, res.ub);
        } else {
            assert_eq!(res.ub, f64::INFINITY);
        }
        let mut best_sample = f64::INFINITY;
        for _ in 0..2000 {
            if let Some(v) = feasible(&p, &sample_point(&mut r, p.domain()), 0.0) {
                best_sample = best_sample.min(v);
            }
        }
        assert!(res.lb <= best_sample, "lb {} above sampled {best_sample}\n{}", res.lb, print_problem(&p));
        if res.status == Status::Infeasible {
            assert_eq!(best_sample, f64::INFINITY);
        }
    }
}

#[test]
fn runs_are_deterministic_across_worker_counts() {
    let mut r = rng(42);
    let engines: Vec<BoundingEngine> = [1, 4, 0].iter().map(|&w| BoundingEngine::new(w).unwrap()).collect();
    for _ in 0..10 {
        let p = random_problem(&mut r, 3, true);
        for partition in [PartitionStrategy::Uniform, PartitionStrategy::Largest, PartitionStrategy::Adaptive] {
            let c = SolverConfig { partition, max_iter: 500, ..config(Bounder::Mvf, 64) };
            let reference = solve_with(&engines[0], &p, &c).unwrap();
            for e in &engines[1..] {
                assert!(same_run(&reference, &solve_with(e, &p, &c).unwrap()), "{partition:?}\n{}", print_problem(&p));
            }
        }
    }
}

#[test]
fn spec_examples() {
    let p = parse_problem("var x in [-1,1]; obj: x^2").unwrap();
    let res = solve(&p, &config(Bounder::Mvf, 64)).unwrap();
    assert_eq!(res.status, Status::Optimal);
    assert!(res.ub.abs() <= 1e-4);
    assert!(res.incumbent.unwrap()[0].abs() <= 1e-2);

    let p = parse_problem("var x in [-1,1]; obj: x; con g: 1 + x^2 <= 0").unwrap();
    let res = solve(&p, &config(Bounder::Mvf, 64)).unwrap();
    assert_eq!(res.status, Status::Infeasible);
    assert!(res.incumbent.is_none());
    assert_eq!(res.nodes_pruned_infeasible, res.iterations);
    assert_eq!(res.nodes_pruned_bound, 0);
}
