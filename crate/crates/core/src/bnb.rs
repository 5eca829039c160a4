//! Best-first spatial branch and bound.
//!
//! The loop is sequential and deterministic; all parallel work happens inside
//! [`BoundingEngine::refine`].

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::bounder::{breakpoints, BoundError, Bounder, BoundingEngine, Partition, PartitionPlan, PartitionStrategy, Refinement, Schedule};
use crate::dag::{eval_real_all, Problem};
use crate::interval::{Interval, IntervalBox};
use crate::tangent::real_gradient;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub bounder: Bounder,
    pub partition: PartitionStrategy,
    pub target_subdomains: usize,
    pub schedule: Schedule,
    /// Worker threads for bounding; 0 means all available cores.
    pub workers: usize,
    pub eps_abs: f64,
    pub eps_rel: f64,
    pub max_iter: usize,
    pub time_limit: Option<Duration>,
    pub feas_tol: f64,
    /// Local improvement of upper-bound candidates.
    pub polish: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            bounder: Bounder::Mvf,
            partition: PartitionStrategy::Adaptive,
            target_subdomains: 1024,
            schedule: Schedule::Staged,
            workers: 0,
            eps_abs: 1e-4,
            eps_rel: 1e-4,
            max_iter: 1_000_000,
            time_limit: None,
            feas_tol: 1e-6,
            polish: true,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolveError> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(SolveError::Config(format!("{name} must be positive and finite, got {v}")))
            }
        };
        positive("eps_abs", self.eps_abs)?;
        positive("eps_rel", self.eps_rel)?;
        positive("feas_tol", self.feas_tol)?;
        if self.target_subdomains < 1 {
            return Err(SolveError::Config("target_subdomains must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Bound(#[from] BoundError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Optimal,
    MaxIter,
    TimeLimit,
    Infeasible,
}

impl Status {
    pub fn name(&self) -> &'static str {
        match self {
            Status::Optimal => "optimal",
            Status::MaxIter => "max_iter",
            Status::TimeLimit => "time_limit",
            Status::Infeasible => "infeasible",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HistoryRow {
    pub iteration: usize,
    pub nodes_open: usize,
    pub lb: f64,
    pub ub: f64,
    pub wall: Duration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverResult {
    pub status: Status,
    pub incumbent: Option<Vec<f64>>,
    pub ub: f64,
    pub lb: f64,
    /// Objective lower bound of the root refinement.
    pub root_lb: f64,
    pub iterations: usize,
    pub nodes_created: usize,
    pub nodes_pruned_bound: usize,
    pub nodes_pruned_infeasible: usize,
    pub history: Vec<HistoryRow>,
}

impl SolverResult {
    pub fn gap(&self) -> f64 {
        gap(self.lb, self.ub)
    }
}

/// `ub - lb`, and infinite while no incumbent exists.
pub fn gap(lb: f64, ub: f64) -> f64 {
    if ub == f64::INFINITY {
        f64::INFINITY
    } else {
        ub - lb
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BnbNode {
    pub domain: IntervalBox,
    pub lb: f64,
    pub depth: usize,
    pub id: usize,
}

/// Heap entry ordered so the max-heap pops the minimal `(lb, id)`.
struct Open(BnbNode);

impl PartialEq for Open {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Open {}
impl PartialOrd for Open {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Open {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.lb.total_cmp(&self.0.lb).then(other.0.id.cmp(&self.0.id))
    }
}

/// Best-bound-first selection: minimal lower bound, then lowest id.
pub fn select_node(open: &[BnbNode]) -> Option<&BnbNode> {
    open.iter().min_by(|a, b| a.lb.total_cmp(&b.lb).then(a.id.cmp(&b.id)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Keep,
    Prune,
}

/// Prunes when some inequality is certainly violated (lower bound above 0)
/// or some equality certainly cannot vanish (0 outside its bound).
pub fn feasibility_check(ineq: &[Interval], eq: &[Interval]) -> Verdict {
    if ineq.iter().any(|g| g.lo() > 0.0) || eq.iter().any(|h| !h.contains_zero()) {
        Verdict::Prune
    } else {
        Verdict::Keep
    }
}

pub fn lower_bound_test(lb: f64, ub: f64, config: &SolverConfig) -> Verdict {
    let abs = lb >= ub - config.eps_abs;
    let rel = lb >= ub - config.eps_rel * ub.abs().max(1.0);
    if abs && rel {
        Verdict::Prune
    } else {
        Verdict::Keep
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("cannot branch point box")]
pub struct BranchError;

/// Bisects the widest dimension; children inherit the parent bound.
/// Ids are assigned by the caller.
pub fn branch(node: &BnbNode) -> Result<(BnbNode, BnbNode), BranchError> {
    let d = node.domain.widest_dim();
    let iv = node.domain[d];
    let t = breakpoints(iv, 2)[1];
    if !(iv.lo() < t && t < iv.hi()) {
        return Err(BranchError);
    }
    let mut left = node.domain.clone();
    let mut right = node.domain.clone();
    left.dims_mut()[d] = Interval::new(iv.lo(), t).expect("ordered");
    right.dims_mut()[d] = Interval::new(t, iv.hi()).expect("ordered");
    let child = |domain| BnbNode { domain, lb: node.lb, depth: node.depth + 1, id: 0 };
    Ok((child(left), child(right)))
}

/// Objective value at `x` if `x` satisfies every constraint within `feas_tol`.
fn feasible_value(problem: &Problem, x: &[f64], feas_tol: f64) -> Option<f64> {
    let vals = eval_real_all(problem, x);
    let vals: Vec<f64> = vals.into_iter().collect::<Result<_, _>>().ok()?;
    let ni = problem.ineq().len();
    let ok = vals[1..1 + ni].iter().all(|&g| g <= feas_tol) && vals[1 + ni..].iter().all(|&h| h.abs() <= feas_tol);
    (ok && vals[0].is_finite()).then_some(vals[0])
}

/// Moves `x` towards the constraint set with minimum-norm Gauss-Newton steps
/// on the violated constraints, staying inside `domain`.
fn project(problem: &Problem, domain: &IntervalBox, x: &mut Vec<f64>, feas_tol: f64) {
    let ni = problem.ineq().len();
    let roots = problem.roots();
    for _ in 0..20 {
        let Ok(vals) = eval_real_all(problem, x).into_iter().collect::<Result<Vec<f64>, _>>() else { return };
        let mut active = Vec::new();
        for (r, &v) in vals.iter().enumerate().skip(1) {
            let violated = if r <= ni { v > feas_tol * 0.5 } else { v.abs() > feas_tol * 0.5 };
            if violated {
                active.push((roots[r], v));
            }
        }
        if active.is_empty() {
            return;
        }
        let n = x.len();
        let mut jac = DMatrix::<f64>::zeros(active.len(), n);
        let mut res = DVector::<f64>::zeros(active.len());
        for (row, &(root, v)) in active.iter().enumerate() {
            let Ok(g) = real_gradient(problem, root, x) else { return };
            for (col, gi) in g.into_iter().enumerate() {
                jac[(row, col)] = gi;
            }
            res[row] = v;
        }
        let gram = &jac * jac.transpose();
        let Some(y) = gram.lu().solve(&res) else { return };
        let step = jac.transpose() * y;
        if !step.iter().all(|s| s.is_finite()) {
            return;
        }
        for (xi, si) in x.iter_mut().zip(step.iter()) {
            *xi -= si;
        }
        domain.clamp(x);
    }
}

/// Projected coordinate descent with step halving inside `domain`.
fn polish(problem: &Problem, domain: &IntervalBox, x: &mut Vec<f64>, fx: &mut f64, feas_tol: f64) {
    let constrained = problem.num_roots() > 1;
    let mut steps: Vec<f64> = domain.dims().iter().map(|d| 0.25 * d.width()).collect();
    for _ in 0..50 {
        let mut improved = false;
        for i in 0..x.len() {
            for dir in [1.0, -1.0] {
                let mut y = x.clone();
                y[i] += dir * steps[i];
                domain.clamp(&mut y);
                if constrained {
                    project(problem, domain, &mut y, feas_tol);
                }
                if let Some(fy) = feasible_value(problem, &y, feas_tol) {
                    if fy < *fx {
                        *x = y;
                        *fx = fy;
                        improved = true;
                        break;
                    }
                }
            }
        }
        if !improved {
            for s in &mut steps {
                *s *= 0.5;
            }
            if steps.iter().zip(x.iter()).all(|(s, xi)| *s <= 1e-13 * xi.abs().max(1.0)) {
                return;
            }
        }
    }
}

/// Best feasible point found from the node midpoint and the midpoint of the
/// subdomain with the smallest objective lower bound.
pub fn upper_bound_node(
    problem: &Problem,
    domain: &IntervalBox,
    refinement: &Refinement,
    config: &SolverConfig,
) -> Option<(Vec<f64>, f64)> {
    let mut starts = vec![domain.midpoint().ok()?];
    if let Ok(part) = Partition::new(domain, refinement.plan.clone()) {
        let m = part.subdomain(refinement.best_subdomain()).midpoint().ok()?;
        if m != starts[0] {
            starts.push(m);
        }
    }
    let mut best: Option<(Vec<f64>, f64)> = None;
    for mut x in starts {
        let mut fx = feasible_value(problem, &x, config.feas_tol);
        if fx.is_none() && config.polish && problem.num_roots() > 1 {
            project(problem, domain, &mut x, config.feas_tol);
            fx = feasible_value(problem, &x, config.feas_tol);
        }
        let Some(mut fx) = fx else { continue };
        if config.polish {
            polish(problem, domain, &mut x, &mut fx, config.feas_tol);
        }
        if best.as_ref().map_or(true, |(_, b)| fx < *b) {
            best = Some((x, fx));
        }
    }
    best
}

pub fn solve(problem: &Problem, config: &SolverConfig) -> Result<SolverResult, SolveError> {
    let engine = BoundingEngine::new(config.workers)?;
    solve_with(&engine, problem, config)
}

/// As [`solve`], reusing an existing worker pool.
pub fn solve_with(engine: &BoundingEngine, problem: &Problem, config: &SolverConfig) -> Result<SolverResult, SolveError> {
    config.validate()?;
    let start = Instant::now();
    let mut open = BinaryHeap::new();
    open.push(Open(BnbNode { domain: problem.domain().clone(), lb: f64::NEG_INFINITY, depth: 0, id: 0 }));
    let mut next_id = 1;
    let mut incumbent: Option<Vec<f64>> = None;
    let mut ub = f64::INFINITY;
    // Smallest bound among closed nodes that may still hold feasible points.
    let mut closed_lb = f64::INFINITY;
    let mut reported_lb = f64::NEG_INFINITY;
    let mut root_lb = f64::NEG_INFINITY;
    let mut iterations = 0;
    let mut pruned_bound = 0;
    let mut pruned_infeasible = 0;
    let mut history = Vec::new();

    let status = loop {
        let Some(Open(node)) = open.pop() else {
            break if incumbent.is_some() { Status::Optimal } else { Status::Infeasible };
        };
        if iterations >= config.max_iter {
            open.push(Open(node));
            break Status::MaxIter;
        }
        if config.time_limit.is_some_and(|t| start.elapsed() >= t) {
            open.push(Open(node));
            break Status::TimeLimit;
        }
        iterations += 1;

        let plan = PartitionPlan::for_strategy(config.partition, &node.domain, config.target_subdomains)?;
        let refinement = engine.refine(problem, &node.domain, &plan, config.bounder, config.schedule)?;
        if iterations == 1 {
            root_lb = refinement.hull_obj.lo();
        }

        let mut node = node;
        if feasibility_check(refinement.ineq_hulls(), refinement.eq_hulls()) == Verdict::Prune {
            pruned_infeasible += 1;
        } else {
            node.lb = node.lb.max(refinement.hull_obj.lo());
            if lower_bound_test(node.lb, ub, config) == Verdict::Prune {
                pruned_bound += 1;
                closed_lb = closed_lb.min(node.lb);
            } else {
                if let Some((x, fx)) = upper_bound_node(problem, &node.domain, &refinement, config) {
                    if fx < ub {
                        ub = fx;
                        incumbent = Some(x);
                    }
                }
                if lower_bound_test(node.lb, ub, config) == Verdict::Prune {
                    pruned_bound += 1;
                    closed_lb = closed_lb.min(node.lb);
                } else {
                    match branch(&node) {
                        Ok((mut l, mut r)) => {
                            l.id = next_id;
                            r.id = next_id + 1;
                            next_id += 2;
                            open.push(Open(l));
                            open.push(Open(r));
                        }
                        Err(BranchError) => closed_lb = closed_lb.min(node.lb),
                    }
                }
            }
        }

        let open_lb = open.peek().map_or(f64::INFINITY, |o| o.0.lb);
        reported_lb = reported_lb.max(open_lb.min(closed_lb)).min(ub);
        history.push(HistoryRow { iteration: iterations, nodes_open: open.len(), lb: reported_lb, ub, wall: start.elapsed() });
    };

    let lb = match status {
        Status::Infeasible => f64::INFINITY,
        _ => reported_lb,
    };
    Ok(SolverResult {
        status,
        incumbent,
        ub,
        lb,
        root_lb,
        iterations,
        nodes_created: next_id,
        nodes_pruned_bound: pruned_bound,
        nodes_pruned_infeasible: pruned_infeasible,
        history,
    })
}
