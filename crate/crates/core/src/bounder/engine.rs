use rayon::prelude::*;

use crate::arith::{EvalError, Scalar};
use crate::dag::eval::{apply_node, eval_nodes_into};
use crate::dag::{Dag, NodeId, Problem, RootBounds};
use crate::interval::{Interval, IntervalBox};
use crate::tangent::Tangent;

use super::{Bounder, BoundError, Partition, PartitionPlan, Schedule};

/// Diagnostics for one subdomain.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SubdomainFlags {
    /// Some intrinsic argument was intersected with its natural domain.
    pub clipped: bool,
    /// Some root fell back from the mean value form to the natural extension.
    pub fallback: bool,
    /// Some root could not be bounded at all and was set to the whole line.
    pub unbounded: bool,
}

/// Per-subdomain bounds of every root and their hulls.
#[derive(Debug, Clone, PartialEq)]
pub struct Refinement {
    pub plan: PartitionPlan,
    pub obj_bounds: Vec<Interval>,
    /// One row per constraint: inequalities first, then equalities.
    pub con_bounds: Vec<Vec<Interval>>,
    pub hull_obj: Interval,
    pub hull_con: Vec<Interval>,
    pub flags: Vec<SubdomainFlags>,
    num_ineq: usize,
}

impl Refinement {
    pub fn ineq_hulls(&self) -> &[Interval] {
        &self.hull_con[..self.num_ineq]
    }

    pub fn eq_hulls(&self) -> &[Interval] {
        &self.hull_con[self.num_ineq..]
    }

    pub fn len(&self) -> usize {
        self.obj_bounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.obj_bounds.is_empty()
    }

    /// Subdomain with the smallest objective lower bound (lowest index on ties).
    pub fn best_subdomain(&self) -> usize {
        let mut best = 0;
        for (k, b) in self.obj_bounds.iter().enumerate() {
            if b.lo() < self.obj_bounds[best].lo() {
                best = k;
            }
        }
        best
    }

    pub fn any_clipped(&self) -> bool {
        self.flags.iter().any(|f| f.clipped)
    }

    pub fn fallbacks(&self) -> usize {
        self.flags.iter().filter(|f| f.fallback).count()
    }

    pub fn unbounded(&self) -> usize {
        self.flags.iter().filter(|f| f.unbounded).count()
    }

    /// Hull of the whole refinement as a per-root record.
    pub fn hull_bounds(&self) -> RootBounds {
        RootBounds {
            obj: self.hull_obj,
            ineq: self.ineq_hulls().to_vec(),
            eq: self.eq_hulls().to_vec(),
        }
    }
}

/// Interval hull over a fixed-shape binary tree: the split points depend only
/// on the slice length, so the result never depends on how work was scheduled.
pub fn hull_tree(xs: &[Interval]) -> Interval {
    match xs.len() {
        0 => panic!("hull of no intervals"),
        1 => xs[0],
        n => {
            let (a, b) = xs.split_at(n / 2);
            hull_tree(a).hull(&hull_tree(b))
        }
    }
}

type Lane<S> = Vec<Result<S, EvalError>>;

/// Root-ordered values of one subdomain in every lane the bounder needs.
struct LaneRoots {
    nie: Vec<Result<Interval, EvalError>>,
    mid: Vec<Result<Interval, EvalError>>,
    /// `sweeps[i][r]`: tangent of root `r` seeded in direction `i`.
    sweeps: Vec<Vec<Result<Tangent<Interval>, EvalError>>>,
}

/// Combines the lanes of one subdomain into per-root bounds.
fn combine(bounder: Bounder, x: &[Interval], mids: &[f64], lanes: &LaneRoots, flags: &mut SubdomainFlags) -> Vec<Interval> {
    (0..lanes.nie.len())
        .map(|r| {
            if bounder == Bounder::Mvf {
                match mean_value(x, mids, lanes, r) {
                    Ok(b) => return b,
                    Err(_) => flags.fallback = true,
                }
            }
            match lanes.nie[r] {
                Ok(b) => b,
                Err(_) => {
                    flags.unbounded = true;
                    Interval::ENTIRE
                }
            }
        })
        .collect()
}

/// `f(m) + sum_i g_i (X_i - m_i)`, summed left to right.
fn mean_value(x: &[Interval], mids: &[f64], lanes: &LaneRoots, r: usize) -> Result<Interval, EvalError> {
    let fm = lanes.mid[r]?;
    let mut s: Option<Interval> = None;
    for (i, sweep) in lanes.sweeps.iter().enumerate() {
        let g = sweep[r]?.der;
        let term = g.mul(x[i].sub(Interval::point(mids[i])));
        s = Some(match s {
            Some(acc) => acc.add(term),
            None => term,
        });
    }
    Ok(match s {
        Some(s) => fm.add(s),
        None => fm,
    })
}

fn midpoints(x: &[Interval]) -> Vec<f64> {
    x.iter().map(|d| d.midpoint().expect("partition boxes are bounded")).collect()
}

/// Natural interval extension of every root over `x`. Roots whose evaluation
/// fails are bounded by the whole line.
pub fn bound_nie(problem: &Problem, x: &IntervalBox) -> (RootBounds, SubdomainFlags) {
    let mut scratch = Scratch::default();
    bound_one(problem, Bounder::Nie, x.dims(), &mut scratch)
}

/// Mean value form of every root over `x`, falling back per root to the
/// natural extension where the midpoint value or a gradient sweep fails.
pub fn bound_mvf(problem: &Problem, x: &IntervalBox) -> (RootBounds, SubdomainFlags) {
    let mut scratch = Scratch::default();
    bound_one(problem, Bounder::Mvf, x.dims(), &mut scratch)
}

fn bound_one(problem: &Problem, bounder: Bounder, x: &[Interval], scratch: &mut Scratch) -> (RootBounds, SubdomainFlags) {
    assert_eq!(x.len(), problem.num_vars(), "box dimension");
    let roots = problem.roots();
    let mut flags = SubdomainFlags::default();
    let bounds = fused_subdomain(problem.dag(), &roots, bounder, x, scratch, &mut flags);
    (RootBounds::from_roots(problem, &bounds), flags)
}

#[derive(Default)]
struct Scratch {
    iv: Lane<Interval>,
    tan: Lane<Tangent<Interval>>,
    vars_iv: Vec<Interval>,
    vars_tan: Vec<Tangent<Interval>>,
}

/// Whole-graph evaluation of one subdomain, lane after lane.
fn fused_subdomain(
    dag: &Dag,
    roots: &[NodeId],
    bounder: Bounder,
    x: &[Interval],
    scratch: &mut Scratch,
    flags: &mut SubdomainFlags,
) -> Vec<Interval> {
    let pick = |lane: &Lane<Interval>| roots.iter().map(|r| lane[r.index()]).collect::<Vec<_>>();
    let mut clipped = false;

    eval_nodes_into(dag, x, &mut clipped, &mut scratch.iv);
    let nie = pick(&scratch.iv);
    let mut lanes = LaneRoots { nie, mid: Vec::new(), sweeps: Vec::new() };
    let mids = midpoints(x);
    if bounder == Bounder::Mvf {
        scratch.vars_iv.clear();
        scratch.vars_iv.extend(mids.iter().map(|&m| Interval::point(m)));
        eval_nodes_into(dag, &scratch.vars_iv, &mut clipped, &mut scratch.iv);
        lanes.mid = pick(&scratch.iv);
        for seed in 0..x.len() {
            scratch.vars_tan.clear();
            scratch.vars_tan.extend(x.iter().enumerate().map(|(i, &d)| Tangent::variable(d, i == seed)));
            eval_nodes_into(dag, &scratch.vars_tan, &mut clipped, &mut scratch.tan);
            lanes.sweeps.push(roots.iter().map(|r| scratch.tan[r.index()]).collect());
        }
    }
    flags.clipped = clipped;
    combine(bounder, x, &mids, &lanes, flags)
}

/// Node-major evaluation of one lane over all subdomains.
///
/// Returns `out[root][k]` and ORs clipping into `clipped[k]`.
fn staged_lane<S: Scalar>(
    dag: &Dag,
    roots: &[NodeId],
    total: usize,
    leaf: impl Fn(usize, usize) -> S + Sync,
    clipped: &mut [bool],
) -> Vec<Vec<Result<S, EvalError>>> {
    let mut rows: Vec<Lane<S>> = Vec::with_capacity(dag.len());
    for node in dag.nodes() {
        let row: Vec<(Result<S, EvalError>, bool)> = (0..total)
            .into_par_iter()
            .map(|k| {
                let mut c = false;
                let v = apply_node(node, |i| leaf(k, i), |id| rows[id.index()][k], &mut c);
                (v, c)
            })
            .collect();
        let mut values = Vec::with_capacity(total);
        for (k, (v, c)) in row.into_iter().enumerate() {
            clipped[k] |= c;
            values.push(v);
        }
        rows.push(values);
    }
    roots.iter().map(|r| rows[r.index()].clone()).collect()
}

/// Worker pool driving subdomain bounding.
pub struct BoundingEngine {
    pool: rayon::ThreadPool,
    workers: usize,
}

impl std::fmt::Debug for BoundingEngine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BoundingEngine").field("workers", &self.workers).finish()
    }
}

impl BoundingEngine {
    /// `workers == 0` selects the number of available cores.
    pub fn new(workers: usize) -> Result<Self, BoundError> {
        let workers = if workers == 0 { max_workers() } else { workers };
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| BoundError::Pool(e.to_string()))?;
        Ok(BoundingEngine { pool, workers })
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    pub fn refine(
        &self,
        problem: &Problem,
        x: &IntervalBox,
        plan: &PartitionPlan,
        bounder: Bounder,
        schedule: Schedule,
    ) -> Result<Refinement, BoundError> {
        assert_eq!(x.dim(), problem.num_vars(), "box dimension");
        let part = Partition::new(x, plan.clone())?;
        let roots = problem.roots();
        let (per_sub, flags) = self.pool.install(|| match schedule {
            Schedule::Fused => fused(problem.dag(), &roots, bounder, &part),
            Schedule::Staged => staged(problem.dag(), &roots, bounder, &part),
        });
        Ok(assemble(problem, plan.clone(), &per_sub, flags))
    }
}

pub(crate) fn max_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

fn fused(dag: &Dag, roots: &[NodeId], bounder: Bounder, part: &Partition) -> (Vec<Vec<Interval>>, Vec<SubdomainFlags>) {
    let out: Vec<(Vec<Interval>, SubdomainFlags)> = (0..part.len())
        .into_par_iter()
        .map_init(
            || (Scratch::default(), Vec::new()),
            |(scratch, x), k| {
                part.fill_subdomain(k, x);
                let mut flags = SubdomainFlags::default();
                let b = fused_subdomain(dag, roots, bounder, x, scratch, &mut flags);
                (b, flags)
            },
        )
        .collect();
    out.into_iter().unzip()
}

fn staged(dag: &Dag, roots: &[NodeId], bounder: Bounder, part: &Partition) -> (Vec<Vec<Interval>>, Vec<SubdomainFlags>) {
    let total = part.len();
    let n = part.plan().counts().len();
    let mut clipped = vec![false; total];
    let transpose = |by_root: Vec<Lane<Interval>>| -> Vec<Lane<Interval>> {
        (0..total).map(|k| by_root.iter().map(|row| row[k]).collect()).collect()
    };

    let nie = transpose(staged_lane(dag, roots, total, |k, i| part.component(k, i), &mut clipped));
    let mids: Vec<Vec<f64>> = (0..total)
        .into_par_iter()
        .map(|k| (0..n).map(|i| part.component(k, i).midpoint().expect("bounded")).collect())
        .collect();

    let (mid, sweeps) = if bounder == Bounder::Mvf {
        let mid = transpose(staged_lane(dag, roots, total, |k, i| Interval::point(mids[k][i]), &mut clipped));
        let sweeps: Vec<Vec<Lane<Tangent<Interval>>>> = (0..n)
            .map(|seed| {
                staged_lane(dag, roots, total, |k, i| Tangent::variable(part.component(k, i), i == seed), &mut clipped)
            })
            .collect();
        (Some(mid), sweeps)
    } else {
        (None, Vec::new())
    };

    let out: Vec<(Vec<Interval>, SubdomainFlags)> = (0..total)
        .into_par_iter()
        .map(|k| {
            let x: Vec<Interval> = (0..n).map(|i| part.component(k, i)).collect();
            let lanes = LaneRoots {
                nie: nie[k].clone(),
                mid: mid.as_ref().map(|m| m[k].clone()).unwrap_or_default(),
                sweeps: sweeps.iter().map(|by_root| by_root.iter().map(|row| row[k]).collect()).collect(),
            };
            let mut flags = SubdomainFlags { clipped: clipped[k], ..Default::default() };
            let b = combine(bounder, &x, &mids[k], &lanes, &mut flags);
            (b, flags)
        })
        .collect();
    out.into_iter().unzip()
}

fn assemble(problem: &Problem, plan: PartitionPlan, per_sub: &[Vec<Interval>], flags: Vec<SubdomainFlags>) -> Refinement {
    let nroots = problem.num_roots();
    let mut by_root: Vec<Vec<Interval>> = (0..nroots).map(|_| Vec::with_capacity(per_sub.len())).collect();
    for sub in per_sub {
        for (r, &b) in sub.iter().enumerate() {
            by_root[r].push(b);
        }
    }
    let hulls: Vec<Interval> = by_root.iter().map(|v| hull_tree(v)).collect();
    let obj_bounds = by_root.remove(0);
    Refinement {
        plan,
        obj_bounds,
        con_bounds: by_root,
        hull_obj: hulls[0],
        hull_con: hulls[1..].to_vec(),
        flags,
        num_ineq: problem.ineq().len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dag::parse_problem;

    fn iv(lo: f64, hi: f64) -> Interval {
        Interval::new(lo, hi).unwrap()
    }

    fn refine(src: &str, counts: Vec<usize>, bounder: Bounder, schedule: Schedule) -> Refinement {
        let p = parse_problem(src).unwrap();
        let engine = BoundingEngine::new(2).unwrap();
        engine.refine(&p, p.domain(), &PartitionPlan::new(counts).unwrap(), bounder, schedule).unwrap()
    }

    #[test]
    fn mvf_examples() {
        let p = parse_problem("var x in [-1,1]; obj: x^2").unwrap();
        assert_eq!(bound_mvf(&p, p.domain()).0.obj, iv(-2.0, 2.0));
        let p = parse_problem("var x in [0.9,1.1]; obj: x^2").unwrap();
        let b = bound_mvf(&p, p.domain()).0.obj;
        assert!(iv(0.78, 1.22).subset_of(&b));
        assert!((b.lo() - 0.78).abs() < 1e-14 && (b.hi() - 1.22).abs() < 1e-14);
    }

    #[test]
    fn mvf_on_point_box_is_the_value() {
        let p = parse_problem("var x in [0.3,0.3]; var y in [2,2]; obj: exp(x)*sin(y) - x/y").unwrap();
        let b = bound_mvf(&p, p.domain()).0.obj;
        let v = 0.3f64.exp() * 2f64.sin() - 0.3 / 2.0;
        assert!(b.contains(v));
        assert!(b.width() < 1e-14);
    }

    #[test]
    fn refinement_examples() {
        let r = refine("var x in [0,1]; obj: x*(1-x)", vec![2], Bounder::Nie, Schedule::Fused);
        assert_eq!(r.obj_bounds, vec![iv(0.0, 0.5), iv(0.0, 0.5)]);
        assert_eq!(r.hull_obj, iv(0.0, 0.5));

        let r = refine("var x in [-1,1]; obj: x^2", vec![2], Bounder::Nie, Schedule::Staged);
        assert_eq!(r.obj_bounds, vec![iv(0.0, 1.0), iv(0.0, 1.0)]);
        assert_eq!(r.hull_obj, iv(0.0, 1.0));
    }

    #[test]
    fn single_subdomain_matches_unsplit_bound() {
        let src = "var x in [-1,2]; var y in [0.5,3]; obj: x*y - exp(x)/y; con g: x^2 + y - 4 <= 0";
        let p = parse_problem(src).unwrap();
        for bounder in [Bounder::Nie, Bounder::Mvf] {
            let r = refine(src, vec![1, 1], bounder, Schedule::Staged);
            let (b, _) = if bounder == Bounder::Nie { bound_nie(&p, p.domain()) } else { bound_mvf(&p, p.domain()) };
            assert_eq!(r.hull_obj, b.obj);
            assert_eq!(r.ineq_hulls(), &b.ineq[..]);
        }
    }

    #[test]
    fn division_by_zero_gives_whole_line() {
        let r = refine("var x in [-1,1]; obj: 1/x", vec![2], Bounder::Nie, Schedule::Fused);
        assert_eq!(r.obj_bounds[0], Interval::ENTIRE);
        assert!(r.flags.iter().all(|f| f.unbounded));
        // With three pieces the middle one still straddles zero.
        let r = refine("var x in [-1,1]; obj: 1/x", vec![3], Bounder::Mvf, Schedule::Staged);
        assert_eq!(r.flags[0], SubdomainFlags::default());
        assert!(r.flags[1].fallback && r.flags[1].unbounded);
        assert_eq!(r.hull_obj, Interval::ENTIRE);
    }

    #[test]
    fn mvf_falls_back_when_midpoint_is_outside_domain() {
        // The midpoint -0.5 is outside the domain of log; the natural
        // extension clips and still bounds the root.
        let r = refine("var x in [-2,1]; obj: log(x)", vec![1], Bounder::Mvf, Schedule::Fused);
        assert!(r.flags[0].fallback && r.flags[0].clipped);
        assert_eq!(r.hull_obj.lo(), f64::NEG_INFINITY);
    }

    #[test]
    fn schedules_agree() {
        let src = "var x in [-2,1]; var y in [0.5,3]; obj: sin(x*y) + sqrt(y) * x^3; con g: x - y <= 0; con h: tanh(x) - 0.1*y == 0";
        for bounder in [Bounder::Nie, Bounder::Mvf] {
            let a = refine(src, vec![5, 3], bounder, Schedule::Fused);
            let b = refine(src, vec![5, 3], bounder, Schedule::Staged);
            assert_eq!(a, b);
        }
    }

    #[test]
    fn hull_tree_is_the_hull() {
        let xs = [iv(0.0, 1.0), iv(-2.0, 0.5), iv(3.0, 4.0)];
        assert_eq!(hull_tree(&xs), iv(-2.0, 4.0));
    }
}
