use crate::dag::{NodeId, Problem};
use crate::interval::{round, Interval, IntervalBox};

use super::{BoundError, Bounder, BoundingEngine, PartitionPlan, Schedule};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConvergenceStatus {
    /// A slope was fitted through at least two points above the noise floor.
    Fitted,
    /// Excess width vanished for all but at most one `N`.
    Exact,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceFit {
    pub status: ConvergenceStatus,
    /// Least-squares slope of `log w(E_N)` against `log N`; `None` when exact.
    pub slope: Option<f64>,
    /// `(N, excess width)` for every requested `N`, including dropped ones.
    pub excess: Vec<(usize, f64)>,
}

/// Fits the decay order of the excess width of the refinement of `root`.
///
/// `exact` is the true range of the root over `x`. Each `N` partitions every
/// dimension into `N` pieces. Points whose excess width is below 64 ulps of
/// the largest endpoint magnitude are treated as noise and not fitted.
pub fn estimate_convergence_order(
    engine: &BoundingEngine,
    problem: &Problem,
    root: NodeId,
    x: &IntervalBox,
    bounder: Bounder,
    ns: &[usize],
    exact: Interval,
) -> Result<ConvergenceFit, BoundError> {
    let root_pos = problem.roots().iter().position(|&r| r == root).expect("root of the problem");
    let mut excess = Vec::with_capacity(ns.len());
    let mut fit = Vec::new();
    for &n in ns {
        let plan = PartitionPlan::new(vec![n; x.dim()])?;
        let r = engine.refine(problem, x, &plan, bounder, Schedule::Fused)?;
        let hull = if root_pos == 0 { r.hull_obj } else { r.hull_con[root_pos - 1] };
        let e = hull.width() - exact.width();
        excess.push((n, e));
        let scale = hull.lo().abs().max(hull.hi().abs());
        let floor = 64.0 * (round::step_up(scale, 1) - scale);
        if e.is_finite() && e > floor {
            fit.push(((n as f64).ln(), e.ln()));
        }
    }
    if fit.len() < 2 {
        return Ok(ConvergenceFit { status: ConvergenceStatus::Exact, slope: None, excess });
    }
    Ok(ConvergenceFit { status: ConvergenceStatus::Fitted, slope: Some(least_squares_slope(&fit)), excess })
}

fn least_squares_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    sxy / sxx
}
