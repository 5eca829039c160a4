//! Temporary partitions of a node box into subdomains.
//!
//! Every dimension gets one breakpoint sequence shared by all subdomains, so
//! neighbouring subintervals meet at bitwise-equal endpoints and the union is
//! exactly the box.

use crate::interval::{Interval, IntervalBox};

use super::BoundError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PartitionStrategy {
    Uniform,
    Largest,
    Adaptive,
}

impl PartitionStrategy {
    pub fn name(&self) -> &'static str {
        match self {
            PartitionStrategy::Uniform => "uniform",
            PartitionStrategy::Largest => "largest",
            PartitionStrategy::Adaptive => "adaptive",
        }
    }
}

impl std::str::FromStr for PartitionStrategy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "uniform" => Ok(PartitionStrategy::Uniform),
            "largest" => Ok(PartitionStrategy::Largest),
            "adaptive" => Ok(PartitionStrategy::Adaptive),
            _ => Err(format!("unknown partition strategy '{s}' (uniform|largest|adaptive)")),
        }
    }
}

/// Subintervals per dimension.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionPlan {
    counts: Vec<usize>,
    total: usize,
}

impl PartitionPlan {
    pub fn new(counts: Vec<usize>) -> Result<Self, BoundError> {
        if counts.is_empty() || counts.contains(&0) {
            return Err(BoundError::InvalidPlan(format!("{counts:?}")));
        }
        let total = counts
            .iter()
            .try_fold(1usize, |acc, &c| acc.checked_mul(c))
            .ok_or_else(|| BoundError::InvalidPlan(format!("{counts:?} overflows")))?;
        Ok(PartitionPlan { counts, total })
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn uniform(n: usize, target: usize) -> Result<Self, BoundError> {
        if target < 1 {
            return Err(BoundError::InvalidTarget(target));
        }
        PartitionPlan::new(vec![uniform_count(n, target); n])
    }

    /// `m` subintervals on the widest dimension (lowest index on ties).
    pub fn largest(x: &IntervalBox, m: usize) -> Result<Self, BoundError> {
        if m < 1 {
            return Err(BoundError::InvalidTarget(m));
        }
        let mut counts = vec![1; x.dim()];
        counts[x.widest_dim()] = m;
        PartitionPlan::new(counts)
    }

    /// Start from the uniform plan, then add one subinterval at a time to
    /// dimensions in order of decreasing width while the total stays within
    /// `budget`.
    pub fn adaptive(x: &IntervalBox, budget: usize) -> Result<Self, BoundError> {
        if budget < 1 {
            return Err(BoundError::InvalidTarget(budget));
        }
        let n = x.dim();
        let mut counts = vec![uniform_count(n, budget); n];
        let mut order: Vec<usize> = (0..n).collect();
        let widths: Vec<f64> = x.dims().iter().map(Interval::width).collect();
        order.sort_by(|&a, &b| widths[b].total_cmp(&widths[a]).then(a.cmp(&b)));
        let mut total: usize = counts.iter().product();
        loop {
            let mut grew = false;
            for &d in &order {
                let candidate = total / counts[d] * (counts[d] + 1);
                if candidate <= budget {
                    counts[d] += 1;
                    total = candidate;
                    grew = true;
                }
            }
            if !grew {
                break;
            }
        }
        PartitionPlan::new(counts)
    }

    pub fn for_strategy(strategy: PartitionStrategy, x: &IntervalBox, target: usize) -> Result<Self, BoundError> {
        match strategy {
            PartitionStrategy::Uniform => PartitionPlan::uniform(x.dim(), target),
            PartitionStrategy::Largest => PartitionPlan::largest(x, target),
            PartitionStrategy::Adaptive => PartitionPlan::adaptive(x, target),
        }
    }
}

/// Largest `N` with `N^n <= target`.
fn uniform_count(n: usize, target: usize) -> usize {
    let fits = |k: usize| k.checked_pow(n as u32).is_some_and(|p| p <= target);
    let mut k = ((target as f64).powf(1.0 / n as f64).floor() as usize).max(1);
    while k > 1 && !fits(k) {
        k -= 1;
    }
    while fits(k + 1) {
        k += 1;
    }
    k
}

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Breakpoints `lo = t_0 <= t_1 <= ... <= t_N = hi` of one dimension.
///
/// `t_j` is computed from the reduced fraction `j/N`, so a grid with `kN`
/// pieces reproduces every breakpoint of the `N`-piece grid bitwise.
pub fn breakpoints(d: Interval, pieces: usize) -> Vec<f64> {
    let (lo, hi) = (d.lo(), d.hi());
    let w = hi - lo;
    let mut out = Vec::with_capacity(pieces + 1);
    out.push(lo);
    for j in 1..pieces {
        let g = gcd(j, pieces);
        let (num, den) = ((j / g) as f64, (pieces / g) as f64);
        let t = lo + (num * w) / den;
        let prev = *out.last().unwrap();
        out.push(t.clamp(prev, hi));
    }
    if pieces >= 1 {
        out.push(hi);
    }
    out
}

/// A plan applied to a concrete box; enumerates the subdomains.
///
/// Subdomain `k` decodes as a mixed-radix index with the first dimension
/// varying fastest.
#[derive(Debug, Clone)]
pub struct Partition {
    plan: PartitionPlan,
    breaks: Vec<Vec<f64>>,
}

impl Partition {
    pub fn new(x: &IntervalBox, plan: PartitionPlan) -> Result<Self, BoundError> {
        if plan.counts.len() != x.dim() {
            return Err(BoundError::InvalidPlan(format!(
                "plan has {} dimensions, box has {}",
                plan.counts.len(),
                x.dim()
            )));
        }
        if x.dims().iter().any(|d| !d.lo().is_finite() || !d.hi().is_finite()) {
            return Err(BoundError::UnboundedBox);
        }
        let breaks = x.dims().iter().zip(&plan.counts).map(|(&d, &c)| breakpoints(d, c)).collect();
        Ok(Partition { plan, breaks })
    }

    pub fn plan(&self) -> &PartitionPlan {
        &self.plan
    }

    pub fn len(&self) -> usize {
        self.plan.total
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Subinterval of dimension `dim` in subdomain `k`.
    #[inline]
    pub fn component(&self, k: usize, dim: usize) -> Interval {
        let mut rem = k;
        for c in &self.plan.counts[..dim] {
            rem /= c;
        }
        let j = rem % self.plan.counts[dim];
        let b = &self.breaks[dim];
        Interval::raw(b[j], b[j + 1])
    }

    pub fn subdomain(&self, k: usize) -> IntervalBox {
        let mut out = Vec::with_capacity(self.breaks.len());
        self.fill_subdomain(k, &mut out);
        IntervalBox::new(out).expect("non-empty")
    }

    /// Writes the components of subdomain `k` into `out`.
    pub fn fill_subdomain(&self, k: usize, out: &mut Vec<Interval>) {
        assert!(k < self.plan.total, "subdomain {k} out of range");
        out.clear();
        let mut rem = k;
        for (c, b) in self.plan.counts.iter().zip(&self.breaks) {
            let j = rem % c;
            rem /= c;
            out.push(Interval::raw(b[j], b[j + 1]));
        }
    }

    pub fn subdomains(&self) -> impl Iterator<Item = IntervalBox> + '_ {
        (0..self.plan.total).map(|k| self.subdomain(k))
    }
}

pub fn partition_uniform(x: &IntervalBox, target: usize) -> Result<Partition, BoundError> {
    Partition::new(x, PartitionPlan::uniform(x.dim(), target)?)
}

pub fn partition_largest(x: &IntervalBox, m: usize) -> Result<Partition, BoundError> {
    Partition::new(x, PartitionPlan::largest(x, m)?)
}

pub fn partition_adaptive(x: &IntervalBox, budget: usize) -> Result<Partition, BoundError> {
    Partition::new(x, PartitionPlan::adaptive(x, budget)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bx(b: &[(f64, f64)]) -> IntervalBox {
        IntervalBox::from_bounds(b).unwrap()
    }

    #[test]
    fn uniform_two_by_two() {
        let p = partition_uniform(&bx(&[(-3.0, 1.0), (0.0, 2.0)]), 4).unwrap();
        let subs: Vec<_> = p.subdomains().collect();
        assert_eq!(
            subs,
            vec![
                bx(&[(-3.0, -1.0), (0.0, 1.0)]),
                bx(&[(-1.0, 1.0), (0.0, 1.0)]),
                bx(&[(-3.0, -1.0), (1.0, 2.0)]),
                bx(&[(-1.0, 1.0), (1.0, 2.0)]),
            ]
        );
    }

    #[test]
    fn target_one_is_identity() {
        let x = bx(&[(-0.3, 1.7), (2.0, 2.5), (0.0, 0.1)]);
        for p in [partition_uniform(&x, 1), partition_largest(&x, 1), partition_adaptive(&x, 1)] {
            let p = p.unwrap();
            assert_eq!(p.len(), 1);
            assert_eq!(p.subdomain(0), x);
        }
    }

    #[test]
    fn uniform_quarters() {
        let p = partition_uniform(&bx(&[(0.0, 1.0)]), 4).unwrap();
        let subs: Vec<_> = p.subdomains().collect();
        let want: Vec<_> = [(0.0, 0.25), (0.25, 0.5), (0.5, 0.75), (0.75, 1.0)].iter().map(|&b| bx(&[b])).collect();
        assert_eq!(subs, want);
    }

    #[test]
    fn uniform_count_is_largest_fitting_root() {
        assert_eq!(uniform_count(2, 1024), 32);
        assert_eq!(uniform_count(2, 1023), 31);
        assert_eq!(uniform_count(5, 1024), 4);
        assert_eq!(uniform_count(5, 3124), 4);
        assert_eq!(uniform_count(5, 3125), 5);
        assert_eq!(uniform_count(3, 7), 1);
        assert_eq!(uniform_count(1, 7), 7);
    }

    #[test]
    fn largest_splits_widest_dimension() {
        let p = partition_largest(&bx(&[(-3.0, 1.0), (0.0, 2.0)]), 4).unwrap();
        assert_eq!(p.plan().counts(), &[4, 1]);
        assert_eq!(p.subdomain(0), bx(&[(-3.0, -2.0), (0.0, 2.0)]));
        assert_eq!(p.subdomain(3), bx(&[(0.0, 1.0), (0.0, 2.0)]));
        let p = partition_largest(&bx(&[(0.0, 1.0), (0.0, 1.0)]), 2).unwrap();
        assert_eq!(p.plan().counts(), &[2, 1]);
    }

    #[test]
    fn adaptive_examples() {
        let x = bx(&[(0.0, 1.0); 5]);
        let plan = PartitionPlan::adaptive(&x, 2560).unwrap();
        assert_eq!(plan.counts(), &[5, 5, 5, 5, 4]);
        assert_eq!(plan.total(), 2500);

        let plan = PartitionPlan::adaptive(&bx(&[(0.0, 1.0)]), 7).unwrap();
        assert_eq!(plan.counts(), &[7]);

        let plan = PartitionPlan::adaptive(&bx(&[(0.0, 4.0), (0.0, 2.0)]), 6).unwrap();
        assert_eq!(plan.counts(), &[3, 2]);
        assert_eq!(plan.total(), 6);
    }

    #[test]
    fn zero_targets_are_rejected() {
        let x = bx(&[(0.0, 1.0)]);
        assert!(matches!(partition_uniform(&x, 0), Err(BoundError::InvalidTarget(0))));
        assert!(matches!(partition_largest(&x, 0), Err(BoundError::InvalidTarget(0))));
        assert!(matches!(partition_adaptive(&x, 0), Err(BoundError::InvalidTarget(0))));
    }

    #[test]
    fn coarse_breakpoints_are_a_subset_of_fine_ones() {
        let d = Interval::new(-0.3, 2.9).unwrap();
        for n in 1..10 {
            for k in 2..5 {
                let coarse = breakpoints(d, n);
                let fine = breakpoints(d, k * n);
                for (j, t) in coarse.iter().enumerate() {
                    assert_eq!(t.to_bits(), fine[k * j].to_bits());
                }
            }
        }
    }
}
