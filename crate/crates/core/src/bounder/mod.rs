//! Subdomain lower bounding: partition a box, bound every root of the
//! problem on each subdomain in parallel, and reduce to the interval hull.

mod convergence;
mod engine;
mod partition;

pub use convergence::{estimate_convergence_order, ConvergenceFit, ConvergenceStatus};
pub use engine::{bound_mvf, bound_nie, hull_tree, BoundingEngine, Refinement, SubdomainFlags};
pub use partition::{
    breakpoints, partition_adaptive, partition_largest, partition_uniform, Partition, PartitionPlan,
    PartitionStrategy,
};

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Bounder {
    /// Natural interval extension.
    Nie,
    /// First-order centered (mean value) form.
    Mvf,
}

impl Bounder {
    pub fn name(&self) -> &'static str {
        match self {
            Bounder::Nie => "nie",
            Bounder::Mvf => "mvf",
        }
    }
}

impl std::str::FromStr for Bounder {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "nie" => Ok(Bounder::Nie),
            "mvf" => Ok(Bounder::Mvf),
            _ => Err(format!("unknown bounder '{s}' (nie|mvf)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Schedule {
    /// Each task evaluates the whole graph for one subdomain.
    Fused,
    /// Node by node in topological order, each node for all subdomains.
    Staged,
}

impl Schedule {
    pub fn name(&self) -> &'static str {
        match self {
            Schedule::Fused => "fused",
            Schedule::Staged => "staged",
        }
    }
}

impl std::str::FromStr for Schedule {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "fused" => Ok(Schedule::Fused),
            "staged" => Ok(Schedule::Staged),
            _ => Err(format!("unknown schedule '{s}' (fused|staged)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BoundError {
    #[error("subdomain target must be at least 1, got {0}")]
    InvalidTarget(usize),
    #[error("invalid partition plan {0}")]
    InvalidPlan(String),
    #[error("cannot partition a box with infinite bounds")]
    UnboundedBox,
    #[error("cannot start worker pool: {0}")]
    Pool(String),
}
