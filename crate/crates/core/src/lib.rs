//! Deterministic global optimization of factorable problems by spatial branch
//! and bound, with node lower bounds from parallel subdomain refinement.
//!
//! The pieces, bottom up:
//!
//! - [`interval`]: outward-rounded interval arithmetic and elementary functions.
//! - [`tangent`]: forward-mode derivatives over any [`arith::Scalar`].
//! - [`dag`]: problems as a shared expression graph, parsed from text or
//!   assembled in code, including embedded feed-forward networks.
//! - [`bounder`]: partition a box, bound each piece with the natural interval
//!   extension or the mean value form, and take the hull.
//! - [`bnb`]: the best-first branch-and-bound loop.
//! - [`builtins`] and [`bench`]: test problems and parameter sweeps.

pub mod arith;
pub mod bench;
pub mod bnb;
pub mod bounder;
pub mod builtins;
pub mod dag;
pub mod interval;
pub mod tangent;

pub use arith::{BinaryOp, EvalError, Scalar, UnaryOp};
pub use bnb::{solve, SolverConfig, SolverResult, Status};
pub use bounder::{Bounder, BoundingEngine, PartitionPlan, PartitionStrategy, Refinement, Schedule};
pub use dag::{parse_problem, Dag, NodeId, Problem};
pub use interval::{Interval, IntervalBox};
