pub mod algebra;
pub mod bch;
pub mod derivate;
pub mod divergence;
pub mod error;
pub mod group;
pub mod groupfile;
mod linalg;
pub mod measure;
pub mod metric;
pub mod report;
pub mod rng;

pub use algebra::{AlgebraVector, GradedAlgebra, InvariantKind, VerificationReport};
pub use error::{Error, Result};
pub use group::{Group, GroupElement};
pub use metric::{CcSpace, ControlPath, DistanceEstimate, HorizontalMetric, OptimizerConfig};
