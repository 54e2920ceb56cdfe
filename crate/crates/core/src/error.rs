use thiserror::Error;

/// Errors produced by the toolkit.
///
/// Variants are split between input problems (bad data handed in by the
/// caller) and numerical failures (the optimizer or a calibration could not
/// deliver a certified result). [`Error::is_input`] tells them apart, which
/// the command-line front end maps onto distinct exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid algebra: {0}")]
    InvalidAlgebra(String),

    #[error("algebra is not nilpotent: descending central sequence did not reach zero in {steps} steps")]
    NotNilpotent { steps: usize },

    #[error("vector is not horizontal: layer {layer} has norm {norm:.3e}")]
    NotHorizontal { layer: usize, norm: f64 },

    #[error("target unreachable: first layer does not bracket-generate layer {layer}")]
    Unreachable { layer: usize },

    #[error("invalid input: {0}")]
    Input(String),

    #[error("group definition: {0}")]
    Definition(String),

    #[error("optimizer failed to reach endpoint tolerance (best residual {residual:.3e}, length {length:.6})")]
    Optimizer {
        residual: f64,
        length: f64,
        best: Box<crate::metric::ControlPath>,
    },

    #[error("calibration failed on {} sample(s): first failure at index {}", failed.len(), failed.first().copied().unwrap_or(0))]
    Calibration { failed: Vec<usize> },

    #[error("Lipschitz bound violated: d = {value:.6e} exceeds {bound:.6e} at pair {pair}")]
    LipschitzViolation { value: f64, bound: f64, pair: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by malformed input rather than numerical failure.
    pub fn is_input(&self) -> bool {
        !matches!(
            self,
            Error::Optimizer { .. } | Error::Calibration { .. } | Error::Io(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
