use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {what} (expected {expected}, got {got})")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("matrix is not positive definite: pivot {pivot:e} at index {index}; increase dampening")]
    NotPositiveDefinite { index: usize, pivot: f64 },
    #[error("restricted inverse-Hessian block is singular; increase dampening")]
    SingularSubmatrix,
    #[error("sparsity level k={k} out of range for dimension {d}")]
    KOutOfRange { k: usize, d: usize },
    #[error("batch size {batch} out of range for {n} samples")]
    BatchOutOfRange { batch: usize, n: usize },
    #[error("exhaustive mask search over {count} subsets (d={d}) exceeds limits")]
    SearchTooLarge { d: usize, count: u128 },
    #[error("stochastic gradient is zero and lambda is zero; step size undefined")]
    ZeroGradient,
    #[error("stochastic step size is unbounded (lambda=0 and gradient vanishes on the support)")]
    DegenerateStepSize,
    #[error("inverse-Hessian diagonal {value:e} at index {index} is numerically singular; increase dampening")]
    NumericallySingularDiagonal { index: usize, value: f64 },
    #[error("loss became non-finite in round {round}")]
    NonFiniteLoss { round: usize },
    #[error("objective does not support stochastic gradients")]
    Unsupported,
    #[error("invalid mask: {0}")]
    InvalidMask(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("image load error: {0}")]
    ImageLoad(String),
    #[error("signal is identically zero")]
    EmptySignal,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("too many failed runs: {failed} of {runs}")]
    TooManyFailures { failed: usize, runs: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Numeric failures map to exit code 3 in the command line tool;
    /// everything else is a usage or input problem.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::NonFinite(_)
                | Error::NotPositiveDefinite { .. }
                | Error::SingularSubmatrix
                | Error::ZeroGradient
                | Error::DegenerateStepSize
                | Error::NumericallySingularDiagonal { .. }
                | Error::NonFiniteLoss { .. }
                | Error::TooManyFailures { .. }
        )
    }
}

pub(crate) fn check_dim(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { what, expected, got })
    }
}
