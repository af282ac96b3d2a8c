use thiserror::Error;

/// Failure modes shared by every numerical routine in the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is defective: smallest singular value {sigma_min:e} of the eigenvector matrix is below {tol:e}")]
    Defective { sigma_min: f64, tol: f64 },

    #[error("input contains non-finite entries")]
    NonFinite,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not hermitian positive-definite ({reason})")]
    NotPositiveDefinite { reason: String },

    #[error("eigenstate tracking lost: best overlap {overlap:.3e} is below {threshold}")]
    TrackingLost { overlap: f64, threshold: f64 },

    #[error("state vector has zero norm")]
    ZeroState,

    #[error("instantaneous metric is ill-conditioned (condition number {condition:e})")]
    IllConditionedMetric { condition: f64 },

    #[error("time {t} lies within {h:e} of the quench at {t_quench}")]
    QuenchAdjacent { t: f64, h: f64, t_quench: f64 },

    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepSizeUnderflow { t: f64, h: f64 },

    #[error("left/right overlap {overlap:e} is below the degeneracy threshold")]
    DegenerateOverlap { overlap: f64 },

    #[error("level crossing at the Fermi energy (gap {gap:e})")]
    DegenerateFermiLevel { gap: f64 },

    #[error("eigenvalue iteration failed to converge")]
    NoConvergence,

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    /// Stable identifier used in machine-readable summaries.
    pub fn name(&self) -> &'static str {
        match self {
            Error::Defective { .. } => "Defective",
            Error::NonFinite => "NonFinite",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::NotPositiveDefinite { .. } => "NotPositiveDefinite",
            Error::TrackingLost { .. } => "TrackingLost",
            Error::ZeroState => "ZeroState",
            Error::IllConditionedMetric { .. } => "IllConditionedMetric",
            Error::QuenchAdjacent { .. } => "QuenchAdjacent",
            Error::StepSizeUnderflow { .. } => "StepSizeUnderflow",
            Error::DegenerateOverlap { .. } => "DegenerateOverlap",
            Error::DegenerateFermiLevel { .. } => "DegenerateFermiLevel",
            Error::NoConvergence => "NoConvergence",
            Error::InvalidInput(_) => "InvalidInput",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
