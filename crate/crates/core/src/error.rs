use thiserror::Error;

/// Errors raised by the estimation library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("cannot difference at boundary: λ = {lambda} with step {step} leaves the domain [{lo}, {hi}]")]
    BoundaryDifference { lambda: f64, step: f64, lo: f64, hi: f64 },

    #[error("non-finite integrand at node {index} (x = {x})")]
    NonFiniteIntegrand { index: usize, x: f64 },

    #[error("model not normalized: ∫ m p = {integral}")]
    NotNormalized { integral: f64 },

    #[error("singular support shift at x = {x}: p = 0 but ∂p = {derivative}")]
    SingularSupport { x: f64, derivative: f64 },

    #[error("measure support mismatch at x = {x}: m = 0 while p = {p}")]
    MeasureSupportMismatch { x: f64, p: f64 },

    #[error("no information: bound infinite (Fisher information {0})")]
    NoInformation(f64),

    #[error("not Hermitian (deviation {0:e})")]
    NotHermitian(f64),

    #[error("not positive semi-definite (min eigenvalue {0:e})")]
    NotPsd(f64),

    #[error("trace is not 1 (got {0})")]
    InvalidTrace(f64),

    #[error("state vector not normalized (norm² = {0})")]
    NotNormalizedState(f64),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("rank-changing family: ⟨i|∂ρ|j⟩ = {0:e} on the kernel of ρ")]
    RankChanging(f64),

    #[error("norm drift {0:e} across the difference stencil")]
    NormDrift(f64),

    #[error("invalid POVM family: {0}")]
    InvalidPovm(String),

    #[error("basis not orthonormal (deviation {0:e})")]
    NotOrthonormal(f64),

    #[error("degenerate spectrum: eigenvalue gap {0:e} below threshold")]
    Degenerate(f64),

    #[error("increase truncation: {0}")]
    IncreaseTruncation(String),

    #[error("truncation too small: {0}")]
    TruncationTooSmall(String),

    #[error("internal consistency check failed: {0}")]
    Inconsistent(String),

    #[error("overflow regime: {0}")]
    Overflow(String),

    #[error("estimate at boundary: widen grid (argmax at λ = {0})")]
    EstimateAtBoundary(f64),

    #[error("trials ≥ 2 required")]
    TooFewTrials,

    #[error("unknown quantity {0}")]
    UnknownQuantity(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    /// Whether the failure is numerical (truncation, quadrature, convergence,
    /// ill-posed model) rather than a malformed request.
    pub fn is_numerical(&self) -> bool {
        !matches!(
            self,
            Error::UnknownQuantity(_) | Error::InvalidInput(_) | Error::TooFewTrials
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
