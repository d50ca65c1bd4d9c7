//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("grid too coarse: {0} nodes (minimum 16)")]
    GridTooCoarse(usize),

    #[error("potential is not positive: sampled value {value:.6e} on the direction sphere")]
    NonPositivePotential { value: f64 },

    #[error("maximizer set is empty")]
    EmptyMaximizerSet,

    #[error("smoothing failed: best certified deviation {best:.3e} exceeds requested {requested:.3e}")]
    SmoothingFailed { requested: f64, best: f64 },

    #[error("could not certify a uniform-continuity modulus for epsilon = {epsilon:.3e}")]
    ModulusNotFound { epsilon: f64 },

    #[error("ball center off the pole is unsupported (center = {center:.6e})")]
    OffPoleCenter { center: f64 },

    #[error("bubble tail not converged: remainder {remainder:.3e} of totals exceeds 1e-8")]
    TailNotConverged { remainder: f64 },

    #[error("no usable scalar second-best constant for this manifold: {0}")]
    UnknownScalarB0(String),

    #[error("sphere extremal requires beta > 1, got {beta}")]
    BetaOutOfRange { beta: f64 },

    #[error("missing constant for residual evaluation: {0}")]
    MissingConstant(&'static str),

    #[error("field is identically zero")]
    ZeroField,

    #[error("potential `{0}` has no gradient evaluator (smooth it first)")]
    MissingGradient(String),

    #[error("non-positive volume density encountered during descent")]
    NonPositiveDensity,

    #[error("atom extrapolation unstable: {0}")]
    ExtrapolationUnstable(String),

    #[error("field maximum is attained away from the pole (index {index})")]
    SupNotAtPole { index: usize },

    #[error("dimension must be >= 3, got {0}")]
    DimensionTooLow(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
