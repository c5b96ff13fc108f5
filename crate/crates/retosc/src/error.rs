//! Error types shared across the crate.

use thiserror::Error;

/// Parameter or configuration validation failure.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum InvalidInput {
    #[error("mass must be positive, got {0}")]
    NonPositiveMass(f64),
    #[error("delay kernel width sigma must be positive, got {0}")]
    NonPositiveSigma(f64),
    #[error("maximum delay tau0 must be nonnegative, got {0}")]
    NegativeMaxDelay(f64),
    #[error("step size dt must be positive, got {0}")]
    NonPositiveDt(f64),
    #[error("final time t_end must be positive, got {0}")]
    NonPositiveTEnd(f64),
    #[error("transient fraction must lie in [0, 1), got {0}")]
    BadTransientFraction(f64),
    #[error("record stride must be at least 1")]
    ZeroStride,
    #[error("history is only defined for t <= 0, got t = {0}")]
    HistoryDomain(f64),
}

/// Integration failure.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum IntegrateError {
    #[error(transparent)]
    Invalid(#[from] InvalidInput),
    /// State left the finite-magnitude guard; carries the failure time.
    #[error("state became non-finite or exceeded the magnitude guard at t = {t}")]
    NonFinite { t: f64 },
}

/// Liénard reduction failure.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum LienardError {
    #[error("coefficient denominator 1 + alpha tau^2/2 vanishes at x = {x}")]
    SingularDenominator { x: f64 },
    #[error(transparent)]
    Invalid(#[from] InvalidInput),
}

/// Time-series analysis failure.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("series too short: need at least {need} samples, got {got}")]
    TooShort { need: usize, got: usize },
    #[error("analysis window is empty")]
    EmptyWindow,
    #[error("frequency band is degenerate (min >= max)")]
    DegenerateBand,
    #[error("no admissible nearest neighbours (series too short or mean period too large)")]
    NoNeighbours,
    #[error("invalid parameter: {0}")]
    BadParameter(String),
}
