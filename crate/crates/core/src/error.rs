use thiserror::Error;

use crate::signal::UnitMode;

/// Errors raised by the simulator library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("empty signal")]
    EmptySignal,
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("unit mode mismatch: expected {expected:?}, found {found:?}")]
    UnitMismatch { expected: UnitMode, found: UnitMode },
    #[error("GLME system ill-conditioned at t = {t:.6}")]
    IllConditioned { t: f64 },
    #[error("insufficient kernel support: {0}")]
    InsufficientSupport(String),
    #[error("a(λ) vanishes at λ = {lambda:.6}")]
    VanishingA { lambda: f64 },
    #[error("non-vanishing boundary: edge magnitude {edge:.3e} vs peak {peak:.3e}")]
    NonVanishingBoundary { edge: f64, peak: f64 },
    #[error("symbol {0} is not a constellation point")]
    NotInConstellation(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("step too large: non-finite field after {steps} steps")]
    StepTooLarge { steps: usize },
    #[error("sequence space too large: {0} sequences")]
    SequenceSpaceTooLarge(f64),
    #[error("Q-factor undefined for P_b = {0}")]
    QFactorUndefined(f64),
    #[error("reference unavailable: {0}")]
    ReferenceUnavailable(String),
    #[error("no convergence after {sequences} sequences (running estimate {estimate:.4e})")]
    NotConverged { sequences: usize, estimate: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
