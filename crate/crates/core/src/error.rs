use thiserror::Error;

use crate::rules::Violation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid attachment rule: {0}")]
    InvalidRule(Violation),

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("series diverges: alpha = {alpha} does not exceed gamma = {gamma}")]
    DivergentSeries { alpha: f64, gamma: f64 },

    #[error("master equation truncation exceeded cap {cap} before reaching tolerance {tol}")]
    TruncationFailure { cap: usize, tol: f64 },

    #[error("conditioned sampler rejected {attempts} proposals in a row")]
    RejectionBudgetExceeded { attempts: u64 },

    #[error("edge probability {probability} > 1 at graph size {size}")]
    ProbabilityOverflow { size: usize, probability: f64 },

    #[error("sampled values are not convex (second difference {second_difference} at alpha = {alpha})")]
    NonConvexData { alpha: f64, second_difference: f64 },

    #[error("rule is subcritical at full retention (rho(alpha*) = {rho_star})")]
    SubcriticalRule { rho_star: f64 },

    #[error("precondition violated: {0}")]
    PreconditionViolation(String),

    #[error("no replica stayed inside the tube; probability <= {upper_bound} at the stated confidence")]
    ZeroHits { replicas: usize, upper_bound: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("unsupported rule: {0}")]
    UnsupportedRule(String),
}
