use thiserror::Error;

/// Errors raised by the numerical routines.
///
/// Values are carried as `f64` regardless of the scalar type used for the
/// computation so the error type stays non-generic.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("nonpositive density: n = {density} at {location}")]
    NonPositiveDensity { density: f64, location: String },

    #[error("unsupported analysis: {0}")]
    UnsupportedAnalysis(String),

    #[error("damping shape vanishes at eta = {eta:?}; eta*f'(eta)/f(eta) undefined")]
    ZeroDamping { eta: Vec<f64> },

    #[error("integration failure at t = {t}: {reason}")]
    IntegrationFailure { t: f64, reason: String },

    #[error("branch turning: q0 vanishes near s = {s}")]
    BranchTurning { s: f64 },

    #[error("fit error: {0}")]
    Fit(String),

    #[error("imminent crossing: adjacent spacing {spacing} below {limit} at particle {index}")]
    ImminentCrossing { spacing: f64, limit: f64, index: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
