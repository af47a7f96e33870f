//! Preference-distribution machinery: effect samples from fixed-preference
//! runs, the exponential effect-model fit, the implied exponential density,
//! sampling, quantiles and the uniform-pushforward check.

mod dist;
mod effects;
mod fit;
mod pushforward;

pub use dist::PreferenceDistribution;
pub use effects::{collect_effects, offset_effects, EffectKind, EffectSample};
pub use fit::{fit_exponential, fit_exponential_with, ExponentialFit, FitOptions};
pub use pushforward::{ks_statistic, pushforward_check, pushforward_ks};

/// Fitted rates reported for the shipped topologies.
pub mod reference {
    /// α rate on Internet2.
    pub const LAMBDA_ALPHA_INTERNET2: f64 = 145.45;
    /// α rate on MEC.
    pub const LAMBDA_ALPHA_MEC: f64 = 241.05;
    /// β rate on Internet2.
    pub const LAMBDA_BETA_INTERNET2: f64 = 42.51;
    /// CDF levels used to pick static comparison preferences.
    pub const GRID_QUANTILES: [f64; 5] = [0.2, 0.4, 0.6, 0.8, 0.99];
    /// Fixed-α pre-experiment grid.
    pub const ALPHA_PRETRAIN_GRID: [f64; 6] = [0.0, 0.01, 0.02, 0.03, 0.04, 0.05];
    /// Fixed-β pre-experiment grid.
    pub const BETA_PRETRAIN_GRID: [f64; 6] = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5];
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum DistError {
    #[error("invalid distribution parameter: {0}")]
    InvalidParameter(String),
    #[error("cannot parse distribution spec `{0}`")]
    Parse(String),
    #[error("quantile level {0} outside the support")]
    QuantileOutOfRange(f64),
    #[error("unsupported operation: {0}")]
    Unsupported(&'static str),
    #[error("need at least two samples at distinct preferences, got {0}")]
    TooFewSamples(usize),
    #[error("effects carry no signal to fit")]
    DegenerateFit,
    #[error("evaluation failed: {0}")]
    Evaluation(String),
}
