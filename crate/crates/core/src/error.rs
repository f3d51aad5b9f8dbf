use thiserror::Error;

/// Errors produced by the simulation and analysis layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("spin outcome model not normalized: beta_s + beta_t = {sum}")]
    ModelNotNormalized { sum: f64 },

    #[error("model parameter {name} = {value} outside [0, 1]")]
    ModelParameterRange { name: &'static str, value: f64 },

    #[error("likelihood parameters out of range: alpha = {alpha}, beta = {beta}")]
    LikelihoodRange { alpha: f64, beta: f64 },

    #[error("initialization stuck: no singlet confirmed after {attempts} checks")]
    InitializationStuck { attempts: u64 },

    #[error("frequency unidentifiable: data span covers less than half an oscillation period")]
    FrequencyUnidentifiable,

    #[error("fit did not converge: residual norm {residual}")]
    FitDiverged { residual: f64 },

    #[error("fit requires decaying data")]
    NonDecayingData,

    #[error("SNR^2 versus integration time has non-positive slope")]
    NonPositiveSlope,

    #[error("signal is not a monotonic transition")]
    NonMonotonicSignal,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("LUT format: {0}")]
    LutFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
