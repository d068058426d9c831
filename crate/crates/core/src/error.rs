use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid fading parameter: {0}")]
    InvalidModel(String),

    #[error("argument {arg} is below the invertibility threshold (minimum {min})")]
    BelowThreshold { arg: f64, min: f64 },

    #[error("moment order must be positive, got {0}")]
    InvalidMomentOrder(f64),

    #[error("selection size K={k} out of range for N={n}")]
    KOutOfRange { k: usize, n: usize },

    #[error("gain vectors must be non-empty, equal length and NaN-free")]
    InvalidGains,

    #[error("eligible set is empty or references a user outside 0..{0}")]
    InvalidEligible(usize),

    #[error("dual variables (0, 0) leave the water level unbounded")]
    UnboundedWaterLevel,

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("channel batch is empty")]
    EmptyBatch,

    #[error("{0}")]
    InvalidArgument(String),

    #[error(
        "dual solver did not converge on {multiplier} after {iterations} iterations \
         (last bracket [{lo}, {hi}], constraint ratio {ratio})"
    )]
    NonConvergence {
        multiplier: &'static str,
        iterations: usize,
        lo: f64,
        hi: f64,
        ratio: f64,
    },

    #[error("unsupported theory curve: {0}")]
    UnsupportedCurve(String),
}

pub type Result<T> = std::result::Result<T, Error>;
