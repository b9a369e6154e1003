use thiserror::Error;

use crate::symbols::Chart;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("chart mismatch: {0:?} vs {1:?}")]
    ChartMismatch(Chart, Chart),

    #[error("operation `{op}` is not defined on chart {chart:?}")]
    UnsupportedChart { chart: Chart, op: &'static str },

    #[error("no transform from chart {from:?} to {to:?}")]
    UnsupportedTransform { from: Chart, to: Chart },

    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    #[error("{0} is not positive definite")]
    NotPositiveDefinite(&'static str),

    #[error("singular matrix in {0}")]
    Singular(&'static str),

    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64 },

    #[error("step budget of {max_steps} exhausted at t = {t}")]
    TooManySteps { t: f64, max_steps: usize },

    #[error("Lindblad operator {0} is not linear in the phase-space coordinates")]
    NonlinearLindblad(usize),

    #[error("degenerate grid: {0}")]
    DegenerateGrid(String),

    #[error("quantum reference solver requires hbar = 1, got {0}")]
    UnsupportedHbar(f64),

    #[error("time ranges do not overlap")]
    DisjointTimes,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{0}")]
    Invalid(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
