use thiserror::Error;

use crate::monodromy::Regime;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid bias specification: {0}")]
    InvalidBias(String),

    #[error("invalid solver configuration: {0}")]
    InvalidSolver(String),

    #[error("step size underflow at t = {t}")]
    StepSizeUnderflow { t: f64 },

    #[error("degenerate transport denominator at t = {t}")]
    DegenerateDenominator { t: f64 },

    #[error("solutions coincide at t = {t}")]
    CoincidentSolutions { t: f64 },

    #[error("operation requires regime {expected}, found {found}")]
    WrongRegime {
        expected: &'static str,
        found: Regime,
    },

    #[error("winding quadrature {value} is not near an integer (residual {residual:.3e})")]
    NotNearInteger { value: f64, residual: f64 },

    #[error("negative radicand: Im F must be positive")]
    NegativeRadicand,

    #[error("phase-locking order changes inside the step [{lo}, {hi}]: {orders:?}")]
    InconsistentOrder { lo: f64, hi: f64, orders: Vec<i64> },

    #[error("time {t} outside the recorded interval [{lo}, {hi}]")]
    OutOfRange { t: f64, lo: f64, hi: f64 },

    #[error("{0}")]
    InvalidArgument(String),

    #[error("writing output: {0}")]
    Output(String),
}

pub type Result<T> = std::result::Result<T, Error>;
