use thiserror::Error;

/// Errors produced by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("period {period} does not divide {target}")]
    Divisibility { period: usize, target: usize },

    #[error("schedule error: {0}")]
    Schedule(String),

    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    #[error("potential family is empty")]
    EmptyFamily,

    #[error("domain error: {0}")]
    Domain(String),

    #[error("ill-conditioned matrix: {0}")]
    Conditioning(String),

    #[error("band-edge isolation failed on [{lo}, {hi}]: {reason}")]
    Isolation { lo: f64, hi: f64, reason: String },

    #[error("quadrature did not converge: achieved {achieved:e}, requested {requested:e}")]
    Accuracy { achieved: f64, requested: f64 },

    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("construction failed: {0}")]
    Construction(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
