use thiserror::Error;

/// Values of Lévy integrals above this magnitude are treated as divergent.
pub const OVERFLOW_GUARD: f64 = 1e12;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid Lévy measure: {0}")]
    InvalidMeasure(String),

    #[error("integral diverges (|value| = {value:e} exceeds the overflow guard)")]
    Divergent { value: f64 },

    #[error("adaptive quadrature did not converge after {subdivisions} subdivisions (value {value:e}, error estimate {error:e})")]
    NonConvergence {
        value: f64,
        error: f64,
        subdivisions: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("cell id {0} is not part of the measure sample")]
    UnknownCell(usize),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for the two ways an integral can fail to be finite.
    pub fn is_divergence(&self) -> bool {
        matches!(self, Error::Divergent { .. } | Error::NonConvergence { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
