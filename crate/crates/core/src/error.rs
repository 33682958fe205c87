use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("gamma function pole at x = {x}")]
    Pole { x: f64 },

    #[error("{what} overflows at x = {x}")]
    Overflow { what: &'static str, x: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("series argument |z| = {z_abs} exceeds the guard {limit}")]
    ArgumentGuard { z_abs: f64, limit: f64 },

    #[error("series did not converge within {terms} terms")]
    NonConvergence { terms: usize },

    #[error("series cancellation needs about {bits_needed} bits of working precision (limit {limit})")]
    PrecisionLoss { bits_needed: u64, limit: u32 },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid data: {0}")]
    Validation(String),

    #[error("need at least {required} points, got {got}")]
    DegenerateData { got: usize, required: usize },

    #[error("invalid configuration: {0}")]
    Config(String),
}

impl Error {
    /// True for failures of the series evaluator itself (guard or truncation),
    /// as opposed to invalid inputs.
    pub fn is_numeric_guard(&self) -> bool {
        matches!(
            self,
            Error::ArgumentGuard { .. }
                | Error::NonConvergence { .. }
                | Error::PrecisionLoss { .. }
                | Error::Overflow { .. }
        )
    }
}
