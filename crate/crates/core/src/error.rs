use thiserror::Error;

/// Failures raised by the toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A cube or level falls outside the active geometry.
    #[error("range error: {0}")]
    Range(String),
    /// Two operands live on different geometries, or a buffer has the wrong length.
    #[error("shape error: {0}")]
    Shape(String),
    /// An exponent or operator parameter violates its admissibility constraint.
    #[error("parameter error: {0}")]
    Parameter(String),
    /// The input carries no usable information (e.g. an all-zero probe ensemble).
    #[error("input error: {0}")]
    Input(String),
}

pub type Result<T> = std::result::Result<T, Error>;
