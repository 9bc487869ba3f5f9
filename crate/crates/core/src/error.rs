use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid polygon: {0}")]
    InvalidPolygon(String),

    #[error("invalid polygon at instance {index}: {reason}")]
    InstancePolygon { index: usize, reason: String },

    #[error("{name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },

    #[error("{name} out of range: {value} not in [{min}, {max}]")]
    OutOfRange {
        name: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("label {0} does not exist in the label map")]
    UnknownLabel(u32),

    #[error("lexicon is empty")]
    EmptyLexicon,

    #[error("invalid annotation: {0}")]
    InvalidAnnotation(String),

    #[error("malformed tensor file: {0}")]
    TensorFormat(String),

    #[error("malformed image: {0}")]
    ImageFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Image(#[from] image::ImageError),
}

impl Error {
    pub(crate) fn out_of_range(name: &'static str, value: f64, min: f64, max: f64) -> Self {
        Error::OutOfRange {
            name,
            value,
            min,
            max,
        }
    }
}

/// Fails with [`Error::NonPositive`] unless `value > 0` (NaN fails too).
pub(crate) fn ensure_positive(name: &'static str, value: f64) -> Result<f64> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonPositive { name, value })
    }
}

pub(crate) fn ensure_in_range(name: &'static str, value: f64, min: f64, max: f64) -> Result<f64> {
    if (min..=max).contains(&value) {
        Ok(value)
    } else {
        Err(Error::out_of_range(name, value, min, max))
    }
}
