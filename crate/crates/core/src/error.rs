use thiserror::Error;

/// Errors raised by the numerical pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported geometry: {0}")]
    UnsupportedGeometry(String),

    #[error("spectral gap closed at fermi level {fermi_level}: measured gap {gap:e} < threshold {threshold:e}")]
    GapClosed {
        fermi_level: f64,
        gap: f64,
        threshold: f64,
    },

    #[error("degenerate Dirac shift: site {site:?} is mapped onto the origin")]
    DegenerateShift { site: Vec<i64> },

    #[error("numerical inconsistency in {what}: residual {residual:e} exceeds tolerance {tolerance:e}")]
    NumericalInconsistency {
        what: String,
        residual: f64,
        tolerance: f64,
    },

    #[error("ambiguous kernel: singular value {singular_value:e} lies inside the separation band around tol = {tol:e}")]
    AmbiguousKernel { tol: f64, singular_value: f64 },

    #[error("oracle value {value} is not quantized (distance to nearest integer {distance:e})")]
    NotQuantized { value: f64, distance: f64 },

    #[error("LAPACK failure in {routine}: info = {info}")]
    Lapack { routine: &'static str, info: i32 },

    #[error("linear algebra: {0}")]
    Linalg(#[from] ndarray_linalg::error::LinalgError),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
