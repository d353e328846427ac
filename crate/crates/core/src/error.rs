use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("matrix is not Hermitian (max |H - H^dagger| = {residual:e})")]
    NotHermitian { residual: f64 },

    #[error("no level crossing inside [{lo_t} T, {hi_t} T]: gap is minimal at the range edge")]
    NoCrossing { lo_t: f64, hi_t: f64 },

    #[error("singular rate configuration: {0}")]
    SingularRates(String),

    #[error("no feature found: trace is flat")]
    NoFeature,

    #[error("parameters not identifiable: {0}")]
    NotIdentifiable(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("signal is not linear over the calibration window (rms residual {rms_fraction:.3} of range)")]
    NonLinear { rms_fraction: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    /// True for errors caused by files or formats rather than physics or numerics.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io(_) | Error::Parse(_))
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        if e.is_io_error() {
            match e.into_kind() {
                csv::ErrorKind::Io(io) => Error::Io(io),
                other => Error::Parse(format!("{other:?}")),
            }
        } else {
            Error::Parse(e.to_string())
        }
    }
}
