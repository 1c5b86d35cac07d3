use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Unified error type for the crate.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Construction-time parameter validation failed.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// An evaluation was requested outside the mathematical domain of the
    /// operation (e.g. a forcing amplitude at t <= 0 where it is singular).
    #[error("domain error: {0}")]
    Domain(String),

    /// The requested operation is outside what the implementation covers.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// A moment system with nonlinear drift has no closed second-moment
    /// system; integrating it would require a closure approximation that
    /// this crate deliberately does not provide.
    #[error("unsupported closure: {0}")]
    UnsupportedClosure(String),

    /// A trajectory integration produced a non-finite state.
    #[error("numerical blow-up at t = {t}")]
    NumericalBlowup { t: f64 },

    /// The finite-difference scheme produced densities below the tolerated
    /// negative floor.
    #[error("scheme failure: {0}")]
    SchemeFailure(String),

    /// Mass drifted beyond tolerance during a conservative solve.
    #[error("mass conservation violated: drift = {drift:e}")]
    Conservation { drift: f64 },

    /// A value has no preimage under the map being inverted.
    #[error("out of range: {0}")]
    OutOfRange(String),

    /// The data cannot support the requested fit.
    #[error("fit degenerate: {0}")]
    FitDegenerate(String),

    #[error("empty ensemble")]
    EmptyEnsemble,

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
