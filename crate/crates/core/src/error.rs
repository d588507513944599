use thiserror::Error;

/// Errors raised by grids, models, iteration engines and the experiment runner.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("multiplier is not conjugate-symmetric at index {index}; real input would produce complex output")]
    SymmetryViolation { index: usize },

    #[error("singular 2x2 block at Fourier mode {mode}: |det| = {det:e}")]
    SingularBlock { mode: i64, det: f64 },

    #[error("linear operator is singular or numerically rank deficient (rcond = {rcond:e})")]
    SingularOperator { rcond: f64 },

    #[error("Fourier symbol vanishes at mode {mode}: |symbol| = {value:e}")]
    SingularSymbol { mode: i64, value: f64 },

    #[error("initial guess `{kind}` is incompatible with this model: {reason}")]
    IncompatibleKind { kind: String, reason: String },

    #[error("degenerate denominator <N(u),u> = {0:e} in the stabilizing factor")]
    DegenerateDenominator(f64),

    #[error("stabilizing factor base {base:e} is negative and exponent {exponent} is fractional")]
    NegativeBaseFractionalPower { base: f64, exponent: f64 },

    #[error("extrapolation breakdown: {0}")]
    Breakdown(String),

    #[error("ill-conditioned least-squares problem (condition estimate {0:e})")]
    IllConditioned(f64),

    #[error("eigensolver did not converge; achieved residuals {0:?}")]
    NoConvergence(Vec<f64>),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("configuration error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("linear algebra backend failure: {0}")]
    Backend(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
