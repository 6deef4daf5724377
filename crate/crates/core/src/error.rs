use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("not a scale function: {0}")]
    NotScaleFunction(String),
    #[error("scl-int violated: {0}")]
    SclIntViolated(String),
    #[error("quadrature did not converge (residual {residual:e})")]
    Quadrature { residual: f64 },
    #[error("strong uniformity violated: beta_* = {0} <= 1")]
    StrongUniformity(f64),
    #[error("no admissible resistance form for tau = {0}")]
    NoResistanceForm(f64),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("time too small for lattice: {0}")]
    TimeTooSmall(String),
    #[error("out of estimate range: {0}")]
    OutOfRange(String),
    #[error("missing scale: {0}")]
    MissingScale(&'static str),
    #[error("graph is disconnected")]
    Disconnected,
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("empty window: {0}")]
    EmptyWindow(String),
}

impl Error {
    /// True for errors caused by bad user input rather than numerics.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidInput(_) | Error::MissingScale(_) | Error::NoResistanceForm(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
