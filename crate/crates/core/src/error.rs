use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("matrix is singular")]
    SingularMatrix,
    #[error("element is not in the Lie algebra (residual {0:.3e})")]
    NotInAlgebra(f64),
    #[error("matrix logarithm requested outside ||M - I|| < 1 (distance {0:.3e})")]
    LogDomain(f64),
    #[error("loop evaluated at zero")]
    EvalAtZero,
    #[error("loop is not invertible on the working band")]
    LoopNotInvertible,
    #[error("loop is not in the big cell (condition {condition:.3e})")]
    NotInBigCell { condition: f64 },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("outside domain: {0}")]
    DomainError(String),
    #[error("integration failed: {0}")]
    IntegrationFailure(String),
    #[error("factorization fails at the base point")]
    FatalOffBigCell,
    #[error("potential violates the morphing condition (residual {0:.3e})")]
    MorphingViolated(f64),
    #[error("gauge varies across spectral samples by {0:.3e}")]
    GaugeInconsistent(f64),
    #[error("frame reality does not match the Sym variant (residual {0:.3e})")]
    WrongRealityForVariant(f64),
    #[error("matrix is not of the expected form (residual {0:.3e})")]
    NotInExpectedForm(f64),
    #[error("argument too close to a pole of the elliptic function")]
    PoleProximity,
    #[error("Maurer-Cartan form does not match the expected pattern: {0}")]
    PatternMismatch(String),
    #[error("sampling region too small: {0}")]
    RegionTooSmall(String),
    #[error("degenerate metric at node {0}")]
    DegenerateMetric(usize),
    #[error("nothing to export")]
    NothingToExport,
    #[error("spec error at {pointer}: {message}")]
    Spec { pointer: String, message: String },
    #[error("i/o error: {0}")]
    Io(String),
    #[error("corrupt cache file: {0}")]
    Format(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
