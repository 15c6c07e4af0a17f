use alloc::string::String;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("determinant is {0}, expected 1")]
    Determinant(String),
    #[error("matrix is not hyperbolic (trace {0})")]
    NotHyperbolic(String),
    #[error("invalid discriminant {0}: must be positive and not a square")]
    Discriminant(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("geodesics do not cross")]
    NotCrossing,
    #[error("geodesics share their endpoints")]
    SameAxis,
    #[error("classes are equivalent")]
    EquivalentClasses,
    #[error("{what} did not converge (reached {reached})")]
    NonConvergence { what: &'static str, reached: String },
    #[error("point {0} is a pole")]
    Pole(String),
    #[error("outside the implemented domain: {0}")]
    Domain(String),
}

pub type Result<T> = core::result::Result<T, Error>;
