use thiserror::Error;

/// Errors produced by sampling, MMLS projection and the solvers.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("empty input")]
    EmptyInput,
    #[error("ragged input: row {row} has {len} coordinates, expected {expected}")]
    RaggedInput {
        row: usize,
        len: usize,
        expected: usize,
    },
    #[error("intrinsic dimension {intrinsic} must satisfy 1 <= d < D = {ambient}")]
    InvalidDimension { intrinsic: usize, ambient: usize },
    #[error("{got} cost samples given for {expected} points")]
    ValuesLength { got: usize, expected: usize },
    #[error("non-finite coordinate in query point")]
    NonFinite,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("at least two points are required, got {0}")]
    TooFewPoints(usize),
    #[error("the sample set carries no cost samples")]
    MissingValues,
    #[error("no samples inside the weight support")]
    EmptySupport,
    #[error("{found} samples inside the weight support, {required} required")]
    InsufficientSupport { found: usize, required: usize },
    #[error("weighted covariance has fewer than {intrinsic} significant directions")]
    RankDeficient { intrinsic: usize },
    #[error("local frame did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },
    #[error("weighted least-squares system is ill-conditioned")]
    IllConditioned,
    #[error("polynomial of degree 0 has no linear part")]
    DegreeTooLow,
    #[error("tangent basis is rank deficient")]
    SingularGram,
    #[error("step size {alpha:e} fell below the step tolerance")]
    StepTooSmall { alpha: f64 },
    #[error("search direction is not a descent direction")]
    NonDescentDirection,
    #[error("initial point could not be projected: {0}")]
    InitialProjectionFailure(Box<Error>),
    #[error("unknown problem `{0}`")]
    UnknownProblem(String),
    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(err: serde_json::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
