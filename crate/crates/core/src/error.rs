use thiserror::Error;

#[derive(Debug, Error)]
pub enum LandscapeError {
    #[error("parameter {name} must be positive, got {value}")]
    NonPositiveParameter { name: &'static str, value: f64 },
    #[error("scale factor k must exceed 1, got {0}")]
    InvalidScaleFactor(f64),
    #[error("basis is not orthonormal: max deviation {max_dev:.3e} exceeds {tol:.1e}")]
    NotOrthonormal { max_dev: f64, tol: f64 },
    #[error("dimension mismatch: {expected} components expected, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("probe point is within {step:.1e} of a kink; move the probe or shrink the step")]
    NearKink { step: f64 },
    #[error("unknown landscape id `{0}`")]
    UnknownId(String),
    #[error("malformed landscape id `{id}`: {reason}")]
    MalformedId { id: String, reason: String },
}

#[derive(Debug, Error)]
pub enum PeriodicError {
    #[error("no 2-periodic orbit: eta {eta} is at or below the threshold {threshold}")]
    NoOrbit { eta: f64, threshold: f64 },
    #[error("bracket expansion exceeded {cap:.1e} without a sign change")]
    BracketFailure { cap: f64 },
}

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("initial point contains a non-finite coordinate")]
    NonFiniteInit,
    #[error("schedule must start at step 0 with strictly increasing steps and positive rates")]
    InvalidSchedule,
    #[error("trajectory was recorded without sharpness")]
    MissingSharpness,
    #[error("step count must be at least 1")]
    NoSteps,
}

#[derive(Debug, Error)]
pub enum DataLossError {
    #[error("dataset magnitude {0} is not strictly positive")]
    NonPositiveMagnitude(f64),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("scale ratio must exceed 1, got {0}")]
    InvalidRatio(f64),
    #[error("failed to parse dataset line {line}: `{text}`")]
    ParseLine { line: usize, text: String },
}

#[derive(Debug, Error)]
pub enum QuasistaticError {
    #[error(transparent)]
    NoOrbit(#[from] PeriodicError),
    #[error("drift ODE state became non-finite at t = {t}")]
    Diverged { t: f64 },
    #[error("step size dt must be positive and no larger than T")]
    InvalidStep,
}
