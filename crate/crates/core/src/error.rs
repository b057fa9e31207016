use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("invalid odd profile: {0}")]
    InvalidProfile(String),

    #[error("degenerate curve: edge {edge} has length {length:e}")]
    DegenerateCurve { edge: usize, length: f64 },

    #[error("ambiguous embedding: segments {first} and {second} pass within {distance:e}")]
    AmbiguousEmbedding {
        first: usize,
        second: usize,
        distance: f64,
    },

    #[error("flow integrity lost at t = {time}: {reason}")]
    Integrity { time: f64, reason: String },

    #[error("point at distance {distance:e} from the curve, need at least {required:e}")]
    Proximity { distance: f64, required: f64 },

    #[error("cannot track the lift at loop step {step}: {reason}")]
    Tracking { step: usize, reason: String },

    #[error("malformed input {path}: {reason}")]
    Input { path: PathBuf, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
