use std::io;
use std::path::PathBuf;

/// Every failure the screening pipeline can report.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("malformed record at line {line}: {reason}")]
    MalformedRecord { line: usize, reason: String },

    #[error("eye-state sequence has no frames")]
    EmptySequence,

    #[error("frame index {found} at line {line} does not increase past {previous}")]
    NonMonotoneFrames {
        line: usize,
        previous: u64,
        found: u64,
    },

    #[error("validation failed: {0}")]
    ValidationFailure(String),

    #[error("invalid fps {0}: must be finite and positive")]
    InvalidFps(f64),

    #[error("no blinks observed in video `{video_id}`: both eyes are open in every frame")]
    NoBlinksObserved { video_id: String },

    #[error("{what} = {value} is outside [{min}, {max}]")]
    OutOfRange {
        what: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("input {height}x{width} is smaller than the {window}x{window} pooling window")]
    InputTooSmall {
        height: usize,
        width: usize,
        window: usize,
    },

    #[error("training data does not contain both classes: {0}")]
    EmptyClass(String),

    #[error("training diverged: loss became {loss} at epoch {epoch}")]
    DivergedLoss { epoch: usize, loss: f64 },

    #[error("too few items: {0}")]
    TooFewItems(String),

    #[error("invalid duration: {0}")]
    InvalidDuration(String),

    #[error("invalid range: {0}")]
    InvalidRange(String),

    #[error("closed-form oracle needs zero jitter and zero winks")]
    OracleInapplicable,

    #[error("confusion matrix is empty")]
    EmptyMatrix,

    #[error("bad model file: {0}")]
    ModelFormat(String),

    #[error("bad image `{path}`: {reason}")]
    Image { path: PathBuf, reason: String },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True when the error describes bad input rather than a failure of the
    /// program or its environment.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Io(_) | Error::DivergedLoss { .. })
            && !matches!(self, Error::Csv(e) if e.is_io_error())
    }

    pub(crate) fn malformed(line: usize, reason: impl Into<String>) -> Self {
        Error::MalformedRecord {
            line,
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
