use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("format error: {0}")]
    Format(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("duplicate video id `{0}`")]
    DuplicateId(String),

    #[error("video `{0}` has an empty action list")]
    EmptyTranscript(String),

    #[error("unknown action label `{0}`")]
    UnknownAction(String),

    #[error("action `{0}` has no instances in the training data")]
    MissingAction(String),

    #[error("infeasible alignment{}: {frames} frames for {required} subaction states",
        video.as_ref().map(|v| format!(" for video `{v}`")).unwrap_or_default())]
    Infeasible {
        video: Option<String>,
        frames: usize,
        required: usize,
    },

    #[error("non-monotone alignment at frame {frame}: {reason}")]
    NonMonotone { frame: usize, reason: String },

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("training diverged: non-finite loss")]
    Divergence,
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Attach a video id to an infeasibility error.
    pub fn for_video(self, id: &str) -> Self {
        match self {
            Error::Infeasible {
                frames, required, ..
            } => Error::Infeasible {
                video: Some(id.to_string()),
                frames,
                required,
            },
            other => other,
        }
    }
}
