use std::path::PathBuf;

use thiserror::Error;

/// Errors raised while loading traces, building graphs and solving plans.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error: {0}")]
    Parse(String),

    /// A trace or plan violates one of its structural invariants.
    #[error("invariant violated at frame {frame}: {reason}")]
    Invariant { frame: usize, reason: String },

    #[error("no motion link between frames {src} and {dst}")]
    MissingLink { src: usize, dst: usize },

    #[error("links do not share a middle frame: first ends at {first_dst}, second starts at {second_src}")]
    MiddleFrameMismatch { first_dst: usize, second_src: usize },

    #[error("no path from source to sink: {0}")]
    NoPath(String),

    #[error("feature tracking lost between frames {src} and {dst}")]
    TrackingLost { src: usize, dst: usize },

    #[error("crop window has no covered interior at frame {frame}")]
    EmptyCoverage { frame: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    pub(crate) fn invariant(frame: usize, reason: impl Into<String>) -> Self {
        Error::Invariant {
            frame,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
