use thiserror::Error;

use crate::planner::TerminatedBy;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse error at line {line}: {msg}")]
    ParseError { line: usize, msg: String },

    #[error("goal cell is occupied after inflation")]
    GoalOccupied,

    #[error("start pose collides with the map")]
    InvalidStart,

    #[error("NoPath: search ended ({terminated_by:?}) after {expansions} expansions")]
    NoPath {
        terminated_by: TerminatedBy,
        expansions: usize,
    },

    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },

    #[error("replay buffer holds {size} transitions, batch needs {needed}")]
    BufferTooSmall { size: usize, needed: usize },

    #[error("episode already finished")]
    EpisodeFinished,

    #[error("map generation failed after {0} attempts")]
    GenerationFailed(usize),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
