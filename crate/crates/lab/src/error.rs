// SPDX-License-Identifier: MIT OR Apache-2.0
use corners_lab_core::Error as CoreError;

/// Everything that can stop a command before its report is written.
#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("unknown suite {0:?}")]
    UnknownSuite(String),
    #[error("refused: {0}")]
    Refused(String),
    #[error(transparent)]
    Core(#[from] CoreError),
}

pub type Result<T> = std::result::Result<T, LabError>;

/// All inequalities held.
pub const EXIT_OK: i32 = 0;
/// Some asserted inequality failed.
pub const EXIT_ASSERTION: i32 = 1;
/// Malformed input, unknown suite or bad arguments.
pub const EXIT_PARSE: i32 = 2;
/// The kernel refused the input: budget, scale or unmet precondition.
pub const EXIT_REFUSED: i32 = 3;

impl LabError {
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Io { .. } | LabError::Parse(_) | LabError::UnknownSuite(_) => EXIT_PARSE,
            LabError::Refused(_) => EXIT_REFUSED,
            LabError::Core(e) => match e {
                CoreError::Parse(_)
                | CoreError::InvalidTable(_)
                | CoreError::DimensionMismatch { .. }
                | CoreError::GroupMismatch => EXIT_PARSE,
                CoreError::Budget { .. }
                | CoreError::Refused(_)
                | CoreError::Precondition(_)
                | CoreError::EmptySubset
                | CoreError::HasProgression(_)
                | CoreError::NotFound(_) => EXIT_REFUSED,
            },
        }
    }
}

pub(crate) fn parse_err(msg: impl Into<String>) -> LabError {
    LabError::Parse(msg.into())
}
