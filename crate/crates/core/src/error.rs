// SPDX-License-Identifier: MIT OR Apache-2.0
//! Error type shared by every kernel in the crate.

use alloc::string::String;

/// Failure modes of the core kernels.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// Two operands live on domains of different sizes.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    /// Two operands live on different groups.
    #[error("group mismatch")]
    GroupMismatch,
    /// A textual descriptor or file could not be parsed.
    #[error("parse error: {0}")]
    Parse(String),
    /// The requested enumeration is larger than the configured budget.
    #[error("budget exceeded for {what}: about {estimate} units against a limit of {limit}")]
    Budget {
        what: &'static str,
        estimate: f64,
        limit: f64,
    },
    /// The operation declines inputs outside its supported scale.
    #[error("refused: {0}")]
    Refused(String),
    /// A stated precondition does not hold.
    #[error("precondition failed: {0}")]
    Precondition(String),
    /// A restriction or average over an empty set was requested.
    #[error("empty subset")]
    EmptySubset,
    /// A multiplication table violates a group axiom.
    #[error("invalid group table: {0}")]
    InvalidTable(String),
    /// An input claimed to avoid three-term progressions contains one.
    #[error("set contains the progression {0:?}")]
    HasProgression([i64; 3]),
    /// A search that is guaranteed to succeed came back empty.
    #[error("not found: {0}")]
    NotFound(String),
}

/// Crate-wide result alias.
pub type Result<T> = core::result::Result<T, Error>;
