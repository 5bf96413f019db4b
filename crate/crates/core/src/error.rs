use thiserror::Error;

use crate::prefix::Prefix;

/// Errors raised by the forwarding-table model.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("width mismatch: expected {expected} bits, found {found}")]
    WidthMismatch { expected: u8, found: u8 },

    #[error("invalid address width {0} (supported: 1..=128)")]
    InvalidWidth(u32),

    #[error("invalid prefix `{text}`: {reason}")]
    InvalidPrefix { text: String, reason: String },

    #[error("invalid address `{text}`: {reason}")]
    InvalidAddress { text: String, reason: String },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("duplicate rule ({dest}, {src})")]
    DuplicateRule { dest: Prefix, src: Prefix },

    #[error("no rule ({dest}, {src})")]
    MissingRule { dest: Prefix, src: Prefix },

    #[error("source {src} is not black in the colored forest of {dest}")]
    NotBlack { dest: Prefix, src: Prefix },

    #[error("table is not saturated")]
    Unsaturated,

    #[error("table is frozen (produced by compression) and cannot be updated")]
    Frozen,

    #[error("no root action: the prefix set does not cover the full address space")]
    NoRootAction,

    #[error("corrupt table: {0}")]
    Corruption(String),

    #[error("row {row} / column {col} is not assigned")]
    Unassigned { row: u32, col: u32 },

    #[error("TCAM layout capacity exhausted ({capacity} slots)")]
    CapacityExhausted { capacity: usize },

    #[error("infeasible scenario: {0}")]
    Infeasible(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("trace op {index}: {source}")]
    Trace {
        index: usize,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
