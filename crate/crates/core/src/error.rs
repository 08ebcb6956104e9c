use thiserror::Error;

/// Errors raised while building families, threshold rules, or sequences.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("undefined index f{index}: family has only {len} selection functions and no tail rule")]
    UndefinedIndex { index: u32, len: usize },

    #[error("selection index must be at least 1")]
    ZeroIndex,

    #[error("f1 must be the always-care function, found {found}")]
    FirstNotAlways { found: String },

    #[error("family must contain at least one selection function")]
    EmptyFamily,

    #[error("invalid selection function f{index}: {reason}")]
    InvalidSpec { index: u32, reason: String },

    #[error("finite construction requires a finite family (this family has a tail rule)")]
    InfiniteFamily,

    #[error("threshold base must satisfy r > 2, got {0}")]
    BaseTooSmall(u64),

    #[error("threshold table is empty")]
    EmptyTable,

    #[error("threshold table must be strictly increasing and positive (entry {level} = {capacity})")]
    TableNotIncreasing { level: u32, capacity: u64 },

    #[error("threshold table exhausted: the run needs level {level} but the table has {len} entries")]
    TableExhausted { level: u32, len: usize },

    #[error("capacity({level}) = {capacity} does not exceed 2^{level}")]
    CapacityTooSmall { level: u32, capacity: u64 },

    #[error("lil_curve needs n >= 3 and 0 <= eps <= 1 (got n = {n}, eps = {eps})")]
    LilDomain { n: f64, eps: f64 },

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
