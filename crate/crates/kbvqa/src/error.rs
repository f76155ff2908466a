//! Error type shared by every module in this crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A line of an input file could not be parsed.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// A required field was absent from a record.
    #[error("schema error at line {line}: missing field `{field}`")]
    MissingField { line: usize, field: String },

    /// A key that must be unique appeared twice.
    #[error("duplicate key `{key}` at line {line}")]
    DuplicateKey { line: usize, key: String },

    /// A triple endpoint does not resolve to an object in the same graph.
    #[error("reference error in image `{image_id}`: unknown object id `{id}`")]
    Reference { image_id: String, id: String },

    /// An embedding row had the wrong number of components.
    #[error("dimension error at line {line}: expected {expected} components, found {found}")]
    Dimension {
        line: usize,
        expected: usize,
        found: usize,
    },

    /// Incompatible tensor or logit shapes.
    #[error("shape error: {0}")]
    Shape(String),

    /// A caller violated an operation precondition.
    #[error("contract violation: {0}")]
    Contract(String),

    /// A persisted file is corrupt; `offset` is the byte offset of the bad record.
    #[error("format error at byte offset {offset}: {message}")]
    Format { offset: u64, message: String },

    /// A lookup target does not exist.
    #[error("not found: {0}")]
    NotFound(String),

    /// Invalid configuration, including world-generation constraints.
    #[error("config error: {0}")]
    Config(String),

    /// Two inputs that must agree do not (e.g. checkpoint vs. answer vocabulary).
    #[error("consistency error: {0}")]
    Mismatch(String),

    /// Training hit a non-finite loss or gradient.
    #[error("training diverged at epoch {epoch}, batch {batch}: {message}")]
    Diverged {
        epoch: usize,
        batch: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
