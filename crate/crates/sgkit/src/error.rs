//! Error type shared across the crate.
//!
//! Every fallible operation returns [`Result`]. Schema problems carry the
//! path of the offending field (e.g. `graphs[0].edges[2].subject`) so that
//! fixture authors can locate the mistake without a debugger.

use std::path::PathBuf;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// All failure modes surfaced by the toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Filesystem access failed.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A file was not syntactically valid JSON.
    #[error("invalid JSON in {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    /// Structurally valid input that violates the documented schema.
    /// `field` is the dotted/indexed path of the offending value.
    #[error("schema violation at {field}: {message}")]
    Schema { field: String, message: String },

    /// Box parameters outside the normalized-coordinate contract.
    #[error("invalid box: {message}")]
    InvalidBox { message: String },

    /// A class id that the vocabulary does not define.
    #[error("{kind} class id {id} out of range (vocabulary has {len})")]
    ClassOutOfRange {
        kind: &'static str,
        id: usize,
        len: usize,
    },

    /// Operands whose dimensions do not line up.
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    /// An operation that requires at least one element got none.
    #[error("empty input: {what}")]
    Empty { what: &'static str },

    /// NaN or infinity where a finite value is required.
    #[error("non-finite value in {context}")]
    NonFinite { context: &'static str },

    /// A feature row with zero norm where a direction is required.
    #[error("zero-norm feature row {row}: cosine similarity undefined")]
    ZeroNormRow { row: usize },

    /// A configuration value outside its documented range.
    #[error("invalid config: {message}")]
    InvalidConfig { message: String },

    /// The grounding backend could not answer a prompt.
    #[error("grounding failed for prompt {prompt:?}: {message}")]
    Grounding { prompt: String, message: String },
}

impl Error {
    /// Convenience constructor for schema violations.
    pub fn schema(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema {
            field: field.into(),
            message: message.into(),
        }
    }

    /// Convenience constructor for config violations.
    pub fn config(message: impl Into<String>) -> Self {
        Error::InvalidConfig {
            message: message.into(),
        }
    }
}
