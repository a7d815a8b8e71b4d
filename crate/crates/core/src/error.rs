use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("fully masked distribution")]
    FullyMasked,

    #[error("non-finite objective: {0}")]
    NonFinite(String),

    #[error("gradient shape mismatch for {name}: expected {expected} values, got {actual}")]
    GradientShape {
        name: String,
        expected: usize,
        actual: usize,
    },

    #[error("shape error: {0}")]
    Shape(String),

    #[error("duplicate parameter name {0}")]
    DuplicateParameter(String),

    #[error("unknown parameter {0}")]
    UnknownParameter(String),

    #[error("format error at line {line}: {message}")]
    Format { line: usize, message: String },

    #[error("ill-formed tree: {0}")]
    IllFormedTree(String),

    #[error("illegal transition: {0}")]
    IllegalTransition(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("vocabulary is frozen; cannot insert {0:?}")]
    FrozenVocabulary(String),

    #[error("alignment error at sentence {index}: {message}")]
    Alignment { index: usize, message: String },

    #[error("incomplete surgery plan: {0}")]
    IncompleteSurgeryPlan(String),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("empty input: {0}")]
    Empty(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
