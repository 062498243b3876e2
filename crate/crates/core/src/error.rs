use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("ontology parse error: {0}")]
    OntologyParse(String),

    #[error("invalid ontology: {0}")]
    InvalidOntology(String),

    #[error("unknown built-in ontology `{0}` (expected toy, dstc2-like or dstc3-like)")]
    UnknownOntology(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid belief state: {0}")]
    InvalidBelief(String),

    #[error("illegal dialogue act: {0}")]
    IllegalAct(String),

    #[error("cannot parse dialogue act `{0}`")]
    ActParse(String),

    #[error("invalid error model: {0}")]
    InvalidErrorModel(String),

    #[error("architecture mismatch: {0}")]
    ArchitectureMismatch(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("replay buffer holds {available} transitions, cannot sample {requested}")]
    InsufficientSamples { available: usize, requested: usize },

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
