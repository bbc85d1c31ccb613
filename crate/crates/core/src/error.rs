use thiserror::Error;

/// Errors raised anywhere in the estimation pipeline.
#[derive(Error, Debug)]
pub enum Error {
    #[error("newick parse error at byte {pos}: {msg}")]
    Newick { pos: usize, msg: String },
    #[error("invalid tree: {0}")]
    InvalidTree(String),
    #[error("unknown leaf label `{0}`")]
    UnknownLabel(String),
    #[error("leaf sets differ between the two trees")]
    LeafSetMismatch,
    #[error("need at least {needed} leaves, got {got}")]
    TooFewLeaves { needed: usize, got: usize },
    #[error("triple set is incomplete: {0}")]
    IncompleteTriples(String),
    #[error("invalid node {0}: {1}")]
    InvalidNode(usize, String),
    #[error("invalid data: {0}")]
    InvalidData(String),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
