use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("unknown element id {0:?}")]
    UnknownId(String),
    #[error("unknown vertex {0}")]
    UnknownVertex(usize),
    #[error("point lies outside the outer disk")]
    OutsideDisk,
    #[error("disk is not convex")]
    NonConvex,
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("sample too coarse: {0} (resample finer)")]
    SampleTooCoarse(String),
    #[error("no chain found from {0:?}")]
    NoChain(String),
    #[error("not a simplicial map: {0}")]
    NotSimplicial(String),
    #[error("index {index} out of range (len {len})")]
    OutOfRange { index: usize, len: usize },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
