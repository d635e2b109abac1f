use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("self-loop at line {line}")]
    SelfLoop { line: usize },

    #[error("invalid input: {0}")]
    Validation(String),

    #[error("edge index {index} out of range ({edge_count} edges)")]
    InvalidEdge { index: usize, edge_count: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: String, got: String },

    #[error("node {node} has no label")]
    Unlabeled { node: usize },

    #[error("filtered row sum is not positive for nodes {nodes:?}")]
    NonNormalizable { nodes: Vec<usize> },

    #[error("every edge is excluded; the drop distribution has empty support")]
    EmptySupport,

    #[error("training failed: {0}")]
    Training(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by bad user input rather than internal failure.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Io(_) | Error::Training(_))
    }
}
