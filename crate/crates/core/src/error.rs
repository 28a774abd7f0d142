use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("node {node} out of range for topology of {node_count} nodes")]
    NodeOutOfRange { node: usize, node_count: usize },

    #[error("invalid edge ({0}, {1}): {2}")]
    InvalidEdge(usize, usize, String),

    #[error("graph generation failed to produce a connected graph after {retries} retries")]
    Disconnected { retries: usize },

    #[error("instance too large: {combinations} subsets exceed the enumeration cap of {cap}")]
    InstanceTooLarge { combinations: u128, cap: u128 },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
