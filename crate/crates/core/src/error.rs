use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("graph has no edges after dropping self-loops")]
    EmptyGraph,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid query: {0}")]
    InvalidQuery(String),

    #[error("graph is bipartite; approximate methods need a non-bipartite graph")]
    Bipartite,

    #[error("graph is disconnected")]
    Disconnected,

    #[error("graph has {n} nodes, above the dense oracle limit of {limit}")]
    TooLarge { n: usize, limit: usize },

    #[error(
        "power iteration did not converge after {iterations} iterations \
         (estimate {estimate}, residual {residual:e})"
    )]
    NotConverged {
        iterations: usize,
        estimate: f64,
        residual: f64,
    },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("time budget exceeded")]
    Timeout,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
