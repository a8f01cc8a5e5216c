use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),

    #[error("edge ({u}, {v}) has invalid weight {w}: weights must be positive and finite")]
    InvalidWeight { u: usize, v: usize, w: f64 },

    #[error("vertex {v} out of range for graph with {n} vertices")]
    VertexOutOfRange { v: usize, n: usize },

    #[error("graph is disconnected; component sizes {0:?}")]
    Disconnected(Vec<usize>),

    #[error("matrix is not symmetric at entry ({i}, {j})")]
    NotSymmetric { i: usize, j: usize },

    #[error(
        "matrix is not diagonally dominant at row {row}: diagonal {diag} < off-diagonal sum {offdiag_sum}"
    )]
    NotDominant {
        row: usize,
        diag: f64,
        offdiag_sum: f64,
    },

    #[error("non-finite value in row {row}")]
    NonFiniteEntry { row: usize },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid parameter {name}: {msg}")]
    InvalidParameter { name: &'static str, msg: String },

    #[error("tree does not span the graph: {0}")]
    TreeMismatch(String),

    #[error("problem size {n} exceeds the dense oracle limit {limit}")]
    OracleLimit { n: usize, limit: usize },

    #[error("chain level {level} failed its reduction test after {attempts} attempts")]
    RetryBudgetExhausted { level: usize, attempts: usize },

    #[error("non-finite value encountered in {what} at iteration {iteration}")]
    NonFinite { what: &'static str, iteration: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, msg: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            msg: msg.into(),
        }
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }
}
