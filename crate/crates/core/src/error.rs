use thiserror::Error;

/// Errors surfaced by the modelling and solving layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },

    #[error("invalid scenario: {0}")]
    Validation(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("impossible generator parameters: {0}")]
    Generator(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("infeasible input: {}", .0.join("; "))]
    Infeasible(Vec<String>),

    #[error("baseline restriction failed: {0}")]
    Baseline(String),

    #[error("no feasible initial assignment: {0}")]
    InitialAssignment(String),

    #[error("theta encoding: {0}")]
    Encoding(String),

    #[error("unsatisfiable penalty row: {0}")]
    Unsatisfiable(String),

    #[error("qubo too large for exhaustive search: {bits} bits > {limit}")]
    SizeGuard { bits: usize, limit: usize },

    #[error("no feasible candidate among the sampled master solutions")]
    EmptyCandidates,

    #[error("numerical failure in LP engine: {0}")]
    NumericalFailure(String),

    #[error("branch-and-bound limit reached: {0}")]
    NodeLimit(String),

    #[error("external sampler: {0}")]
    External(String),

    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
