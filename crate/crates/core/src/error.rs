use std::fmt;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error in {source_name}: {message}")]
    Parse { source_name: String, message: String },

    #[error("invariant violation: {0}")]
    InvariantViolation(String),

    #[error("graph contains a cycle through node {0}")]
    CyclicGraph(i64),

    #[error("graph is not layered: node {node} is reachable by paths of length {shortest} and {longest}")]
    NonLayered { node: i64, shortest: usize, longest: usize },

    #[error("invalid convolution spec: {0}")]
    InvalidSpec(String),

    #[error("breakpoint x = {x} lies outside the open domain ({lo}, {hi})")]
    BreakpointOutOfDomain { x: f64, lo: f64, hi: f64 },

    #[error("model {0} is already stored")]
    DuplicateModel(i64),

    #[error("input vector {0} is already stored")]
    DuplicateVector(i64),

    #[error("model {0} is not stored")]
    UnknownModel(i64),

    #[error("unsupported activation {activation} for {context}")]
    UnsupportedActivation { activation: String, context: String },

    #[error("invalid evaluation depth {0}; fixed composition needs depth >= 1")]
    InvalidDepth(usize),

    #[error("model is not geometry eligible: {0}")]
    NotGeometryEligible(String),

    #[error("invalid interval [{lo}, {hi}]")]
    InvalidInterval { lo: f64, hi: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no baseline input vector {0} is stored")]
    MissingBaseline(i64),

    #[error("engine capability missing: {0}")]
    CapabilityMissing(&'static str),

    #[error("engine unavailable: {0}")]
    EngineUnavailable(String),

    #[error("engine error: {message}{}", SqlContext(.sql))]
    Engine { message: String, sql: Option<String> },

    #[error("result does not match declared schema: {0}")]
    SchemaMismatch(String),

    #[error("worker failed: {0}")]
    Worker(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

struct SqlContext<'a>(&'a Option<String>);

impl fmt::Display for SqlContext<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Some(sql) => write!(f, "\n--- while executing ---\n{sql}"),
            None => Ok(()),
        }
    }
}

impl Error {
    pub(crate) fn engine(err: duckdb::Error) -> Self {
        Error::Engine { message: err.to_string(), sql: None }
    }

    pub(crate) fn engine_with_sql(err: duckdb::Error, sql: &str) -> Self {
        Error::Engine { message: err.to_string(), sql: Some(sql.to_string()) }
    }

    /// Coarse classification used by the CLI to pick exit codes.
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Engine { .. }
            | Error::EngineUnavailable(_)
            | Error::CapabilityMissing(_)
            | Error::SchemaMismatch(_)
            | Error::Worker(_) => ErrorKind::Engine,
            _ => ErrorKind::Data,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Data,
    Engine,
}

impl From<duckdb::Error> for Error {
    fn from(err: duckdb::Error) -> Self {
        Error::engine(err)
    }
}
