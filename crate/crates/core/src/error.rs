use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("infeasible target parameters: {0}")]
    Infeasible(String),
    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),
    #[error("vertex {vertex} out of range for n = {n}")]
    VertexOutOfRange { vertex: usize, n: usize },
    #[error("edge list line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("cannot read {path:?}: {message}")]
    Io { path: PathBuf, message: String },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StateError {
    #[error("self-loop claim at vertex {0}")]
    SelfLoop(usize),
    #[error("vertex {vertex} out of range for n = {n}")]
    VertexOutOfRange { vertex: usize, n: usize },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PartitionError {
    #[error("number of parts must be positive")]
    NoParts,
    #[error("distance must be positive")]
    ZeroDistance,
    #[error("subset vertex {0} not in graph")]
    BadVertex(usize),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CandidateError {
    #[error("independent set is empty")]
    EmptyIndependentSet,
    #[error("coverage must be positive")]
    ZeroCoverage,
    #[error("vertices {0} and {1} of the independent set are adjacent")]
    NotIndependent(usize, usize),
    #[error("candidate pool exhausted: requested coverage {requested}, achieved {achieved}")]
    InfeasibleCoverage { requested: usize, achieved: usize },
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("worker pool: {0}")]
    Pool(String),
}
