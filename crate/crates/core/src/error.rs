use thiserror::Error;

/// Errors raised by the geometry, extraction and verification routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A probe point handed to the probe-based graph test is off the subspace
    /// or too far from its reference axis.
    #[error("probe {probe} violates the probe hypothesis")]
    PreconditionViolated { probe: usize },

    #[error("unknown zoo entry `{0}`")]
    UnknownEntry(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("jacobian is rank deficient (smallest singular value {sigma:e})")]
    RankDeficient { sigma: f64 },

    #[error("component reaches the boundary of chart {chart} and no chart continues it")]
    BoundaryEscape { chart: usize },

    #[error("height solve did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("height solve left the component")]
    LeftRegion,

    #[error("not a graph: {multi_sheet} multi-sheet and {uncovered} uncovered nodes")]
    NotAGraph { multi_sheet: usize, uncovered: usize },

    #[error("inconclusive: {0}")]
    Inconclusive(String),

    #[error("radius monotonicity violated at r = {radius:e} (expected {expected})")]
    MonotonicityViolated { radius: f64, expected: &'static str },

    #[error("hypothesis not satisfied: {0}")]
    HypothesisFailed(String),

    #[error("probe hypothesis failed at node {node}, probe {probe}")]
    ProbeHypothesisFailed { node: usize, probe: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
