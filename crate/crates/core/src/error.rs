use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("edge relation contains a cycle through node {node}")]
    Cycle { node: usize },

    #[error("invalid graph: {0}")]
    Graph(String),

    #[error("action slot {slot} = {value} outside bounds [{lo}, {hi}]")]
    Bounds { slot: usize, value: f64, lo: f64, hi: f64 },

    #[error("non-finite value {value} produced at node {node}")]
    NonFinite { node: usize, value: f64 },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Raised when data carry no variation to fit. Callers that can proceed
    /// with a fallback model (constant regressor, spike mixture) do so.
    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("invalid configuration: {0}")]
    Config(String),
}
