use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed graph document: {0}")]
    Parse(#[from] serde_json::Error),

    #[error("graph must have at least one vertex")]
    EmptyGraph,

    #[error("edge {edge} is a loop at vertex {vertex}")]
    LoopEdge { edge: usize, vertex: usize },

    #[error("edge {edge} references vertex {vertex} but the graph has {g} vertices")]
    VertexOutOfRange { edge: usize, vertex: usize, g: usize },

    #[error("graph is not connected")]
    Disconnected,

    #[error("graph is not regular")]
    NotRegular,

    #[error("degree {0} is too small (need d >= 3)")]
    DegreeTooSmall(usize),

    #[error("matrix is not symmetric: entries ({row},{col}) and ({col},{row}) differ")]
    NotSymmetric { row: usize, col: usize },

    #[error("vectors are linearly dependent")]
    Dependent,

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("no strictly interior point on the affine section")]
    NoInteriorPoint,

    #[error("optimizer failed to converge: residual {residual:e} after {iterations} iterations")]
    NoConvergence { residual: f64, iterations: usize },

    #[error("Laplace hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("{what}: estimated {estimated} exceeds budget {cap}")]
    Budget {
        what: &'static str,
        estimated: String,
        cap: u64,
    },

    #[error("internal consistency check failed: {0}")]
    Inconsistent(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn budget(what: &'static str, estimated: impl ToString, cap: u64) -> Self {
        Error::Budget {
            what,
            estimated: estimated.to_string(),
            cap,
        }
    }

    /// True for failures caused by an enumeration or work budget.
    pub fn is_budget(&self) -> bool {
        matches!(self, Error::Budget { .. })
    }
}
