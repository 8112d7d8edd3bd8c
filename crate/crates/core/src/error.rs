use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or inconsistent caller input.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("vertex {0} is not in the graph")]
    UnknownVertex(usize),

    #[error("edge ({0}, {1}) is not in the graph")]
    UnknownEdge(usize, usize),

    #[error("graph is disconnected")]
    Disconnected,

    #[error("region is empty")]
    EmptyRegion,

    /// The Dirichlet problem needs a non-empty boundary.
    #[error("graph has no boundary; use a grounded Green's function instead")]
    NoBoundary,

    #[error("vertex {0} has a truncated edge star (boundary vertex)")]
    TruncatedStar(usize),

    #[error("vertices {0} and {1} are nearest neighbours; use the neighbouring-points cumulant")]
    NotGoodSet(usize, usize),

    #[error("vertices {0} and {1} are not adjacent")]
    NotAdjacent(usize, usize),

    #[error("required and forbidden edge sets overlap at ({0}, {1})")]
    OverlappingQuery(usize, usize),

    #[error("{what}: size {requested} exceeds the limit {limit}")]
    GuardExceeded {
        what: &'static str,
        requested: usize,
        limit: usize,
    },

    #[error("matrix is singular")]
    Singular,

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("probability {0} lies outside [0, 1] beyond round-off")]
    ProbabilityOutOfRange(f64),

    #[error("unsupported lattice: {0}")]
    UnsupportedLattice(String),

    #[error("permutation is not bare")]
    NotBare,

    #[error("point lies too close to the domain boundary")]
    NearBoundary,

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn guard(what: &'static str, requested: usize, limit: usize) -> Self {
        Error::GuardExceeded { what, requested, limit }
    }

    pub fn is_guard(&self) -> bool {
        matches!(self, Error::GuardExceeded { .. })
    }
}
