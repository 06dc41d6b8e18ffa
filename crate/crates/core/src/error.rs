use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("lattice spacing {delta} is too coarse for the region (need {limit})")]
    TooCoarse { delta: f64, limit: String },
    #[error("region graph is disconnected ({components} components)")]
    Disconnected { components: usize },
    #[error("region graph has no vertices")]
    Empty,
    #[error("malformed graph: {0}")]
    MalformedGraph(String),
    #[error("unsupported planar dual: {0}")]
    NoDual(String),
    #[error("forced edge set is not a tree fragment: {0}")]
    BadForcedEdges(String),
    #[error("edge set is not a spanning tree: {0}")]
    NotSpanningTree(String),
    #[error("tree is not the minimal spanning tree of the given call numbers")]
    NotMinimal,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("fit failed: {0}")]
    FitFailed(String),
}
