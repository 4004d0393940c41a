use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("vertex {vertex} out of range for n = {n}")]
    VertexOutOfRange { vertex: u32, n: usize },
    #[error("self-loop at vertex {0}")]
    SelfLoop(u32),
    #[error("edge ({0}, {1}) already present")]
    DuplicateEdge(u32, u32),
    #[error("edge ({0}, {1}) is not live")]
    EdgeNotLive(u32, u32),
    #[error("edge id {0} is not live")]
    EdgeIdNotLive(u32),
    #[error("vertices {0} and {1} are already connected")]
    Cycle(u32, u32),
    #[error("stale dynamic-tree edge handle")]
    StaleHandle,
    #[error("no path between {0} and {1}")]
    NoPath(u32, u32),
    #[error("cluster nodes do not share a parent")]
    NotSiblings,
    #[error("node is not a child of the given cluster")]
    NotAChild,
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("op {index}: {msg}")]
    Precondition { index: usize, msg: String },
    #[error("audit failure: {0}")]
    Audit(String),
}

pub type Result<T> = std::result::Result<T, Error>;
