//! Fully-dynamic minimum spanning forest.
//!
//! [`fulldyn::FullDynMsf`] is the entry point. It keeps the live MSF in a
//! link-cut forest and answers replacement queries through a logarithmic
//! family of decremental structures ([`decmsf::DecMsf`]), each built on a
//! cluster hierarchy ([`cforest::ClusterForest`]) with optional queue
//! shortcuts ([`shortcuts::Shortcuts`]). [`oracle`] holds the reference
//! algorithms and workload tooling used by the tests and the CLI.

pub mod cforest;
pub mod counters;
pub mod decmsf;
pub mod dyntree;
pub mod edge;
pub mod error;
pub mod fulldyn;
pub mod oracle;
pub mod params;
pub mod shortcuts;

pub use counters::OpCounters;
pub use decmsf::{DecMsf, SearchMode};
pub use edge::{EdgeId, EdgeStatus, VertexId, WeightKey};
pub use error::{Error, Result};
pub use fulldyn::{FullDynMsf, MsfChange};
pub use params::{Params, Thresholds};
