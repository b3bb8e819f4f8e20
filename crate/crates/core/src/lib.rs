//! Measuring how link structure and reader behavior expose readers of one
//! side of a topic to the other side.

pub mod cwp;
pub mod error;
pub mod exposure;
pub mod fixture;
pub mod graph;
pub mod ingest;
pub mod matrix;
pub mod navigation;
pub mod stats;

pub use cwp::{build_matrix, CwpKind};
pub use error::{Error, Result};
pub use exposure::{adjusted_exdin, exdin, mutual_exposure, BootstrapConfig, NodeSet};
pub use graph::{Edge, NetworkBuilder, NodeId, NodeLabel, TopicInfo, TopicNetwork};
pub use matrix::TransitionMatrix;
pub use navigation::{evolve, NavigationConfig, StartDistribution, Trajectory};
