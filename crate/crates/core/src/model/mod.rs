//! Domain types, decay functions, the distance-dependent seating prior and
//! the collapsed franchise predictives.

mod counts;
mod decay;
mod partition;
mod predictive;
mod seating;
mod types;

pub use counts::{CellCounts, CollapsedCounts};
pub use decay::{DecayKind, DecaySpec, PRUNE_THRESHOLD};
pub use partition::{links_to_clusters, SeatingState};
pub use predictive::{
    edge_predictive, ln_vertex_predictive, vertex_predictive, vertex_support, NewVertexMass,
};
pub use seating::{candidate_start, seating_log_weights, seating_probabilities};
pub use types::{
    ClusterId, ClusterRef, EdgeSequence, Hyperparams, Side, TimedEdge, Vertex, VertexId,
};
