//! Dynamic edge-clustered nonparametric model for temporal interaction
//! multigraphs.
//!
//! Edges are clustered by a distance-dependent Chinese restaurant process
//! over arrival times; each cluster owns a sender and a recipient
//! distribution drawn from a Dirichlet process whose base measure is itself
//! a shared Dirichlet process over vertices. Everything is kept collapsed.
//!
//! Layout:
//! - [`model`]: domain types with the seating prior and predictives.
//! - [`simulate`]: exact forward simulation of the generative process.
//! - [`inference`]: collapsed Gibbs sampler over seating links.
//! - [`predict`]: held-out likelihood and link ranking.
//! - [`io`]: edge-list ingestion and the pipelines behind the command line.

pub mod error;
pub mod inference;
pub mod io;
pub mod math;
pub mod model;
pub mod predict;
pub mod simulate;

pub use error::{Error, Result};
pub use model::{
    ClusterId, ClusterRef, CollapsedCounts, DecayKind, DecaySpec, EdgeSequence, Hyperparams,
    SeatingState, Side, TimedEdge, Vertex, VertexId,
};
