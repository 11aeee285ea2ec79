use super::counts::CollapsedCounts;
use super::types::{ClusterRef, Hyperparams, Side, Vertex};

/// Global (top-level) predictive of a vertex given table counts.
///
/// A seen vertex that currently holds no table is indistinguishable from a
/// fresh draw and gets the new-vertex mass.
pub(crate) fn global_predictive(v: Vertex, counts: &CollapsedCounts, gamma: f64) -> f64 {
    let denom = counts.total_tables() as f64 + gamma;
    let m = match v {
        Vertex::Seen(id) => counts.global_tables(id),
        Vertex::New => 0,
    };
    if m > 0 {
        m as f64 / denom
    } else {
        gamma / denom
    }
}

/// Franchise predictive `(n_kv + tau * p_H(v)) / (n_k + tau)` of drawing `v`
/// in the `side` restaurant of `cluster`. A new or unknown cluster has no
/// customers.
pub fn vertex_predictive(
    v: Vertex,
    cluster: ClusterRef,
    side: Side,
    counts: &CollapsedCounts,
    hp: &Hyperparams,
) -> f64 {
    let tau = hp.tau_for(side);
    let (n_kv, n_k) = match (cluster, v) {
        (ClusterRef::New, _) => (0, 0),
        (ClusterRef::Existing(k), Vertex::New) => (0, counts.cluster_total(side, k).customers),
        (ClusterRef::Existing(k), Vertex::Seen(id)) => (
            counts.count(side, k, id),
            counts.cluster_total(side, k).customers,
        ),
    };
    let p_h = global_predictive(v, counts, hp.gamma);
    (n_kv as f64 + tau * p_h) / (n_k as f64 + tau)
}

pub fn ln_vertex_predictive(
    v: Vertex,
    cluster: ClusterRef,
    side: Side,
    counts: &CollapsedCounts,
    hp: &Hyperparams,
) -> f64 {
    vertex_predictive(v, cluster, side, counts, hp).ln()
}

/// Probability of a (sender, recipient) pair within one cluster.
pub fn edge_predictive(
    sender: Vertex,
    recipient: Vertex,
    cluster: ClusterRef,
    counts: &CollapsedCounts,
    hp: &Hyperparams,
) -> f64 {
    vertex_predictive(sender, cluster, Side::Sender, counts, hp)
        * vertex_predictive(recipient, cluster, Side::Recipient, counts, hp)
}

/// Outcomes with positive predictive mass: every vertex holding a table,
/// then `New`.
pub fn vertex_support(counts: &CollapsedCounts) -> Vec<Vertex> {
    counts
        .seen_vertices()
        .map(Vertex::Seen)
        .chain(std::iter::once(Vertex::New))
        .collect()
}

/// Predictive mass left for vertices not yet seen, per restaurant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewVertexMass {
    pub sender: f64,
    pub recipient: f64,
}

impl NewVertexMass {
    pub fn in_cluster(cluster: ClusterRef, counts: &CollapsedCounts, hp: &Hyperparams) -> Self {
        Self {
            sender: vertex_predictive(Vertex::New, cluster, Side::Sender, counts, hp),
            recipient: vertex_predictive(Vertex::New, cluster, Side::Recipient, counts, hp),
        }
    }
}
