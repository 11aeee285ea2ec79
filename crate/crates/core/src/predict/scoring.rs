use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::heldout::cluster_weights_at;
use super::metrics::EdgePair;
use crate::error::{Error, Result};
use crate::inference::PosteriorSample;
use crate::model::{vertex_predictive, ClusterRef, EdgeSequence, Side, Vertex, VertexId};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoredEdge {
    pub sender: VertexId,
    pub recipient: VertexId,
    pub score: f64,
}

/// Candidate pairs ranked by posterior-predictive probability at a query time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedPrediction {
    pub edges: Vec<ScoredEdge>,
    pub n_predicted: usize,
    /// Repeated candidate pairs dropped before scoring.
    pub duplicates_removed: usize,
    /// Probability that the next edge involves a vertex not seen in training.
    pub new_vertex_mass: f64,
}

impl RankedPrediction {
    pub fn pairs(&self) -> Vec<EdgePair> {
        self.edges.iter().map(|e| (e.sender, e.recipient)).collect()
    }

    /// The `n` best pairs as a set.
    pub fn top(&self, n: usize) -> BTreeSet<EdgePair> {
        self.edges
            .iter()
            .take(n)
            .map(|e| (e.sender, e.recipient))
            .collect()
    }
}

/// Per-sample pieces of the score decomposition. Writing the franchise
/// predictive as `a_k(v) + b_k * p_H(v)` with `a_k(v) = n_kv / (n_k + tau)`
/// and `b_k = tau / (n_k + tau)`, the mixture over clusters becomes
///
/// `A(s, r) + p_H(r) U(s) + p_H(s) V(r) + p_H(s) p_H(r) C`
///
/// where only `A` needs pairwise storage, and only for pairs co-occurring in
/// some cluster.
struct Decomposition {
    pair: HashMap<EdgePair, f64>,
    u: HashMap<VertexId, f64>,
    v: HashMap<VertexId, f64>,
    c: f64,
    new_mass: f64,
}

fn decompose(sample: &PosteriorSample, times: &[f64], t_query: f64) -> Decomposition {
    let hp = &sample.hp;
    let counts = &sample.counts;
    let weights = cluster_weights_at(times, &sample.clusters, t_query, hp.alpha, &hp.decay);
    let (tau_s, tau_r) = (hp.tau_for(Side::Sender), hp.tau_for(Side::Recipient));
    let mut d = Decomposition {
        pair: HashMap::new(),
        u: HashMap::new(),
        v: HashMap::new(),
        c: 0.0,
        new_mass: 0.0,
    };
    for (cluster, w) in weights {
        let new_s = w * vertex_predictive(Vertex::New, cluster, Side::Sender, counts, hp);
        let new_r = vertex_predictive(Vertex::New, cluster, Side::Recipient, counts, hp);
        d.new_mass += new_s + w * new_r - new_s * new_r;
        let ClusterRef::Existing(k) = cluster else {
            d.c += w;
            continue;
        };
        let n_s = counts.cluster_total(Side::Sender, k).customers as f64;
        let n_r = counts.cluster_total(Side::Recipient, k).customers as f64;
        let (b_s, b_r) = (tau_s / (n_s + tau_s), tau_r / (n_r + tau_r));
        d.c += w * b_s * b_r;
        let senders: Vec<(VertexId, f64)> = counts
            .restaurant(Side::Sender, k)
            .map(|(v, c)| (v, c.customers as f64 / (n_s + tau_s)))
            .collect();
        let recipients: Vec<(VertexId, f64)> = counts
            .restaurant(Side::Recipient, k)
            .map(|(v, c)| (v, c.customers as f64 / (n_r + tau_r)))
            .collect();
        for &(s, a_s) in &senders {
            *d.u.entry(s).or_insert(0.0) += w * a_s * b_r;
            for &(r, a_r) in &recipients {
                *d.pair.entry((s, r)).or_insert(0.0) += w * a_s * a_r;
            }
        }
        for &(r, a_r) in &recipients {
            *d.v.entry(r).or_insert(0.0) += w * b_s * a_r;
        }
    }
    d
}

fn global_mass(sample: &PosteriorSample, v: VertexId) -> f64 {
    vertex_predictive(
        Vertex::Seen(v),
        ClusterRef::New,
        Side::Sender,
        &sample.counts,
        &sample.hp,
    )
}

/// Scores each distinct candidate by the posterior-predictive probability
/// that the next edge at `t_query` is that pair, averaged over samples.
pub fn score_candidate_edges(
    train: &EdgeSequence,
    samples: &[PosteriorSample],
    candidates: &[EdgePair],
    t_query: f64,
) -> Result<RankedPrediction> {
    if candidates.is_empty() {
        return Err(Error::input("candidate set is empty"));
    }
    if samples.is_empty() {
        return Err(Error::input("at least one posterior sample is required"));
    }
    if let Some(s) = samples.iter().find(|s| s.clusters.len() != train.len()) {
        return Err(Error::input(format!(
            "sample from sweep {} has {} cluster labels for {} training edges",
            s.sweep,
            s.clusters.len(),
            train.len()
        )));
    }
    let distinct: BTreeSet<EdgePair> = candidates.iter().copied().collect();
    let duplicates_removed = candidates.len() - distinct.len();
    let times = train.times();
    let mut totals: BTreeMap<EdgePair, f64> = distinct.iter().map(|&p| (p, 0.0)).collect();
    let mut new_vertex_mass = 0.0;
    for sample in samples {
        let d = decompose(sample, &times, t_query);
        new_vertex_mass += d.new_mass;
        let mut p_h: HashMap<VertexId, f64> = HashMap::new();
        for (&(s, r), total) in totals.iter_mut() {
            let ps = *p_h.entry(s).or_insert_with(|| global_mass(sample, s));
            let pr = *p_h.entry(r).or_insert_with(|| global_mass(sample, r));
            *total += d.pair.get(&(s, r)).copied().unwrap_or(0.0)
                + pr * d.u.get(&s).copied().unwrap_or(0.0)
                + ps * d.v.get(&r).copied().unwrap_or(0.0)
                + ps * pr * d.c;
        }
    }
    let n = samples.len() as f64;
    let mut edges: Vec<ScoredEdge> = totals
        .into_iter()
        .map(|((sender, recipient), total)| ScoredEdge {
            sender,
            recipient,
            score: total / n,
        })
        .collect();
    edges.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then((a.sender, a.recipient).cmp(&(b.sender, b.recipient)))
    });
    Ok(RankedPrediction {
        n_predicted: edges.len(),
        edges,
        duplicates_removed,
        new_vertex_mass: new_vertex_mass / n,
    })
}
