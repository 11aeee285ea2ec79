use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::math::ln_rising;
use crate::model::{CollapsedCounts, Hyperparams, Side, TimedEdge, VertexId};

/// Weights of the global vertex distribution: one entry per seen vertex plus
/// the mass left for vertices never seen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalWeights {
    weights: BTreeMap<VertexId, f64>,
    rest: f64,
}

impl GlobalWeights {
    pub fn new(weights: BTreeMap<VertexId, f64>, rest: f64) -> Self {
        Self { weights, rest }
    }

    /// Plug-in weights from table counts: `m_v / (m + gamma)` for each
    /// vertex holding tables and `gamma / (m + gamma)` for any other.
    pub fn from_tables(counts: &CollapsedCounts, gamma: f64) -> Self {
        let denom = counts.total_tables() as f64 + gamma;
        let weights = counts
            .seen_vertices()
            .map(|v| (v, counts.global_tables(v) as f64 / denom))
            .collect();
        Self {
            weights,
            rest: gamma / denom,
        }
    }

    /// Weight of `v`; vertices without an entry get the remaining mass.
    pub fn weight(&self, v: VertexId) -> f64 {
        self.weights.get(&v).copied().unwrap_or(self.rest)
    }

    pub fn rest(&self) -> f64 {
        self.rest
    }

    /// Dense lookup table over ids `0..bound`; missing ids get the rest
    /// mass.
    pub fn dense(&self, bound: usize) -> Vec<f64> {
        let mut out = vec![self.rest; bound];
        for (&v, &w) in &self.weights {
            if (v as usize) < bound {
                out[v as usize] = w;
            }
        }
        out
    }

    pub fn iter(&self) -> impl Iterator<Item = (VertexId, f64)> + '_ {
        self.weights.iter().map(|(&v, &w)| (v, w))
    }
}

/// Log marginal likelihood of one restaurant's customers given the global
/// weights: the product of sequential predictives
/// `(n_v + tau * beta_v) / (n + tau)`, which telescopes into rising
/// factorials.
pub fn restaurant_loglik<I, W>(counts: I, weight: W, tau: f64) -> f64
where
    I: IntoIterator<Item = (VertexId, u32)>,
    W: Fn(VertexId) -> f64,
{
    let mut total_n = 0;
    let mut ll = 0.0;
    for (v, n) in counts {
        ll += ln_rising(tau * weight(v), n);
        total_n += n;
    }
    ll - ln_rising(tau, total_n)
}

/// Log marginal likelihood of a cluster's senders and recipients given the
/// global weights. An empty cluster scores 0.
pub fn cluster_marginal_loglik(
    members: &[TimedEdge],
    weights: &GlobalWeights,
    hp: &Hyperparams,
) -> f64 {
    Side::BOTH
        .into_iter()
        .map(|side| {
            let mut tally: BTreeMap<VertexId, u32> = BTreeMap::new();
            for e in members {
                let v = match side {
                    Side::Sender => e.sender,
                    Side::Recipient => e.recipient,
                };
                *tally.entry(v).or_insert(0) += 1;
            }
            restaurant_loglik(tally, |v| weights.weight(v), hp.tau_for(side))
        })
        .sum()
}
