use std::collections::BTreeMap;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::metrics::EdgePair;
use super::scoring::{RankedPrediction, ScoredEdge};
use crate::error::{Error, Result};
use crate::model::EdgeSequence;

/// Non-Bayesian reference rankings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Baseline {
    /// Number of past occurrences of the pair.
    Frequency,
    /// Past occurrences weighted by `exp(-(t_query - t) / scale)`.
    Recency { scale: f64 },
}

impl Baseline {
    pub fn name(&self) -> &'static str {
        match self {
            Baseline::Frequency => "frequency",
            Baseline::Recency { .. } => "recency",
        }
    }
}

impl FromStr for Baseline {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "frequency" => Ok(Baseline::Frequency),
            "recency" => Ok(Baseline::Recency { scale: 1.0 }),
            other => Err(Error::config(format!("unknown baseline {other:?}"))),
        }
    }
}

/// Ranks candidates by a baseline score, using the same ordering rules as
/// model scoring. Unseen pairs score zero.
pub fn baseline_scores(
    baseline: Baseline,
    train: &EdgeSequence,
    candidates: &[EdgePair],
    t_query: f64,
) -> Result<RankedPrediction> {
    if candidates.is_empty() {
        return Err(Error::input("candidate set is empty"));
    }
    if let Baseline::Recency { scale } = baseline {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::config(format!(
                "recency scale must be positive, got {scale}"
            )));
        }
    }
    let mut scores: BTreeMap<EdgePair, f64> = candidates.iter().map(|&p| (p, 0.0)).collect();
    let duplicates_removed = candidates.len() - scores.len();
    for e in train.edges().iter().filter(|e| e.time <= t_query) {
        if let Some(s) = scores.get_mut(&e.pair()) {
            *s += match baseline {
                Baseline::Frequency => 1.0,
                Baseline::Recency { scale } => (-(t_query - e.time) / scale).exp(),
            };
        }
    }
    let mut edges: Vec<ScoredEdge> = scores
        .into_iter()
        .map(|((sender, recipient), score)| ScoredEdge {
            sender,
            recipient,
            score,
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
        new_vertex_mass: 0.0,
    })
}
