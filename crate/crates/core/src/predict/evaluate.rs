use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::metrics::{f1_score, hits_at_k, map_at_k, EdgePair, HitsMode};
use crate::error::{Error, Result};
use crate::math::mean_and_std;
use crate::model::{EdgeSequence, TimedEdge};

/// Training prefix and the slot to predict, scored at `t_query`.
#[derive(Debug, Clone, PartialEq)]
pub struct NextSlotSplit {
    pub train: EdgeSequence,
    pub truth: Vec<TimedEdge>,
    pub target_slot: usize,
    pub t_query: f64,
}

impl NextSlotSplit {
    pub fn truth_pairs(&self) -> BTreeSet<EdgePair> {
        self.truth.iter().map(TimedEdge::pair).collect()
    }

    /// Every ordered pair of vertices seen in training, self-pairs included.
    pub fn candidates(&self) -> Vec<EdgePair> {
        let v = self.train.vertices();
        v.iter()
            .flat_map(|&s| v.iter().map(move |&r| (s, r)))
            .collect()
    }
}

/// Splits off slot `target_slot` (zero-based) as truth and trains on the
/// slots before it. The query time is the midpoint of the target slot.
pub fn next_slot_split(edges: &EdgeSequence, target_slot: usize) -> Result<NextSlotSplit> {
    if edges.n_slots() < 2 || edges.slot_boundaries().is_none() {
        return Err(Error::input(
            "next-slot prediction needs at least two time slots",
        ));
    }
    if target_slot == 0 || target_slot >= edges.n_slots() {
        return Err(Error::input(format!(
            "target slot {target_slot} must be in 1..{}",
            edges.n_slots()
        )));
    }
    let train = edges.prefix_slots(target_slot)?;
    let range = edges.slot_range(target_slot).expect("slot checked above");
    let truth = edges.edges()[range].to_vec();
    if truth.is_empty() {
        return Err(Error::input(format!(
            "target slot {target_slot} has no edges"
        )));
    }
    if train.is_empty() {
        return Err(Error::input("no training edges before the target slot"));
    }
    let (start, end) = edges.slot_span(target_slot).expect("slot checked above");
    Ok(NextSlotSplit {
        train,
        truth,
        target_slot,
        t_query: 0.5 * (start + end),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub method: String,
    pub metric: String,
    pub k: Option<usize>,
    pub repetition: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub method: String,
    pub metric: String,
    pub k: Option<usize>,
    pub n: usize,
    pub mean: f64,
    pub std: f64,
}

/// Per-repetition metric values plus mean and standard deviation summaries.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub hits_mode: HitsMode,
    pub rows: Vec<MetricRow>,
}

/// Scores one ranking against the truth slot: F1 on the top `|truth|` pairs,
/// then MAP@k and Hits@k for every k.
pub fn evaluate_next_slot(
    ranked: &[EdgePair],
    truth: &BTreeSet<EdgePair>,
    ks: &[usize],
    hits_mode: HitsMode,
    method: &str,
    repetition: usize,
) -> Result<Vec<MetricRow>> {
    let row = |metric: &str, k, value| MetricRow {
        method: method.to_owned(),
        metric: metric.to_owned(),
        k,
        repetition,
        value,
    };
    let predicted: BTreeSet<EdgePair> = ranked.iter().take(truth.len()).copied().collect();
    let mut rows = vec![row("f1", None, f1_score(&predicted, truth)?)];
    for &k in ks {
        rows.push(row("map", Some(k), map_at_k(ranked, truth, k)?));
        rows.push(row(
            "hits",
            Some(k),
            hits_at_k(ranked, truth, k, hits_mode)?,
        ));
    }
    Ok(rows)
}

fn fmt_k(k: Option<usize>) -> String {
    k.map_or_else(String::new, |k| k.to_string())
}

impl MetricReport {
    pub fn new(hits_mode: HitsMode) -> Self {
        Self {
            hits_mode,
            rows: Vec::new(),
        }
    }

    pub fn extend(&mut self, rows: impl IntoIterator<Item = MetricRow>) {
        self.rows.extend(rows);
    }

    /// Mean and sample standard deviation per (method, metric, k), in first
    /// appearance order.
    pub fn aggregates(&self) -> Vec<Aggregate> {
        let mut order = Vec::new();
        let mut groups: BTreeMap<(String, String, Option<usize>), Vec<f64>> = BTreeMap::new();
        for r in &self.rows {
            let key = (r.method.clone(), r.metric.clone(), r.k);
            groups
                .entry(key.clone())
                .or_insert_with(|| {
                    order.push(key);
                    Vec::new()
                })
                .push(r.value);
        }
        order
            .into_iter()
            .map(|key| {
                let values = &groups[&key];
                let (mean, std) = mean_and_std(values);
                Aggregate {
                    method: key.0,
                    metric: key.1,
                    k: key.2,
                    n: values.len(),
                    mean,
                    std,
                }
            })
            .collect()
    }

    /// One line per (method, metric, k, repetition), then `mean` and `std`
    /// lines per group.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::Serde(e.to_string());
        w.write_record(["method", "metric", "k", "repetition", "value"])
            .map_err(io)?;
        for r in &self.rows {
            w.write_record([
                &r.method,
                &r.metric,
                &fmt_k(r.k),
                &r.repetition.to_string(),
                &r.value.to_string(),
            ])
            .map_err(io)?;
        }
        for a in self.aggregates() {
            for (label, value) in [("mean", a.mean), ("std", a.std)] {
                w.write_record([&a.method, &a.metric, &fmt_k(a.k), label, &value.to_string()])
                    .map_err(io)?;
            }
        }
        let bytes = w.into_inner().map_err(|e| Error::Serde(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Serde(e.to_string()))
    }

    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "hits_mode": self.hits_mode.name(),
            "repetitions": self.rows.iter().map(|r| r.repetition).collect::<BTreeSet<_>>().len(),
            "metrics": self.aggregates(),
        })
    }
}
