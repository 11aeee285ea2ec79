use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::inference::PosteriorSample;
use crate::math::{log_mean_exp, log_sum_exp};
use crate::model::{
    edge_predictive, ClusterId, ClusterRef, DecaySpec, EdgeSequence, TimedEdge, Vertex,
};

/// Seating prior of a new customer arriving at `time` after the training
/// edges: decay-weighted cluster masses plus the self-link mass for a new
/// cluster, normalized. Training edges later than `time` get no weight.
pub fn cluster_weights_at(
    train_times: &[f64],
    clusters: &[ClusterId],
    time: f64,
    alpha: f64,
    decay: &DecaySpec,
) -> Vec<(ClusterRef, f64)> {
    let end = train_times.partition_point(|&t| t <= time);
    let mut mass: BTreeMap<ClusterId, f64> = BTreeMap::new();
    for j in 0..end {
        let w = decay.eval_unchecked(time - train_times[j]);
        if w > 0.0 {
            *mass.entry(clusters[j]).or_insert(0.0) += w;
        }
    }
    let total = alpha + mass.values().sum::<f64>();
    mass.into_iter()
        .map(|(k, w)| (ClusterRef::Existing(k), w / total))
        .chain(std::iter::once((ClusterRef::New, alpha / total)))
        .collect()
}

fn vertex(v: u32) -> Vertex {
    Vertex::Seen(v)
}

fn check_samples(train: &EdgeSequence, samples: &[PosteriorSample]) -> Result<()> {
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
    Ok(())
}

/// Log predictive probability of each test edge, scored independently given
/// the trained state and averaged over samples in probability space.
pub fn heldout_edge_logliks(
    train: &EdgeSequence,
    samples: &[PosteriorSample],
    test: &[TimedEdge],
) -> Result<Vec<f64>> {
    if test.is_empty() {
        return Err(Error::input("test set is empty"));
    }
    check_samples(train, samples)?;
    let times = train.times();
    test.iter()
        .map(|e| {
            let per_sample: Vec<f64> = samples
                .iter()
                .map(|s| {
                    let weights =
                        cluster_weights_at(&times, &s.clusters, e.time, s.hp.alpha, &s.hp.decay);
                    let terms: Vec<f64> = weights
                        .iter()
                        .map(|&(k, w)| {
                            w.ln()
                                + edge_predictive(
                                    vertex(e.sender),
                                    vertex(e.recipient),
                                    k,
                                    &s.counts,
                                    &s.hp,
                                )
                                .ln()
                        })
                        .collect();
                    log_sum_exp(&terms)
                })
                .collect();
            Ok(log_mean_exp(&per_sample))
        })
        .collect()
}

/// Sum over test edges of the log posterior-predictive probability.
pub fn heldout_loglik(
    train: &EdgeSequence,
    samples: &[PosteriorSample],
    test: &[TimedEdge],
) -> Result<f64> {
    Ok(heldout_edge_logliks(train, samples, test)?.iter().sum())
}
