//! Exact forward simulation of the collapsed generative process.
//!
//! Each edge draws an arrival time and a seating link, then a sender and a
//! recipient from its cluster's restaurants. A customer either joins an
//! existing table of its vertex (mass `n_kv`) or opens a new table (mass
//! `tau`) whose vertex comes from the global restaurant (mass `m_v`, or
//! `gamma` for a fresh vertex). Table choices are recorded so the returned
//! counts are a valid franchise state.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{log_sum_exp, sample_categorical, sample_log_categorical};
use crate::model::{
    seating_log_weights, ClusterId, CollapsedCounts, EdgeSequence, Hyperparams, SeatingState, Side,
    TimedEdge, VertexId,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TimeProcess {
    /// Edge `i` arrives at time `i`.
    UnitSpaced,
    /// Exponential inter-arrival gaps with the given rate.
    PoissonRate { rate: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_edges: usize,
    pub hp: Hyperparams,
    pub time_process: TimeProcess,
    pub seed: u64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_edges == 0 {
            return Err(Error::config("n_edges must be at least 1"));
        }
        if let TimeProcess::PoissonRate { rate } = self.time_process {
            if !(rate > 0.0 && rate.is_finite()) {
                return Err(Error::config(format!(
                    "poisson rate must be positive, got {rate}"
                )));
            }
        }
        self.hp.validate()
    }
}

/// Whether each customer of an edge opened a new table: `[sender, recipient]`.
pub type TableFlags = [bool; 2];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimOutput {
    pub edges: EdgeSequence,
    pub seating: SeatingState,
    pub counts: CollapsedCounts,
    pub table_flags: Vec<TableFlags>,
    /// Log probability of everything drawn.
    pub log_joint: f64,
}

pub fn simulate(config: &SimConfig) -> Result<SimOutput> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let times = draw_times(config.n_edges, config.time_process, &mut rng);
    simulate_at_times(&times, &config.hp, &mut rng)
}

pub fn draw_times<R: Rng + ?Sized>(n: usize, process: TimeProcess, rng: &mut R) -> Vec<f64> {
    match process {
        TimeProcess::UnitSpaced => (0..n).map(|i| i as f64).collect(),
        TimeProcess::PoissonRate { rate } => {
            let gap = Exp::new(rate).expect("rate validated");
            let mut t = 0.0;
            (0..n)
                .map(|_| {
                    t += gap.sample(rng);
                    t
                })
                .collect()
        }
    }
}

/// Simulates edges at the given (sorted) arrival times.
pub fn simulate_at_times<R: Rng + ?Sized>(
    times: &[f64],
    hp: &Hyperparams,
    rng: &mut R,
) -> Result<SimOutput> {
    let mut seating = SeatingState::all_self_links(0);
    let mut log_joint = 0.0;
    for i in 0..times.len() {
        let weights = seating_log_weights(times, i, hp)?;
        let j = sample_log_categorical(&weights, rng)
            .ok_or_else(|| Error::invariant("seating weights vanished"))?;
        log_joint += weights[j] - log_sum_exp(&weights);
        seating.push(j)?;
    }
    let (edges, counts, table_flags, vertex_lp) =
        draw_vertices(times, seating.clusters(), hp, rng)?;
    Ok(SimOutput {
        edges,
        seating,
        counts,
        table_flags,
        log_joint: log_joint + vertex_lp,
    })
}

/// Draws senders and recipients for a fixed cluster assignment from the
/// collapsed franchise, along with the log probability of those draws.
pub fn draw_vertices<R: Rng + ?Sized>(
    times: &[f64],
    clusters: &[ClusterId],
    hp: &Hyperparams,
    rng: &mut R,
) -> Result<(EdgeSequence, CollapsedCounts, Vec<TableFlags>, f64)> {
    if times.len() != clusters.len() {
        return Err(Error::input("times and clusters differ in length"));
    }
    let mut counts = CollapsedCounts::new();
    let mut next_vertex: VertexId = 0;
    let mut edges = Vec::with_capacity(times.len());
    let mut flags = Vec::with_capacity(times.len());
    let mut log_p = 0.0;
    for (&t, &k) in times.iter().zip(clusters) {
        let mut drawn = [0 as VertexId; 2];
        let mut flag = [false; 2];
        for (slot, side) in Side::BOTH.into_iter().enumerate() {
            let (v, new_table, lp) = draw_customer(&counts, side, k, hp, &mut next_vertex, rng);
            counts.add_customer(side, k, v, new_table)?;
            drawn[slot] = v;
            flag[slot] = new_table;
            log_p += lp;
        }
        edges.push(TimedEdge::new(drawn[0], drawn[1], t)?);
        flags.push(flag);
    }
    Ok((EdgeSequence::new(edges)?, counts, flags, log_p))
}

fn draw_customer<R: Rng + ?Sized>(
    counts: &CollapsedCounts,
    side: Side,
    k: ClusterId,
    hp: &Hyperparams,
    next_vertex: &mut VertexId,
    rng: &mut R,
) -> (VertexId, bool, f64) {
    let tau = hp.tau_for(side);
    let n_k = counts.cluster_total(side, k).customers as f64;
    if rng.random::<f64>() * (n_k + tau) < n_k {
        let cells: Vec<(VertexId, u32)> = counts
            .restaurant(side, k)
            .map(|(v, c)| (v, c.customers))
            .collect();
        let weights: Vec<f64> = cells.iter().map(|&(_, n)| n as f64).collect();
        let idx = sample_categorical(&weights, rng).expect("occupied restaurant");
        let (v, n_kv) = cells[idx];
        (v, false, (n_kv as f64 / (n_k + tau)).ln())
    } else {
        let seen: Vec<(VertexId, u32)> = counts
            .seen_vertices()
            .map(|v| (v, counts.global_tables(v)))
            .collect();
        let mut weights: Vec<f64> = seen.iter().map(|&(_, m)| m as f64).collect();
        weights.push(hp.gamma);
        let idx = sample_categorical(&weights, rng).expect("gamma is positive");
        let denom = counts.total_tables() as f64 + hp.gamma;
        let v = if idx == seen.len() {
            let v = *next_vertex;
            *next_vertex += 1;
            v
        } else {
            seen[idx].0
        };
        let lp = (tau / (n_k + tau)).ln() + (weights[idx] / denom).ln();
        (v, true, lp)
    }
}

/// Log joint probability of a simulation output, replayed edge by edge from
/// scratch.
pub fn sequential_log_joint(
    edges: &EdgeSequence,
    seating: &SeatingState,
    table_flags: &[TableFlags],
    hp: &Hyperparams,
) -> Result<f64> {
    let n = edges.len();
    if seating.len() != n || table_flags.len() != n {
        return Err(Error::input(
            "edges, seating and table flags differ in length",
        ));
    }
    seating.check()?;
    let times = edges.times();
    let mut counts = CollapsedCounts::new();
    let mut total = 0.0;
    for (i, e) in edges.edges().iter().enumerate() {
        let weights = seating_log_weights(&times, i, hp)?;
        total += weights[seating.links()[i]] - log_sum_exp(&weights);
        let k = seating.clusters()[i];
        for (slot, (side, v)) in [(Side::Sender, e.sender), (Side::Recipient, e.recipient)]
            .into_iter()
            .enumerate()
        {
            let tau = hp.tau_for(side);
            let n_k = counts.cluster_total(side, k).customers as f64;
            let n_kv = counts.count(side, k, v);
            let new_table = table_flags[i][slot];
            total += if new_table {
                let m_v = counts.global_tables(v);
                let top = if m_v > 0 { m_v as f64 } else { hp.gamma };
                (tau / (n_k + tau)).ln() + (top / (counts.total_tables() as f64 + hp.gamma)).ln()
            } else {
                if n_kv == 0 {
                    return Err(Error::invariant(format!(
                        "edge {i} joins a table of vertex {v} that has none"
                    )));
                }
                (n_kv as f64 / (n_k + tau)).ln()
            };
            counts.add_customer(side, k, v, new_table)?;
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::DecaySpec;

    fn config(n: usize, alpha: f64, decay: DecaySpec, seed: u64) -> SimConfig {
        SimConfig {
            n_edges: n,
            hp: Hyperparams::new(2.0, 1.5, alpha, decay).unwrap(),
            time_process: TimeProcess::UnitSpaced,
            seed,
        }
    }

    #[test]
    fn single_edge_is_forced() {
        let c = config(1, 0.3, DecaySpec::identity(), 9);
        let gamma = c.hp.gamma;
        let mut self_loops = 0;
        for seed in 0..2000 {
            let out = simulate(&SimConfig { seed, ..c }).unwrap();
            assert_eq!(out.seating.n_clusters(), 1);
            assert_eq!(out.table_flags, vec![[true, true]]);
            let e = out.edges.edges()[0];
            assert_eq!(e.sender, 0);
            // the recipient shares the global vertex measure with the sender
            let expected = if e.recipient == 0 {
                self_loops += 1;
                (1.0 / (1.0 + gamma)).ln()
            } else {
                assert_eq!(e.recipient, 1);
                (gamma / (1.0 + gamma)).ln()
            };
            assert!((out.log_joint - expected).abs() < 1e-15);
        }
        let freq = self_loops as f64 / 2000.0;
        let p = 1.0 / (1.0 + gamma);
        assert!(
            (freq - p).abs() < 4.0 * (p * (1.0 - p) / 2000.0).sqrt(),
            "{freq}"
        );
    }

    #[test]
    fn deterministic_given_seed() {
        let c = config(300, 1.0, DecaySpec::exponential(3.0).unwrap(), 42);
        assert_eq!(simulate(&c).unwrap(), simulate(&c).unwrap());
        let other = SimConfig { seed: 43, ..c };
        assert_ne!(simulate(&c).unwrap().edges, simulate(&other).unwrap().edges);
    }

    #[test]
    fn outputs_satisfy_invariants() {
        for decay in [
            DecaySpec::identity(),
            DecaySpec::exponential(2.0).unwrap(),
            DecaySpec::logistic(2.0).unwrap(),
            DecaySpec::window(4.0).unwrap(),
        ] {
            let out = simulate(&config(400, 0.5, decay, 5)).unwrap();
            out.seating.check().unwrap();
            out.counts.check_invariants().unwrap();
            let rebuilt =
                CollapsedCounts::from_assignment(out.edges.edges(), out.seating.clusters())
                    .unwrap();
            assert!(rebuilt.same_customers(&out.counts));
            let sizes: u32 = out
                .counts
                .clusters()
                .iter()
                .map(|&k| out.counts.cluster_size(k))
                .sum();
            assert_eq!(sizes as usize, 400);
        }
    }

    #[test]
    fn replayed_log_joint_matches_generation() {
        for (seed, decay) in [
            (1, DecaySpec::identity()),
            (2, DecaySpec::exponential(1.0).unwrap()),
            (3, DecaySpec::logistic(2.0).unwrap()),
        ] {
            let mut c = config(500, 0.8, decay, seed);
            c.time_process = TimeProcess::PoissonRate { rate: 2.0 };
            let out = simulate(&c).unwrap();
            let replay =
                sequential_log_joint(&out.edges, &out.seating, &out.table_flags, &c.hp).unwrap();
            assert!(
                (replay - out.log_joint).abs() < 1e-9,
                "{replay} vs {}",
                out.log_joint
            );
            assert!(out.log_joint.is_finite());
        }
    }

    #[test]
    fn replay_rejects_impossible_table_flags() {
        let c = config(3, 1.0, DecaySpec::identity(), 1);
        let out = simulate(&c).unwrap();
        let mut flags = out.table_flags.clone();
        flags[0][0] = false;
        assert!(sequential_log_joint(&out.edges, &out.seating, &flags, &c.hp).is_err());
    }

    #[test]
    fn huge_alpha_gives_singletons() {
        let out = simulate(&config(10_000, 1e9, DecaySpec::identity(), 11)).unwrap();
        let singletons = out
            .counts
            .clusters()
            .iter()
            .filter(|&&k| out.counts.cluster_size(k) == 1)
            .count();
        assert!(singletons as f64 / 10_000.0 >= 0.999);
    }

    #[test]
    fn poisson_times_increase() {
        let mut c = config(50, 1.0, DecaySpec::identity(), 3);
        c.time_process = TimeProcess::PoissonRate { rate: 0.5 };
        let out = simulate(&c).unwrap();
        assert!(out.edges.times().windows(2).all(|w| w[0] <= w[1]));
        c.time_process = TimeProcess::PoissonRate { rate: 0.0 };
        assert!(simulate(&c).is_err());
        c.n_edges = 0;
        assert!(simulate(&c).is_err());
    }

    #[test]
    fn short_exponential_decay_localizes_clusters() {
        // mean gap between consecutive same-cluster edges, averaged over seeds
        let mean_gap = |decay: DecaySpec| {
            let mut total = 0.0;
            for seed in 0..100 {
                let out = simulate(&config(200, 1.0, decay, seed)).unwrap();
                let z = out.seating.clusters();
                let mut last = std::collections::HashMap::new();
                let (mut sum, mut n) = (0.0, 0usize);
                for (i, &k) in z.iter().enumerate() {
                    if let Some(prev) = last.insert(k, i) {
                        sum += (i - prev) as f64;
                        n += 1;
                    }
                }
                total += if n > 0 { sum / n as f64 } else { 0.0 };
            }
            total / 100.0
        };
        let local = mean_gap(DecaySpec::exponential(0.1).unwrap());
        let global = mean_gap(DecaySpec::identity());
        assert!(local < global, "{local} vs {global}");
    }
}
