//! Browser bindings for three interactive views: decay and seating curves,
//! a simulated edge raster, and a held-out comparison of two decays.
//!
//! Every export returns a JSON string; the page draws it on a canvas.

use dynmdnd::inference::{run_chain, ChainConfig};
use dynmdnd::model::seating_probabilities;
use dynmdnd::predict::{heldout_loglik, holdout_split};
use dynmdnd::simulate::{simulate, SimConfig, TimeProcess};
use dynmdnd::{DecayKind, DecaySpec, Hyperparams};
use serde::Serialize;
use wasm_bindgen::prelude::*;

const MAX_EDGES: usize = 2000;
const MAX_COMPARE_EDGES: usize = 600;

fn decay(kind: &str, scale: f64) -> Result<DecaySpec, String> {
    let kind: DecayKind = kind.parse().map_err(|e: dynmdnd::Error| e.to_string())?;
    DecaySpec::new(
        kind,
        if kind == DecayKind::Identity {
            1.0
        } else {
            scale
        },
    )
    .map_err(|e| e.to_string())
}

fn to_json(v: &impl Serialize) -> Result<String, String> {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct Curves {
    gaps: Vec<f64>,
    decay: Vec<f64>,
    /// Seating distribution of the last of `n_prior + 1` unit-spaced edges:
    /// entry j is the link probability to edge j, the last entry the self-link.
    seating: Vec<f64>,
}

pub fn curves_json(kind: &str, scale: f64, alpha: f64, n_prior: usize) -> Result<String, String> {
    let d = decay(kind, scale)?;
    let n_prior = n_prior.clamp(1, 200);
    let max_gap = n_prior as f64;
    let gaps: Vec<f64> = (0..=200).map(|i| max_gap * i as f64 / 200.0).collect();
    let values = gaps.iter().map(|&g| d.eval_unchecked(g)).collect();
    let hp = Hyperparams::new(1.0, 1.0, alpha, d).map_err(|e| e.to_string())?;
    let times: Vec<f64> = (0..=n_prior).map(|i| i as f64).collect();
    let seating = seating_probabilities(&times, n_prior, &hp).map_err(|e| e.to_string())?;
    to_json(&Curves {
        gaps,
        decay: values,
        seating,
    })
}

#[derive(Serialize)]
struct Raster {
    /// `[sender, recipient, time, cluster]` per edge.
    edges: Vec<(u32, u32, f64, usize)>,
    n_vertices: usize,
    n_clusters: usize,
}

pub struct SimParams<'a> {
    pub n_edges: usize,
    pub alpha: f64,
    pub gamma: f64,
    pub tau: f64,
    pub kind: &'a str,
    pub scale: f64,
    pub seed: u64,
}

fn sim_config(p: &SimParams, cap: usize) -> Result<SimConfig, String> {
    if p.n_edges == 0 || p.n_edges > cap {
        return Err(format!("number of edges must be in 1..={cap}"));
    }
    let hp = Hyperparams::new(p.gamma, p.tau, p.alpha, decay(p.kind, p.scale)?)
        .map_err(|e| e.to_string())?;
    Ok(SimConfig {
        n_edges: p.n_edges,
        hp,
        time_process: TimeProcess::UnitSpaced,
        seed: p.seed,
    })
}

pub fn raster_json(p: &SimParams) -> Result<String, String> {
    let out = simulate(&sim_config(p, MAX_EDGES)?).map_err(|e| e.to_string())?;
    let edges = out
        .edges
        .edges()
        .iter()
        .zip(out.seating.clusters())
        .map(|(e, &k)| (e.sender, e.recipient, e.time, k))
        .collect();
    to_json(&Raster {
        edges,
        n_vertices: out.edges.vertex_bound(),
        n_clusters: out.seating.n_clusters(),
    })
}

#[derive(Serialize)]
struct Comparison {
    n_train: usize,
    n_test: usize,
    /// `(decay name, held-out log-likelihood)` per fitted model.
    models: Vec<(String, f64)>,
}

/// Fits the generating decay and the plain CRP to a 20% per-slot holdout of
/// a simulation from `p`, then scores both on the held-out edges.
pub fn compare_json(p: &SimParams, sweeps: usize) -> Result<String, String> {
    let cfg = sim_config(p, MAX_COMPARE_EDGES)?;
    let err = |e: dynmdnd::Error| e.to_string();
    let sim = simulate(&cfg).map_err(err)?;
    let slot = (p.n_edges as f64 / 5.0).max(1.0);
    let edges = sim.edges.with_fixed_slots(0.0, slot).map_err(err)?;
    let split = holdout_split(&edges, 0.2, p.seed).map_err(err)?;
    let sweeps = sweeps.clamp(10, 500);
    let chain = ChainConfig {
        n_sweeps: sweeps,
        burn_in: sweeps / 2,
        thin: (sweeps / 20).max(1),
        n_chains: 1,
        hyper_resample: true,
    };
    let mut models = Vec::new();
    for d in [cfg.hp.decay, DecaySpec::identity()] {
        let hp = Hyperparams { decay: d, ..cfg.hp };
        let out = run_chain(&split.train, &hp, &chain, p.seed, 0).map_err(err)?;
        models.push((
            d.to_string(),
            heldout_loglik(&split.train, &out.samples, &split.test).map_err(err)?,
        ));
    }
    to_json(&Comparison {
        n_train: split.train.len(),
        n_test: split.test.len(),
        models,
    })
}

fn js(r: Result<String, String>) -> Result<String, JsValue> {
    r.map_err(|e| JsValue::from_str(&e))
}

/// Decay curve and seating probabilities for the given decay.
#[wasm_bindgen]
pub fn decay_curves(kind: &str, scale: f64, alpha: f64, n_prior: usize) -> Result<String, JsValue> {
    js(curves_json(kind, scale, alpha, n_prior))
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn simulate_raster(
    n_edges: usize,
    alpha: f64,
    gamma: f64,
    tau: f64,
    kind: &str,
    scale: f64,
    seed: u32,
) -> Result<String, JsValue> {
    js(raster_json(&SimParams {
        n_edges,
        alpha,
        gamma,
        tau,
        kind,
        scale,
        seed: seed as u64,
    }))
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn compare_heldout(
    n_edges: usize,
    alpha: f64,
    gamma: f64,
    tau: f64,
    kind: &str,
    scale: f64,
    seed: u32,
    sweeps: usize,
) -> Result<String, JsValue> {
    js(compare_json(
        &SimParams {
            n_edges,
            alpha,
            gamma,
            tau,
            kind,
            scale,
            seed: seed as u64,
        },
        sweeps,
    ))
}
