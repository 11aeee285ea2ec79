//! End-to-end runs behind the CLI subcommands. Every run writes its outputs
//! plus the fully resolved config under the output directory and returns a
//! JSON summary.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use super::config::RunConfig;
use super::dataset::{export_edges, ingest, Dataset, VertexMap};
use crate::error::{Error, Result};
use crate::inference::{read_snapshot, run_chains, write_snapshot, PosteriorSnapshot, TraceRow};
use crate::model::{EdgeSequence, Hyperparams, TimedEdge};
use crate::predict::{
    baseline_scores, evaluate_next_slot, heldout_edge_logliks, holdout_split, next_slot_split,
    score_candidate_edges, select_decay_scale, Baseline, EdgePair, MetricReport, NextSlotSplit,
    SplitSpec,
};
use crate::simulate::{simulate, SimConfig, SimOutput};

pub const POSTERIOR_FILE: &str = "posterior.json";
pub const TRACE_FILE: &str = "trace.csv";
pub const PREDICTIONS_FILE: &str = "predictions.csv";
pub const METRICS_CSV: &str = "metrics.csv";
pub const METRICS_JSON: &str = "metrics.json";
pub const RESOLVED_CONFIG: &str = "resolved_config.toml";

fn out_path(cfg: &RunConfig, name: &str) -> PathBuf {
    cfg.output_dir.join(name)
}

fn prepare(cfg: &RunConfig) -> Result<()> {
    fs::create_dir_all(&cfg.output_dir).map_err(|e| Error::io(&cfg.output_dir, e))?;
    write_text(&out_path(cfg, RESOLVED_CONFIG), &cfg.to_toml()?)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Serde(e.to_string()))?;
    text.push('\n');
    write_text(path, &text)
}

fn write_csv_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let err = |e: csv::Error| Error::Serde(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(err)?;
    for r in rows {
        w.serialize(r).map_err(err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn simulated(cfg: &RunConfig) -> Result<Option<SimOutput>> {
    let Some(sim) = cfg.simulate else {
        return Ok(None);
    };
    let hp = cfg.model.hyperparams(1.0)?;
    let mut out = simulate(&SimConfig {
        n_edges: sim.n_edges,
        hp,
        time_process: sim.time_process,
        seed: cfg.seed,
    })?;
    if let Some(w) = sim.slot_width {
        out.edges = out.edges.with_fixed_slots(0.0, w)?;
    }
    Ok(Some(out))
}

/// The configured dataset, or the simulated one when only a `[simulate]`
/// section is present.
pub fn load_dataset(cfg: &RunConfig) -> Result<Dataset> {
    if let Some(spec) = &cfg.dataset {
        return ingest(spec);
    }
    match simulated(cfg)? {
        Some(sim) => Ok(Dataset {
            vertices: VertexMap::numeric(sim.edges.vertex_bound()),
            edges: sim.edges,
        }),
        None => Err(Error::config(
            "config needs a [dataset] or a [simulate] section",
        )),
    }
}

/// Training edges and the edges they are evaluated against.
struct Split {
    train: EdgeSequence,
    test: Vec<TimedEdge>,
    next_slot: Option<NextSlotSplit>,
}

fn split(cfg: &RunConfig, data: &Dataset) -> Result<Split> {
    cfg.split.validate(data.edges.n_slots())?;
    match cfg.split {
        SplitSpec::WithinSlotHoldout { fraction } => {
            let s = holdout_split(&data.edges, fraction, cfg.seed)?;
            Ok(Split {
                train: s.train,
                test: s.test,
                next_slot: None,
            })
        }
        SplitSpec::NextSlot { target_slot } => {
            let s = next_slot_split(&data.edges, target_slot)?;
            Ok(Split {
                train: s.train.clone(),
                test: s.truth.clone(),
                next_slot: Some(s),
            })
        }
    }
}

fn holdout_fraction(cfg: &RunConfig) -> f64 {
    match cfg.split {
        SplitSpec::WithinSlotHoldout { fraction } => fraction,
        SplitSpec::NextSlot { .. } => 0.2,
    }
}

/// Hyperparameters for training, grid-selecting the decay scale on the
/// training edges when the config leaves it open.
fn training_hp(cfg: &RunConfig, train: &EdgeSequence) -> Result<(Hyperparams, Option<Value>)> {
    if !cfg.model.needs_scale_selection() {
        return Ok((cfg.model.hyperparams(1.0)?, None));
    }
    let base = cfg.model.hyperparams(1.0)?;
    let sel = select_decay_scale(
        train,
        cfg.model.decay,
        &base,
        &cfg.chain,
        holdout_fraction(cfg),
        cfg.seed,
    )?;
    let hp = Hyperparams {
        decay: sel.chosen,
        ..base
    };
    let report = serde_json::to_value(&sel).map_err(|e| Error::Serde(e.to_string()))?;
    Ok((hp, Some(report)))
}

fn ensure_test(test: &[TimedEdge]) -> Result<()> {
    if test.is_empty() {
        Err(Error::input("the split leaves no test edges"))
    } else {
        Ok(())
    }
}

/// Writes the simulated edge list and its latent state.
pub fn run_simulate(cfg: &RunConfig) -> Result<Value> {
    let sim =
        simulated(cfg)?.ok_or_else(|| Error::config("simulate needs a [simulate] section"))?;
    prepare(cfg)?;
    let vertices = VertexMap::numeric(sim.edges.vertex_bound());
    export_edges(&out_path(cfg, "edges.csv"), &sim.edges, &vertices)?;
    let latent = json!({
        "links": sim.seating.links(),
        "clusters": sim.seating.clusters(),
        "table_flags": sim.table_flags,
        "slot_boundaries": sim.edges.slot_boundaries(),
        "log_joint": sim.log_joint,
    });
    write_json(&out_path(cfg, "latent.json"), &latent)?;
    Ok(json!({
        "n_edges": sim.edges.len(),
        "n_vertices": sim.edges.vertices().len(),
        "n_clusters": sim.seating.n_clusters(),
        "log_joint": sim.log_joint,
    }))
}

/// Runs the sampler on the training part of the split and stores the
/// retained posterior states and the per-sweep trace.
pub fn run_train(cfg: &RunConfig) -> Result<Value> {
    let data = load_dataset(cfg)?;
    let s = split(cfg, &data)?;
    prepare(cfg)?;
    data.vertices.write_csv(&out_path(cfg, "vertices.csv"))?;
    write_json(&out_path(cfg, "dataset.json"), &data.stats())?;
    let (hp, selection) = training_hp(cfg, &s.train)?;
    if let Some(sel) = &selection {
        write_json(&out_path(cfg, "scale_selection.json"), sel)?;
    }
    let out = run_chains(&s.train, &hp, &cfg.chain, cfg.seed)?;
    write_csv_rows::<TraceRow>(&out_path(cfg, TRACE_FILE), &out.trace)?;
    let n_samples = out.samples.len();
    let snap = PosteriorSnapshot::new(cfg.seed, hp, cfg.chain, s.train.len(), out.samples);
    write_snapshot(&out_path(cfg, POSTERIOR_FILE), &snap)?;
    Ok(json!({
        "dataset": data.stats(),
        "n_train": s.train.len(),
        "n_test": s.test.len(),
        "n_samples": n_samples,
        "decay": hp.decay,
        "final_log_joint": out.trace.last().map(|t| t.log_joint),
    }))
}

fn load_posterior(cfg: &RunConfig, train: &EdgeSequence) -> Result<PosteriorSnapshot> {
    let path = out_path(cfg, POSTERIOR_FILE);
    if !path.exists() {
        return Err(Error::input(format!(
            "{} not found; run `train` first",
            path.display()
        )));
    }
    let snap = read_snapshot(&path)?;
    if snap.n_edges != train.len() {
        return Err(Error::input(format!(
            "posterior was trained on {} edges but this config yields {}",
            snap.n_edges,
            train.len()
        )));
    }
    Ok(snap)
}

/// Held-out predictive log-likelihood of the test edges under the stored
/// posterior.
pub fn run_loglik(cfg: &RunConfig) -> Result<Value> {
    let data = load_dataset(cfg)?;
    let s = split(cfg, &data)?;
    ensure_test(&s.test)?;
    let snap = load_posterior(cfg, &s.train)?;
    prepare(cfg)?;
    let per_edge = heldout_edge_logliks(&s.train, &snap.samples, &s.test)?;
    let total: f64 = per_edge.iter().sum();
    let summary = json!({
        "loglik": total,
        "mean_per_edge": total / per_edge.len() as f64,
        "n_test": per_edge.len(),
        "n_samples": snap.samples.len(),
    });
    write_json(&out_path(cfg, "loglik.json"), &summary)?;
    Ok(summary)
}

fn require_next_slot(s: Split) -> Result<(EdgeSequence, NextSlotSplit)> {
    match s.next_slot {
        Some(ns) => Ok((s.train, ns)),
        None => Err(Error::config(
            "link prediction needs `split.mode = \"next-slot\"`",
        )),
    }
}

#[derive(Serialize)]
struct PredictionRow<'a> {
    rank: usize,
    sender: &'a str,
    recipient: &'a str,
    score: f64,
}

/// Ranks every ordered pair of training vertices for the target slot.
pub fn run_predict(cfg: &RunConfig) -> Result<Value> {
    let data = load_dataset(cfg)?;
    let (train, ns) = require_next_slot(split(cfg, &data)?)?;
    let snap = load_posterior(cfg, &train)?;
    prepare(cfg)?;
    let ranked = score_candidate_edges(&train, &snap.samples, &ns.candidates(), ns.t_query)?;
    let label = |v| data.vertices.label(v).expect("dense id");
    let rows: Vec<PredictionRow> = ranked
        .edges
        .iter()
        .enumerate()
        .map(|(i, e)| PredictionRow {
            rank: i + 1,
            sender: label(e.sender),
            recipient: label(e.recipient),
            score: e.score,
        })
        .collect();
    write_csv_rows(&out_path(cfg, PREDICTIONS_FILE), &rows)?;
    let summary = json!({
        "target_slot": ns.target_slot,
        "t_query": ns.t_query,
        "n_candidates": ranked.edges.len(),
        "duplicates_removed": ranked.duplicates_removed,
        "new_vertex_mass": ranked.new_vertex_mass,
        "n_truth": ns.truth_pairs().len(),
    });
    write_json(&out_path(cfg, "predictions.json"), &summary)?;
    Ok(summary)
}

fn write_report(cfg: &RunConfig, report: &MetricReport, data: &Dataset) -> Result<Value> {
    write_text(&out_path(cfg, METRICS_CSV), &report.to_csv()?)?;
    let mut summary = report.summary_json();
    summary["dataset"] = json!(data.stats());
    summary["config"] = serde_json::to_value(cfg).map_err(|e| Error::Serde(e.to_string()))?;
    write_json(&out_path(cfg, METRICS_JSON), &summary)?;
    Ok(summary)
}

fn read_predictions(path: &Path, vertices: &VertexMap) -> Result<Vec<EdgePair>> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| Error::Serde(format!("{}: {e}", path.display())))?;
    let mut ranked = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::Parse {
            path: path.to_owned(),
            line,
            message: e.to_string(),
        })?;
        let id = |col: usize| {
            let l = rec.get(col).unwrap_or_default();
            vertices.id(l).ok_or_else(|| Error::Parse {
                path: path.to_owned(),
                line,
                message: format!("unknown vertex {l:?}"),
            })
        };
        ranked.push((id(1)?, id(2)?));
    }
    Ok(ranked)
}

/// Scores the stored ranking against the target slot.
pub fn run_metrics(cfg: &RunConfig) -> Result<Value> {
    let data = load_dataset(cfg)?;
    let (_, ns) = require_next_slot(split(cfg, &data)?)?;
    let path = out_path(cfg, PREDICTIONS_FILE);
    if !path.exists() {
        return Err(Error::input(format!(
            "{} not found; run `predict` first",
            path.display()
        )));
    }
    let ranked = read_predictions(&path, &data.vertices)?;
    prepare(cfg)?;
    let mut report = MetricReport::new(cfg.hits_mode);
    report.extend(evaluate_next_slot(
        &ranked,
        &ns.truth_pairs(),
        &cfg.ks,
        cfg.hits_mode,
        "dynmdnd",
        0,
    )?);
    write_report(cfg, &report, &data)
}

/// Repeated train-and-predict for the target slot, one independently seeded
/// run per repetition. The frequency and recency baselines are scored once.
pub fn run_evaluate(cfg: &RunConfig) -> Result<Value> {
    let data = load_dataset(cfg)?;
    let (train, ns) = require_next_slot(split(cfg, &data)?)?;
    prepare(cfg)?;
    let (hp, _) = training_hp(cfg, &train)?;
    let truth: BTreeSet<EdgePair> = ns.truth_pairs();
    let candidates = ns.candidates();
    let mut report = MetricReport::new(cfg.hits_mode);
    for rep in 0..cfg.repetitions {
        let out = run_chains(&train, &hp, &cfg.chain, cfg.seed.wrapping_add(rep as u64))?;
        let ranked = score_candidate_edges(&train, &out.samples, &candidates, ns.t_query)?;
        report.extend(evaluate_next_slot(
            &ranked.pairs(),
            &truth,
            &cfg.ks,
            cfg.hits_mode,
            "dynmdnd",
            rep,
        )?);
    }
    let (start, end) = data
        .edges
        .slot_span(ns.target_slot)
        .expect("target slot exists");
    for baseline in [
        Baseline::Frequency,
        Baseline::Recency { scale: end - start },
    ] {
        let ranked = baseline_scores(baseline, &train, &candidates, ns.t_query)?;
        report.extend(evaluate_next_slot(
            &ranked.pairs(),
            &truth,
            &cfg.ks,
            cfg.hits_mode,
            baseline.name(),
            0,
        )?);
    }
    let mut summary = write_report(cfg, &report, &data)?;
    summary["decay"] = json!(hp.decay);
    Ok(summary)
}
