//! Collapsed Gibbs inference over seating links, franchise tables, global
//! vertex weights and (optionally) the concentration parameters.

mod marginal;
mod snapshot;
mod state;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use marginal::{cluster_marginal_loglik, restaurant_loglik, GlobalWeights};
pub use snapshot::{read_snapshot, write_snapshot, PosteriorSnapshot, SNAPSHOT_FORMAT};
pub use state::{sample_table_count, ChainState};

use crate::error::{Error, Result};
use crate::model::{ClusterId, CollapsedCounts, EdgeSequence, Hyperparams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChainConfig {
    pub n_sweeps: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub n_chains: usize,
    pub hyper_resample: bool,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self {
            n_sweeps: 200,
            burn_in: 100,
            thin: 10,
            n_chains: 1,
            hyper_resample: true,
        }
    }
}

impl ChainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.thin == 0 {
            return Err(Error::config("thin must be at least 1"));
        }
        if self.burn_in >= self.n_sweeps {
            return Err(Error::config(format!(
                "burn_in ({}) must be smaller than n_sweeps ({})",
                self.burn_in, self.n_sweeps
            )));
        }
        if self.n_chains == 0 {
            return Err(Error::config("n_chains must be at least 1"));
        }
        if self.retained_per_chain() == 0 {
            return Err(Error::config("configuration retains no posterior samples"));
        }
        Ok(())
    }

    pub fn retained_per_chain(&self) -> usize {
        self.n_sweeps.saturating_sub(self.burn_in) / self.thin.max(1)
    }

    fn keeps(&self, sweep: usize) -> bool {
        sweep > self.burn_in && (sweep - self.burn_in).is_multiple_of(self.thin)
    }
}

/// Snapshot of one retained chain state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSample {
    pub chain: usize,
    pub seed: u64,
    /// Number of completed sweeps when the sample was taken.
    pub sweep: usize,
    pub links: Vec<usize>,
    pub clusters: Vec<ClusterId>,
    pub counts: CollapsedCounts,
    pub hp: Hyperparams,
}

/// Per-sweep diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub chain: usize,
    pub sweep: usize,
    pub log_joint: f64,
    pub n_clusters: usize,
    pub alpha: f64,
    pub tau: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ChainOutput {
    pub samples: Vec<PosteriorSample>,
    pub trace: Vec<TraceRow>,
}

/// Seeded generator for chain `chain`: one ChaCha stream per chain.
pub fn chain_rng(seed: u64, chain: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chain as u64);
    rng
}

/// Runs a single chain from the all-self-links state.
pub fn run_chain(
    edges: &EdgeSequence,
    hp: &Hyperparams,
    cfg: &ChainConfig,
    seed: u64,
    chain: usize,
) -> Result<ChainOutput> {
    cfg.validate()?;
    if edges.is_empty() {
        return Err(Error::input("cannot run a chain on an empty edge sequence"));
    }
    let mut state = ChainState::new(edges, *hp, chain_rng(seed, chain))?;
    let mut out = ChainOutput::default();
    for sweep in 1..=cfg.n_sweeps {
        state.sweep(cfg.hyper_resample)?;
        let lj = state.log_joint();
        if !lj.is_finite() {
            return Err(Error::invariant(format!(
                "log joint is {lj} at sweep {sweep}"
            )));
        }
        out.trace.push(TraceRow {
            chain,
            sweep,
            log_joint: lj,
            n_clusters: state.n_clusters(),
            alpha: state.hp().alpha,
            tau: state.hp().tau,
            gamma: state.hp().gamma,
        });
        if cfg.keeps(sweep) {
            out.samples.push(state.snapshot(chain, seed));
        }
    }
    Ok(out)
}

/// Runs `cfg.n_chains` independent chains in parallel and concatenates
/// their samples and traces in chain order.
pub fn run_chains(
    edges: &EdgeSequence,
    hp: &Hyperparams,
    cfg: &ChainConfig,
    seed: u64,
) -> Result<ChainOutput> {
    cfg.validate()?;
    let results: Vec<Result<ChainOutput>> = if cfg.n_chains == 1 {
        vec![run_chain(edges, hp, cfg, seed, 0)]
    } else {
        std::thread::scope(|scope| {
            let handles: Vec<_> = (0..cfg.n_chains)
                .map(|c| scope.spawn(move || run_chain(edges, hp, cfg, seed, c)))
                .collect();
            handles
                .into_iter()
                .map(|h| {
                    h.join()
                        .unwrap_or_else(|_| Err(Error::invariant("chain worker panicked")))
                })
                .collect()
        })
    };
    let mut out = ChainOutput::default();
    for r in results {
        let chain = r?;
        out.samples.extend(chain.samples);
        out.trace.extend(chain.trace);
    }
    Ok(out)
}
