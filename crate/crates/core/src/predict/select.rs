use serde::{Deserialize, Serialize};

use super::heldout::heldout_loglik;
use super::split::holdout_split;
use crate::error::{Error, Result};
use crate::inference::{run_chains, ChainConfig};
use crate::model::{DecayKind, DecaySpec, EdgeSequence, Hyperparams};

/// Multipliers of the median inter-edge gap tried for the decay scale.
pub const SCALE_GRID: [f64; 6] = [0.1, 0.5, 1.0, 2.0, 5.0, 10.0];

/// Median of the strictly positive gaps between consecutive timestamps.
pub fn median_positive_gap(edges: &EdgeSequence) -> Result<f64> {
    let mut gaps: Vec<f64> = edges
        .edges()
        .windows(2)
        .map(|w| w[1].time - w[0].time)
        .filter(|&g| g > 0.0)
        .collect();
    if gaps.is_empty() {
        return Err(Error::input("no positive gap between timestamps"));
    }
    gaps.sort_by(f64::total_cmp);
    let n = gaps.len();
    Ok(if n % 2 == 1 {
        gaps[n / 2]
    } else {
        0.5 * (gaps[n / 2 - 1] + gaps[n / 2])
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleSelection {
    pub kind: DecayKind,
    pub median_gap: f64,
    /// `(scale, held-out log-likelihood)` per grid point.
    pub scores: Vec<(f64, f64)>,
    pub chosen: DecaySpec,
}

/// Picks the decay scale from [`SCALE_GRID`] maximizing held-out
/// log-likelihood on a within-slot holdout of `edges`. The first maximum wins.
pub fn select_decay_scale(
    edges: &EdgeSequence,
    kind: DecayKind,
    hp: &Hyperparams,
    cfg: &ChainConfig,
    fraction: f64,
    seed: u64,
) -> Result<ScaleSelection> {
    if kind == DecayKind::Identity {
        return Err(Error::config("identity decay has no scale to select"));
    }
    let median_gap = median_positive_gap(edges)?;
    let split = holdout_split(edges, fraction, seed)?;
    let mut scores = Vec::with_capacity(SCALE_GRID.len());
    for m in SCALE_GRID {
        let scale = m * median_gap;
        let hp = Hyperparams {
            decay: DecaySpec::new(kind, scale)?,
            ..*hp
        };
        let out = run_chains(&split.train, &hp, cfg, seed)?;
        scores.push((
            scale,
            heldout_loglik(&split.train, &out.samples, &split.test)?,
        ));
    }
    let best = scores.iter().enumerate().fold(
        0,
        |best, (i, s)| if s.1 > scores[best].1 { i } else { best },
    );
    Ok(ScaleSelection {
        kind,
        median_gap,
        chosen: DecaySpec::new(kind, scores[best].0)?,
        scores,
    })
}
