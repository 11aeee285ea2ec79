use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{EdgeSequence, TimedEdge};

/// How training and evaluation data are carved out of a sequence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum SplitSpec {
    /// Hold out a random fraction of each slot's edges.
    WithinSlotHoldout { fraction: f64 },
    /// Train on the slots before `target_slot` (zero-based) and predict it.
    NextSlot { target_slot: usize },
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec::WithinSlotHoldout { fraction: 0.2 }
    }
}

impl SplitSpec {
    pub fn validate(&self, n_slots: usize) -> Result<()> {
        match *self {
            SplitSpec::WithinSlotHoldout { fraction } => {
                if !(fraction > 0.0 && fraction < 1.0) {
                    return Err(Error::config(format!(
                        "holdout fraction must be in (0, 1), got {fraction}"
                    )));
                }
            }
            SplitSpec::NextSlot { target_slot } => {
                if target_slot == 0 || target_slot >= n_slots {
                    return Err(Error::config(format!(
                        "target slot {target_slot} needs earlier training slots and must be below {n_slots}"
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HoldoutSplit {
    pub train: EdgeSequence,
    pub test: Vec<TimedEdge>,
}

/// Holds out `round(fraction * n_s)` uniformly chosen edges of every slot;
/// the rest keep their original timestamps and slot boundaries.
pub fn holdout_split(edges: &EdgeSequence, fraction: f64, seed: u64) -> Result<HoldoutSplit> {
    SplitSpec::WithinSlotHoldout { fraction }.validate(edges.n_slots())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut is_test = vec![false; edges.len()];
    for slot in 0..edges.n_slots() {
        let range = edges.slot_range(slot).expect("slot in range");
        let mut idx: Vec<usize> = range.collect();
        let take = (fraction * idx.len() as f64).round() as usize;
        idx.shuffle(&mut rng);
        for &i in &idx[..take] {
            is_test[i] = true;
        }
    }
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (e, held) in edges.edges().iter().zip(is_test) {
        if held {
            test.push(*e);
        } else {
            train.push(*e);
        }
    }
    let mut train = EdgeSequence::new(train)?;
    if let Some(b) = edges.slot_boundaries() {
        train = train.with_slot_boundaries(b.to_vec())?;
    }
    Ok(HoldoutSplit { train, test })
}
