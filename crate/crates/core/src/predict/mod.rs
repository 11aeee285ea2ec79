//! Held-out predictive likelihood and dynamic link prediction.

mod baselines;
mod evaluate;
mod heldout;
mod metrics;
mod scoring;
mod select;
mod split;

pub use baselines::{baseline_scores, Baseline};
pub use evaluate::{
    evaluate_next_slot, next_slot_split, Aggregate, MetricReport, MetricRow, NextSlotSplit,
};
pub use heldout::{cluster_weights_at, heldout_edge_logliks, heldout_loglik};
pub use metrics::{f1_score, hits_at_k, map_at_k, EdgePair, HitsMode};
pub use scoring::{score_candidate_edges, RankedPrediction, ScoredEdge};
pub use select::{median_positive_gap, select_decay_scale, ScaleSelection, SCALE_GRID};
pub use split::{holdout_split, HoldoutSplit, SplitSpec};
