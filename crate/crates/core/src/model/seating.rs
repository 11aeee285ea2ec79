use super::decay::{DecaySpec, PRUNE_THRESHOLD};
use super::types::Hyperparams;
use crate::error::{Error, Result};
use crate::math::normalize_log_weights;

/// Unnormalized log seating weights for customer `i` (zero-based): entry
/// `j < i` is `ln f(t_i - t_j)`, entry `i` is `ln alpha`.
pub fn seating_log_weights(times: &[f64], i: usize, hp: &Hyperparams) -> Result<Vec<f64>> {
    if i >= times.len() {
        return Err(Error::input(format!(
            "customer {i} out of range for {} arrival times",
            times.len()
        )));
    }
    let prefix = &times[..=i];
    if prefix.iter().any(|t| !t.is_finite()) {
        return Err(Error::input("arrival times must be finite"));
    }
    if let Some(pos) = prefix.windows(2).position(|w| w[1] < w[0]) {
        return Err(Error::input(format!(
            "arrival times are not sorted at position {}",
            pos + 1
        )));
    }
    let t_i = times[i];
    let mut weights: Vec<f64> = prefix[..i]
        .iter()
        .map(|&t_j| hp.decay.ln_eval_unchecked(t_i - t_j))
        .collect();
    weights.push(hp.alpha.ln());
    Ok(weights)
}

/// Normalized seating probabilities `P(c_i = j)` for `j = 0..=i`.
pub fn seating_probabilities(times: &[f64], i: usize, hp: &Hyperparams) -> Result<Vec<f64>> {
    Ok(normalize_log_weights(&seating_log_weights(times, i, hp)?))
}

/// First candidate index whose decay weight for customer `i` exceeds the
/// pruning threshold. `times` must be sorted.
pub fn candidate_start(times: &[f64], i: usize, decay: &DecaySpec) -> usize {
    if decay.kind == super::DecayKind::Identity {
        return 0;
    }
    let t_i = times[i];
    // gaps shrink as j grows, so the pruned candidates form a prefix
    times[..i].partition_point(|&t_j| decay.eval_unchecked(t_i - t_j) <= PRUNE_THRESHOLD)
}
