//! Small numerical helpers shared by the sampler and the predictive code.

use rand::Rng;

pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// `ln Γ(x + n) − ln Γ(x)`, i.e. the log rising factorial.
pub fn ln_rising(x: f64, n: u32) -> f64 {
    match n {
        0 => 0.0,
        1 => x.ln(),
        _ => ln_gamma(x + n as f64) - ln_gamma(x),
    }
}

pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    let sum: f64 = values.iter().map(|v| (v - max).exp()).sum();
    max + sum.ln()
}

/// Log of the arithmetic mean of `exp(values)`.
pub fn log_mean_exp(values: &[f64]) -> f64 {
    log_sum_exp(values) - (values.len() as f64).ln()
}

/// Normalizes log-weights into probabilities.
pub fn normalize_log_weights(log_weights: &[f64]) -> Vec<f64> {
    let total = log_sum_exp(log_weights);
    log_weights.iter().map(|w| (w - total).exp()).collect()
}

/// Draws an index from unnormalized log-weights. Entries at `-inf` are never
/// selected. Returns `None` when every weight is `-inf` or the slice is empty.
pub fn sample_log_categorical<R: Rng + ?Sized>(log_weights: &[f64], rng: &mut R) -> Option<usize> {
    let max = log_weights
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return None;
    }
    let weights: Vec<f64> = log_weights.iter().map(|w| (w - max).exp()).collect();
    sample_categorical(&weights, rng)
}

/// Draws an index proportionally to non-negative linear weights.
pub fn sample_categorical<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> Option<usize> {
    let total: f64 = weights.iter().sum();
    if total <= 0.0 || !total.is_finite() {
        return None;
    }
    let mut u = rng.random::<f64>() * total;
    let mut last_positive = None;
    for (idx, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            if u < w {
                return Some(idx);
            }
            u -= w;
            last_positive = Some(idx);
        }
    }
    // rounding can leave a sliver past the final bucket
    last_positive
}

/// Univariate slice sampler (stepping out, shrinkage) on an unbounded
/// real line.
pub fn slice_sample<R, F>(x0: f64, log_density: F, width: f64, rng: &mut R) -> f64
where
    R: Rng + ?Sized,
    F: Fn(f64) -> f64,
{
    const MAX_STEPS: usize = 64;
    let f0 = log_density(x0);
    debug_assert!(f0.is_finite(), "slice sampler started outside support");
    let level = f0 + rng.random::<f64>().ln();
    let mut left = x0 - width * rng.random::<f64>();
    let mut right = left + width;
    let mut steps = 0;
    while steps < MAX_STEPS && log_density(left) > level {
        left -= width;
        steps += 1;
    }
    steps = 0;
    while steps < MAX_STEPS && log_density(right) > level {
        right += width;
        steps += 1;
    }
    loop {
        let x = left + rng.random::<f64>() * (right - left);
        if log_density(x) > level {
            return x;
        }
        if x < x0 {
            left = x;
        } else {
            right = x;
        }
        if right - left < 1e-14 {
            return x0;
        }
    }
}

pub fn mean_and_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}
