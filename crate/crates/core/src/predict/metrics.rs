use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::VertexId;

/// A directed (sender, recipient) pair.
pub type EdgePair = (VertexId, VertexId);

/// Denominator used by [`hits_at_k`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HitsMode {
    /// Hits among the top k divided by k.
    #[default]
    Precision,
    /// Hits among the top k divided by the number of true edges.
    Recall,
}

impl HitsMode {
    pub fn name(self) -> &'static str {
        match self {
            HitsMode::Precision => "precision",
            HitsMode::Recall => "recall",
        }
    }
}

impl std::str::FromStr for HitsMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "precision" => Ok(HitsMode::Precision),
            "recall" => Ok(HitsMode::Recall),
            other => Err(Error::config(format!("unknown hits mode {other:?}"))),
        }
    }
}

fn nonempty(truth: &BTreeSet<EdgePair>) -> Result<()> {
    if truth.is_empty() {
        Err(Error::input("truth edge set is empty"))
    } else {
        Ok(())
    }
}

fn positive_k(k: usize) -> Result<()> {
    if k == 0 {
        Err(Error::input("k must be at least 1"))
    } else {
        Ok(())
    }
}

/// Harmonic mean of precision and recall on distinct pairs.
pub fn f1_score(predicted: &BTreeSet<EdgePair>, truth: &BTreeSet<EdgePair>) -> Result<f64> {
    nonempty(truth)?;
    let hits = predicted.intersection(truth).count() as f64;
    if hits == 0.0 {
        return Ok(0.0);
    }
    let precision = hits / predicted.len() as f64;
    let recall = hits / truth.len() as f64;
    Ok(2.0 * precision * recall / (precision + recall))
}

/// Average precision over the first `k` ranked pairs, normalized by
/// `min(k, |truth|)`.
pub fn map_at_k(ranked: &[EdgePair], truth: &BTreeSet<EdgePair>, k: usize) -> Result<f64> {
    nonempty(truth)?;
    positive_k(k)?;
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (i, pair) in ranked.iter().take(k).enumerate() {
        if truth.contains(pair) {
            hits += 1;
            sum += hits as f64 / (i + 1) as f64;
        }
    }
    Ok(sum / k.min(truth.len()) as f64)
}

/// Rate of true pairs among the first `k` ranked. Positions past the end of
/// a short list count as misses.
pub fn hits_at_k(
    ranked: &[EdgePair],
    truth: &BTreeSet<EdgePair>,
    k: usize,
    mode: HitsMode,
) -> Result<f64> {
    nonempty(truth)?;
    positive_k(k)?;
    let hits = ranked.iter().take(k).filter(|p| truth.contains(p)).count() as f64;
    Ok(match mode {
        HitsMode::Precision => hits / k as f64,
        HitsMode::Recall => hits / truth.len() as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn set(pairs: &[EdgePair]) -> BTreeSet<EdgePair> {
        pairs.iter().copied().collect()
    }

    #[test]
    fn f1_examples() {
        let t = set(&[(0, 1), (2, 3)]);
        assert_eq!(f1_score(&t, &t).unwrap(), 1.0);
        assert_eq!(f1_score(&set(&[(5, 5)]), &t).unwrap(), 0.0);
        assert_eq!(f1_score(&set(&[(0, 1), (1, 2)]), &t).unwrap(), 0.5);
        assert_eq!(f1_score(&BTreeSet::new(), &t).unwrap(), 0.0);
        assert!(f1_score(&t, &BTreeSet::new()).is_err());
    }

    #[test]
    fn map_examples() {
        let t = set(&[(0, 1), (2, 3)]);
        assert_eq!(map_at_k(&[(0, 1), (2, 3)], &t, 2).unwrap(), 1.0);
        let ap = map_at_k(&[(0, 1), (9, 9), (2, 3)], &t, 3).unwrap();
        assert!((ap - 0.5 * (1.0 + 2.0 / 3.0)).abs() < 1e-15);
        assert_eq!(map_at_k(&[(9, 9), (8, 8)], &t, 2).unwrap(), 0.0);
        assert!(map_at_k(&[(0, 1)], &t, 0).is_err());
        assert!(map_at_k(&[(0, 1)], &BTreeSet::new(), 1).is_err());
    }

    #[test]
    fn hits_examples() {
        let t = set(&[(0, 1), (2, 3)]);
        let ranked = [(0, 1), (9, 9), (2, 3), (8, 8)];
        assert_eq!(hits_at_k(&ranked, &t, 4, HitsMode::Precision).unwrap(), 0.5);
        assert_eq!(
            hits_at_k(&ranked[..1], &t, 1, HitsMode::Precision).unwrap(),
            1.0
        );
        assert_eq!(
            hits_at_k(&ranked[..1], &t, 10, HitsMode::Precision).unwrap(),
            0.1
        );
        assert_eq!(hits_at_k(&ranked, &t, 4, HitsMode::Recall).unwrap(), 1.0);
        assert_eq!("recall".parse::<HitsMode>().unwrap(), HitsMode::Recall);
    }

    fn pairs() -> impl Strategy<Value = Vec<EdgePair>> {
        prop::collection::vec((0u32..5, 0u32..5), 0..20)
    }

    proptest! {
        #[test]
        fn metrics_in_unit_interval(ranked in pairs(), truth in pairs(), k in 1usize..25) {
            let truth = set(&truth);
            prop_assume!(!truth.is_empty());
            let mut seen = BTreeSet::new();
            let ranked: Vec<EdgePair> = ranked.into_iter().filter(|p| seen.insert(*p)).collect();
            for v in [
                f1_score(&set(&ranked), &truth).unwrap(),
                map_at_k(&ranked, &truth, k).unwrap(),
                hits_at_k(&ranked, &truth, k, HitsMode::Precision).unwrap(),
                hits_at_k(&ranked, &truth, k, HitsMode::Recall).unwrap(),
            ] {
                prop_assert!((0.0..=1.0).contains(&v));
            }
            let a = hits_at_k(&ranked, &truth, k, HitsMode::Precision).unwrap() * k as f64;
            let b = hits_at_k(&ranked, &truth, k + 1, HitsMode::Precision).unwrap() * (k + 1) as f64;
            prop_assert!(b + 1e-12 >= a);
        }
    }
}
