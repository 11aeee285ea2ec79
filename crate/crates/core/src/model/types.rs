use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::decay::DecaySpec;
use crate::error::{Error, Result};

/// Dense integer vertex label.
pub type VertexId = u32;

/// Cluster label: index of the earliest edge in the cluster.
pub type ClusterId = usize;

/// A vertex that has been seen, or a fresh draw from the continuous base.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Vertex {
    Seen(VertexId),
    New,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ClusterRef {
    Existing(ClusterId),
    New,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Sender,
    Recipient,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::Sender, Side::Recipient];
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimedEdge {
    pub sender: VertexId,
    pub recipient: VertexId,
    pub time: f64,
}

impl TimedEdge {
    pub fn new(sender: VertexId, recipient: VertexId, time: f64) -> Result<Self> {
        if !time.is_finite() || time < 0.0 {
            return Err(Error::input(format!(
                "edge time must be finite and non-negative, got {time}"
            )));
        }
        Ok(Self {
            sender,
            recipient,
            time,
        })
    }

    pub fn pair(&self) -> (VertexId, VertexId) {
        (self.sender, self.recipient)
    }
}

/// Time-ordered edges, optionally partitioned into time slots.
///
/// `slot_boundaries` holds `T + 1` strictly increasing cut points; slot `s`
/// (zero-based) covers `[b[s], b[s+1])`, with the last slot closed on the
/// right.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EdgeSequence {
    edges: Vec<TimedEdge>,
    slot_boundaries: Option<Vec<f64>>,
}

impl EdgeSequence {
    /// Builds a sequence from edges that must already be sorted by time.
    pub fn new(edges: Vec<TimedEdge>) -> Result<Self> {
        for (idx, e) in edges.iter().enumerate() {
            if !e.time.is_finite() || e.time < 0.0 {
                return Err(Error::input(format!(
                    "edge {idx} has invalid time {}",
                    e.time
                )));
            }
        }
        if let Some(idx) = edges.windows(2).position(|w| w[1].time < w[0].time) {
            return Err(Error::input(format!(
                "edges are not sorted by time at position {}",
                idx + 1
            )));
        }
        Ok(Self {
            edges,
            slot_boundaries: None,
        })
    }

    /// Stable-sorts the edges by time before building the sequence.
    pub fn from_unsorted(mut edges: Vec<TimedEdge>) -> Result<Self> {
        edges.sort_by(|a, b| a.time.total_cmp(&b.time));
        Self::new(edges)
    }

    pub fn with_slot_boundaries(mut self, boundaries: Vec<f64>) -> Result<Self> {
        if boundaries.len() < 2 {
            return Err(Error::input("slot boundaries need at least two cut points"));
        }
        if boundaries.iter().any(|b| !b.is_finite()) {
            return Err(Error::input("slot boundaries must be finite"));
        }
        if boundaries.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::input("slot boundaries must be strictly increasing"));
        }
        if let (Some(first), Some(last)) = (self.edges.first(), self.edges.last()) {
            if first.time < boundaries[0] || last.time > boundaries[boundaries.len() - 1] {
                return Err(Error::input("edges fall outside the slot boundaries"));
            }
        }
        self.slot_boundaries = Some(boundaries);
        Ok(self)
    }

    /// Fixed-width slots starting at `origin`, covering every edge.
    pub fn with_fixed_slots(self, origin: f64, width: f64) -> Result<Self> {
        if width <= 0.0 || !width.is_finite() {
            return Err(Error::input(format!(
                "slot width must be positive, got {width}"
            )));
        }
        let last = self.edges.last().map_or(origin, |e| e.time);
        let n_slots = (((last - origin) / width).floor() as usize + 1).max(1);
        let boundaries = (0..=n_slots).map(|k| origin + k as f64 * width).collect();
        self.with_slot_boundaries(boundaries)
    }

    pub fn edges(&self) -> &[TimedEdge] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.edges.iter().map(|e| e.time).collect()
    }

    pub fn slot_boundaries(&self) -> Option<&[f64]> {
        self.slot_boundaries.as_deref()
    }

    /// Number of slots; an unslotted sequence counts as one slot.
    pub fn n_slots(&self) -> usize {
        self.slot_boundaries.as_ref().map_or(1, |b| b.len() - 1)
    }

    pub fn slot_of_time(&self, time: f64) -> Option<usize> {
        let b = self.slot_boundaries.as_ref()?;
        if time < b[0] || time > b[b.len() - 1] {
            return None;
        }
        let idx = b.partition_point(|&x| x <= time);
        Some(idx.saturating_sub(1).min(b.len() - 2))
    }

    /// Time span `[start, end)` of a zero-based slot.
    pub fn slot_span(&self, slot: usize) -> Option<(f64, f64)> {
        let b = self.slot_boundaries.as_ref()?;
        (slot + 1 < b.len()).then(|| (b[slot], b[slot + 1]))
    }

    /// Edge index range belonging to a zero-based slot.
    pub fn slot_range(&self, slot: usize) -> Option<Range<usize>> {
        let Some(b) = self.slot_boundaries.as_ref() else {
            return (slot == 0).then_some(0..self.edges.len());
        };
        if slot + 1 >= b.len() {
            return None;
        }
        let start = self.edges.partition_point(|e| e.time < b[slot]);
        let end = if slot + 2 == b.len() {
            self.edges.len()
        } else {
            self.edges.partition_point(|e| e.time < b[slot + 1])
        };
        Some(start..end)
    }

    /// Edges of slots `0..end_slot`, keeping the boundaries of those slots.
    pub fn prefix_slots(&self, end_slot: usize) -> Result<EdgeSequence> {
        let b = self
            .slot_boundaries
            .as_ref()
            .ok_or_else(|| Error::input("sequence has no time slots"))?;
        if end_slot == 0 || end_slot >= b.len() {
            return Err(Error::input(format!(
                "slot prefix {end_slot} out of range for {} slots",
                b.len() - 1
            )));
        }
        let range = self.slot_range(end_slot - 1).expect("slot checked above");
        let mut seq = EdgeSequence::new(self.edges[..range.end].to_vec())?;
        seq.slot_boundaries = Some(b[..=end_slot].to_vec());
        Ok(seq)
    }

    /// Distinct vertex ids, sorted.
    pub fn vertices(&self) -> Vec<VertexId> {
        let mut v: Vec<VertexId> = self
            .edges
            .iter()
            .flat_map(|e| [e.sender, e.recipient])
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    pub fn vertex_bound(&self) -> usize {
        self.edges
            .iter()
            .map(|e| e.sender.max(e.recipient) as usize + 1)
            .max()
            .unwrap_or(0)
    }
}

/// Scalar knobs of the model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    /// Concentration of the global vertex distribution.
    pub gamma: f64,
    /// Concentration of the per-cluster sender (and, unless split, recipient)
    /// distributions.
    pub tau: f64,
    /// Separate recipient concentration; `None` shares `tau`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_recipient: Option<f64>,
    /// Self-link mass of the seating prior.
    pub alpha: f64,
    pub decay: DecaySpec,
}

impl Hyperparams {
    pub fn new(gamma: f64, tau: f64, alpha: f64, decay: DecaySpec) -> Result<Self> {
        let hp = Self {
            gamma,
            tau,
            tau_recipient: None,
            alpha,
            decay,
        };
        hp.validate()?;
        Ok(hp)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::input(format!(
                    "{name} must be positive and finite, got {v}"
                )))
            }
        };
        positive("gamma", self.gamma)?;
        positive("tau", self.tau)?;
        positive("alpha", self.alpha)?;
        if let Some(t) = self.tau_recipient {
            positive("tau_recipient", t)?;
        }
        self.decay.validate()
    }

    pub fn tau_for(&self, side: Side) -> f64 {
        match side {
            Side::Sender => self.tau,
            Side::Recipient => self.tau_recipient.unwrap_or(self.tau),
        }
    }
}
