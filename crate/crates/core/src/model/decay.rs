use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Decay values at or below this are treated as zero when pruning seating
/// candidates.
pub const PRUNE_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecayKind {
    /// Constant one for every finite distance: the plain CRP.
    Identity,
    Exponential,
    Logistic,
    Window,
}

impl DecayKind {
    pub fn name(self) -> &'static str {
        match self {
            DecayKind::Identity => "identity",
            DecayKind::Exponential => "exponential",
            DecayKind::Logistic => "logistic",
            DecayKind::Window => "window",
        }
    }
}

impl fmt::Display for DecayKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DecayKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "identity" | "crp" => Ok(DecayKind::Identity),
            "exponential" | "exp" => Ok(DecayKind::Exponential),
            "logistic" => Ok(DecayKind::Logistic),
            "window" => Ok(DecayKind::Window),
            other => Err(Error::input(format!("unknown decay kind `{other}`"))),
        }
    }
}

/// A decay function of the time gap between two edges.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecaySpec {
    pub kind: DecayKind,
    /// Scale `a`; ignored by `Identity`.
    pub scale: f64,
}

impl DecaySpec {
    pub fn new(kind: DecayKind, scale: f64) -> Result<Self> {
        let spec = Self { kind, scale };
        spec.validate()?;
        Ok(spec)
    }

    pub fn identity() -> Self {
        Self {
            kind: DecayKind::Identity,
            scale: 1.0,
        }
    }

    pub fn exponential(scale: f64) -> Result<Self> {
        Self::new(DecayKind::Exponential, scale)
    }

    pub fn logistic(scale: f64) -> Result<Self> {
        Self::new(DecayKind::Logistic, scale)
    }

    pub fn window(scale: f64) -> Result<Self> {
        Self::new(DecayKind::Window, scale)
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind != DecayKind::Identity && !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(Error::input(format!(
                "decay scale must be positive and finite, got {}",
                self.scale
            )));
        }
        Ok(())
    }

    /// Evaluates the decay at distance `d` (`f64::INFINITY` allowed).
    pub fn eval(&self, d: f64) -> Result<f64> {
        if d.is_nan() || d < 0.0 {
            return Err(Error::input(format!(
                "decay distance must be >= 0, got {d}"
            )));
        }
        Ok(self.eval_unchecked(d))
    }

    /// `eval` without the domain check, for hot loops over sorted times.
    pub fn eval_unchecked(&self, d: f64) -> f64 {
        if d == f64::INFINITY {
            return 0.0;
        }
        let a = self.scale;
        match self.kind {
            DecayKind::Identity => 1.0,
            DecayKind::Exponential => (-d / a).exp(),
            DecayKind::Logistic => logistic(a - d),
            DecayKind::Window => {
                if d < a {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Log of the decay; `-inf` where the decay vanishes.
    pub fn ln_eval_unchecked(&self, d: f64) -> f64 {
        if d == f64::INFINITY {
            return f64::NEG_INFINITY;
        }
        let a = self.scale;
        match self.kind {
            DecayKind::Identity => 0.0,
            DecayKind::Exponential => -d / a,
            // ln σ(x) = -ln(1 + e^{-x})
            DecayKind::Logistic => -(-(a - d)).exp().ln_1p(),
            DecayKind::Window => {
                if d < a {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
    }

    /// Smallest distance beyond which the decay is at most `eps`, or `None`
    /// when the decay never drops that low.
    pub fn cutoff(&self, eps: f64) -> Option<f64> {
        let a = self.scale;
        match self.kind {
            DecayKind::Identity => None,
            DecayKind::Exponential => Some(a * (1.0 / eps).ln()),
            // σ(a - d) <= eps  <=>  d >= a + ln((1 - eps) / eps)
            DecayKind::Logistic => Some(a + ((1.0 - eps) / eps).ln()),
            DecayKind::Window => Some(a),
        }
    }
}

fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl fmt::Display for DecaySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            DecayKind::Identity => write!(f, "identity"),
            kind => write!(f, "{kind}(a={})", self.scale),
        }
    }
}
