use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::dataset::DatasetSpec;
use crate::error::{Error, Result};
use crate::inference::ChainConfig;
use crate::model::{DecayKind, DecaySpec, Hyperparams};
use crate::predict::{HitsMode, SplitSpec};
use crate::simulate::TimeProcess;

/// Environment variable overriding the configured output directory.
pub const OUTPUT_DIR_ENV: &str = "DYNMDND_OUTPUT_DIR";

/// Model knobs as written in a config file. A non-identity decay without a
/// scale is grid-selected on held-out data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub gamma: f64,
    pub tau: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_recipient: Option<f64>,
    pub alpha: f64,
    pub decay: DecayKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decay_scale: Option<f64>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            gamma: 1.0,
            tau: 1.0,
            tau_recipient: None,
            alpha: 1.0,
            decay: DecayKind::Exponential,
            decay_scale: None,
        }
    }
}

impl ModelConfig {
    /// Hyperparameters with `scale` standing in for a missing decay scale.
    pub fn hyperparams(&self, scale: f64) -> Result<Hyperparams> {
        let scale = match self.decay {
            DecayKind::Identity => 1.0,
            _ => self.decay_scale.unwrap_or(scale),
        };
        let hp = Hyperparams {
            gamma: self.gamma,
            tau: self.tau,
            tau_recipient: self.tau_recipient,
            alpha: self.alpha,
            decay: DecaySpec::new(self.decay, scale)?,
        };
        hp.validate().map_err(|e| Error::config(e.to_string()))?;
        Ok(hp)
    }

    pub fn needs_scale_selection(&self) -> bool {
        self.decay != DecayKind::Identity && self.decay_scale.is_none()
    }
}

/// Settings of the `simulate` command.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub n_edges: usize,
    #[serde(default = "unit_spaced")]
    pub time_process: TimeProcess,
    /// Width of the fixed slots attached to the simulated sequence.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slot_width: Option<f64>,
}

fn unit_spaced() -> TimeProcess {
    TimeProcess::UnitSpaced
}

/// Everything a pipeline run needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default = "default_ks")]
    pub ks: Vec<usize>,
    #[serde(default)]
    pub hits_mode: HitsMode,
    /// Independent chains per evaluation, each a repetition.
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset: Option<DatasetSpec>,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub chain: ChainConfig,
    #[serde(default)]
    pub split: SplitSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulate: Option<SimulateConfig>,
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}
fn default_ks() -> Vec<usize> {
    vec![1, 5, 10]
}
fn default_repetitions() -> usize {
    10
}

impl Default for RunConfig {
    fn default() -> Self {
        toml::from_str("").expect("defaults parse")
    }
}

/// Command-line values that take precedence over the config file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub chains: Option<usize>,
    pub sweeps: Option<usize>,
    pub decay: Option<DecayKind>,
    pub decay_scale: Option<f64>,
    pub alpha: Option<f64>,
    pub gamma: Option<f64>,
    pub tau: Option<f64>,
    pub output_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::config(e.to_string()))
    }

    /// Reads a config file; relative dataset paths resolve against its
    /// directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml(&text)
            .map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
        if let (Some(ds), Some(dir)) = (cfg.dataset.as_mut(), path.parent()) {
            ds.rebase(dir);
        }
        Ok(cfg)
    }

    /// Applies flags, then the output-directory environment variable unless a
    /// flag already set it, then validates.
    pub fn resolve(mut self, o: &Overrides, env_output: Option<PathBuf>) -> Result<Self> {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(c) = o.chains {
            self.chain.n_chains = c;
        }
        if let Some(s) = o.sweeps {
            let burn = self.chain.burn_in.min(s / 2);
            self.chain.n_sweeps = s;
            self.chain.burn_in = burn;
        }
        if let Some(d) = o.decay {
            if d != self.model.decay {
                self.model.decay_scale = None;
            }
            self.model.decay = d;
        }
        if let Some(a) = o.decay_scale {
            self.model.decay_scale = Some(a);
        }
        if let Some(a) = o.alpha {
            self.model.alpha = a;
        }
        if let Some(g) = o.gamma {
            self.model.gamma = g;
        }
        if let Some(t) = o.tau {
            self.model.tau = t;
        }
        if let Some(dir) = o.output_dir.clone().or(env_output) {
            self.output_dir = dir;
        }
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        self.model.hyperparams(1.0)?;
        if let Some(a) = self.model.decay_scale {
            DecaySpec::new(self.model.decay, a).map_err(|e| Error::config(e.to_string()))?;
        }
        self.chain
            .validate()
            .map_err(|e| Error::config(e.to_string()))?;
        if self.ks.is_empty() || self.ks.contains(&0) {
            return Err(Error::config(
                "ks must be a non-empty list of positive integers",
            ));
        }
        if self.repetitions == 0 {
            return Err(Error::config("repetitions must be at least 1"));
        }
        if let SplitSpec::WithinSlotHoldout { .. } = self.split {
            self.split.validate(usize::MAX)?;
        }
        if let Some(ds) = &self.dataset {
            ds.validate()?;
        }
        if let Some(sim) = &self.simulate {
            if sim.n_edges == 0 {
                return Err(Error::config("simulate.n_edges must be at least 1"));
            }
            if sim.slot_width.is_some_and(|w| !(w > 0.0 && w.is_finite())) {
                return Err(Error::config("simulate.slot_width must be positive"));
            }
        }
        Ok(())
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Serde(e.to_string()))
    }
}
