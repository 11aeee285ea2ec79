use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ChainConfig, PosteriorSample};
use crate::error::{Error, Result};
use crate::model::Hyperparams;

pub const SNAPSHOT_FORMAT: &str = "dynmdnd-posterior/1";

/// Posterior samples on disk, with the settings that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSnapshot {
    pub format: String,
    pub seed: u64,
    pub initial_hp: Hyperparams,
    pub chain: ChainConfig,
    pub n_edges: usize,
    pub samples: Vec<PosteriorSample>,
}

impl PosteriorSnapshot {
    pub fn new(
        seed: u64,
        initial_hp: Hyperparams,
        chain: ChainConfig,
        n_edges: usize,
        samples: Vec<PosteriorSample>,
    ) -> Self {
        Self {
            format: SNAPSHOT_FORMAT.to_string(),
            seed,
            initial_hp,
            chain,
            n_edges,
            samples,
        }
    }
}

pub fn write_snapshot(path: &Path, snapshot: &PosteriorSnapshot) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer(&mut w, snapshot).map_err(|e| Error::Serde(e.to_string()))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_snapshot(path: &Path) -> Result<PosteriorSnapshot> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let snap: PosteriorSnapshot = serde_json::from_reader(BufReader::new(file))
        .map_err(|e| Error::Serde(format!("{}: {e}", path.display())))?;
    if snap.format != SNAPSHOT_FORMAT {
        return Err(Error::Serde(format!(
            "{}: unsupported snapshot format `{}`",
            path.display(),
            snap.format
        )));
    }
    for s in &snap.samples {
        if s.clusters.len() != snap.n_edges || s.links.len() != snap.n_edges {
            return Err(Error::Serde(format!(
                "{}: sample from sweep {} has the wrong length",
                path.display(),
                s.sweep
            )));
        }
        s.hp.validate()?;
    }
    Ok(snap)
}
