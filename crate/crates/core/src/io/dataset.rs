use std::collections::HashMap;
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{EdgeSequence, TimedEdge, VertexId};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeUnit {
    #[default]
    Seconds,
    Milliseconds,
    Minutes,
    Hours,
    Days,
}

impl TimeUnit {
    pub fn seconds(self) -> f64 {
        match self {
            TimeUnit::Seconds => 1.0,
            TimeUnit::Milliseconds => 1e-3,
            TimeUnit::Minutes => 60.0,
            TimeUnit::Hours => 3600.0,
            TimeUnit::Days => 86_400.0,
        }
    }
}

/// How edges are bucketed into time slots. Widths and boundaries are in the
/// dataset's timestamp unit.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Slotting {
    #[default]
    None,
    /// Consecutive slots of width `width` starting at `origin`, or at the
    /// earliest timestamp when no origin is given.
    FixedWidth {
        width: f64,
        origin: Option<f64>,
    },
    Explicit {
        boundaries: Vec<f64>,
    },
    /// Each file listed in `files` is one slot, in order. The main `path` is
    /// not read.
    PerFile {
        files: Vec<PathBuf>,
    },
}

/// Descriptor of a delimited-text edge list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSpec {
    #[serde(default)]
    pub path: PathBuf,
    #[serde(default = "default_delimiter")]
    pub delimiter: char,
    #[serde(default)]
    pub header: bool,
    #[serde(default)]
    pub sender_col: usize,
    #[serde(default = "one")]
    pub recipient_col: usize,
    #[serde(default = "two")]
    pub time_col: usize,
    #[serde(default)]
    pub timestamp_unit: TimeUnit,
    /// Add the reverse of every non-loop edge at the same time.
    #[serde(default)]
    pub symmetrize: bool,
    #[serde(default)]
    pub slotting: Slotting,
}

fn default_delimiter() -> char {
    ','
}
fn one() -> usize {
    1
}
fn two() -> usize {
    2
}

impl DatasetSpec {
    /// Comma-separated `sender,recipient,time` in seconds, with a header.
    pub fn plain(path: impl Into<PathBuf>) -> Self {
        Self {
            path: path.into(),
            delimiter: ',',
            header: true,
            sender_col: 0,
            recipient_col: 1,
            time_col: 2,
            timestamp_unit: TimeUnit::Seconds,
            symmetrize: false,
            slotting: Slotting::None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (s, r, t) = (self.sender_col, self.recipient_col, self.time_col);
        if s == r || s == t || r == t {
            return Err(Error::config(
                "sender, recipient and time columns must be distinct",
            ));
        }
        if !self.delimiter.is_ascii() {
            return Err(Error::config("delimiter must be a single ASCII character"));
        }
        match &self.slotting {
            Slotting::FixedWidth { width, origin } => {
                if !(*width > 0.0 && width.is_finite()) {
                    return Err(Error::config(format!(
                        "slot width must be positive, got {width}"
                    )));
                }
                if origin.is_some_and(|o| !o.is_finite()) {
                    return Err(Error::config("slot origin must be finite"));
                }
            }
            Slotting::PerFile { files } if files.is_empty() => {
                return Err(Error::config("per-file slotting needs at least one file"));
            }
            _ => {}
        }
        Ok(())
    }

    /// Resolves relative paths against `base`.
    pub fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() && !p.as_os_str().is_empty() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.path);
        if let Slotting::PerFile { files } = &mut self.slotting {
            files.iter_mut().for_each(fix);
        }
    }
}

/// Bijection between raw vertex labels and dense ids `0..M`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VertexMap {
    labels: Vec<String>,
    #[serde(skip)]
    index: HashMap<String, VertexId>,
}

impl VertexMap {
    pub fn from_labels(labels: Vec<String>) -> Result<Self> {
        let mut index = HashMap::with_capacity(labels.len());
        for (i, l) in labels.iter().enumerate() {
            if index.insert(l.clone(), i as VertexId).is_some() {
                return Err(Error::input(format!("duplicate vertex label {l:?}")));
            }
        }
        Ok(Self { labels, index })
    }

    /// Labels equal to the decimal ids `0..n`.
    pub fn numeric(n: usize) -> Self {
        Self::from_labels((0..n).map(|i| i.to_string()).collect()).expect("distinct labels")
    }

    fn intern(&mut self, label: &str) -> VertexId {
        if let Some(&id) = self.index.get(label) {
            return id;
        }
        let id = self.labels.len() as VertexId;
        self.labels.push(label.to_owned());
        self.index.insert(label.to_owned(), id);
        id
    }

    pub fn id(&self, label: &str) -> Option<VertexId> {
        self.index.get(label).copied()
    }

    pub fn label(&self, id: VertexId) -> Option<&str> {
        self.labels.get(id as usize).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
        w.write_record(["id", "label"])
            .map_err(|e| csv_error(path, e))?;
        for (i, l) in self.labels.iter().enumerate() {
            w.write_record([i.to_string().as_str(), l])
                .map_err(|e| csv_error(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::io(path, source),
        other => Error::Serde(format!("{}: {other:?}", path.display())),
    }
}

/// Sizes reported after ingestion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub n_vertices: usize,
    pub n_edges: usize,
    pub n_slots: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub edges: EdgeSequence,
    pub vertices: VertexMap,
}

impl Dataset {
    pub fn stats(&self) -> DatasetStats {
        DatasetStats {
            n_vertices: self.vertices.len(),
            n_edges: self.edges.len(),
            n_slots: self.edges.n_slots(),
        }
    }
}

struct RawEdge {
    sender: String,
    recipient: String,
    time: f64,
    slot: usize,
}

fn read_rows(spec: &DatasetSpec, path: &Path, slot: usize, out: &mut Vec<RawEdge>) -> Result<()> {
    let text = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(spec.delimiter as u8)
        .has_headers(spec.header)
        .flexible(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_slice());
    // record positions include any blank or comment lines skipped before it
    let line_at = |pos: Option<&csv::Position>| {
        let Some(p) = pos else { return 0 };
        let mut b = p.byte() as usize;
        while b < text.len() {
            match text[b] {
                b'\n' | b'\r' => b += 1,
                b'#' => {
                    b += text[b..]
                        .iter()
                        .position(|&c| c == b'\n')
                        .map_or(text.len() - b, |n| n + 1)
                }
                _ => break,
            }
        }
        1 + text[..b].iter().filter(|&&c| c == b'\n').count() as u64
    };
    let need = spec.sender_col.max(spec.recipient_col).max(spec.time_col) + 1;
    let scale = spec.timestamp_unit.seconds();
    let parse_err = |line: u64, message: String| Error::Parse {
        path: path.to_owned(),
        line: line as usize,
        message,
    };
    let mut record = csv::StringRecord::new();
    loop {
        match reader.read_record(&mut record) {
            Ok(true) => {}
            Ok(false) => break,
            Err(e) => {
                let line = line_at(e.position());
                return Err(match e.into_kind() {
                    csv::ErrorKind::Io(source) => Error::io(path, source),
                    other => parse_err(line, format!("{other:?}")),
                });
            }
        }
        let line = line_at(record.position());
        if record.len() < need {
            return Err(parse_err(
                line,
                format!("expected at least {need} fields, found {}", record.len()),
            ));
        }
        let raw_time = &record[spec.time_col];
        let time: f64 = raw_time
            .parse()
            .map_err(|_| parse_err(line, format!("timestamp {raw_time:?} is not a number")))?;
        if !(time.is_finite() && time >= 0.0) {
            return Err(parse_err(
                line,
                format!("timestamp {raw_time:?} must be finite and non-negative"),
            ));
        }
        let (s, r) = (&record[spec.sender_col], &record[spec.recipient_col]);
        if s.is_empty() || r.is_empty() {
            return Err(parse_err(line, "empty vertex label".into()));
        }
        out.push(RawEdge {
            sender: s.to_owned(),
            recipient: r.to_owned(),
            time: time * scale,
            slot,
        });
    }
    Ok(())
}

/// Reads a delimited edge list: sorts stably by time, assigns dense ids in
/// order of first appearance in that sorted order, optionally symmetrizes,
/// and attaches slot boundaries.
pub fn ingest(spec: &DatasetSpec) -> Result<Dataset> {
    spec.validate()?;
    let mut raw = Vec::new();
    match &spec.slotting {
        Slotting::PerFile { files } => {
            for (slot, f) in files.iter().enumerate() {
                read_rows(spec, f, slot, &mut raw)?;
            }
        }
        _ => read_rows(spec, &spec.path, 0, &mut raw)?,
    }
    if raw.is_empty() {
        return Err(Error::input(format!(
            "{}: no edges found",
            spec.path.display()
        )));
    }
    raw.sort_by(|a, b| a.time.total_cmp(&b.time));

    let mut vertices = VertexMap::default();
    let mut edges = Vec::with_capacity(raw.len());
    for e in &raw {
        let s = vertices.intern(&e.sender);
        let r = vertices.intern(&e.recipient);
        edges.push(TimedEdge::new(s, r, e.time)?);
        if spec.symmetrize && s != r {
            edges.push(TimedEdge::new(r, s, e.time)?);
        }
    }
    let scale = spec.timestamp_unit.seconds();
    let first = edges[0].time;
    let last = edges[edges.len() - 1].time;
    let seq = EdgeSequence::new(edges)?;
    let seq = match &spec.slotting {
        Slotting::None => seq,
        Slotting::FixedWidth { width, origin } => {
            let origin = origin.map_or(first, |o| o * scale);
            if origin > first {
                return Err(Error::config(format!(
                    "slot origin {origin} is after the first edge at {first}"
                )));
            }
            seq.with_fixed_slots(origin, width * scale)?
        }
        Slotting::Explicit { boundaries } => {
            seq.with_slot_boundaries(boundaries.iter().map(|b| b * scale).collect())?
        }
        Slotting::PerFile { files } => {
            let mut bounds = vec![f64::INFINITY; files.len()];
            let mut ends = vec![f64::NEG_INFINITY; files.len()];
            for e in &raw {
                bounds[e.slot] = bounds[e.slot].min(e.time);
                ends[e.slot] = ends[e.slot].max(e.time);
            }
            for w in 0..files.len().saturating_sub(1) {
                if ends[w] >= bounds[w + 1] || !bounds[w + 1].is_finite() {
                    return Err(Error::input(format!(
                        "{} must be non-empty and end before {} starts",
                        files[w].display(),
                        files[w + 1].display()
                    )));
                }
            }
            if !bounds[files.len() - 1].is_finite() {
                return Err(Error::input(format!(
                    "{} has no edges",
                    files[files.len() - 1].display()
                )));
            }
            let mut b = bounds;
            b.push(if last > b[b.len() - 1] {
                last
            } else {
                b[b.len() - 1] + 1.0
            });
            seq.with_slot_boundaries(b)?
        }
    };
    Ok(Dataset {
        edges: seq,
        vertices,
    })
}

/// Writes `sender,recipient,time` rows with raw labels and times in seconds.
/// Re-ingesting with [`DatasetSpec::plain`] and the same slotting restores the
/// sequence exactly.
pub fn export_edges(path: &Path, edges: &EdgeSequence, vertices: &VertexMap) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    let io = |e| Error::io(path, e);
    writeln!(w, "sender,recipient,time").map_err(io)?;
    for e in edges.edges() {
        let label = |v| {
            vertices
                .label(v)
                .ok_or_else(|| Error::input(format!("vertex {v} has no label")))
        };
        let (s, r) = (label(e.sender)?, label(e.recipient)?);
        if [s, r].iter().any(|l| l.contains([',', '\n', '\r'])) {
            return Err(Error::input(
                "vertex labels must not contain commas or newlines",
            ));
        }
        writeln!(w, "{s},{r},{}", e.time).map_err(io)?;
    }
    w.flush().map_err(io)
}

/// The slotting that reproduces `edges`' boundaries exactly.
pub fn slotting_of(edges: &EdgeSequence) -> Slotting {
    match edges.slot_boundaries() {
        Some(b) => Slotting::Explicit {
            boundaries: b.to_vec(),
        },
        None => Slotting::None,
    }
}
