//! Newline-delimited split files (`train.sgs`, `val.sgs`, `test.sgs`).
//!
//! Each line is one JSON object with the fields `seed`, `kind`,
//! `num_nodes`, `edges` (sorted `[u, v]` pairs, `u < v`), `x` and `y`.
//! Floats are written with 17 significant digits so files round-trip
//! exactly.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Deserialize;

use super::{generate_sample, FilterKind, SgsSample};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::matrix::Matrix;
use crate::rng::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn file_name(self) -> &'static str {
        match self {
            Split::Train => "train.sgs",
            Split::Val => "val.sgs",
            Split::Test => "test.sgs",
        }
    }

    fn index(self) -> u64 {
        match self {
            Split::Train => 0,
            Split::Val => 1,
            Split::Test => 2,
        }
    }

    /// Seed of the `index`-th sample of this split.
    pub fn sample_seed(self, base: u64, index: usize) -> u64 {
        derive_seed(base, &[self.index(), index as u64])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DatasetCounts {
    pub train: usize,
    pub val: usize,
    pub test: usize,
}

/// Split sizes of the full benchmark.
pub const DEFAULT_COUNTS: DatasetCounts = DatasetCounts {
    train: 1000,
    val: 1000,
    test: 2000,
};

impl DatasetCounts {
    pub fn get(&self, split: Split) -> usize {
        match split {
            Split::Train => self.train,
            Split::Val => self.val,
            Split::Test => self.test,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub train: Vec<SgsSample>,
    pub val: Vec<SgsSample>,
    pub test: Vec<SgsSample>,
}

impl Dataset {
    /// Generates all splits in memory.
    pub fn generate(kind: FilterKind, counts: DatasetCounts, seed: u64) -> Result<Self> {
        let gen = |split: Split| generate_split(kind, split, counts.get(split), seed);
        Ok(Self {
            train: gen(Split::Train)?,
            val: gen(Split::Val)?,
            test: gen(Split::Test)?,
        })
    }

    pub fn load(dir: &Path) -> Result<Self> {
        Ok(Self {
            train: read_split(&dir.join(Split::Train.file_name()))?,
            val: read_split(&dir.join(Split::Val.file_name()))?,
            test: read_split(&dir.join(Split::Test.file_name()))?,
        })
    }

    pub fn split(&self, split: Split) -> &[SgsSample] {
        match split {
            Split::Train => &self.train,
            Split::Val => &self.val,
            Split::Test => &self.test,
        }
    }
}

fn generate_split(kind: FilterKind, split: Split, count: usize, seed: u64) -> Result<Vec<SgsSample>> {
    (0..count)
        .into_par_iter()
        .map(|i| generate_sample(kind, split.sample_seed(seed, i)))
        .collect()
}

/// Writes the three split files into `out_dir` and returns their paths.
pub fn generate_dataset(
    kind: FilterKind,
    counts: DatasetCounts,
    seed: u64,
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    if counts.train == 0 || counts.val == 0 || counts.test == 0 {
        return Err(Error::Parameter("every split needs at least one sample".into()));
    }
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut paths = Vec::new();
    for split in Split::ALL {
        let samples = generate_split(kind, split, counts.get(split), seed)?;
        let path = out_dir.join(split.file_name());
        write_split(&path, &samples)?;
        paths.push(path);
    }
    Ok(paths)
}

pub fn write_split(path: &Path, samples: &[SgsSample]) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for s in samples {
        w.write_all(encode_record(s).as_bytes())
            .and_then(|_| w.write_all(b"\n"))
            .map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_split(path: &Path) -> Result<Vec<SgsSample>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let sample = decode_record(&line)
            .map_err(|e| Error::Format(format!("{}:{}: {e}", path.display(), lineno + 1)))?;
        out.push(sample);
    }
    Ok(out)
}

/// 17 significant digits, valid as a JSON number.
pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub(crate) fn write_f64_array(out: &mut String, values: &[f64]) {
    out.push('[');
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(&fmt_f64(*v));
    }
    out.push(']');
}

pub(crate) fn write_edges(out: &mut String, edges: &[(usize, usize)]) {
    out.push('[');
    for (i, (u, v)) in edges.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        let _ = write!(out, "[{u},{v}]");
    }
    out.push(']');
}

fn encode_record(s: &SgsSample) -> String {
    let mut out = String::new();
    let _ = write!(
        out,
        "{{\"seed\":{},\"kind\":\"{}\",\"num_nodes\":{},\"edges\":",
        s.seed,
        s.kind.name(),
        s.graph.num_nodes()
    );
    write_edges(&mut out, s.graph.edges());
    out.push_str(",\"x\":");
    write_f64_array(&mut out, s.x.as_slice());
    out.push_str(",\"y\":");
    write_f64_array(&mut out, s.y.as_slice());
    out.push('}');
    out
}

#[derive(Deserialize)]
struct RawRecord {
    seed: u64,
    kind: String,
    num_nodes: usize,
    edges: Vec<(usize, usize)>,
    x: Vec<f64>,
    y: Vec<f64>,
}

fn decode_record(line: &str) -> Result<SgsSample> {
    let raw: RawRecord = serde_json::from_str(line).map_err(|e| Error::Format(e.to_string()))?;
    let graph = Graph::new(raw.num_nodes, raw.edges)?;
    let n = raw.num_nodes;
    if raw.x.len() != n || raw.y.len() != n {
        return Err(Error::Format(format!(
            "signal lengths {}/{} do not match {n} nodes",
            raw.x.len(),
            raw.y.len()
        )));
    }
    Ok(SgsSample {
        seed: raw.seed,
        kind: raw.kind.parse()?,
        graph,
        x: Matrix::column(&raw.x),
        y: Matrix::column(&raw.y),
    })
}

/// Reads bare graphs from any newline-delimited file whose records carry
/// `num_nodes` and `edges` (split files included).
pub fn read_graphs(path: &Path) -> Result<Vec<Graph>> {
    #[derive(Deserialize)]
    struct RawGraph {
        num_nodes: usize,
        edges: Vec<(usize, usize)>,
    }
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let raw: RawGraph = serde_json::from_str(l)
                .map_err(|e| Error::Format(format!("{}:{}: {e}", path.display(), i + 1)))?;
            Graph::new(raw.num_nodes, raw.edges)
        })
        .collect()
}

/// One `{"num_nodes":…,"edges":…}` line per graph.
pub fn write_graphs(path: &Path, graphs: &[Graph]) -> Result<()> {
    let mut out = String::new();
    for g in graphs {
        let _ = write!(out, "{{\"num_nodes\":{},\"edges\":", g.num_nodes());
        write_edges(&mut out, g.edges());
        out.push_str("}\n");
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}
