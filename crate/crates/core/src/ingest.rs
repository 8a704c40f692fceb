//! Edge-list ingestion, weight rescaling, seeded sampling and splits.
//!
//! All randomness comes from ChaCha8 (`rand_chacha`) seeded with
//! `seed_from_u64(seed)`, using a separate stream per purpose: stream 0 draws
//! the edge sample, streams 1..=3 draw the origin, terminal and edge splits.
//! Selection is a partial Fisher-Yates shuffle driven by `gen_range`.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::graph::{DirectedGraph, Variant, WeightRange};

/// Identifier of the sampling procedure, echoed into snapshots and reports.
pub const SAMPLER: &str = "chacha8-partial-fisher-yates/v1";

pub const SNAPSHOT_FORMAT: &str = "wdn-snapshot/1";

#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Delimiter {
    Comma,
    Whitespace,
    /// Comma if the first data line has one, whitespace otherwise.
    #[default]
    Auto,
}

impl FromStr for Delimiter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "comma" | "," => Ok(Delimiter::Comma),
            "whitespace" | "space" | "tab" => Ok(Delimiter::Whitespace),
            "auto" => Ok(Delimiter::Auto),
            _ => Err(Error::InvalidParameter(format!("unknown delimiter `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub path: PathBuf,
    pub weight_range: WeightRange,
    pub has_timestamp: bool,
    pub delimiter: Delimiter,
}

impl DatasetSpec {
    /// Bitcoin-OTC layout: `source,target,rating,time` with ratings in [-10, 10].
    pub fn bitcoin_otc(path: impl Into<PathBuf>) -> Self {
        DatasetSpec {
            path: path.into(),
            weight_range: WeightRange { lo: -10.0, hi: 10.0 },
            has_timestamp: true,
            delimiter: Delimiter::Comma,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EdgeRecord {
    pub origin: String,
    pub terminal: String,
    pub weight: f64,
    pub timestamp: Option<f64>,
    /// 1-based source line.
    pub line: usize,
}

pub fn parse_edge_list(spec: &DatasetSpec) -> Result<Vec<EdgeRecord>> {
    let text = fs::read_to_string(&spec.path).map_err(|source| Error::Io {
        path: spec.path.clone(),
        source,
    })?;
    parse_edge_text(&text, spec)
}

pub fn parse_edge_text(text: &str, spec: &DatasetSpec) -> Result<Vec<EdgeRecord>> {
    let err = |line: usize, message: String| Error::Parse {
        path: spec.path.clone(),
        line,
        message,
    };
    let expected = if spec.has_timestamp { 4 } else { 3 };
    let mut delimiter = spec.delimiter;
    let mut records = Vec::new();
    let mut seen_data = false;

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with('%') {
            continue;
        }
        if delimiter == Delimiter::Auto {
            delimiter = if line.contains(',') {
                Delimiter::Comma
            } else {
                Delimiter::Whitespace
            };
        }
        let fields: Vec<&str> = match delimiter {
            Delimiter::Comma => line.split(',').map(str::trim).collect(),
            _ => line.split_whitespace().collect(),
        };
        let first = !seen_data;
        seen_data = true;

        let weight_field = fields.get(2).copied().unwrap_or("");
        let weight = match weight_field.parse::<f64>() {
            Ok(w) => w,
            Err(_) if first && fields.len() == expected => continue, // header
            Err(_) if fields.len() != expected => {
                return Err(err(
                    line_no,
                    format!("expected {expected} fields, found {}", fields.len()),
                ))
            }
            Err(_) => return Err(err(line_no, format!("weight `{weight_field}` is not a number"))),
        };
        if fields.len() != expected {
            return Err(err(
                line_no,
                format!("expected {expected} fields, found {}", fields.len()),
            ));
        }
        if fields[0].is_empty() || fields[1].is_empty() {
            return Err(err(line_no, "empty vertex token".into()));
        }
        if !weight.is_finite() || !spec.weight_range.contains(weight) {
            return Err(err(
                line_no,
                format!(
                    "weight {weight} outside [{}, {}]",
                    spec.weight_range.lo, spec.weight_range.hi
                ),
            ));
        }
        let timestamp = if spec.has_timestamp {
            Some(
                fields[3]
                    .parse::<f64>()
                    .map_err(|_| err(line_no, format!("timestamp `{}` is not a number", fields[3])))?,
            )
        } else {
            None
        };
        records.push(EdgeRecord {
            origin: fields[0].to_owned(),
            terminal: fields[1].to_owned(),
            weight,
            timestamp,
            line: line_no,
        });
    }
    if records.is_empty() {
        return Err(err(0, "no edge records".into()));
    }
    Ok(records)
}

/// Affine map from `from` onto `to`; with `to = [-1, 1]` this is
/// `(2w - (a + b)) / (b - a)`.
pub fn rescale(raw: f64, from: WeightRange, to: WeightRange) -> Result<f64> {
    if !from.contains(raw) {
        return Err(Error::WeightOutOfRange {
            value: raw,
            lo: from.lo,
            hi: from.hi,
        });
    }
    let unit = (raw - from.lo) / (from.hi - from.lo);
    Ok(to.clamp(to.lo + unit * (to.hi - to.lo)))
}

pub fn rescale_to_signed_unit(raw: f64, from: WeightRange) -> Result<f64> {
    if !from.contains(raw) {
        return Err(Error::WeightOutOfRange {
            value: raw,
            lo: from.lo,
            hi: from.hi,
        });
    }
    Ok(((2.0 * raw - (from.lo + from.hi)) / (from.hi - from.lo)).clamp(-1.0, 1.0))
}

/// Keeps one record per `(origin, terminal)` pair: the latest one when
/// timestamps exist, otherwise one carrying the mean weight. Output keeps the
/// order of first appearance. Returns the number of records dropped.
pub fn collapse_multi_edges(records: Vec<EdgeRecord>) -> (Vec<EdgeRecord>, usize) {
    let total = records.len();
    let mut slot: HashMap<(String, String), usize> = HashMap::new();
    let mut out: Vec<EdgeRecord> = Vec::new();
    let mut counts: Vec<usize> = Vec::new();
    let mut sums: Vec<f64> = Vec::new();

    for r in records {
        let key = (r.origin.clone(), r.terminal.clone());
        match slot.get(&key) {
            None => {
                slot.insert(key, out.len());
                counts.push(1);
                sums.push(r.weight);
                out.push(r);
            }
            Some(&i) => {
                counts[i] += 1;
                sums[i] += r.weight;
                let keep = &mut out[i];
                if let (Some(old), Some(new)) = (keep.timestamp, r.timestamp) {
                    if new >= old {
                        keep.weight = r.weight;
                        keep.timestamp = r.timestamp;
                        keep.line = r.line;
                    }
                }
            }
        }
    }
    for (i, r) in out.iter_mut().enumerate() {
        if r.timestamp.is_none() && counts[i] > 1 {
            r.weight = sums[i] / counts[i] as f64;
        }
    }
    let dropped = total - out.len();
    (out, dropped)
}

pub(crate) fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Draws `k` distinct indices from `0..n`, in draw order.
pub fn sample_indices(n: usize, k: usize, rng: &mut ChaCha8Rng) -> Result<Vec<usize>> {
    if k > n {
        return Err(Error::SampleTooLarge {
            requested: k,
            available: n,
        });
    }
    let mut pool: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = rng.gen_range(i..n);
        pool.swap(i, j);
    }
    pool.truncate(k);
    Ok(pool)
}

/// Size of the training part of a split.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainSize {
    Count(usize),
    /// Fraction of the domain, rounded down.
    Fraction(f64),
}

impl TrainSize {
    pub fn resolve(self, n: usize) -> Result<usize> {
        let size = match self {
            TrainSize::Count(c) => c,
            TrainSize::Fraction(f) => {
                if !(f > 0.0 && f < 1.0) {
                    return Err(Error::InvalidParameter(format!(
                        "train fraction must be in (0, 1), got {f}"
                    )));
                }
                (f * n as f64).floor() as usize
            }
        };
        if size == 0 {
            return Err(Error::InvalidParameter("training split would be empty".into()));
        }
        if size >= n {
            return Err(Error::SampleTooLarge {
                requested: size + 1,
                available: n,
            });
        }
        Ok(size)
    }
}

impl fmt::Display for TrainSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TrainSize::Count(c) => write!(f, "{c}"),
            TrainSize::Fraction(x) => write!(f, "{:.0}%", x * 100.0),
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub seed: u64,
    /// Edges drawn from the raw data before any split.
    pub sample_size: usize,
    pub edge_train: TrainSize,
    pub vertex_train: TrainSize,
}

impl Default for SplitPlan {
    fn default() -> Self {
        SplitPlan {
            seed: 0,
            sample_size: 5000,
            edge_train: TrainSize::Count(3500),
            vertex_train: TrainSize::Fraction(0.7),
        }
    }
}

impl SplitPlan {
    pub fn train_size(&self, task: Variant) -> TrainSize {
        match task {
            Variant::Edge => self.edge_train,
            _ => self.vertex_train,
        }
    }
}

/// Disjoint train/test element indices, each ascending.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

fn split_stream(task: Variant) -> u64 {
    match task {
        Variant::Origin => 1,
        Variant::Terminal => 2,
        Variant::Edge => 3,
    }
}

/// Splits the `domain` elements of `task` into training and test sets.
pub fn make_split(domain: usize, plan: &SplitPlan, task: Variant) -> Result<Split> {
    let n_train = plan.train_size(task).resolve(domain)?;
    let mut rng = rng_for(plan.seed, split_stream(task));
    let order = sample_indices(domain, domain, &mut rng)?;
    let mut train = order[..n_train].to_vec();
    let mut test = order[n_train..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    Ok(Split { train, test })
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnapshotEdge {
    pub origin: String,
    pub terminal: String,
    /// Weight rescaled to [-1, 1].
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub source: String,
    pub source_sha256: String,
    pub weight_range: WeightRange,
    pub has_timestamp: bool,
    pub raw_records: usize,
    pub collapsed_duplicates: usize,
    pub sample_size: Option<usize>,
    pub seed: u64,
    pub sampler: String,
}

/// Self-contained dataset: vertices, edges with scaled weights, provenance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub format: String,
    pub origins: Vec<String>,
    pub terminals: Vec<String>,
    pub edges: Vec<SnapshotEdge>,
    pub provenance: Provenance,
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub origins: usize,
    pub terminals: usize,
    pub edges: usize,
    pub positive_fraction: f64,
}

/// Reads, collapses, samples and rescales a dataset.
pub fn ingest(spec: &DatasetSpec, sample_size: Option<usize>, seed: u64) -> Result<Snapshot> {
    let bytes = fs::read(&spec.path).map_err(|source| Error::Io {
        path: spec.path.clone(),
        source,
    })?;
    let text = String::from_utf8(bytes.clone()).map_err(|_| Error::Parse {
        path: spec.path.clone(),
        line: 0,
        message: "file is not valid UTF-8".into(),
    })?;
    let records = parse_edge_text(&text, spec)?;
    Snapshot::from_records(records, spec, sample_size, seed, sha256_hex(&bytes))
}

impl Snapshot {
    pub fn from_records(
        records: Vec<EdgeRecord>,
        spec: &DatasetSpec,
        sample_size: Option<usize>,
        seed: u64,
        source_sha256: String,
    ) -> Result<Self> {
        let raw_records = records.len();
        let (unique, collapsed_duplicates) = collapse_multi_edges(records);
        let chosen: Vec<EdgeRecord> = match sample_size {
            None => unique,
            Some(k) => {
                let mut idx = sample_indices(unique.len(), k, &mut rng_for(seed, 0))?;
                idx.sort_unstable();
                idx.into_iter().map(|i| unique[i].clone()).collect()
            }
        };
        let edges = chosen
            .iter()
            .map(|r| {
                Ok(SnapshotEdge {
                    origin: r.origin.clone(),
                    terminal: r.terminal.clone(),
                    weight: rescale_to_signed_unit(r.weight, spec.weight_range)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let g = DirectedGraph::from_edges(edges.iter().map(|e| (&e.origin, &e.terminal)))?;
        Ok(Snapshot {
            format: SNAPSHOT_FORMAT.into(),
            origins: g.origin_tokens().to_vec(),
            terminals: g.terminal_tokens().to_vec(),
            edges,
            provenance: Provenance {
                // file name only, so the snapshot does not depend on where the input lives
                source: spec
                    .path
                    .file_name()
                    .map_or_else(|| spec.path.display().to_string(), |n| n.to_string_lossy().into_owned()),
                source_sha256,
                weight_range: spec.weight_range,
                has_timestamp: spec.has_timestamp,
                raw_records,
                collapsed_duplicates,
                sample_size,
                seed,
                sampler: SAMPLER.into(),
            },
        })
    }

    /// Builds the graph and the edge weights indexed by edge id.
    pub fn graph(&self) -> Result<(DirectedGraph, Vec<f64>)> {
        if self.format != SNAPSHOT_FORMAT {
            return Err(Error::Snapshot(format!("unsupported format `{}`", self.format)));
        }
        let g = DirectedGraph::from_edges(self.edges.iter().map(|e| (&e.origin, &e.terminal)))?;
        if g.edge_count() != self.edges.len() {
            return Err(Error::Snapshot("duplicate edges".into()));
        }
        if g.origin_tokens() != self.origins.as_slice() || g.terminal_tokens() != self.terminals.as_slice() {
            return Err(Error::Snapshot("vertex lists do not match the edges".into()));
        }
        let mut weights = Vec::with_capacity(self.edges.len());
        for e in &self.edges {
            if !e.weight.is_finite() {
                return Err(Error::NonFiniteWeight { value: e.weight });
            }
            if !WeightRange::SIGNED_UNIT.contains(e.weight) {
                return Err(Error::WeightOutOfRange {
                    value: e.weight,
                    lo: -1.0,
                    hi: 1.0,
                });
            }
            weights.push(e.weight);
        }
        Ok((g, weights))
    }

    pub fn summary(&self) -> DatasetSummary {
        let positive = self.edges.iter().filter(|e| e.weight > 0.0).count();
        DatasetSummary {
            origins: self.origins.len(),
            terminals: self.terminals.len(),
            edges: self.edges.len(),
            positive_fraction: if self.edges.is_empty() {
                0.0
            } else {
                positive as f64 / self.edges.len() as f64
            },
        }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Snapshot(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Snapshot(e.to_string()))
    }

    /// Loads a snapshot and returns it with the SHA-256 of the file bytes.
    pub fn load(path: &Path) -> Result<(Self, String)> {
        let bytes = fs::read(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let text = std::str::from_utf8(&bytes).map_err(|_| Error::Snapshot("not UTF-8".into()))?;
        Ok((Self::from_json(text)?, sha256_hex(&bytes)))
    }
}
