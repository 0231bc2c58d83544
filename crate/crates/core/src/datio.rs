//! File formats: hierarchies, score matrices, labels, rankings and reports.
//!
//! * Hierarchy: JSON `{"nodes": [{"name", "parent"}], "leaf_order"?, "coarse_order"?}`.
//! * Scores, text: optional `#kind=logits|probabilities` line, a CSV header of
//!   class names, then one row per sample.
//! * Scores, binary: `HIES`, version byte `1`, kind byte (0 logits,
//!   1 probabilities), little-endian `u32` rows and columns, then row-major
//!   little-endian `f64` values. Class names live in a `<file>.names.json`
//!   sidecar.
//! * Labels and predictions: one leaf name per line.
//! * Reports: JSON.
//!
//! Every writer goes through a temporary file and a rename.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::ensemble::Level;
use crate::metrics::{EvalReport, LabelVector, MetricError};
use crate::scorespace::{Ranking, ScoreError, ScoreKind, ScoreMatrix};
use crate::taxonomy::{build_taxonomy_with_orders, Taxonomy, TaxonomyError};

pub const BINARY_MAGIC: &[u8; 4] = b"HIES";
pub const BINARY_VERSION: u8 = 1;
const BINARY_HEADER_LEN: usize = 14;
const KIND_PREFIX: &str = "#kind=";

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("ParseError: {context} at line {line}, column {column}: {message}")]
    Parse {
        context: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{context}: {source}")]
    Taxonomy {
        context: String,
        #[source]
        source: TaxonomyError,
    },
    #[error("DuplicateNode: {0:?} declared twice")]
    DuplicateNode(String),
    #[error("UnknownParent: {node:?} names undeclared parent {parent:?}")]
    UnknownParent { node: String, parent: String },
    #[error("ColumnMismatch: column {position} is {found:?}, expected {expected:?}")]
    ColumnMismatch {
        position: usize,
        expected: String,
        found: String,
    },
    #[error("NonFiniteValue: row {row}, column {col}")]
    NonFiniteValue { row: usize, col: usize },
    #[error("KindConflict: declared {declared:?} but the file holds {file:?}")]
    KindConflict {
        declared: ScoreKind,
        file: ScoreKind,
    },
    #[error("UnknownClass: {0:?}")]
    UnknownClass(String),
    #[error("MissingClass: {0:?}")]
    MissingClass(String),
    #[error("DuplicateClass: {0:?}")]
    DuplicateClass(String),
    #[error("UnknownLeaf: {name:?} on line {line} is not a leaf")]
    UnknownLeaf { name: String, line: usize },
    #[error("EmptyInput: {0} is empty")]
    EmptyInput(String),
    #[error(transparent)]
    Score(#[from] ScoreError),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DataError + '_ {
    move |source| DataError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn parse_err(context: &Path, line: usize, column: usize, message: impl Into<String>) -> DataError {
    DataError::Parse {
        context: context.display().to_string(),
        line,
        column,
        message: message.into(),
    }
}

/// Writes `bytes` to a temporary file beside `path`, then renames it over.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), DataError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err(path))?;
    tmp.write_all(bytes).map_err(io_err(path))?;
    tmp.as_file().sync_all().map_err(io_err(path))?;
    tmp.persist(path).map_err(|e| DataError::Io {
        path: path.to_path_buf(),
        source: e.error,
    })?;
    Ok(())
}

/// Lower-case hex SHA-256 of a file's bytes.
pub fn file_digest(path: &Path) -> Result<String, DataError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

// ---------------------------------------------------------------------------
// Hierarchy

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeEntry {
    pub name: String,
    pub parent: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HierarchyFile {
    pub nodes: Vec<NodeEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub leaf_order: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coarse_order: Option<Vec<String>>,
}

impl HierarchyFile {
    /// Serializable form with explicit orders.
    pub fn from_taxonomy(t: &Taxonomy) -> Self {
        let nodes = t
            .parent_map()
            .into_iter()
            .map(|(name, parent)| NodeEntry { name, parent })
            .collect();
        Self {
            nodes,
            leaf_order: Some(t.leaf_names()),
            coarse_order: Some(t.coarse_names()),
        }
    }

    pub fn to_taxonomy(&self) -> Result<Taxonomy, DataError> {
        self.to_taxonomy_in("hierarchy")
    }

    fn to_taxonomy_in(&self, context: &str) -> Result<Taxonomy, DataError> {
        let taxo = |source| DataError::Taxonomy {
            context: context.to_string(),
            source,
        };
        let mut declared = HashSet::new();
        for n in &self.nodes {
            if !declared.insert(n.name.as_str()) {
                return Err(DataError::DuplicateNode(n.name.clone()));
            }
        }
        let roots: Vec<String> = self
            .nodes
            .iter()
            .filter(|n| n.parent.is_none())
            .map(|n| n.name.clone())
            .collect();
        if roots.len() > 1 {
            return Err(taxo(TaxonomyError::MultipleRoots { roots }));
        }
        let mut edges = Vec::with_capacity(self.nodes.len());
        for n in &self.nodes {
            if let Some(p) = &n.parent {
                if !declared.contains(p.as_str()) {
                    return Err(DataError::UnknownParent {
                        node: n.name.clone(),
                        parent: p.clone(),
                    });
                }
                edges.push((n.name.as_str(), p.as_str()));
            }
        }
        build_taxonomy_with_orders(
            &edges,
            self.leaf_order.as_deref(),
            self.coarse_order.as_deref(),
        )
        .map_err(taxo)
    }
}

pub fn parse_hierarchy(text: &str, context: &Path) -> Result<Taxonomy, DataError> {
    let file: HierarchyFile = serde_json::from_str(text)
        .map_err(|e| parse_err(context, e.line(), e.column(), e.to_string()))?;
    file.to_taxonomy_in(&context.display().to_string())
}

pub fn load_hierarchy(path: &Path) -> Result<Taxonomy, DataError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    parse_hierarchy(&text, path)
}

pub fn write_hierarchy(t: &Taxonomy, path: &Path) -> Result<(), DataError> {
    let mut text = serde_json::to_string_pretty(&HierarchyFile::from_taxonomy(t))
        .expect("hierarchy serialization cannot fail");
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

// ---------------------------------------------------------------------------
// Scores

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScoreFormat {
    Text,
    Binary,
}

impl ScoreFormat {
    /// `.hies` and `.bin` select binary; anything else is text.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("hies") | Some("bin") => ScoreFormat::Binary,
            _ => ScoreFormat::Text,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct NamesSidecar {
    class_names: Vec<String>,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".names.json");
    PathBuf::from(s)
}

fn resolve_kind(
    declared: Option<ScoreKind>,
    file: Option<ScoreKind>,
) -> Result<ScoreKind, DataError> {
    match (declared, file) {
        (Some(d), Some(f)) if d != f => Err(DataError::KindConflict {
            declared: d,
            file: f,
        }),
        (Some(k), _) | (None, Some(k)) => Ok(k),
        (None, None) => Ok(ScoreKind::Logits),
    }
}

fn parse_kind(s: &str) -> Option<ScoreKind> {
    match s.trim() {
        "logits" => Some(ScoreKind::Logits),
        "probabilities" | "probs" => Some(ScoreKind::Probabilities),
        _ => None,
    }
}

/// Loads a score file, detecting the binary format by its magic bytes.
///
/// The kind comes from `declared`, the file, or defaults to logits when
/// neither says.
pub fn load_scores(path: &Path, declared: Option<ScoreKind>) -> Result<ScoreMatrix, DataError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    if bytes.starts_with(BINARY_MAGIC) {
        let names_path = sidecar_path(path);
        let names_text = fs::read_to_string(&names_path).map_err(io_err(&names_path))?;
        let names: NamesSidecar = serde_json::from_str(&names_text)
            .map_err(|e| parse_err(&names_path, e.line(), e.column(), e.to_string()))?;
        decode_binary(&bytes, names.class_names, declared, path)
    } else {
        let text = String::from_utf8(bytes)
            .map_err(|e| parse_err(path, 0, 0, format!("not UTF-8 text: {e}")))?;
        parse_scores_text(&text, declared, path)
    }
}

pub fn parse_scores_text(
    text: &str,
    declared: Option<ScoreKind>,
    context: &Path,
) -> Result<ScoreMatrix, DataError> {
    let (file_kind, body, line_offset) = match text.strip_prefix(KIND_PREFIX) {
        Some(rest) => {
            let (first, body) = rest.split_once('\n').unwrap_or((rest, ""));
            let kind = parse_kind(first).ok_or_else(|| {
                parse_err(
                    context,
                    1,
                    KIND_PREFIX.len() + 1,
                    format!("unknown kind {first:?}"),
                )
            })?;
            (Some(kind), body, 1)
        }
        None => (None, text, 0),
    };
    let kind = resolve_kind(declared, file_kind)?;

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(body.as_bytes());
    let names: Vec<String> = reader
        .headers()
        .map_err(|e| csv_err(context, line_offset, e))?
        .iter()
        .map(str::to_string)
        .collect();
    if names.is_empty() || names.iter().all(String::is_empty) {
        return Err(DataError::EmptyInput(format!(
            "{} (no header)",
            context.display()
        )));
    }
    let n_classes = names.len();
    let mut values = Vec::new();
    let mut n_samples = 0;
    for record in reader.records() {
        let record = record.map_err(|e| csv_err(context, line_offset, e))?;
        let line = record.position().map_or(0, |p| p.line() as usize) + line_offset;
        if record.len() != n_classes {
            return Err(parse_err(
                context,
                line,
                0,
                format!(
                    "{} fields but the header names {n_classes} classes",
                    record.len()
                ),
            ));
        }
        for (col, field) in record.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| {
                parse_err(context, line, col + 1, format!("not a number: {field:?}"))
            })?;
            if !v.is_finite() {
                return Err(DataError::NonFiniteValue {
                    row: n_samples,
                    col,
                });
            }
            values.push(v);
        }
        n_samples += 1;
    }
    if n_samples == 0 {
        return Err(DataError::EmptyInput(format!(
            "{} (no rows)",
            context.display()
        )));
    }
    Ok(ScoreMatrix::new(n_samples, n_classes, values, kind, names)?)
}

fn csv_err(context: &Path, line_offset: usize, e: csv::Error) -> DataError {
    let line = e.position().map_or(0, |p| p.line() as usize) + line_offset;
    parse_err(context, line, 0, e.to_string())
}

/// Text form. Values use Rust's shortest round-trip representation, so
/// parsing the output restores every value exactly.
pub fn format_scores_text(m: &ScoreMatrix, with_kind: bool) -> String {
    let mut out = String::new();
    if with_kind {
        out.push_str(KIND_PREFIX);
        out.push_str(m.kind().as_str());
        out.push('\n');
    }
    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    w.write_record(m.class_names()).expect("in-memory write");
    let header = String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 names");
    out.push_str(&header);
    for row in m.rows() {
        let mut first = true;
        for v in row {
            if !first {
                out.push(',');
            }
            first = false;
            out.push_str(&format!("{v:?}"));
        }
        out.push('\n');
    }
    out
}

pub fn encode_binary(m: &ScoreMatrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(BINARY_HEADER_LEN + 8 * m.values().len());
    out.extend_from_slice(BINARY_MAGIC);
    out.push(BINARY_VERSION);
    out.push(match m.kind() {
        ScoreKind::Logits => 0,
        ScoreKind::Probabilities => 1,
    });
    out.extend_from_slice(&(m.n_samples() as u32).to_le_bytes());
    out.extend_from_slice(&(m.n_classes() as u32).to_le_bytes());
    for v in m.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_binary(
    bytes: &[u8],
    class_names: Vec<String>,
    declared: Option<ScoreKind>,
    context: &Path,
) -> Result<ScoreMatrix, DataError> {
    let bad = |message: String| parse_err(context, 0, 0, message);
    if bytes.len() < BINARY_HEADER_LEN || &bytes[..4] != BINARY_MAGIC {
        return Err(bad("missing HIES header".into()));
    }
    if bytes[4] != BINARY_VERSION {
        return Err(bad(format!("unsupported format version {}", bytes[4])));
    }
    let file_kind = match bytes[5] {
        0 => ScoreKind::Logits,
        1 => ScoreKind::Probabilities,
        k => return Err(bad(format!("unknown kind byte {k}"))),
    };
    let kind = resolve_kind(declared, Some(file_kind))?;
    let rows = u32::from_le_bytes(bytes[6..10].try_into().unwrap()) as usize;
    let cols = u32::from_le_bytes(bytes[10..14].try_into().unwrap()) as usize;
    let payload = &bytes[BINARY_HEADER_LEN..];
    if payload.len() != rows * cols * 8 {
        return Err(bad(format!(
            "{rows}x{cols} header needs {} payload bytes, found {}",
            rows * cols * 8,
            payload.len()
        )));
    }
    if class_names.len() != cols {
        return Err(DataError::Score(ScoreError::ClassNameCount {
            n_classes: cols,
            names: class_names.len(),
        }));
    }
    let values: Vec<f64> = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
        return Err(DataError::NonFiniteValue {
            row: pos / cols,
            col: pos % cols,
        });
    }
    Ok(ScoreMatrix::new(rows, cols, values, kind, class_names)?)
}

/// Writes text or binary by extension (see [`ScoreFormat::from_path`]).
pub fn write_scores(m: &ScoreMatrix, path: &Path) -> Result<(), DataError> {
    match ScoreFormat::from_path(path) {
        ScoreFormat::Text => write_atomic(path, format_scores_text(m, true).as_bytes()),
        ScoreFormat::Binary => {
            let names = NamesSidecar {
                class_names: m.class_names().to_vec(),
            };
            let mut sidecar = serde_json::to_string_pretty(&names).expect("names serialize");
            sidecar.push('\n');
            write_atomic(&sidecar_path(path), sidecar.as_bytes())?;
            write_atomic(path, &encode_binary(m))
        }
    }
}

/// Fails at the first column whose name differs from `expected`.
pub fn expect_columns(m: &ScoreMatrix, expected: &[String]) -> Result<(), DataError> {
    let found = m.class_names();
    for i in 0..found.len().max(expected.len()) {
        let (e, f) = (expected.get(i), found.get(i));
        if e != f {
            return Err(DataError::ColumnMismatch {
                position: i,
                expected: e.cloned().unwrap_or_else(|| "<none>".into()),
                found: f.cloned().unwrap_or_else(|| "<none>".into()),
            });
        }
    }
    Ok(())
}

/// Canonical column order of a hierarchy level.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlignLevel {
    Leaf,
    Coarse,
    Depth(usize),
}

pub fn level_names(t: &Taxonomy, level: AlignLevel) -> Vec<String> {
    match level {
        AlignLevel::Leaf => t.leaf_names(),
        AlignLevel::Coarse => t.coarse_names(),
        AlignLevel::Depth(d) => t
            .level_order(d)
            .into_iter()
            .map(|n| t.name(n).to_string())
            .collect(),
    }
}

/// Permutes columns into the taxonomy's canonical order for `level`, matching
/// by class name.
pub fn align_columns(
    m: &ScoreMatrix,
    t: &Taxonomy,
    level: AlignLevel,
) -> Result<ScoreMatrix, DataError> {
    let expected = level_names(t, level);
    let mut column_of: HashMap<&str, usize> = HashMap::with_capacity(m.n_classes());
    for (i, name) in m.class_names().iter().enumerate() {
        if column_of.insert(name.as_str(), i).is_some() {
            return Err(DataError::DuplicateClass(name.clone()));
        }
    }
    let wanted: HashSet<&str> = expected.iter().map(String::as_str).collect();
    if let Some(extra) = m
        .class_names()
        .iter()
        .find(|n| !wanted.contains(n.as_str()))
    {
        return Err(DataError::UnknownClass(extra.clone()));
    }
    let perm = expected
        .iter()
        .map(|name| {
            column_of
                .get(name.as_str())
                .copied()
                .ok_or_else(|| DataError::MissingClass(name.clone()))
        })
        .collect::<Result<Vec<usize>, _>>()?;
    let mut values = Vec::with_capacity(m.values().len());
    for row in m.rows() {
        values.extend(perm.iter().map(|&c| row[c]));
    }
    Ok(ScoreMatrix::new(
        m.n_samples(),
        expected.len(),
        values,
        m.kind(),
        expected,
    )?)
}

// ---------------------------------------------------------------------------
// Labels, predictions, rankings

/// Resolves one leaf name per line. A single trailing newline is allowed;
/// blank lines elsewhere are errors.
pub fn parse_labels(text: &str, t: &Taxonomy, context: &Path) -> Result<LabelVector, DataError> {
    let body = text.strip_suffix('\n').unwrap_or(text);
    if body.is_empty() {
        return Err(DataError::EmptyInput(context.display().to_string()));
    }
    let mut labels = Vec::new();
    for (i, line) in body.split('\n').enumerate() {
        let name = line.strip_suffix('\r').unwrap_or(line);
        let leaf = t
            .id_of(name)
            .and_then(|id| t.leaf_index(id))
            .ok_or_else(|| DataError::UnknownLeaf {
                name: name.to_string(),
                line: i + 1,
            })?;
        labels.push(leaf);
    }
    Ok(LabelVector::new(labels, t.leaf_count())?)
}

pub fn load_labels(path: &Path, t: &Taxonomy) -> Result<LabelVector, DataError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    parse_labels(&text, t, path)
}

/// Writes fine-class columns as leaf names, one per line.
pub fn write_labels(indices: &[usize], t: &Taxonomy, path: &Path) -> Result<(), DataError> {
    let names = t.leaf_names();
    let mut text = String::new();
    for &i in indices {
        text.push_str(&names[i]);
        text.push('\n');
    }
    write_atomic(path, text.as_bytes())
}

/// CSV with header `rank_1,...,rank_w`; each row lists leaf names best first.
pub fn format_ranking(r: &Ranking, t: &Taxonomy) -> String {
    let names = t.leaf_names();
    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    let header: Vec<String> = (1..=r.width()).map(|k| format!("rank_{k}")).collect();
    w.write_record(&header).expect("in-memory write");
    for row in r.rows() {
        w.write_record(row.iter().map(|&i| names[i].as_str()))
            .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 names")
}

pub fn write_ranking(r: &Ranking, t: &Taxonomy, path: &Path) -> Result<(), DataError> {
    write_atomic(path, format_ranking(r, t).as_bytes())
}

pub fn load_ranking(path: &Path, t: &Taxonomy) -> Result<Ranking, DataError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let width = reader.headers().map_err(|e| csv_err(path, 0, e))?.len();
    let mut indices = Vec::new();
    let mut rows = 0;
    for record in reader.records() {
        let record = record.map_err(|e| csv_err(path, 0, e))?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != width {
            return Err(parse_err(path, line, 0, "ragged ranking row"));
        }
        for name in record.iter() {
            let leaf = t
                .id_of(name)
                .and_then(|id| t.leaf_index(id))
                .ok_or_else(|| DataError::UnknownLeaf {
                    name: name.to_string(),
                    line,
                })?;
            indices.push(leaf);
        }
        rows += 1;
    }
    if rows == 0 || width == 0 {
        return Err(DataError::EmptyInput(path.display().to_string()));
    }
    Ok(Ranking::new(rows, width, indices)?)
}

// ---------------------------------------------------------------------------
// Reports

/// Settings and inputs behind a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunEcho {
    pub method: String,
    #[serde(default)]
    pub levels: Vec<Level>,
    pub ks: Vec<usize>,
    /// Input role → SHA-256 of the file.
    #[serde(default)]
    pub input_digests: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub config: RunEcho,
    pub report: EvalReport,
}

pub fn write_reports(reports: &[ReportFile], path: &Path) -> Result<(), DataError> {
    let mut text = serde_json::to_string_pretty(reports).expect("report serialization cannot fail");
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub fn write_report(report: &ReportFile, path: &Path) -> Result<(), DataError> {
    write_reports(std::slice::from_ref(report), path)
}

pub fn load_reports(path: &Path) -> Result<Vec<ReportFile>, DataError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| parse_err(path, e.line(), e.column(), e.to_string()))
}
