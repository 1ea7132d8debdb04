//! Dataset ingestion and preprocessing.
//!
//! Supported files:
//!
//! * sparse: `<label> <idx>:<val> ...` per line, 1-based feature indices;
//! * dense CSV with a `label,f0,f1,...` header;
//! * sign masks: `<index> <+|->` per line, 0-based, unlisted features unconstrained;
//! * similarity matrices: `n` header-less rows of `n` comma-separated floats,
//!   with labels in a separate file, one per line.
//!
//! `#` starts a comment in sparse, mask and label files. Sparse input is
//! densified (`n·d` doubles).

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{Dataset, SignMask};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Sparse,
    DenseCsv,
}

impl Format {
    /// `.csv` means dense, anything else sparse.
    pub fn from_path(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => Format::DenseCsv,
            _ => Format::Sparse,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LoadOptions {
    /// Declared feature count; inferred from the data when absent.
    pub d: Option<usize>,
    /// Accept `0/1` labels, mapping `0 → −1`.
    pub zero_one_labels: bool,
}

/// Labeled examples in the caller's feature space, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RawDataset {
    pub d: usize,
    pub labels: Vec<f64>,
    pub features: Vec<f64>,
}

impl RawDataset {
    pub fn new(d: usize, labels: Vec<f64>, features: Vec<f64>) -> Result<Self> {
        if features.len() != labels.len() * d {
            return Err(Error::DimensionMismatch {
                context: "raw dataset",
                expected: labels.len() * d,
                got: features.len(),
            });
        }
        if let Some(y) = labels.iter().find(|&&y| y != 1.0 && y != -1.0) {
            return Err(Error::InvalidDataset(format!("label {y} is not ±1")));
        }
        Ok(RawDataset { d, labels, features })
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.d..(i + 1) * self.d]
    }

    pub fn n_pos(&self) -> usize {
        self.labels.iter().filter(|&&y| y > 0.0).count()
    }

    pub fn subset(&self, indices: &[usize]) -> RawDataset {
        let mut features = Vec::with_capacity(indices.len() * self.d);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            features.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        RawDataset {
            d: self.d,
            labels,
            features,
        }
    }

    /// Dataset with no sign constraints and no preprocessing.
    pub fn to_dataset(&self) -> Result<Dataset> {
        Dataset::new(self.d, &self.features, self.labels.clone())
    }
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        line,
        message: message.into(),
    }
}

fn parse_label(tok: &str, zero_one: bool) -> Option<f64> {
    let v: f64 = tok.parse().ok()?;
    if v == 1.0 {
        Some(1.0)
    } else if v == -1.0 || (zero_one && v == 0.0) {
        Some(-1.0)
    } else {
        None
    }
}

fn strip_comment(line: &str) -> &str {
    line.split('#').next().unwrap_or("").trim()
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn load_dataset(path: &Path, format: Format, opts: LoadOptions) -> Result<RawDataset> {
    let text = read(path)?;
    match format {
        Format::Sparse => parse_sparse(&text, path, opts),
        Format::DenseCsv => parse_dense(&text, path, opts),
    }
}

pub fn parse_sparse(text: &str, path: &Path, opts: LoadOptions) -> Result<RawDataset> {
    let mut labels = Vec::new();
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut max_idx = 0;
    for (ln, line) in text.lines().enumerate() {
        let ln = ln + 1;
        let line = strip_comment(line);
        if line.is_empty() {
            continue;
        }
        let mut toks = line.split_whitespace();
        let lt = toks.next().unwrap_or_default();
        let y = parse_label(lt, opts.zero_one_labels)
            .ok_or_else(|| parse_err(path, ln, format!("invalid label {lt:?}")))?;
        let mut row = Vec::new();
        let mut prev = 0;
        for tok in toks {
            let (i, v) = tok
                .split_once(':')
                .ok_or_else(|| parse_err(path, ln, format!("expected idx:val, got {tok:?}")))?;
            let i: usize = i
                .parse()
                .map_err(|_| parse_err(path, ln, format!("invalid feature index {i:?}")))?;
            if i == 0 {
                return Err(parse_err(path, ln, "feature indices are 1-based"));
            }
            if i <= prev {
                return Err(parse_err(path, ln, format!("feature index {i} not increasing")));
            }
            prev = i;
            let v: f64 = v
                .parse()
                .map_err(|_| parse_err(path, ln, format!("invalid feature value {v:?}")))?;
            if !v.is_finite() {
                return Err(parse_err(path, ln, format!("non-finite feature value {v}")));
            }
            if let Some(d) = opts.d {
                if i > d {
                    return Err(parse_err(path, ln, format!("feature index {i} exceeds d = {d}")));
                }
            }
            max_idx = max_idx.max(i);
            row.push((i - 1, v));
        }
        labels.push(y);
        rows.push(row);
    }
    if labels.is_empty() {
        return Err(parse_err(path, 0, "no examples"));
    }
    let d = opts.d.unwrap_or(max_idx).max(1);
    let mut features = vec![0.0; labels.len() * d];
    for (r, row) in rows.iter().enumerate() {
        for &(h, v) in row {
            features[r * d + h] = v;
        }
    }
    Ok(RawDataset { d, labels, features })
}

pub fn parse_dense(text: &str, path: &Path, opts: LoadOptions) -> Result<RawDataset> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| parse_err(path, 0, "no examples"))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    if cols.first() != Some(&"label") {
        return Err(parse_err(path, 1, "header must start with `label`"));
    }
    let d = cols.len() - 1;
    if let Some(decl) = opts.d {
        if decl != d {
            return Err(parse_err(
                path,
                1,
                format!("header has {d} features, expected {decl}"),
            ));
        }
    }
    let mut labels = Vec::new();
    let mut features = Vec::new();
    for (ln, line) in lines {
        let ln = ln + 1;
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != d + 1 {
            return Err(parse_err(
                path,
                ln,
                format!("expected {} fields, got {}", d + 1, f.len()),
            ));
        }
        let y = parse_label(f[0], opts.zero_one_labels)
            .ok_or_else(|| parse_err(path, ln, format!("invalid label {:?}", f[0])))?;
        for tok in &f[1..] {
            let v: f64 = tok
                .parse()
                .map_err(|_| parse_err(path, ln, format!("invalid feature value {tok:?}")))?;
            if !v.is_finite() {
                return Err(parse_err(path, ln, format!("non-finite feature value {v}")));
            }
            features.push(v);
        }
        labels.push(y);
    }
    if labels.is_empty() {
        return Err(parse_err(path, 0, "no examples"));
    }
    Ok(RawDataset { d, labels, features })
}

fn label_str(y: f64) -> &'static str {
    if y > 0.0 {
        "+1"
    } else {
        "-1"
    }
}

/// Serializes in the given format; values use shortest round-trip formatting.
pub fn format_dataset(raw: &RawDataset, format: Format) -> String {
    let mut out = String::new();
    match format {
        Format::Sparse => {
            for i in 0..raw.n() {
                out.push_str(label_str(raw.labels[i]));
                for (h, &v) in raw.row(i).iter().enumerate() {
                    if v != 0.0 {
                        let _ = write!(out, " {}:{}", h + 1, v);
                    }
                }
                out.push('\n');
            }
        }
        Format::DenseCsv => {
            out.push_str("label");
            for h in 0..raw.d {
                let _ = write!(out, ",f{h}");
            }
            out.push('\n');
            for i in 0..raw.n() {
                out.push_str(label_str(raw.labels[i]));
                for v in raw.row(i) {
                    let _ = write!(out, ",{v}");
                }
                out.push('\n');
            }
        }
    }
    out
}

pub fn write_dataset(raw: &RawDataset, path: &Path, format: Format) -> Result<()> {
    fs::write(path, format_dataset(raw, format)).map_err(|e| Error::io(path, e))
}

/// Scales every example to unit Euclidean norm.
pub fn normalize_unit(raw: &RawDataset) -> Result<RawDataset> {
    let mut out = raw.clone();
    for i in 0..raw.n() {
        let row = &mut out.features[i * raw.d..(i + 1) * raw.d];
        let nrm = linalg::norm(row);
        if nrm == 0.0 {
            return Err(Error::InvalidDataset(format!("example {i} is all zeros")));
        }
        for x in row.iter_mut() {
            *x /= nrm;
        }
    }
    Ok(out)
}

/// Negates the features in `neg`, builds the signed columns and the mask.
pub fn apply_sign_mask(raw: &RawDataset, pos: &[usize], neg: &[usize]) -> Result<(Dataset, SignMask)> {
    let overlap: Vec<usize> = pos.iter().copied().filter(|h| neg.contains(h)).collect();
    if !overlap.is_empty() {
        return Err(Error::InvalidMask(format!(
            "features {overlap:?} are in both the non-negative and non-positive sets"
        )));
    }
    let mask = SignMask::new(raw.d, pos, neg)?;
    let mut features = raw.features.clone();
    for row in features.chunks_mut(raw.d) {
        for &h in neg {
            row[h] = -row[h];
        }
    }
    let data = Dataset::new(raw.d, &features, raw.labels.clone())?;
    Ok((data, mask))
}

/// Constrained index sets from a sign-mask file: `(non-negative, non-positive)`.
pub fn parse_sign_mask(text: &str, path: &Path, d: Option<usize>) -> Result<(Vec<usize>, Vec<usize>)> {
    let (mut pos, mut neg) = (Vec::new(), Vec::new());
    let mut seen = std::collections::HashSet::new();
    for (ln, line) in text.lines().enumerate() {
        let ln = ln + 1;
        let line = strip_comment(line);
        if line.is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 2 {
            return Err(parse_err(path, ln, "expected `<index> <+|->`"));
        }
        let h: usize = toks[0]
            .parse()
            .map_err(|_| parse_err(path, ln, format!("invalid index {:?}", toks[0])))?;
        if let Some(d) = d {
            if h >= d {
                return Err(parse_err(path, ln, format!("index {h} out of range for d = {d}")));
            }
        }
        if !seen.insert(h) {
            return Err(parse_err(path, ln, format!("index {h} listed twice")));
        }
        match toks[1] {
            "+" => pos.push(h),
            "-" | "−" => neg.push(h),
            s => return Err(parse_err(path, ln, format!("invalid sign {s:?}"))),
        }
    }
    Ok((pos, neg))
}

pub fn load_sign_mask(path: &Path, d: Option<usize>) -> Result<(Vec<usize>, Vec<usize>)> {
    parse_sign_mask(&read(path)?, path, d)
}

pub fn format_sign_mask(pos: &[usize], neg: &[usize]) -> String {
    let mut all: Vec<(usize, char)> = pos
        .iter()
        .map(|&h| (h, '+'))
        .chain(neg.iter().map(|&h| (h, '-')))
        .collect();
    all.sort_unstable();
    all.iter().fold(String::new(), |mut s, (h, c)| {
        let _ = writeln!(s, "{h} {c}");
        s
    })
}

/// Square matrix of pairwise sequence similarities with per-sequence labels.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    pub n: usize,
    /// Row-major `n × n`.
    pub values: Vec<f64>,
    pub labels: Vec<f64>,
}

impl SimilarityMatrix {
    pub fn new(n: usize, values: Vec<f64>, labels: Vec<f64>) -> Result<Self> {
        if values.len() != n * n {
            return Err(Error::InvalidDataset(format!(
                "similarity matrix must be square: {} entries for n = {n}",
                values.len()
            )));
        }
        if labels.len() != n {
            return Err(Error::DimensionMismatch {
                context: "similarity labels",
                expected: n,
                got: labels.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidDataset("non-finite similarity".into()));
        }
        if let Some(y) = labels.iter().find(|&&y| y != 1.0 && y != -1.0) {
            return Err(Error::InvalidDataset(format!("label {y} is not ±1")));
        }
        Ok(SimilarityMatrix { n, values, labels })
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }
}

pub fn parse_similarity(text: &str, path: &Path) -> Result<(usize, Vec<f64>)> {
    let mut values = Vec::new();
    let mut n = None;
    let mut rows = 0;
    for (ln, line) in text.lines().enumerate() {
        let ln = ln + 1;
        if line.trim().is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|_| parse_err(path, ln, format!("invalid similarity {:?}", t.trim())))
            })
            .collect::<Result<_>>()?;
        match n {
            None => n = Some(row.len()),
            Some(m) if m != row.len() => {
                return Err(parse_err(
                    path,
                    ln,
                    format!("row has {} entries, expected {m}", row.len()),
                ))
            }
            _ => {}
        }
        values.extend(row);
        rows += 1;
    }
    let n = n.ok_or_else(|| parse_err(path, 0, "empty similarity matrix"))?;
    if rows != n {
        return Err(parse_err(
            path,
            rows,
            format!("matrix is not square: {rows} rows × {n} columns"),
        ));
    }
    Ok((n, values))
}

pub fn parse_labels(text: &str, path: &Path, zero_one: bool) -> Result<Vec<f64>> {
    let mut labels = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = strip_comment(line);
        if line.is_empty() {
            continue;
        }
        labels.push(
            parse_label(line, zero_one)
                .ok_or_else(|| parse_err(path, ln + 1, format!("invalid label {line:?}")))?,
        );
    }
    Ok(labels)
}

pub fn load_similarity(sim_path: &Path, labels_path: &Path, zero_one: bool) -> Result<SimilarityMatrix> {
    let (n, values) = parse_similarity(&read(sim_path)?, sim_path)?;
    let labels = parse_labels(&read(labels_path)?, labels_path, zero_one)?;
    SimilarityMatrix::new(n, values, labels)
}

/// Pairwise features with positives first.
#[derive(Debug, Clone, PartialEq)]
pub struct Pairwise {
    /// Example `j` is sequence `order[j]`; its features are similarities to every
    /// sequence in the same order.
    pub raw: RawDataset,
    /// `order[j]` is the original index of reordered sequence `j`.
    pub order: Vec<usize>,
    pub n_pos: usize,
}

impl Pairwise {
    /// Non-negative set: similarities to positive sequences.
    pub fn pos(&self) -> Vec<usize> {
        (0..self.n_pos).collect()
    }

    /// Non-positive set: similarities to negative sequences.
    pub fn neg(&self) -> Vec<usize> {
        (self.n_pos..self.order.len()).collect()
    }

    pub fn dataset(&self, constrained: bool) -> Result<(Dataset, SignMask)> {
        if constrained {
            apply_sign_mask(&self.raw, &self.pos(), &self.neg())
        } else {
            Ok((self.raw.to_dataset()?, SignMask::unconstrained(self.raw.d)))
        }
    }

    /// Maps values indexed by reordered position back to original sequence order.
    pub fn to_original_order<T: Clone>(&self, values: &[T]) -> Vec<T> {
        let mut out = values.to_vec();
        for (j, &orig) in self.order.iter().enumerate() {
            out[orig] = values[j].clone();
        }
        out
    }
}

/// Positives-first reordering of the given subset of sequences (stable within a class).
fn positives_first(sim: &SimilarityMatrix, ids: &[usize]) -> Vec<usize> {
    let mut order: Vec<usize> = ids.iter().copied().filter(|&i| sim.labels[i] > 0.0).collect();
    order.extend(ids.iter().copied().filter(|&i| sim.labels[i] <= 0.0));
    order
}

/// Pairwise features of `queries` against the reference sequences `refs`:
/// feature `h` of query `j` is `S[refs[h], queries[j]]` (a column of the matrix).
pub fn pairwise_features(sim: &SimilarityMatrix, refs: &[usize], queries: &[usize]) -> RawDataset {
    let d = refs.len();
    let mut features = Vec::with_capacity(queries.len() * d);
    for &j in queries {
        features.extend(refs.iter().map(|&h| sim.get(h, j)));
    }
    RawDataset {
        d,
        labels: queries.iter().map(|&j| sim.labels[j]).collect(),
        features,
    }
}

/// SVM-pairwise training set restricted to `ids`, positives first.
pub fn build_pairwise_subset(sim: &SimilarityMatrix, ids: &[usize]) -> Result<Pairwise> {
    if ids.len() < 2 {
        return Err(Error::InvalidDataset(
            "pairwise features need at least two sequences".into(),
        ));
    }
    let order = positives_first(sim, ids);
    let n_pos = order.iter().filter(|&&i| sim.labels[i] > 0.0).count();
    if n_pos == 0 || n_pos == order.len() {
        return Err(Error::InvalidDataset(
            "pairwise features need both classes".into(),
        ));
    }
    let raw = pairwise_features(sim, &order, &order);
    Ok(Pairwise { raw, order, n_pos })
}

/// SVM-pairwise features over every sequence in the matrix.
pub fn build_pairwise(sim: &SimilarityMatrix) -> Result<Pairwise> {
    let ids: Vec<usize> = (0..sim.n).collect();
    build_pairwise_subset(sim, &ids)
}
