//! Loading and cleaning of featurized per-user sensor files.
//!
//! Each user file is a (optionally gzip-compressed) CSV with a timestamp
//! column first, the featurized sensor columns, then `label:*` columns holding
//! `0`, `1`, or an empty/`nan` cell for "not reported". Only the six target
//! activity columns from [`LabelConfig`] are read.
//!
//! Missing feature values travel as `NaN` inside matrices until
//! [`impute_means`] replaces them.

use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::{Path, PathBuf};

use flate2::read::GzDecoder;
use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_FEATURE_COUNT: usize = 225;

/// Sentinel for a missing feature cell inside a feature matrix.
pub const MISSING: f64 = f64::NAN;

const STD_FLOOR: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeafLabel {
    pub name: String,
    pub column: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParentGroup {
    pub name: String,
    pub leaves: Vec<usize>,
}

/// The six target activities, their source columns, and the two parent groups.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelConfig {
    leaves: Vec<LeafLabel>,
    parents: Vec<ParentGroup>,
    feature_count: usize,
}

impl Default for LabelConfig {
    fn default() -> Self {
        let leaf = |name: &str, column: &str| LeafLabel {
            name: name.to_string(),
            column: column.to_string(),
        };
        LabelConfig {
            leaves: vec![
                leaf("lying down", "label:LYING_DOWN"),
                leaf("sitting", "label:SITTING"),
                leaf("standing in place", "label:OR_standing"),
                leaf("walking", "label:FIX_walking"),
                leaf("running", "label:FIX_running"),
                leaf("bicycling", "label:BICYCLING"),
            ],
            parents: vec![
                ParentGroup {
                    name: "stationary".into(),
                    leaves: vec![0, 1, 2],
                },
                ParentGroup {
                    name: "non-stationary".into(),
                    leaves: vec![3, 4, 5],
                },
            ],
            feature_count: DEFAULT_FEATURE_COUNT,
        }
    }
}

impl LabelConfig {
    pub const LEAF_COUNT: usize = 6;

    pub fn new(
        leaves: Vec<LeafLabel>,
        parents: Vec<ParentGroup>,
        feature_count: usize,
    ) -> Result<Self> {
        let config = LabelConfig {
            leaves,
            parents,
            feature_count,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.leaves.len() != Self::LEAF_COUNT {
            return Err(Error::Config(format!(
                "expected {} leaf labels, got {}",
                Self::LEAF_COUNT,
                self.leaves.len()
            )));
        }
        if self.parents.len() != 2 {
            return Err(Error::Config(format!(
                "expected 2 parent groups, got {}",
                self.parents.len()
            )));
        }
        if self.feature_count == 0 {
            return Err(Error::Config("feature count must be positive".into()));
        }
        let mut owner = vec![None; self.leaves.len()];
        for (p, group) in self.parents.iter().enumerate() {
            if group.leaves.is_empty() {
                return Err(Error::Config(format!("parent `{}` has no leaves", group.name)));
            }
            for &leaf in &group.leaves {
                match owner.get_mut(leaf) {
                    None => {
                        return Err(Error::Config(format!(
                            "parent `{}` references unknown leaf {leaf}",
                            group.name
                        )))
                    }
                    Some(Some(_)) => {
                        return Err(Error::Config(format!(
                            "leaf {leaf} belongs to more than one parent"
                        )))
                    }
                    Some(slot) => *slot = Some(p),
                }
            }
        }
        if let Some(leaf) = owner.iter().position(Option::is_none) {
            return Err(Error::Config(format!(
                "leaf `{}` is not assigned to a parent",
                self.leaves[leaf].name
            )));
        }
        Ok(())
    }

    pub fn leaves(&self) -> &[LeafLabel] {
        &self.leaves
    }

    pub fn parents(&self) -> &[ParentGroup] {
        &self.parents
    }

    pub fn feature_count(&self) -> usize {
        self.feature_count
    }

    pub fn leaf_names(&self) -> Vec<String> {
        self.leaves.iter().map(|l| l.name.clone()).collect()
    }

    pub fn set_feature_count(&mut self, n: usize) -> Result<()> {
        self.feature_count = n;
        self.validate()
    }

    /// Overrides the source column of leaf `leaf`.
    pub fn set_column(&mut self, leaf: usize, column: impl Into<String>) -> Result<()> {
        let slot = self
            .leaves
            .get_mut(leaf)
            .ok_or_else(|| Error::Config(format!("no leaf with index {leaf}")))?;
        slot.column = column.into();
        Ok(())
    }

    pub fn parent_of(&self, leaf: usize) -> Option<usize> {
        self.parents.iter().position(|g| g.leaves.contains(&leaf))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LabelFlag {
    Relevant,
    NotRelevant,
    Missing,
}

/// One data line of a user file, restricted to the configured target labels.
#[derive(Clone, Debug, PartialEq)]
pub struct RawRow {
    pub timestamp: i64,
    pub features: Vec<Option<f64>>,
    /// Indexed like [`LabelConfig::leaves`].
    pub label_flags: Vec<LabelFlag>,
}

fn is_missing_cell(cell: &str) -> bool {
    cell.is_empty() || cell.eq_ignore_ascii_case("nan")
}

fn open_maybe_gzip(path: &Path) -> Result<Box<dyn Read>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::new(file);
    let magic = reader.fill_buf().map_err(|e| Error::io(path, e))?;
    if magic.starts_with(&[0x1f, 0x8b]) {
        Ok(Box::new(GzDecoder::new(reader)))
    } else {
        Ok(Box::new(reader))
    }
}

fn csv_error(path: &Path, err: csv::Error) -> Error {
    match err.into_kind() {
        csv::ErrorKind::Io(e) => Error::io(path, e),
        other => Error::Schema(format!("{}: {:?}", path.display(), other)),
    }
}

/// Reads one user file. Gzip compression is detected from the file's magic bytes.
pub fn load_user_file(path: &Path, config: &LabelConfig) -> Result<Vec<RawRow>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(open_maybe_gzip(path)?);
    let header = reader.headers().map_err(|e| csv_error(path, e))?.clone();

    let feature_columns: Vec<usize> = header
        .iter()
        .enumerate()
        .skip(1)
        .filter(|(_, name)| !name.starts_with("label:") && *name != "label_source")
        .map(|(i, _)| i)
        .collect();
    if feature_columns.len() != config.feature_count() {
        return Err(Error::Schema(format!(
            "{}: expected {} feature columns, found {}",
            path.display(),
            config.feature_count(),
            feature_columns.len()
        )));
    }
    let label_columns = config
        .leaves()
        .iter()
        .map(|leaf| {
            header
                .iter()
                .position(|h| h == leaf.column)
                .ok_or_else(|| Error::MissingColumn(leaf.column.clone()))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| csv_error(path, e))?;
        let parse_err = |col: usize, value: &str| Error::Parse {
            row,
            column: header.get(col).unwrap_or("?").to_string(),
            value: value.to_string(),
        };

        let ts_cell = record.get(0).unwrap_or("").trim();
        let timestamp = ts_cell
            .parse::<i64>()
            .or_else(|_| ts_cell.parse::<f64>().map(|v| v as i64))
            .map_err(|_| parse_err(0, ts_cell))?;

        let mut features = Vec::with_capacity(feature_columns.len());
        for &col in &feature_columns {
            let cell = record.get(col).unwrap_or("").trim();
            if is_missing_cell(cell) {
                features.push(None);
            } else {
                let v: f64 = cell.parse().map_err(|_| parse_err(col, cell))?;
                features.push(v.is_finite().then_some(v));
            }
        }

        let mut label_flags = Vec::with_capacity(label_columns.len());
        for &col in &label_columns {
            let cell = record.get(col).unwrap_or("").trim();
            let flag = if is_missing_cell(cell) {
                LabelFlag::Missing
            } else {
                match cell.parse::<f64>() {
                    Ok(1.0) => LabelFlag::Relevant,
                    Ok(0.0) => LabelFlag::NotRelevant,
                    _ => return Err(parse_err(col, cell)),
                }
            };
            label_flags.push(flag);
        }

        rows.push(RawRow {
            timestamp,
            features,
            label_flags,
        });
    }
    Ok(rows)
}

/// Reads a manifest: one user-file path per line, `#` comments and blank lines
/// ignored, relative paths resolved against the manifest's directory.
pub fn read_manifest(path: &Path) -> Result<Vec<PathBuf>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let files: Vec<PathBuf> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| {
            let p = Path::new(l);
            if p.is_absolute() {
                p.to_path_buf()
            } else {
                base.join(p)
            }
        })
        .collect();
    if files.is_empty() {
        return Err(Error::NoInput);
    }
    Ok(files)
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledRow {
    pub row: RawRow,
    pub leaf: usize,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct FilterOutcome {
    pub kept: Vec<LabeledRow>,
    /// Rows with no relevant target label.
    pub unlabeled: usize,
    /// Rows with two or more relevant target labels.
    pub conflicts: usize,
}

/// Keeps rows with exactly one relevant target label. Missing flags on the
/// other targets do not disqualify a row.
pub fn filter_target_samples(rows: Vec<RawRow>) -> FilterOutcome {
    let mut out = FilterOutcome::default();
    for row in rows {
        let mut relevant = row
            .label_flags
            .iter()
            .enumerate()
            .filter(|(_, f)| **f == LabelFlag::Relevant)
            .map(|(i, _)| i);
        match (relevant.next(), relevant.next()) {
            (None, _) => out.unlabeled += 1,
            (Some(leaf), None) => out.kept.push(LabeledRow { row, leaf }),
            (Some(_), Some(_)) => out.conflicts += 1,
        }
    }
    out
}

pub fn derive_parent_labels(leaves: &[usize], config: &LabelConfig) -> Result<Vec<usize>> {
    leaves
        .iter()
        .map(|&leaf| {
            config
                .parent_of(leaf)
                .ok_or_else(|| Error::Config(format!("leaf {leaf} is not in any parent group")))
        })
        .collect()
}

/// Fits column means on `train` (ignoring `NaN` cells) and replaces every
/// missing cell in `train` and in each of `others` with the train mean.
pub fn impute_means(train: &mut Array2<f64>, others: &mut [&mut Array2<f64>]) -> Result<Vec<f64>> {
    let cols = train.ncols();
    for other in others.iter() {
        if other.ncols() != cols {
            return Err(Error::Dimension {
                expected: cols,
                got: other.ncols(),
            });
        }
    }
    let mut means = Vec::with_capacity(cols);
    for (j, column) in train.axis_iter(Axis(1)).enumerate() {
        let (sum, count) = column
            .iter()
            .filter(|v| !v.is_nan())
            .fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
        if count == 0 {
            return Err(Error::Schema(format!(
                "feature column {j} has no observed values in the training split"
            )));
        }
        means.push(sum / count as f64);
    }
    fill_missing(train, &means);
    for other in others.iter_mut() {
        fill_missing(other, &means);
    }
    Ok(means)
}

fn fill_missing(matrix: &mut Array2<f64>, means: &[f64]) {
    for mut row in matrix.rows_mut() {
        for (v, m) in row.iter_mut().zip(means) {
            if v.is_nan() {
                *v = *m;
            }
        }
    }
}

/// Per-feature z-scoring fit on the training split.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn fit(train: &Array2<f64>) -> Self {
        let n = train.nrows().max(1) as f64;
        let mut mean = Vec::with_capacity(train.ncols());
        let mut std = Vec::with_capacity(train.ncols());
        for column in train.axis_iter(Axis(1)) {
            let m = column.iter().sum::<f64>() / n;
            let var = column.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n;
            mean.push(m);
            std.push(var.sqrt().max(STD_FLOOR));
        }
        Standardizer { mean, std }
    }

    pub fn apply(&self, matrix: &mut Array2<f64>) {
        for mut row in matrix.rows_mut() {
            self.apply_row(row.as_slice_mut().expect("standard layout"));
        }
    }

    pub fn apply_row(&self, row: &mut [f64]) {
        for ((v, m), s) in row.iter_mut().zip(&self.mean).zip(&self.std) {
            *v = (*v - m) / s;
        }
    }
}

/// Everything needed to turn a raw feature vector into model input.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Preprocessing {
    pub means: Vec<f64>,
    pub scaler: Option<Standardizer>,
}

impl Preprocessing {
    /// Pass-through for data that is already clean.
    pub fn identity(dim: usize) -> Self {
        Preprocessing {
            means: vec![0.0; dim],
            scaler: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.means.len()
    }

    /// Imputes non-finite cells and standardizes, in place.
    pub fn apply_row(&self, row: &mut [f64]) -> Result<()> {
        if row.len() != self.means.len() {
            return Err(Error::Dimension {
                expected: self.means.len(),
                got: row.len(),
            });
        }
        for (v, m) in row.iter_mut().zip(&self.means) {
            if !v.is_finite() {
                *v = *m;
            }
        }
        if let Some(scaler) = &self.scaler {
            scaler.apply_row(row);
        }
        Ok(())
    }
}

/// Feature matrix with aligned leaf and parent labels.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub features: Array2<f64>,
    pub leaves: Vec<usize>,
    pub parents: Vec<usize>,
}

impl Dataset {
    pub fn new(features: Array2<f64>, leaves: Vec<usize>, config: &LabelConfig) -> Result<Self> {
        if features.nrows() != leaves.len() {
            return Err(Error::Dimension {
                expected: features.nrows(),
                got: leaves.len(),
            });
        }
        let parents = derive_parent_labels(&leaves, config)?;
        Ok(Dataset {
            features,
            leaves,
            parents,
        })
    }

    pub fn len(&self) -> usize {
        self.leaves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.leaves.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn select(&self, indices: &[usize]) -> Dataset {
        Dataset {
            features: self.features.select(Axis(0), indices),
            leaves: indices.iter().map(|&i| self.leaves[i]).collect(),
            parents: indices.iter().map(|&i| self.parents[i]).collect(),
        }
    }

    pub fn leaf_counts(&self, n_leaves: usize) -> Vec<usize> {
        let mut counts = vec![0; n_leaves];
        for &l in &self.leaves {
            counts[l] += 1;
        }
        counts
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub val_fraction_of_train: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train_fraction: 0.80,
            val_fraction_of_train: 0.05,
            seed: 0,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("train_fraction", self.train_fraction),
            ("val_fraction_of_train", self.val_fraction_of_train),
        ] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::Config(format!("{name} must lie in (0, 1), got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

/// Seeded shuffle of `0..n` cut into contiguous train / val / test slices.
/// Validation and test each keep at least one sample.
pub fn split_indices(n: usize, spec: &SplitSpec) -> Result<SplitIndices> {
    spec.validate()?;
    if n < 10 {
        return Err(Error::Config(format!("need at least 10 samples to split, got {n}")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(spec.seed));

    let train_full = ((n as f64 * spec.train_fraction).round() as usize).clamp(2, n - 1);
    let val = ((train_full as f64 * spec.val_fraction_of_train).round() as usize)
        .clamp(1, train_full - 1);
    let train = train_full - val;
    Ok(SplitIndices {
        train: order[..train].to_vec(),
        val: order[train..train_full].to_vec(),
        test: order[train_full..].to_vec(),
    })
}

pub fn split_dataset(data: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset, Dataset)> {
    let idx = split_indices(data.len(), spec)?;
    Ok((data.select(&idx.train), data.select(&idx.val), data.select(&idx.test)))
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct IngestStats {
    pub files: usize,
    pub rows: usize,
    pub kept: usize,
    pub unlabeled: usize,
    pub conflicts: usize,
}

/// Output of the full ingestion pipeline.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub train: Dataset,
    pub val: Dataset,
    pub test: Dataset,
    pub preprocessing: Preprocessing,
    pub stats: IngestStats,
}

/// Loads every file, filters to target rows, splits, imputes with train means
/// and optionally standardizes with train statistics.
pub fn prepare(
    files: &[PathBuf],
    config: &LabelConfig,
    split: &SplitSpec,
    standardize: bool,
) -> Result<Prepared> {
    if files.is_empty() {
        return Err(Error::NoInput);
    }
    let per_file = files
        .par_iter()
        .map(|path| {
            let rows = load_user_file(path, config)?;
            let n = rows.len();
            Ok((n, filter_target_samples(rows)))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut stats = IngestStats {
        files: files.len(),
        ..Default::default()
    };
    let kept: usize = per_file.iter().map(|(_, f)| f.kept.len()).sum();
    let dim = config.feature_count();
    let mut features = Array2::from_elem((kept, dim), MISSING);
    let mut leaves = Vec::with_capacity(kept);
    let mut r = 0;
    for (n, outcome) in per_file {
        stats.rows += n;
        stats.unlabeled += outcome.unlabeled;
        stats.conflicts += outcome.conflicts;
        for labeled in outcome.kept {
            for (dst, src) in features.row_mut(r).iter_mut().zip(&labeled.row.features) {
                *dst = src.unwrap_or(MISSING);
            }
            leaves.push(labeled.leaf);
            r += 1;
        }
    }
    stats.kept = kept;

    let all = Dataset::new(features, leaves, config)?;
    let (mut train, mut val, mut test) = split_dataset(&all, split)?;
    drop(all);
    let means = impute_means(&mut train.features, &mut [&mut val.features, &mut test.features])?;
    let scaler = standardize.then(|| {
        let s = Standardizer::fit(&train.features);
        s.apply(&mut train.features);
        s.apply(&mut val.features);
        s.apply(&mut test.features);
        s
    });
    Ok(Prepared {
        train,
        val,
        test,
        preprocessing: Preprocessing { means, scaler },
        stats,
    })
}
