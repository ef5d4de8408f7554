//! Tabular numeric datasets: CSV ingestion, min-max normalisation and
//! train/test resampling.

use std::collections::HashMap;
use std::fs::File;
use std::io::Read;
use std::path::{Path, PathBuf};

use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::seeded_rng;

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("dataset is empty")]
    Empty,
    #[error("row {row} has {found} fields, header has {expected}")]
    Ragged {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("row {row}, column {column:?}: cannot parse {value:?} as a number")]
    Parse {
        row: usize,
        column: String,
        value: String,
    },
    #[error("row {row}, column {column:?}: value is not finite")]
    NonFinite { row: usize, column: String },
    #[error("unknown label column {0:?}")]
    UnknownLabelColumn(String),
    #[error("invalid dataset: {0}")]
    Invalid(String),
    #[error("split ratio {ratio} leaves an empty side for n = {n}")]
    RatioOutOfRange { ratio: f64, n: usize },
    #[error("k-fold needs 2 <= k <= n, got k = {k} for n = {n}")]
    FoldCount { k: usize, n: usize },
    #[error("random subsampling needs at least one repetition")]
    NoRepetitions,
}

/// `n` objects with `d` numeric features and an optional class label each.
///
/// Row `j` of [`Dataset::objects`] is object `j`. Labels are dense indices
/// into [`Dataset::class_names`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Dataset {
    objects: Array2<f64>,
    labels: Option<Vec<usize>>,
    class_names: Vec<String>,
    feature_names: Vec<String>,
    normalized: bool,
}

impl Dataset {
    /// Builds an unlabeled dataset. Feature names default to `f0..f{d-1}`
    /// when `feature_names` is empty.
    pub fn new(objects: Array2<f64>, feature_names: Vec<String>) -> Result<Self, DatasetError> {
        let (n, d) = objects.dim();
        if n == 0 || d == 0 {
            return Err(DatasetError::Empty);
        }
        if let Some(pos) = objects.iter().position(|v| !v.is_finite()) {
            return Err(DatasetError::Invalid(format!(
                "object {} feature {} is not finite",
                pos / d,
                pos % d
            )));
        }
        let feature_names = if feature_names.is_empty() {
            (0..d).map(|f| format!("f{f}")).collect()
        } else if feature_names.len() == d {
            feature_names
        } else {
            return Err(DatasetError::Invalid(format!(
                "{} feature names for {d} features",
                feature_names.len()
            )));
        };
        Ok(Self {
            objects: objects.as_standard_layout().into_owned(),
            labels: None,
            class_names: Vec::new(),
            feature_names,
            normalized: false,
        })
    }

    /// Convenience constructor from row vectors.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, DatasetError> {
        let n = rows.len();
        let d = rows.first().map_or(0, Vec::len);
        if let Some(j) = rows.iter().position(|r| r.len() != d) {
            return Err(DatasetError::Ragged {
                row: j + 1,
                expected: d,
                found: rows[j].len(),
            });
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        let objects = Array2::from_shape_vec((n, d), flat)
            .map_err(|e| DatasetError::Invalid(e.to_string()))?;
        Self::new(objects, Vec::new())
    }

    /// Attaches labels. Each label must index into `class_names`.
    pub fn with_labels(
        mut self,
        labels: Vec<usize>,
        class_names: Vec<String>,
    ) -> Result<Self, DatasetError> {
        if labels.len() != self.len() {
            return Err(DatasetError::Invalid(format!(
                "{} labels for {} objects",
                labels.len(),
                self.len()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= class_names.len()) {
            return Err(DatasetError::Invalid(format!(
                "label {bad} out of range for {} classes",
                class_names.len()
            )));
        }
        self.labels = Some(labels);
        self.class_names = class_names;
        Ok(self)
    }

    /// Attaches labels given as class indices; class names become `"0".."c-1"`.
    pub fn with_label_indices(self, labels: Vec<usize>) -> Result<Self, DatasetError> {
        let c = labels.iter().max().map_or(0, |m| m + 1);
        let names = (0..c).map(|i| i.to_string()).collect();
        self.with_labels(labels, names)
    }

    pub fn len(&self) -> usize {
        self.objects.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.objects.ncols()
    }

    pub fn objects(&self) -> &Array2<f64> {
        &self.objects
    }

    /// Feature vector of object `j`.
    pub fn object(&self, j: usize) -> &[f64] {
        self.objects
            .row(j)
            .to_slice()
            .expect("objects are kept in standard layout")
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    /// Number of classes known to the dataset (0 when unlabeled).
    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// Copies the given objects, in order and with repetition, into a new
    /// dataset that keeps this dataset's class names and normalisation flag.
    /// The result may be empty, which is the only way to obtain an empty
    /// dataset (bootstrap out-of-bag sets can be empty).
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let objects = self.objects.select(Axis(0), indices);
        Dataset {
            objects,
            labels: self
                .labels
                .as_ref()
                .map(|l| indices.iter().map(|&j| l[j]).collect()),
            class_names: self.class_names.clone(),
            feature_names: self.feature_names.clone(),
            normalized: self.normalized,
        }
    }

    /// Per-feature `(min, max)` over all objects.
    pub fn feature_ranges(&self) -> Vec<(f64, f64)> {
        self.objects
            .columns()
            .into_iter()
            .map(|col| {
                col.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                    (lo.min(v), hi.max(v))
                })
            })
            .collect()
    }
}

/// Reads a comma-separated file with a mandatory header row.
///
/// When `label_column` names a header field, that column is taken as the
/// class label and mapped to dense indices in order of first appearance;
/// every other cell must parse as a finite real number.
pub fn load_csv(path: impl AsRef<Path>, label_column: Option<&str>) -> Result<Dataset, DatasetError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_csv(file, label_column)
}

/// Same as [`load_csv`] over any reader.
pub fn read_csv(reader: impl Read, label_column: Option<&str>) -> Result<Dataset, DatasetError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    if header.is_empty() || (header.len() == 1 && header[0].is_empty()) {
        return Err(DatasetError::Empty);
    }
    let label_idx = match label_column {
        Some(name) => Some(
            header
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| DatasetError::UnknownLabelColumn(name.to_owned()))?,
        ),
        None => None,
    };
    let feature_names: Vec<String> = header
        .iter()
        .enumerate()
        .filter(|(i, _)| Some(*i) != label_idx)
        .map(|(_, h)| h.clone())
        .collect();
    if feature_names.is_empty() {
        return Err(DatasetError::Invalid("no feature columns".into()));
    }

    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut class_index: HashMap<String, usize> = HashMap::new();
    let mut class_names = Vec::new();
    let mut n = 0;
    for (r, record) in rdr.records().enumerate() {
        let record = record?;
        let row = r + 1;
        if record.len() != header.len() {
            return Err(DatasetError::Ragged {
                row,
                expected: header.len(),
                found: record.len(),
            });
        }
        for (col, cell) in record.iter().enumerate() {
            if Some(col) == label_idx {
                let next = class_names.len();
                let idx = *class_index.entry(cell.to_owned()).or_insert_with(|| {
                    class_names.push(cell.to_owned());
                    next
                });
                labels.push(idx);
                continue;
            }
            let v: f64 = cell.parse().map_err(|_| DatasetError::Parse {
                row,
                column: header[col].clone(),
                value: cell.to_owned(),
            })?;
            if !v.is_finite() {
                return Err(DatasetError::NonFinite {
                    row,
                    column: header[col].clone(),
                });
            }
            values.push(v);
        }
        n += 1;
    }
    if n == 0 {
        return Err(DatasetError::Empty);
    }
    let objects = Array2::from_shape_vec((n, feature_names.len()), values)
        .map_err(|e| DatasetError::Invalid(e.to_string()))?;
    let ds = Dataset::new(objects, feature_names)?;
    match label_idx {
        Some(_) => ds.with_labels(labels, class_names),
        None => Ok(ds),
    }
}

/// Maps every feature onto `[0, 1]` with `(x - min) / (max - min)`.
/// Constant features map to 0.
pub fn normalize_min_max(ds: &Dataset) -> Dataset {
    let ranges = ds.feature_ranges();
    let mut out = ds.clone();
    for (mut col, &(lo, hi)) in out.objects.columns_mut().into_iter().zip(&ranges) {
        let span = hi - lo;
        col.mapv_inplace(|x| if span > 0.0 { (x - lo) / span } else { 0.0 });
    }
    out.normalized = true;
    out
}

/// One train/test partition together with the indices it was built from.
#[derive(Debug, Clone)]
pub struct Split {
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
    pub train: Dataset,
    pub test: Dataset,
}

impl Split {
    fn from_indices(ds: &Dataset, train_indices: Vec<usize>, test_indices: Vec<usize>) -> Self {
        Split {
            train: ds.subset(&train_indices),
            test: ds.subset(&test_indices),
            train_indices,
            test_indices,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SplitKind {
    Holdout { ratio: f64 },
    RandomSubsampling { ratio: f64, repeats: usize },
    KFold { k: usize },
    Bootstrap,
}

/// A resampling strategy plus the seed that drives it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub kind: SplitKind,
    pub seed: u64,
}

impl SplitPlan {
    pub fn apply(&self, ds: &Dataset) -> Result<Vec<Split>, DatasetError> {
        match self.kind {
            SplitKind::Holdout { ratio } => Ok(vec![split_holdout(ds, ratio, self.seed)?]),
            SplitKind::RandomSubsampling { ratio, repeats } => {
                split_random_subsampling(ds, ratio, repeats, self.seed)
            }
            SplitKind::KFold { k } => split_kfold(ds, k, self.seed),
            SplitKind::Bootstrap => Ok(vec![split_bootstrap(ds, self.seed)]),
        }
    }
}

fn shuffled_indices(n: usize, seed: u64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut seeded_rng(seed));
    idx
}

/// Seeded shuffle, then the first `floor(ratio * n)` objects train.
/// Both index lists are returned sorted.
pub fn split_holdout(ds: &Dataset, ratio: f64, seed: u64) -> Result<Split, DatasetError> {
    let n = ds.len();
    let n_train = if ratio > 0.0 && ratio < 1.0 {
        (ratio * n as f64).floor() as usize
    } else {
        0
    };
    if n_train < 1 || n_train > n.saturating_sub(1) {
        return Err(DatasetError::RatioOutOfRange { ratio, n });
    }
    let idx = shuffled_indices(n, seed);
    let mut train = idx[..n_train].to_vec();
    let mut test = idx[n_train..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    Ok(Split::from_indices(ds, train, test))
}

/// `repeats` holdout splits; repetition `t` uses seed `seed + t`.
pub fn split_random_subsampling(
    ds: &Dataset,
    ratio: f64,
    repeats: usize,
    seed: u64,
) -> Result<Vec<Split>, DatasetError> {
    if repeats == 0 {
        return Err(DatasetError::NoRepetitions);
    }
    (0..repeats as u64)
        .map(|t| split_holdout(ds, ratio, seed.wrapping_add(t)))
        .collect()
}

/// Seeded shuffle cut into `k` contiguous folds; the first `n mod k` folds
/// get one extra object. Split `i` tests on fold `i`.
pub fn split_kfold(ds: &Dataset, k: usize, seed: u64) -> Result<Vec<Split>, DatasetError> {
    let n = ds.len();
    if k < 2 || k > n {
        return Err(DatasetError::FoldCount { k, n });
    }
    let idx = shuffled_indices(n, seed);
    let (base, extra) = (n / k, n % k);
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let size = base + usize::from(f < extra);
        let mut fold = idx[start..start + size].to_vec();
        fold.sort_unstable();
        folds.push(fold);
        start += size;
    }
    Ok((0..k)
        .map(|f| {
            let mut train: Vec<usize> = folds
                .iter()
                .enumerate()
                .filter(|(g, _)| *g != f)
                .flat_map(|(_, fold)| fold.iter().copied())
                .collect();
            train.sort_unstable();
            Split::from_indices(ds, train, folds[f].clone())
        })
        .collect())
}

/// `n` uniform draws with replacement train (in draw order, duplicates kept);
/// the never-drawn objects test. The test side may be empty.
pub fn split_bootstrap(ds: &Dataset, seed: u64) -> Split {
    let n = ds.len();
    let mut rng = seeded_rng(seed);
    let train: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
    let mut drawn = vec![false; n];
    for &j in &train {
        drawn[j] = true;
    }
    let test = (0..n).filter(|&j| !drawn[j]).collect();
    Split::from_indices(ds, train, test)
}
