//! BFPCM: a nearest-prototype classifier with bounded memberships, plus
//! binary confusion-matrix metrics and regression-style error measures.
//!
//! For a test object and class `i`, with `delta'` the smallest squared
//! Euclidean distance to a training object of class `i` and `delta''` the
//! smallest feature-weighted squared distance divided by `d`:
//!
//! ```text
//! u'  = clamp(1 - delta' / d)
//! u'' = clamp(1 - delta'')
//! u   = (u' + u'') / 2
//! ```
//!
//! With normalised data the squared distance is at most `d`, so both parts
//! land in `[0, 1]`.

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::distance::{DistanceError, DistanceSpec};
use crate::membership::{argmax, MembershipError, PartitionMatrix, Regime};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ClassifyError {
    #[error("training data has no labels")]
    Unlabeled,
    #[error("training data is empty")]
    EmptyTraining,
    #[error("class {0} has no training objects")]
    MissingClass(usize),
    #[error("dimension mismatch: model has {model} features, test data {test}")]
    Dimension { model: usize, test: usize },
    #[error("{weights} feature weights for {d} features")]
    WeightLength { weights: usize, d: usize },
    #[error("feature weights must be finite and non-negative")]
    BadWeight,
    #[error("no test objects")]
    NoTestObjects,
    #[error("prediction and truth lengths differ: {pred} vs {truth}")]
    LengthMismatch { pred: usize, truth: usize },
    #[error("empty input")]
    Empty,
    #[error("relative error undefined: truth values are constant")]
    ConstantTruth,
    #[error(transparent)]
    Membership(#[from] MembershipError),
    #[error(transparent)]
    Distance(#[from] DistanceError),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassifierModel {
    pub train: Dataset,
    pub c: usize,
    pub feature_weights: Vec<f64>,
    /// Carried for reporting; the vector-space part is always squared Euclidean.
    pub distance: DistanceSpec,
}

impl ClassifierModel {
    /// Model with unit feature weights over every class seen in `train`.
    pub fn new(train: Dataset) -> Result<Self, ClassifyError> {
        let d = train.dim();
        Self::with_weights(train, vec![1.0; d])
    }

    pub fn with_weights(train: Dataset, feature_weights: Vec<f64>) -> Result<Self, ClassifyError> {
        let labels = train.labels().ok_or(ClassifyError::Unlabeled)?;
        if train.is_empty() {
            return Err(ClassifyError::EmptyTraining);
        }
        if feature_weights.len() != train.dim() {
            return Err(ClassifyError::WeightLength {
                weights: feature_weights.len(),
                d: train.dim(),
            });
        }
        if feature_weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(ClassifyError::BadWeight);
        }
        let c = train.n_classes().max(labels.iter().max().map_or(0, |&l| l + 1));
        if let Some(missing) = (0..c).find(|i| !labels.contains(i)) {
            return Err(ClassifyError::MissingClass(missing));
        }
        Ok(ClassifierModel {
            train,
            c,
            feature_weights,
            distance: DistanceSpec::euclidean(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Classification {
    pub pm: PartitionMatrix,
    pub predicted: Vec<usize>,
}

/// Memberships of every test object in every class, plus argmax labels.
pub fn bfpcm_classify(model: &ClassifierModel, test: &Dataset) -> Result<Classification, ClassifyError> {
    let d = model.train.dim();
    if test.dim() != d {
        return Err(ClassifyError::Dimension { model: d, test: test.dim() });
    }
    if test.is_empty() {
        return Err(ClassifyError::NoTestObjects);
    }
    let labels = model.train.labels().ok_or(ClassifyError::Unlabeled)?;
    let df = d as f64;
    let n = test.len();
    let mut u = ndarray::Array2::zeros((model.c, n));
    let mut predicted = Vec::with_capacity(n);
    for j in 0..n {
        let x = test.object(j);
        let mut best_sq = vec![f64::INFINITY; model.c];
        let mut best_weighted = vec![f64::INFINITY; model.c];
        for (l, &class) in labels.iter().enumerate() {
            let t = model.train.object(l);
            let mut sq = 0.0;
            let mut weighted = 0.0;
            for ((a, b), w) in x.iter().zip(t).zip(&model.feature_weights) {
                let diff = (a - b) * (a - b);
                sq += diff;
                weighted += diff * w;
            }
            best_sq[class] = best_sq[class].min(sq);
            best_weighted[class] = best_weighted[class].min(weighted / df);
        }
        for i in 0..model.c {
            let first = (1.0 - best_sq[i] / df).clamp(0.0, 1.0);
            let second = (1.0 - best_weighted[i]).clamp(0.0, 1.0);
            u[(i, j)] = (first + second) / 2.0;
        }
        predicted.push(argmax(u.column(j).iter().copied()));
    }
    Ok(Classification {
        pm: PartitionMatrix::new(u, Regime::Bfpm)?,
        predicted,
    })
}

/// Binary counts with one class treated as positive and the rest negative.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub t_pos: usize,
    pub f_neg: usize,
    pub f_pos: usize,
    pub t_neg: usize,
}

impl ConfusionMatrix {
    pub fn pos(&self) -> usize {
        self.t_pos + self.f_neg
    }

    pub fn neg(&self) -> usize {
        self.f_pos + self.t_neg
    }

    pub fn total(&self) -> usize {
        self.pos() + self.neg()
    }
}

pub fn confusion(pred: &[usize], truth: &[usize], positive_class: usize) -> Result<ConfusionMatrix, ClassifyError> {
    if pred.len() != truth.len() {
        return Err(ClassifyError::LengthMismatch { pred: pred.len(), truth: truth.len() });
    }
    if pred.is_empty() {
        return Err(ClassifyError::Empty);
    }
    let mut cm = ConfusionMatrix::default();
    for (&p, &t) in pred.iter().zip(truth) {
        match (t == positive_class, p == positive_class) {
            (true, true) => cm.t_pos += 1,
            (true, false) => cm.f_neg += 1,
            (false, true) => cm.f_pos += 1,
            (false, false) => cm.t_neg += 1,
        }
    }
    Ok(cm)
}

/// Ratios are `None` when their denominator is zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    pub precision: Option<f64>,
    pub accuracy: Option<f64>,
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

pub fn metrics(cm: &ConfusionMatrix) -> Metrics {
    Metrics {
        sensitivity: ratio(cm.t_pos, cm.pos()),
        specificity: ratio(cm.t_neg, cm.neg()),
        precision: ratio(cm.t_pos, cm.t_pos + cm.f_pos),
        accuracy: ratio(cm.t_pos + cm.t_neg, cm.total()),
    }
}

/// Fraction of equal entries.
pub fn accuracy(pred: &[usize], truth: &[usize]) -> Result<f64, ClassifyError> {
    if pred.len() != truth.len() {
        return Err(ClassifyError::LengthMismatch { pred: pred.len(), truth: truth.len() });
    }
    if pred.is_empty() {
        return Err(ClassifyError::Empty);
    }
    let hits = pred.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(hits as f64 / pred.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorMeasures {
    /// `|y' - y|` per element.
    pub absolute: Vec<f64>,
    /// `(y' - y)^2` per element.
    pub squared: Vec<f64>,
    pub mean_absolute: f64,
    pub mean_squared: f64,
    /// `sum |y' - y| / sum |y - mean(y)|`.
    pub relative_absolute: f64,
    /// `sum (y' - y)^2 / sum (y - mean(y))^2`.
    pub relative_squared: f64,
}

pub fn error_measures(pred: &[f64], truth: &[f64]) -> Result<ErrorMeasures, ClassifyError> {
    if pred.len() != truth.len() {
        return Err(ClassifyError::LengthMismatch { pred: pred.len(), truth: truth.len() });
    }
    if pred.is_empty() {
        return Err(ClassifyError::Empty);
    }
    let n = truth.len() as f64;
    let mean = truth.iter().sum::<f64>() / n;
    let absolute: Vec<f64> = pred.iter().zip(truth).map(|(p, t)| (p - t).abs()).collect();
    let squared: Vec<f64> = absolute.iter().map(|a| a * a).collect();
    let abs_den: f64 = truth.iter().map(|t| (t - mean).abs()).sum();
    let sq_den: f64 = truth.iter().map(|t| (t - mean) * (t - mean)).sum();
    if abs_den == 0.0 || sq_den == 0.0 {
        return Err(ClassifyError::ConstantTruth);
    }
    let abs_sum: f64 = absolute.iter().sum();
    let sq_sum: f64 = squared.iter().sum();
    Ok(ErrorMeasures {
        mean_absolute: abs_sum / n,
        mean_squared: sq_sum / n,
        relative_absolute: abs_sum / abs_den,
        relative_squared: sq_sum / sq_den,
        absolute,
        squared,
    })
}
