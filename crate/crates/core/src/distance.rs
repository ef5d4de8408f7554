//! Minkowski, weighted feature (WFD) and prioritised weighted feature
//! (PWFD) distances, and dominant-feature detection.
//!
//! All three families share one kernel. For feature `f` the term is
//!
//! ```text
//! lp:    |a_f - b_f|
//! wfd:   |w_f a_f - w'_f b_f|
//! pwfd:  |w_f a_f - w'_f b_f| / w''_f
//! ```
//!
//! and the distance is `(sum_f term_f^p)^(1/r)`, with `r = p` for `lp`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DistanceError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("{which} weights have {len} entries for {d} features")]
    WeightLength {
        which: &'static str,
        len: usize,
        d: usize,
    },
    #[error("{which} weights contain a non-finite entry")]
    NonFiniteWeight { which: &'static str },
    #[error("priority weight {index} must be strictly positive, got {value}")]
    NonPositivePriority { index: usize, value: f64 },
    #[error("exponent {name} must be finite and >= 1, got {value}")]
    BadExponent { name: &'static str, value: f64 },
    #[error("dominant-feature detection needs at least 2 features, got {0}")]
    TooFewFeatures(usize),
    #[error("lambda must be positive, got {0}")]
    BadLambda(f64),
    #[error("cannot parse weights {0:?}")]
    ParseWeights(String),
    #[error("unknown distance family {0:?}")]
    UnknownFamily(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Lp,
    Wfd,
    Pwfd,
}

impl FromStr for Family {
    type Err = DistanceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "lp" | "minkowski" | "euclidean" => Ok(Family::Lp),
            "wfd" => Ok(Family::Wfd),
            "pwfd" => Ok(Family::Pwfd),
            _ => Err(DistanceError::UnknownFamily(s.to_owned())),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Lp => "lp",
            Family::Wfd => "wfd",
            Family::Pwfd => "pwfd",
        })
    }
}

/// A per-feature weight vector, possibly given by a dimension-independent
/// rule.
///
/// Text form: `uniform:VALUE` where `VALUE` is a number, a fraction such
/// as `1/3`, or `1/d` (one over the feature count); otherwise a
/// comma-separated literal list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Weights {
    Uniform(f64),
    InverseDim,
    Explicit(Vec<f64>),
}

impl Weights {
    pub fn ones() -> Self {
        Weights::Uniform(1.0)
    }

    #[inline]
    pub fn get(&self, f: usize, d: usize) -> f64 {
        match self {
            Weights::Uniform(v) => *v,
            Weights::InverseDim => 1.0 / d as f64,
            Weights::Explicit(w) => w[f],
        }
    }

    /// Materialises the weights for `d` features.
    pub fn resolve(&self, d: usize) -> Vec<f64> {
        (0..d).map(|f| self.get(f, d)).collect()
    }

    fn check(&self, which: &'static str, d: usize) -> Result<(), DistanceError> {
        if let Weights::Explicit(w) = self {
            if w.len() != d {
                return Err(DistanceError::WeightLength { which, len: w.len(), d });
            }
        }
        if (0..d).any(|f| !self.get(f, d).is_finite()) {
            return Err(DistanceError::NonFiniteWeight { which });
        }
        Ok(())
    }
}

impl Default for Weights {
    fn default() -> Self {
        Weights::ones()
    }
}

fn parse_number(s: &str) -> Option<f64> {
    match s.split_once('/') {
        Some((num, den)) => {
            let num: f64 = num.trim().parse().ok()?;
            let den: f64 = den.trim().parse().ok()?;
            Some(num / den)
        }
        None => s.trim().parse().ok(),
    }
}

impl FromStr for Weights {
    type Err = DistanceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || DistanceError::ParseWeights(s.to_owned());
        let s = s.trim();
        if let Some(rest) = s.strip_prefix("uniform:") {
            let rest = rest.trim();
            if rest.replace(' ', "") == "1/d" {
                return Ok(Weights::InverseDim);
            }
            return parse_number(rest).map(Weights::Uniform).ok_or_else(err);
        }
        let values: Option<Vec<f64>> = s.split(',').map(parse_number).collect();
        match values {
            Some(v) if !v.is_empty() => Ok(Weights::Explicit(v)),
            _ => Err(err()),
        }
    }
}

impl fmt::Display for Weights {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Weights::Uniform(v) => write!(f, "uniform:{v}"),
            Weights::InverseDim => f.write_str("uniform:1/d"),
            Weights::Explicit(w) => {
                let parts: Vec<String> = w.iter().map(f64::to_string).collect();
                f.write_str(&parts.join(","))
            }
        }
    }
}

impl From<Weights> for String {
    fn from(w: Weights) -> Self {
        w.to_string()
    }
}

impl TryFrom<String> for Weights {
    type Error = DistanceError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

/// Which distance to use and with which exponents and weights.
///
/// `w` applies to the first argument of [`distance`], `w_prime` to the
/// second; `w_dprime` divides each term and is only read by
/// [`Family::Pwfd`]. For [`Family::Lp`] all weights are ignored and the
/// root exponent is `p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceSpec {
    pub family: Family,
    pub p: f64,
    pub r: f64,
    pub w: Weights,
    pub w_prime: Weights,
    pub w_dprime: Weights,
}

impl Default for DistanceSpec {
    fn default() -> Self {
        Self::euclidean()
    }
}

impl DistanceSpec {
    pub fn euclidean() -> Self {
        Self::lp(2.0)
    }

    pub fn lp(p: f64) -> Self {
        DistanceSpec {
            family: Family::Lp,
            p,
            r: p,
            w: Weights::ones(),
            w_prime: Weights::ones(),
            w_dprime: Weights::ones(),
        }
    }

    pub fn wfd(p: f64, w: Weights, w_prime: Weights) -> Self {
        DistanceSpec {
            family: Family::Wfd,
            w,
            w_prime,
            ..Self::lp(p)
        }
    }

    pub fn pwfd(p: f64, w: Weights, w_prime: Weights, w_dprime: Weights) -> Self {
        DistanceSpec {
            family: Family::Pwfd,
            w,
            w_prime,
            w_dprime,
            ..Self::lp(p)
        }
    }

    /// Overrides the outer root exponent (it defaults to `p`).
    pub fn with_root(mut self, r: f64) -> Self {
        self.r = r;
        self
    }

    pub fn is_euclidean(&self) -> bool {
        self.family == Family::Lp && self.p == 2.0
    }

    /// Checks exponents and weights against a feature count.
    pub fn validate(&self, d: usize) -> Result<(), DistanceError> {
        for (name, value) in [("p", self.p), ("r", self.r)] {
            if !(value.is_finite() && value >= 1.0) {
                return Err(DistanceError::BadExponent { name, value });
            }
        }
        if self.family == Family::Lp {
            return Ok(());
        }
        self.w.check("first-object", d)?;
        self.w_prime.check("second-object", d)?;
        if self.family == Family::Pwfd {
            self.w_dprime.check("priority", d)?;
            for f in 0..d {
                let value = self.w_dprime.get(f, d);
                if value <= 0.0 {
                    return Err(DistanceError::NonPositivePriority { index: f, value });
                }
            }
        }
        Ok(())
    }

    /// `sum_f term_f^p` without the outer root. Inputs must already be
    /// validated with [`DistanceSpec::validate`].
    #[inline]
    pub fn power_sum(&self, a: &[f64], b: &[f64]) -> f64 {
        let d = a.len();
        let mut sum = 0.0;
        for f in 0..d {
            let t = match self.family {
                Family::Lp => (a[f] - b[f]).abs(),
                Family::Wfd => (self.w.get(f, d) * a[f] - self.w_prime.get(f, d) * b[f]).abs(),
                Family::Pwfd => {
                    (self.w.get(f, d) * a[f] - self.w_prime.get(f, d) * b[f]).abs()
                        / self.w_dprime.get(f, d)
                }
            };
            sum += pow(t, self.p);
        }
        sum
    }

    /// Distance between validated inputs of equal length.
    #[inline]
    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        let root = match self.family {
            Family::Lp => self.p,
            _ => self.r,
        };
        root_of(self.power_sum(a, b), root)
    }
}

#[inline]
fn pow(t: f64, p: f64) -> f64 {
    if p == 1.0 {
        t
    } else if p == 2.0 {
        t * t
    } else {
        t.powf(p)
    }
}

#[inline]
fn root_of(s: f64, r: f64) -> f64 {
    if r == 1.0 {
        s
    } else if r == 2.0 {
        s.sqrt()
    } else {
        s.powf(1.0 / r)
    }
}

/// Distance between `a` and `b` under `spec`, with full input checks.
pub fn distance(a: &[f64], b: &[f64], spec: &DistanceSpec) -> Result<f64, DistanceError> {
    if a.len() != b.len() {
        return Err(DistanceError::DimensionMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    spec.validate(a.len())?;
    Ok(spec.eval(a, b))
}

/// Squared Euclidean distance.
#[inline]
pub fn squared_euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Population mean and variance (divisor `d`). Panics on an empty slice.
pub fn mean_variance(x: &[f64]) -> (f64, f64) {
    assert!(!x.is_empty(), "mean_variance of an empty vector");
    let d = x.len() as f64;
    let mean = x.iter().sum::<f64>() / d;
    let variance = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / d;
    (mean, variance)
}

/// Outcome of [`detect_dominant`] for one feature vector.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DominantReport {
    pub feature_flags: Vec<bool>,
    pub mean: f64,
    pub variance: f64,
    pub lambda: f64,
}

impl DominantReport {
    pub fn dominant_features(&self) -> Vec<usize> {
        self.feature_flags
            .iter()
            .enumerate()
            .filter_map(|(f, &on)| on.then_some(f))
            .collect()
    }
}

/// Default threshold coefficient for [`detect_dominant`].
pub const DEFAULT_LAMBDA: f64 = 2.0;

/// Flags feature `f` when `|x_f - mean| > lambda * variance` or
/// `|x_f| > lambda * |mean|`.
pub fn detect_dominant(x: &[f64], lambda: f64) -> Result<DominantReport, DistanceError> {
    if x.len() < 2 {
        return Err(DistanceError::TooFewFeatures(x.len()));
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(DistanceError::BadLambda(lambda));
    }
    let (mean, variance) = mean_variance(x);
    let feature_flags = x
        .iter()
        .map(|&v| (v - mean).abs() > lambda * variance || v.abs() > lambda * mean.abs())
        .collect();
    Ok(DominantReport {
        feature_flags,
        mean,
        variance,
        lambda,
    })
}
