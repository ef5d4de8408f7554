//! Partition matrices, the membership regimes, and the BFPM update steps.
//!
//! A partition matrix `U` is `c x n`: entry `(i, j)` is object `j`'s
//! membership in cluster `i`. The regimes nest as
//! crisp ⊆ fuzzy ⊆ possibilistic ⊆ bfpm; [`validate_as`] checks one of them.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::distance::{DistanceError, DistanceSpec};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MembershipError {
    #[error("fuzzification constant m must be > 1, got {0}")]
    BadFuzzifier(f64),
    #[error("at least one centroid is required")]
    NoCentroids,
    #[error("membership ({row}, {col}) is not finite")]
    NonFinite { row: usize, col: usize },
    #[error("cluster {0} has zero total membership")]
    EmptyCluster(usize),
    #[error("object {0} has no positive membership")]
    EmptyColumn(usize),
    #[error("partition has {partition} objects, dataset has {dataset}")]
    ObjectCount { partition: usize, dataset: usize },
    #[error("centroid dimension {centroids} does not match data dimension {data}")]
    Dimension { centroids: usize, data: usize },
    #[error("malformed matrix: {0}")]
    Shape(String),
    #[error(transparent)]
    Distance(#[from] DistanceError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Crisp,
    Fuzzy,
    Possibilistic,
    Bfpm,
}

impl Regime {
    pub const ALL: [Regime; 4] = [Regime::Crisp, Regime::Fuzzy, Regime::Possibilistic, Regime::Bfpm];
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::Crisp => "crisp",
            Regime::Fuzzy => "fuzzy",
            Regime::Possibilistic => "possibilistic",
            Regime::Bfpm => "bfpm",
        })
    }
}

impl FromStr for Regime {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Regime::ALL
            .into_iter()
            .find(|r| r.to_string() == s.to_ascii_lowercase())
            .ok_or_else(|| format!("unknown regime {s:?}"))
    }
}

/// Column tolerance for the fuzzy sum-to-one condition.
pub const FUZZY_SUM_TOLERANCE: f64 = 1e-9;

/// A `c x n` membership matrix with entries clamped to `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "PartitionRepr", try_from = "PartitionRepr")]
pub struct PartitionMatrix {
    u: Array2<f64>,
    regime: Regime,
}

#[derive(Serialize, Deserialize)]
struct PartitionRepr {
    regime: Regime,
    memberships: Vec<Vec<f64>>,
}

impl From<PartitionMatrix> for PartitionRepr {
    fn from(pm: PartitionMatrix) -> Self {
        PartitionRepr {
            regime: pm.regime,
            memberships: pm.u.rows().into_iter().map(|r| r.to_vec()).collect(),
        }
    }
}

impl TryFrom<PartitionRepr> for PartitionMatrix {
    type Error = MembershipError;

    fn try_from(r: PartitionRepr) -> Result<Self, Self::Error> {
        PartitionMatrix::from_rows(&r.memberships, r.regime)
    }
}

impl PartitionMatrix {
    /// Wraps `u` (rows are clusters), clamping every entry into `[0, 1]`.
    pub fn new(mut u: Array2<f64>, regime: Regime) -> Result<Self, MembershipError> {
        if let Some(((row, col), _)) = u.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(MembershipError::NonFinite { row, col });
        }
        u.mapv_inplace(|v| v.clamp(0.0, 1.0));
        Ok(PartitionMatrix { u, regime })
    }

    pub fn from_rows(rows: &[Vec<f64>], regime: Regime) -> Result<Self, MembershipError> {
        let c = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n) {
            return Err(MembershipError::Shape("rows have different lengths".into()));
        }
        let flat = rows.iter().flatten().copied().collect();
        let u = Array2::from_shape_vec((c, n), flat)
            .map_err(|e| MembershipError::Shape(e.to_string()))?;
        Self::new(u, regime)
    }

    pub fn clusters(&self) -> usize {
        self.u.nrows()
    }

    pub fn objects(&self) -> usize {
        self.u.ncols()
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    pub fn with_regime(mut self, regime: Regime) -> Self {
        self.regime = regime;
        self
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.u[(i, j)]
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.u
    }

    /// Memberships of object `j` in every cluster.
    pub fn column(&self, j: usize) -> Vec<f64> {
        self.u.column(j).to_vec()
    }

    /// Cluster with the largest membership for object `j`, lowest index on ties.
    pub fn argmax(&self, j: usize) -> usize {
        argmax(self.u.column(j).iter().copied())
    }

    /// One line per cluster, `n` comma-separated memberships each, with an
    /// optional leading header line `o0,o1,...`.
    pub fn to_csv(&self, header: bool) -> String {
        let mut out = String::new();
        if header {
            let names: Vec<String> = (0..self.objects()).map(|j| format!("o{j}")).collect();
            out.push_str(&names.join(","));
            out.push('\n');
        }
        for row in self.u.rows() {
            let cells: Vec<String> = row.iter().map(f64::to_string).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    /// Parses [`PartitionMatrix::to_csv`] output; a header is detected by
    /// its first cell not being numeric.
    pub fn from_csv(text: &str, regime: Regime) -> Result<Self, MembershipError> {
        let mut rows = Vec::new();
        for (k, line) in text.lines().filter(|l| !l.trim().is_empty()).enumerate() {
            let cells: Vec<&str> = line.split(',').map(str::trim).collect();
            if k == 0 && cells[0].parse::<f64>().is_err() {
                continue;
            }
            let row = cells
                .iter()
                .map(|c| c.parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| MembershipError::Shape(format!("line {}: {e}", k + 1)))?;
            rows.push(row);
        }
        Self::from_rows(&rows, regime)
    }
}

pub(crate) fn argmax(values: impl Iterator<Item = f64>) -> usize {
    let mut best = 0;
    let mut best_v = f64::NEG_INFINITY;
    for (i, v) in values.enumerate() {
        if v > best_v {
            best = i;
            best_v = v;
        }
    }
    best
}

/// `c` prototype vectors in `d` dimensions, one per row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "Vec<Vec<f64>>", try_from = "Vec<Vec<f64>>")]
pub struct Centroids {
    v: Array2<f64>,
}

impl From<Centroids> for Vec<Vec<f64>> {
    fn from(c: Centroids) -> Self {
        c.v.rows().into_iter().map(|r| r.to_vec()).collect()
    }
}

impl TryFrom<Vec<Vec<f64>>> for Centroids {
    type Error = MembershipError;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self, Self::Error> {
        Centroids::from_rows(&rows)
    }
}

impl Centroids {
    pub fn new(v: Array2<f64>) -> Result<Self, MembershipError> {
        if v.nrows() == 0 {
            return Err(MembershipError::NoCentroids);
        }
        if let Some(((row, col), _)) = v.indexed_iter().find(|(_, x)| !x.is_finite()) {
            return Err(MembershipError::NonFinite { row, col });
        }
        Ok(Centroids {
            v: v.as_standard_layout().into_owned(),
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, MembershipError> {
        let c = rows.len();
        let d = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != d) {
            return Err(MembershipError::Shape("centroids have different lengths".into()));
        }
        let flat = rows.iter().flatten().copied().collect();
        let v = Array2::from_shape_vec((c, d), flat)
            .map_err(|e| MembershipError::Shape(e.to_string()))?;
        Self::new(v)
    }

    pub fn len(&self) -> usize {
        self.v.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.v.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.v.ncols()
    }

    pub fn centroid(&self, i: usize) -> &[f64] {
        self.v
            .row(i)
            .to_slice()
            .expect("centroids are kept in standard layout")
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.v
    }

    pub(crate) fn set(&mut self, i: usize, value: &[f64]) {
        self.v.row_mut(i).assign(&Array1::from(value.to_vec()));
    }
}

/// Why a matrix failed a regime check.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub regime: Regime,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "not a valid {} partition: {}", self.regime, self.detail)
    }
}

impl std::error::Error for Violation {}

/// Checks `pm` against its own regime tag.
pub fn validate(pm: &PartitionMatrix) -> Result<(), Violation> {
    validate_as(pm, pm.regime)
}

pub fn is_valid(pm: &PartitionMatrix, regime: Regime) -> bool {
    validate_as(pm, regime).is_ok()
}

/// Checks `pm` against `regime`, reporting the first violated condition.
///
/// * crisp: entries in {0, 1}, every column sums to 1, row sums in (0, n)
/// * fuzzy: column sums within [`FUZZY_SUM_TOLERANCE`] of 1, row sums in (0, n)
/// * possibilistic: every column has a positive entry, row sums in (0, n]
/// * bfpm: every column average in (0, 1], row sums in (0, n]
pub fn validate_as(pm: &PartitionMatrix, regime: Regime) -> Result<(), Violation> {
    let fail = |detail: String| Err(Violation { regime, detail });
    let (c, n) = pm.u.dim();
    if c == 0 || n == 0 {
        return fail("matrix is empty".into());
    }
    if let Some(((i, j), v)) = pm.u.indexed_iter().find(|(_, v)| !(0.0..=1.0).contains(*v)) {
        return fail(format!("u[{i}][{j}] = {v} outside [0, 1]"));
    }
    if regime == Regime::Crisp {
        if let Some(((i, j), v)) = pm.u.indexed_iter().find(|(_, v)| **v != 0.0 && **v != 1.0) {
            return fail(format!("u[{i}][{j}] = {v} is not 0 or 1"));
        }
    }
    for (j, col) in pm.u.columns().into_iter().enumerate() {
        let sum: f64 = col.sum();
        match regime {
            Regime::Crisp if sum != 1.0 => {
                return fail(format!("column {j} sums to {sum}, not 1"));
            }
            Regime::Fuzzy if (sum - 1.0).abs() > FUZZY_SUM_TOLERANCE => {
                return fail(format!("column {j} sums to {sum}, not 1"));
            }
            Regime::Possibilistic if !col.iter().any(|&v| v > 0.0) => {
                return fail(format!("column {j} has no positive membership"));
            }
            Regime::Bfpm => {
                let avg = sum / c as f64;
                if !(avg > 0.0 && avg <= 1.0) {
                    return fail(format!("column {j} average {avg} outside (0, 1]"));
                }
            }
            _ => {}
        }
    }
    let n_f = n as f64;
    for (i, row) in pm.u.rows().into_iter().enumerate() {
        let sum: f64 = row.sum();
        let ok = match regime {
            Regime::Crisp | Regime::Fuzzy => sum > 0.0 && sum < n_f,
            Regime::Possibilistic | Regime::Bfpm => sum > 0.0 && sum <= n_f,
        };
        if !ok {
            return fail(format!("row {i} sums to {sum}, outside the allowed range for n = {n}"));
        }
    }
    Ok(())
}

/// Every regime whose validator accepts the raw values of `pm`.
pub fn accepting_regimes(pm: &PartitionMatrix) -> Vec<Regime> {
    Regime::ALL.into_iter().filter(|&r| is_valid(pm, r)).collect()
}

/// Which exponent the membership formula uses.
///
/// `Reciprocal` is `[sum_k (d_i/d_k)^(2/(m-1))]^(-1/m)`, which is 1 at a
/// centroid and decays with distance. `Positive` keeps the positive `1/m`
/// exponent; since the bracket is always >= 1 it clamps to 1 everywhere
/// and exists only for comparison runs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExponentForm {
    #[default]
    Reciprocal,
    Positive,
}

/// BFPM memberships of one object given its distances to each centroid.
///
/// Clusters at distance zero get membership 1 and are left out of the
/// ratios for the others. Writes into `out`, which must be `distances.len()`.
pub fn memberships_from_distances(distances: &[f64], m: f64, form: ExponentForm, out: &mut [f64]) {
    let expo = 2.0 / (m - 1.0);
    let outer = match form {
        ExponentForm::Reciprocal => -1.0 / m,
        ExponentForm::Positive => 1.0 / m,
    };
    for (i, &di) in distances.iter().enumerate() {
        if di == 0.0 {
            out[i] = 1.0;
            continue;
        }
        let mut sum = 0.0;
        for &dk in distances {
            if dk > 0.0 {
                sum += ratio_pow(di / dk, expo);
            }
        }
        out[i] = sum.powf(outer).clamp(0.0, 1.0);
    }
}

#[inline]
fn ratio_pow(x: f64, e: f64) -> f64 {
    if e == 2.0 {
        x * x
    } else {
        x.powf(e)
    }
}

/// BFPM memberships of `obj` in each cluster of `cents`.
pub fn bfpm_membership(
    obj: &[f64],
    cents: &Centroids,
    m: f64,
    spec: &DistanceSpec,
) -> Result<Vec<f64>, MembershipError> {
    bfpm_membership_with(obj, cents, m, spec, ExponentForm::Reciprocal)
}

pub fn bfpm_membership_with(
    obj: &[f64],
    cents: &Centroids,
    m: f64,
    spec: &DistanceSpec,
    form: ExponentForm,
) -> Result<Vec<f64>, MembershipError> {
    if !(m > 1.0 && m.is_finite()) {
        return Err(MembershipError::BadFuzzifier(m));
    }
    if cents.is_empty() {
        return Err(MembershipError::NoCentroids);
    }
    if cents.dim() != obj.len() {
        return Err(MembershipError::Dimension {
            centroids: cents.dim(),
            data: obj.len(),
        });
    }
    spec.validate(obj.len())?;
    let distances: Vec<f64> = (0..cents.len())
        .map(|i| spec.eval(obj, cents.centroid(i)))
        .collect();
    let mut u = vec![0.0; cents.len()];
    memberships_from_distances(&distances, m, form, &mut u);
    Ok(u)
}

/// `v_i = sum_j u_ij^m O_j / sum_j u_ij^m`, summed in object order.
pub fn update_centroids(ds: &Dataset, pm: &PartitionMatrix, m: f64) -> Result<Centroids, MembershipError> {
    if !(m > 1.0 && m.is_finite()) {
        return Err(MembershipError::BadFuzzifier(m));
    }
    if pm.objects() != ds.len() {
        return Err(MembershipError::ObjectCount {
            partition: pm.objects(),
            dataset: ds.len(),
        });
    }
    let (c, d) = (pm.clusters(), ds.dim());
    let mut v = Array2::zeros((c, d));
    for i in 0..c {
        let mut weight = 0.0;
        let mut acc = vec![0.0; d];
        for j in 0..ds.len() {
            let w = pm.u[(i, j)].powf(m);
            if w == 0.0 {
                continue;
            }
            weight += w;
            for (a, x) in acc.iter_mut().zip(ds.object(j)) {
                *a += w * x;
            }
        }
        if weight <= 0.0 {
            return Err(MembershipError::EmptyCluster(i));
        }
        for (f, a) in acc.into_iter().enumerate() {
            v[(i, f)] = a / weight;
        }
    }
    Centroids::new(v)
}

/// Per-column argmax set to 1, everything else 0; lowest index wins ties.
pub fn harden(pm: &PartitionMatrix) -> Result<PartitionMatrix, MembershipError> {
    let (c, n) = pm.u.dim();
    let mut hard = Array2::zeros((c, n));
    for j in 0..n {
        if !pm.u.column(j).iter().any(|&v| v > 0.0) {
            return Err(MembershipError::EmptyColumn(j));
        }
        hard[(pm.argmax(j), j)] = 1.0;
    }
    Ok(PartitionMatrix {
        u: hard,
        regime: Regime::Crisp,
    })
}
