//! The FPM family of clustering loops.
//!
//! Every algorithm alternates a membership step and the weighted-mean
//! centroid step `v_i = sum_j u_ij^m O_j / sum_j u_ij^m`, stopping when the
//! largest squared centroid displacement drops below `epsilon`.
//!
//! * `fpm`, `bfpm`, `bfpm_wfd` use the BFPM membership formula directly
//!   (`bfpm` insists on Euclidean distance, `bfpm_wfd` on a WFD spec).
//! * `fpm1` merges in a per-feature agreement membership every iteration.
//! * `fpm2` runs the plain loop and applies the same merge once at the end.

use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::distance::{DistanceError, DistanceSpec, Family};
use crate::membership::{
    memberships_from_distances, Centroids, ExponentForm, MembershipError, PartitionMatrix, Regime,
};
use crate::seeded_rng;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ClusterError {
    #[error("c exceeds n: {c} clusters for {n} objects")]
    TooManyClusters { c: usize, n: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("every object is at distance zero from every centroid; the distance spec is degenerate")]
    DegenerateDistance,
    #[error("cannot reseed cluster {0}: every object coincides with a remaining centroid")]
    CannotReseed(usize),
    #[error(transparent)]
    Membership(#[from] MembershipError),
    #[error(transparent)]
    Distance(#[from] DistanceError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Fpm,
    Fpm1,
    Fpm2,
    Bfpm,
    BfpmWfd,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::Fpm,
        Algorithm::Fpm1,
        Algorithm::Fpm2,
        Algorithm::Bfpm,
        Algorithm::BfpmWfd,
    ];
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Fpm => "fpm",
            Algorithm::Fpm1 => "fpm1",
            Algorithm::Fpm2 => "fpm2",
            Algorithm::Bfpm => "bfpm",
            Algorithm::BfpmWfd => "bfpm_wfd",
        })
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.to_ascii_lowercase().replace('-', "_");
        Algorithm::ALL
            .into_iter()
            .find(|a| a.to_string() == key)
            .ok_or_else(|| format!("unknown algorithm {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterConfig {
    pub algorithm: Algorithm,
    pub c: usize,
    /// Fuzzification constant, > 1.
    pub m: f64,
    /// Threshold on the largest squared centroid displacement.
    pub epsilon: f64,
    pub max_iter: usize,
    pub seed: u64,
    pub distance: DistanceSpec,
    #[serde(default)]
    pub exponent: ExponentForm,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        ClusterConfig {
            algorithm: Algorithm::Bfpm,
            c: 2,
            m: 2.0,
            epsilon: 1e-6,
            max_iter: 300,
            seed: 42,
            distance: DistanceSpec::euclidean(),
            exponent: ExponentForm::Reciprocal,
        }
    }
}

impl ClusterConfig {
    pub fn new(algorithm: Algorithm, c: usize) -> Self {
        ClusterConfig {
            algorithm,
            c,
            ..Default::default()
        }
    }

    fn check(&self, ds: &Dataset) -> Result<(), ClusterError> {
        if ds.is_empty() {
            return Err(ClusterError::Config("dataset is empty".into()));
        }
        if self.c == 0 {
            return Err(ClusterError::Config("c must be at least 1".into()));
        }
        if self.c > ds.len() {
            return Err(ClusterError::TooManyClusters {
                c: self.c,
                n: ds.len(),
            });
        }
        if !(self.m > 1.0 && self.m.is_finite()) {
            return Err(MembershipError::BadFuzzifier(self.m).into());
        }
        if !(self.epsilon > 0.0) {
            return Err(ClusterError::Config(format!("epsilon must be > 0, got {}", self.epsilon)));
        }
        if self.max_iter == 0 {
            return Err(ClusterError::Config("max_iter must be at least 1".into()));
        }
        self.distance.validate(ds.dim())?;
        Ok(())
    }
}

/// A centroid that was moved during a run because it had no weight or
/// coincided with another centroid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReseedEvent {
    /// Iteration in which it happened; 0 means initialisation.
    pub iteration: usize,
    pub cluster: usize,
    /// Object whose position the centroid took.
    pub object: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterResult {
    pub pm: PartitionMatrix,
    pub cents: Centroids,
    pub iterations: usize,
    pub converged: bool,
    /// `sum_ij u_ij^m D(O_j, v_i)^2` for the returned memberships and centroids.
    pub objective: f64,
    /// The same objective at the start of every iteration.
    pub objective_trace: Vec<f64>,
    pub reseeds: Vec<ReseedEvent>,
}

/// Picks `c` distinct objects by seeded shuffle as initial centroids.
pub fn init_centroids(ds: &Dataset, c: usize, seed: u64) -> Result<Centroids, ClusterError> {
    if c == 0 || c > ds.len() {
        return Err(ClusterError::TooManyClusters { c, n: ds.len() });
    }
    let mut idx: Vec<usize> = (0..ds.len()).collect();
    idx.shuffle(&mut seeded_rng(seed));
    let rows: Vec<Vec<f64>> = idx[..c].iter().map(|&j| ds.object(j).to_vec()).collect();
    Ok(Centroids::from_rows(&rows)?)
}

/// Runs the algorithm named in `cfg`.
pub fn run(ds: &Dataset, cfg: &ClusterConfig) -> Result<ClusterResult, ClusterError> {
    match cfg.algorithm {
        Algorithm::Fpm => run_fpm(ds, cfg),
        Algorithm::Fpm1 => run_fpm1(ds, cfg),
        Algorithm::Fpm2 => run_fpm2(ds, cfg),
        Algorithm::Bfpm => run_bfpm(ds, cfg),
        Algorithm::BfpmWfd => run_bfpm_wfd(ds, cfg),
    }
}

pub fn run_fpm(ds: &Dataset, cfg: &ClusterConfig) -> Result<ClusterResult, ClusterError> {
    let init = seeded_init(ds, cfg)?;
    run_with_init(ds, cfg, init)
}

pub fn run_fpm1(ds: &Dataset, cfg: &ClusterConfig) -> Result<ClusterResult, ClusterError> {
    let init = seeded_init(ds, cfg)?;
    run_with_init(ds, cfg, init)
}

pub fn run_fpm2(ds: &Dataset, cfg: &ClusterConfig) -> Result<ClusterResult, ClusterError> {
    let init = seeded_init(ds, cfg)?;
    run_with_init(ds, cfg, init)
}

pub fn run_bfpm(ds: &Dataset, cfg: &ClusterConfig) -> Result<ClusterResult, ClusterError> {
    let init = seeded_init(ds, cfg)?;
    run_with_init(ds, cfg, init)
}

pub fn run_bfpm_wfd(ds: &Dataset, cfg: &ClusterConfig) -> Result<ClusterResult, ClusterError> {
    let init = seeded_init(ds, cfg)?;
    run_with_init(ds, cfg, init)
}

fn seeded_init(ds: &Dataset, cfg: &ClusterConfig) -> Result<Centroids, ClusterError> {
    cfg.check(ds)?;
    init_centroids(ds, cfg.c, cfg.seed)
}

/// Runs `cfg.algorithm` from caller-supplied initial centroids.
pub fn run_with_init(
    ds: &Dataset,
    cfg: &ClusterConfig,
    init: Centroids,
) -> Result<ClusterResult, ClusterError> {
    cfg.check(ds)?;
    match cfg.algorithm {
        Algorithm::Bfpm if !cfg.distance.is_euclidean() => {
            return Err(ClusterError::Config(format!(
                "bfpm uses Euclidean distance, got {} with p = {}",
                cfg.distance.family, cfg.distance.p
            )));
        }
        Algorithm::BfpmWfd if cfg.distance.family != Family::Wfd => {
            return Err(ClusterError::Config(format!(
                "bfpm_wfd needs a wfd distance, got {}",
                cfg.distance.family
            )));
        }
        _ => {}
    }
    if init.len() != cfg.c {
        return Err(ClusterError::Config(format!(
            "{} initial centroids for c = {}",
            init.len(),
            cfg.c
        )));
    }
    if init.dim() != ds.dim() {
        return Err(MembershipError::Dimension {
            centroids: init.dim(),
            data: ds.dim(),
        }
        .into());
    }

    let merge_each_iteration = cfg.algorithm == Algorithm::Fpm1;
    let merge_at_end = matches!(cfg.algorithm, Algorithm::Fpm1 | Algorithm::Fpm2);

    let mut reseeds = Vec::new();
    let mut cents = init;
    separate_coincident(ds, &cfg.distance, &mut cents, 0, &mut reseeds)?;

    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    while iterations < cfg.max_iter {
        iterations += 1;
        let mut u = membership_matrix(ds, &cents, cfg)?;
        if merge_each_iteration {
            merge_feature_agreement(ds, &cents, &mut u);
        }
        trace.push(objective(ds, &u, &cents, cfg.m, &cfg.distance));
        let next = weighted_means(ds, &u, cfg.m, &cents, &cfg.distance, iterations, &mut reseeds)?;
        let shift = max_squared_shift(&cents, &next);
        cents = next;
        if shift < cfg.epsilon {
            converged = true;
            break;
        }
    }

    let mut u = membership_matrix(ds, &cents, cfg)?;
    if merge_at_end {
        merge_feature_agreement(ds, &cents, &mut u);
    }
    let objective = objective(ds, &u, &cents, cfg.m, &cfg.distance);
    Ok(ClusterResult {
        pm: PartitionMatrix::new(u, Regime::Bfpm)?,
        cents,
        iterations,
        converged,
        objective,
        objective_trace: trace,
        reseeds,
    })
}

/// `c x n` BFPM memberships of every object.
fn membership_matrix(
    ds: &Dataset,
    cents: &Centroids,
    cfg: &ClusterConfig,
) -> Result<Array2<f64>, ClusterError> {
    let c = cents.len();
    let mut u = Array2::zeros((c, ds.len()));
    let mut dist = vec![0.0; c];
    let mut col = vec![0.0; c];
    let mut any_positive = false;
    for j in 0..ds.len() {
        let obj = ds.object(j);
        for (i, d) in dist.iter_mut().enumerate() {
            *d = cfg.distance.eval(obj, cents.centroid(i));
        }
        any_positive |= dist.iter().any(|&d| d > 0.0);
        memberships_from_distances(&dist, cfg.m, cfg.exponent, &mut col);
        for (i, &v) in col.iter().enumerate() {
            u[(i, j)] = v;
        }
    }
    if !any_positive && ds.len() > 1 {
        return Err(ClusterError::DegenerateDistance);
    }
    Ok(u)
}

/// Per-feature agreement weight `max(0, 1 - |v_f - o_f|)`.
pub fn feature_weights(obj: &[f64], centroid: &[f64]) -> Vec<f64> {
    obj.iter()
        .zip(centroid)
        .map(|(o, v)| (1.0 - (v - o).abs()).max(0.0))
        .collect()
}

/// Second-step membership from feature agreement: the mean weight when
/// strictly more than half the features have weight above 0.5 and the
/// distance-based membership is below 0.5, otherwise 0.
pub fn feature_membership(weights: &[f64], distance_membership: f64) -> f64 {
    let d = weights.len();
    let agreeing = weights.iter().filter(|&&w| w > 0.5).count();
    if 2 * agreeing > d && distance_membership < 0.5 {
        weights.iter().sum::<f64>() / d as f64
    } else {
        0.0
    }
}

/// Replaces `u` with `max(u, feature_membership)` elementwise.
fn merge_feature_agreement(ds: &Dataset, cents: &Centroids, u: &mut Array2<f64>) {
    for j in 0..ds.len() {
        for i in 0..cents.len() {
            let w = feature_weights(ds.object(j), cents.centroid(i));
            let second = feature_membership(&w, u[(i, j)]);
            if second > u[(i, j)] {
                u[(i, j)] = second.min(1.0);
            }
        }
    }
}

fn objective(ds: &Dataset, u: &Array2<f64>, cents: &Centroids, m: f64, spec: &DistanceSpec) -> f64 {
    let mut total = 0.0;
    for i in 0..cents.len() {
        for j in 0..ds.len() {
            let d = spec.eval(ds.object(j), cents.centroid(i));
            total += u[(i, j)].powf(m) * d * d;
        }
    }
    total
}

fn max_squared_shift(a: &Centroids, b: &Centroids) -> f64 {
    (0..a.len())
        .map(|i| crate::distance::squared_euclidean(a.centroid(i), b.centroid(i)))
        .fold(0.0, f64::max)
}

/// Centroid step with degenerate-cluster repair.
fn weighted_means(
    ds: &Dataset,
    u: &Array2<f64>,
    m: f64,
    prev: &Centroids,
    spec: &DistanceSpec,
    iteration: usize,
    reseeds: &mut Vec<ReseedEvent>,
) -> Result<Centroids, ClusterError> {
    let (c, d) = (prev.len(), ds.dim());
    let mut next = prev.clone();
    let mut empty = Vec::new();
    for i in 0..c {
        let mut weight = 0.0;
        let mut acc = vec![0.0; d];
        for j in 0..ds.len() {
            let w = u[(i, j)].powf(m);
            if w == 0.0 {
                continue;
            }
            weight += w;
            for (a, x) in acc.iter_mut().zip(ds.object(j)) {
                *a += w * x;
            }
        }
        if weight > 0.0 {
            acc.iter_mut().for_each(|a| *a /= weight);
            next.set(i, &acc);
        } else {
            empty.push(i);
        }
    }
    for i in empty {
        reseed(ds, spec, &mut next, i, iteration, reseeds)?;
    }
    separate_coincident(ds, spec, &mut next, iteration, reseeds)?;
    Ok(next)
}

/// Reseeds any centroid that sits exactly on an earlier one.
fn separate_coincident(
    ds: &Dataset,
    spec: &DistanceSpec,
    cents: &mut Centroids,
    iteration: usize,
    reseeds: &mut Vec<ReseedEvent>,
) -> Result<(), ClusterError> {
    for i in 1..cents.len() {
        if (0..i).any(|k| cents.centroid(k) == cents.centroid(i)) {
            reseed(ds, spec, cents, i, iteration, reseeds)?;
        }
    }
    Ok(())
}

/// Moves centroid `i` to the object farthest from all other centroids.
fn reseed(
    ds: &Dataset,
    spec: &DistanceSpec,
    cents: &mut Centroids,
    i: usize,
    iteration: usize,
    reseeds: &mut Vec<ReseedEvent>,
) -> Result<(), ClusterError> {
    let mut best = None;
    let mut best_d = 0.0;
    for j in 0..ds.len() {
        let nearest = (0..cents.len())
            .filter(|&k| k != i)
            .map(|k| spec.eval(ds.object(j), cents.centroid(k)))
            .fold(f64::INFINITY, f64::min);
        if nearest > best_d {
            best_d = nearest;
            best = Some(j);
        }
    }
    let j = best.ok_or(ClusterError::CannotReseed(i))?;
    log::info!("iteration {iteration}: reseeding cluster {i} at object {j}");
    cents.set(i, ds.object(j));
    reseeds.push(ReseedEvent {
        iteration,
        cluster: i,
        object: j,
    });
    Ok(())
}
