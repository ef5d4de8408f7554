//! Validity indices, label-mapped accuracy, critical objects and mutation
//! reports.
//!
//! DB and CS take a partition and harden it first. CS divides by the sum of
//! nearest-centroid separations. G uses whichever distance the run used.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::distance::{squared_euclidean, DistanceError, DistanceSpec};
use crate::membership::{harden, Centroids, MembershipError, PartitionMatrix};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AnalysisError {
    #[error("partition has {partition} objects, dataset {dataset}")]
    ObjectCount { partition: usize, dataset: usize },
    #[error("partition has {partition} clusters but {centroids} centroids were given")]
    ClusterCount { partition: usize, centroids: usize },
    #[error("need at least {needed} clusters, got {got}")]
    TooFewClusters { needed: usize, got: usize },
    #[error("need at least 2 objects")]
    TooFewObjects,
    #[error("cluster {0} has no members")]
    EmptyCluster(usize),
    #[error("centroids {0} and {1} coincide")]
    CoincidentCentroids(usize, usize),
    #[error("G index undefined: compactness term is zero")]
    ZeroCompactness,
    #[error("{0} labels for {1} objects")]
    LabelCount(usize, usize),
    #[error("epsilon must be positive, got {0}")]
    BadEpsilon(f64),
    #[error("thresholds must lie in [0, 1], got {0}")]
    BadThreshold(f64),
    #[error(transparent)]
    Membership(#[from] MembershipError),
    #[error(transparent)]
    Distance(#[from] DistanceError),
}

fn check_shapes(pm: &PartitionMatrix, cents: &Centroids, ds: &Dataset) -> Result<(), AnalysisError> {
    if pm.objects() != ds.len() {
        return Err(AnalysisError::ObjectCount { partition: pm.objects(), dataset: ds.len() });
    }
    if pm.clusters() != cents.len() {
        return Err(AnalysisError::ClusterCount { partition: pm.clusters(), centroids: cents.len() });
    }
    if cents.dim() != ds.dim() {
        return Err(MembershipError::Dimension { centroids: cents.dim(), data: ds.dim() }.into());
    }
    Ok(())
}

/// Partition coefficient `sum_ij u_ij^2 / n`.
pub fn v_pc(pm: &PartitionMatrix) -> f64 {
    pm.values().iter().map(|u| u * u).sum::<f64>() / pm.objects() as f64
}

/// Partition entropy `-(1/n) sum_ij u_ij ln u_ij`, with `0 ln 0 = 0`.
pub fn v_pe(pm: &PartitionMatrix) -> f64 {
    let s: f64 = pm.values().iter().filter(|&&u| u > 0.0).map(|u| u * u.ln()).sum();
    -s / pm.objects() as f64
}

fn min_centroid_separation(cents: &Centroids) -> Result<f64, AnalysisError> {
    let c = cents.len();
    if c < 2 {
        return Err(AnalysisError::TooFewClusters { needed: 2, got: c });
    }
    let mut best = f64::INFINITY;
    for i in 0..c {
        for k in i + 1..c {
            let d = squared_euclidean(cents.centroid(i), cents.centroid(k));
            if d == 0.0 {
                return Err(AnalysisError::CoincidentCentroids(i, k));
            }
            best = best.min(d);
        }
    }
    Ok(best)
}

/// Xie-Beni: `sum_ij u_ij^2 |O_j - v_i|^2 / (n min_{i != k} |v_i - v_k|^2)`.
pub fn v_xb(pm: &PartitionMatrix, cents: &Centroids, ds: &Dataset) -> Result<f64, AnalysisError> {
    check_shapes(pm, cents, ds)?;
    let sep = min_centroid_separation(cents)?;
    let mut num = 0.0;
    for i in 0..cents.len() {
        for j in 0..ds.len() {
            let u = pm.get(i, j);
            num += u * u * squared_euclidean(ds.object(j), cents.centroid(i));
        }
    }
    Ok(num / (ds.len() as f64 * sep))
}

/// Member lists of the hardened partition; errors on an empty cluster.
fn hard_members(pm: &PartitionMatrix) -> Result<Vec<Vec<usize>>, AnalysisError> {
    let hard = harden(pm)?;
    let mut members = vec![Vec::new(); pm.clusters()];
    for j in 0..pm.objects() {
        members[hard.argmax(j)].push(j);
    }
    if let Some(i) = members.iter().position(Vec::is_empty) {
        return Err(AnalysisError::EmptyCluster(i));
    }
    Ok(members)
}

/// Davies-Bouldin on the hardened partition, with `e_i` the mean squared
/// member distance to centroid `i`.
pub fn db_index(pm: &PartitionMatrix, cents: &Centroids, ds: &Dataset) -> Result<f64, AnalysisError> {
    check_shapes(pm, cents, ds)?;
    min_centroid_separation(cents)?;
    let members = hard_members(pm)?;
    let c = cents.len();
    let spread: Vec<f64> = (0..c)
        .map(|i| {
            let s: f64 = members[i]
                .iter()
                .map(|&j| squared_euclidean(ds.object(j), cents.centroid(i)))
                .sum();
            s / members[i].len() as f64
        })
        .collect();
    let mut total = 0.0;
    for i in 0..c {
        let worst = (0..c)
            .filter(|&k| k != i)
            .map(|k| (spread[i] + spread[k]) / squared_euclidean(cents.centroid(i), cents.centroid(k)).sqrt())
            .fold(f64::NEG_INFINITY, f64::max);
        total += worst;
    }
    Ok(total / c as f64)
}

/// CS index on the hardened partition.
pub fn cs_index(pm: &PartitionMatrix, cents: &Centroids, ds: &Dataset) -> Result<f64, AnalysisError> {
    check_shapes(pm, cents, ds)?;
    min_centroid_separation(cents)?;
    let members = hard_members(pm)?;
    let c = cents.len();
    let mut num = 0.0;
    for group in &members {
        let mut s = 0.0;
        for &j in group {
            s += group
                .iter()
                .map(|&l| squared_euclidean(ds.object(l), ds.object(j)).sqrt())
                .fold(0.0, f64::max);
        }
        num += s / group.len() as f64;
    }
    let den: f64 = (0..c)
        .map(|i| {
            (0..c)
                .filter(|&k| k != i)
                .map(|k| squared_euclidean(cents.centroid(i), cents.centroid(k)).sqrt())
                .fold(f64::INFINITY, f64::min)
        })
        .sum();
    Ok(num / den)
}

/// Separation and compactness terms of the G index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GTerms {
    pub ds_s: f64,
    pub cp: f64,
}

impl GTerms {
    pub fn g(&self) -> Result<f64, AnalysisError> {
        if self.cp == 0.0 {
            return Err(AnalysisError::ZeroCompactness);
        }
        Ok(self.ds_s / self.cp)
    }
}

pub fn g_terms(pm: &PartitionMatrix, ds: &Dataset, spec: &DistanceSpec) -> Result<GTerms, AnalysisError> {
    let n = ds.len();
    if pm.objects() != n {
        return Err(AnalysisError::ObjectCount { partition: pm.objects(), dataset: n });
    }
    if n < 2 {
        return Err(AnalysisError::TooFewObjects);
    }
    spec.validate(ds.dim())?;
    let c = pm.clusters();
    let owner: Vec<usize> = (0..n).map(|j| pm.argmax(j)).collect();
    // best membership of j2 outside cluster i1, for every (i1, j2)
    let mut outside = vec![0.0; c * n];
    for j in 0..n {
        for i1 in 0..c {
            outside[i1 * n + j] = (0..c)
                .filter(|&i| i != i1)
                .map(|i| pm.get(i, j))
                .fold(0.0, f64::max);
        }
    }
    let mut ds_s = 0.0;
    let mut cp = 0.0;
    for j1 in 0..n {
        let top = pm.get(owner[j1], j1);
        for j2 in 0..n {
            if j1 == j2 {
                continue;
            }
            let d = spec.eval(ds.object(j1), ds.object(j2));
            let d2 = d * d;
            ds_s += d2 * top.min(outside[owner[j1] * n + j2]);
            if j1 < j2 {
                let shared: f64 = (0..c).map(|i| pm.get(i, j1).min(pm.get(i, j2))).sum();
                cp += d2 * shared;
            }
        }
    }
    let nf = n as f64;
    Ok(GTerms {
        ds_s: ds_s / (nf * nf),
        cp: cp * 2.0 / (nf * (nf - 1.0)),
    })
}

pub fn g_index(pm: &PartitionMatrix, ds: &Dataset, spec: &DistanceSpec) -> Result<f64, AnalysisError> {
    g_terms(pm, ds, spec)?.g()
}

/// `G / G^y`.
pub fn ig_index(pm: &PartitionMatrix, ds: &Dataset, spec: &DistanceSpec, y: f64) -> Result<f64, AnalysisError> {
    let g = g_index(pm, ds, spec)?;
    Ok(g / g.powf(y))
}

fn check_labels(pm: &PartitionMatrix, truth: &[usize]) -> Result<(), AnalysisError> {
    if truth.len() != pm.objects() {
        return Err(AnalysisError::LabelCount(truth.len(), pm.objects()));
    }
    if truth.is_empty() {
        return Err(AnalysisError::TooFewObjects);
    }
    Ok(())
}

/// `counts[i][l]`: objects hardened into cluster `i` whose truth label is `l`.
fn contingency(pm: &PartitionMatrix, truth: &[usize]) -> Vec<Vec<usize>> {
    let labels = truth.iter().max().map_or(0, |&l| l + 1);
    let mut counts = vec![vec![0; labels]; pm.clusters()];
    for (j, &l) in truth.iter().enumerate() {
        counts[pm.argmax(j)][l] += 1;
    }
    counts
}

/// Cluster-to-label map by majority vote; `None` for empty clusters.
pub fn majority_mapping(pm: &PartitionMatrix, truth: &[usize]) -> Result<Vec<Option<usize>>, AnalysisError> {
    check_labels(pm, truth)?;
    Ok(contingency(pm, truth)
        .into_iter()
        .map(|row| {
            let best = *row.iter().max()?;
            (best > 0).then(|| row.iter().position(|&v| v == best).unwrap())
        })
        .collect())
}

/// Fraction of objects whose cluster's majority label matches their own.
pub fn clustering_accuracy(pm: &PartitionMatrix, truth: &[usize]) -> Result<f64, AnalysisError> {
    let map = majority_mapping(pm, truth)?;
    let hits = truth
        .iter()
        .enumerate()
        .filter(|&(j, &l)| map[pm.argmax(j)] == Some(l))
        .count();
    Ok(hits as f64 / truth.len() as f64)
}

/// Accuracy under the best one-to-one cluster-to-label assignment.
pub fn clustering_accuracy_hungarian(pm: &PartitionMatrix, truth: &[usize]) -> Result<f64, AnalysisError> {
    check_labels(pm, truth)?;
    let counts = contingency(pm, truth);
    let size = counts.len().max(counts[0].len());
    let max = truth.len() as i64;
    let mut cost = vec![vec![max; size]; size];
    for (i, row) in counts.iter().enumerate() {
        for (l, &v) in row.iter().enumerate() {
            cost[i][l] = max - v as i64;
        }
    }
    let assignment = min_cost_assignment(&cost);
    let hits: usize = assignment
        .iter()
        .enumerate()
        .filter(|&(i, &l)| i < counts.len() && l < counts[i].len())
        .map(|(i, &l)| counts[i][l])
        .sum();
    Ok(hits as f64 / truth.len() as f64)
}

/// Kuhn-Munkres with potentials on a square matrix; returns `row -> column`.
fn min_cost_assignment(cost: &[Vec<i64>]) -> Vec<usize> {
    let n = cost.len();
    let inf = i64::MAX / 4;
    // 1-based arrays, column 0 is the virtual start
    let mut u = vec![0i64; n + 1];
    let mut v = vec![0i64; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut row_to_col = vec![0; n];
    for j in 1..=n {
        if p[j] > 0 {
            row_to_col[p[j] - 1] = j - 1;
        }
    }
    row_to_col
}

pub const DEFAULT_MUTATION_THRESHOLDS: [f64; 3] = [0.85, 0.75, 0.70];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MutationEntry {
    pub own_cluster: usize,
    pub own_membership: f64,
    pub runner_up_cluster: usize,
    pub runner_up_membership: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdCount {
    pub threshold: f64,
    /// Objects whose runner-up membership is strictly above `threshold`.
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MutationReport {
    pub per_object: Vec<MutationEntry>,
    pub threshold_counts: Vec<ThresholdCount>,
}

impl MutationReport {
    pub fn count(&self, threshold: f64) -> Option<usize> {
        self.threshold_counts
            .iter()
            .find(|t| t.threshold == threshold)
            .map(|t| t.count)
    }

    /// `object,own_membership,runner_up_membership` rows for plotting.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("object,own_cluster,own_membership,runner_up_cluster,runner_up_membership\n");
        for (j, e) in self.per_object.iter().enumerate() {
            out.push_str(&format!(
                "{j},{},{},{},{}\n",
                e.own_cluster, e.own_membership, e.runner_up_cluster, e.runner_up_membership
            ));
        }
        out
    }
}

pub fn mutation_report(pm: &PartitionMatrix) -> Result<MutationReport, AnalysisError> {
    mutation_report_with(pm, &DEFAULT_MUTATION_THRESHOLDS)
}

pub fn mutation_report_with(pm: &PartitionMatrix, thresholds: &[f64]) -> Result<MutationReport, AnalysisError> {
    let c = pm.clusters();
    if c < 2 {
        return Err(AnalysisError::TooFewClusters { needed: 2, got: c });
    }
    if let Some(&t) = thresholds.iter().find(|t| !(0.0..=1.0).contains(*t)) {
        return Err(AnalysisError::BadThreshold(t));
    }
    let per_object: Vec<MutationEntry> = (0..pm.objects())
        .map(|j| {
            let own = pm.argmax(j);
            let runner = crate::membership::argmax(
                (0..c).map(|i| if i == own { f64::NEG_INFINITY } else { pm.get(i, j) }),
            );
            MutationEntry {
                own_cluster: own,
                own_membership: pm.get(own, j),
                runner_up_cluster: runner,
                runner_up_membership: pm.get(runner, j),
            }
        })
        .collect();
    let threshold_counts = thresholds
        .iter()
        .map(|&threshold| ThresholdCount {
            threshold,
            count: per_object.iter().filter(|e| e.runner_up_membership > threshold).count(),
        })
        .collect();
    Ok(MutationReport { per_object, threshold_counts })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalFlag {
    pub object_index: usize,
    pub epsilon: f64,
    pub clusters_involved: BTreeSet<usize>,
}

/// Objects whose memberships in two or more clusters are within `epsilon`.
///
/// The cluster set grows from the argmax in descending membership order,
/// admitting a positive candidate only when it is within `epsilon` of every
/// cluster already admitted.
pub fn detect_critical(pm: &PartitionMatrix, epsilon: f64) -> Result<Vec<CriticalFlag>, AnalysisError> {
    if !(epsilon > 0.0) {
        return Err(AnalysisError::BadEpsilon(epsilon));
    }
    let mut flags = Vec::new();
    for j in 0..pm.objects() {
        let col = pm.column(j);
        let mut order: Vec<usize> = (0..col.len()).collect();
        order.sort_by(|&a, &b| col[b].total_cmp(&col[a]).then(a.cmp(&b)));
        let mut set = vec![order[0]];
        if col[order[0]] <= 0.0 {
            continue;
        }
        for &i in &order[1..] {
            if col[i] > 0.0 && set.iter().all(|&k| (col[k] - col[i]).abs() < epsilon) {
                set.push(i);
            }
        }
        if set.len() >= 2 {
            flags.push(CriticalFlag {
                object_index: j,
                epsilon,
                clusters_involved: set.into_iter().collect(),
            });
        }
    }
    Ok(flags)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::membership::Regime;
    use approx::assert_relative_eq;

    fn pm(rows: &[&[f64]], regime: Regime) -> PartitionMatrix {
        let rows: Vec<Vec<f64>> = rows.iter().map(|r| r.to_vec()).collect();
        PartitionMatrix::from_rows(&rows, regime).unwrap()
    }

    fn ds(rows: &[&[f64]]) -> Dataset {
        let rows: Vec<Vec<f64>> = rows.iter().map(|r| r.to_vec()).collect();
        Dataset::from_rows(&rows).unwrap()
    }

    fn cents(rows: &[&[f64]]) -> Centroids {
        let rows: Vec<Vec<f64>> = rows.iter().map(|r| r.to_vec()).collect();
        Centroids::from_rows(&rows).unwrap()
    }

    #[test]
    fn pc_and_pe_examples() {
        let hard = pm(&[&[1.0, 0.0, 1.0], &[0.0, 1.0, 0.0]], Regime::Crisp);
        assert_eq!(v_pc(&hard), 1.0);
        assert_eq!(v_pe(&hard), 0.0);
        let half = pm(&[&[0.5, 0.5], &[0.5, 0.5]], Regime::Fuzzy);
        assert_eq!(v_pc(&half), 0.5);
        let one = pm(&[&[0.5], &[0.5]], Regime::Fuzzy);
        assert_relative_eq!(v_pe(&one), std::f64::consts::LN_2, epsilon = 1e-15);
        let mut last = 0.0;
        for t in [0.9, 0.8, 0.7, 0.6, 0.5] {
            let e = v_pe(&pm(&[&[t], &[1.0 - t]], Regime::Fuzzy));
            assert!(e > last);
            last = e;
        }
    }

    #[test]
    fn xb_examples() {
        let data = ds(&[&[0.0], &[1.0]]);
        let c = cents(&[&[0.0], &[1.0]]);
        let hard = pm(&[&[1.0, 0.0], &[0.0, 1.0]], Regime::Crisp);
        assert_eq!(v_xb(&hard, &c, &data).unwrap(), 0.0);
        let single = pm(&[&[1.0], &[0.0]], Regime::Crisp);
        assert_eq!(v_xb(&single, &c, &ds(&[&[0.0]])).unwrap(), 0.0);
        let mid = pm(&[&[0.5], &[0.5]], Regime::Fuzzy);
        assert_relative_eq!(v_xb(&mid, &c, &ds(&[&[0.5]])).unwrap(), 0.125, epsilon = 1e-15);
        let same = cents(&[&[0.5], &[0.5]]);
        assert_eq!(
            v_xb(&mid, &same, &ds(&[&[0.5]])).unwrap_err(),
            AnalysisError::CoincidentCentroids(0, 1)
        );
    }

    #[test]
    fn db_examples() {
        let data = ds(&[&[0.0], &[1.0]]);
        let hard = pm(&[&[1.0, 0.0], &[0.0, 1.0]], Regime::Crisp);
        assert_eq!(db_index(&hard, &cents(&[&[0.0], &[1.0]]), &data).unwrap(), 0.0);

        let part = pm(&[&[1.0, 1.0, 0.0, 0.0], &[0.0, 0.0, 1.0, 1.0]], Regime::Crisp);
        let c = cents(&[&[0.5], &[2.5]]);
        let mut last = f64::INFINITY;
        for spread in [0.4, 0.3, 0.2, 0.1] {
            let d = ds(&[&[0.5 - spread], &[0.5 + spread], &[2.5 - spread], &[2.5 + spread]]);
            let v = db_index(&part, &c, &d).unwrap();
            assert!(v < last);
            last = v;
        }
        let empty = pm(&[&[1.0, 1.0], &[0.0, 0.0]], Regime::Crisp);
        assert_eq!(
            db_index(&empty, &cents(&[&[0.0], &[1.0]]), &data).unwrap_err(),
            AnalysisError::EmptyCluster(1)
        );
    }

    #[test]
    fn g_on_two_separated_objects() {
        let data = ds(&[&[0.0], &[1.0]]);
        let hard = pm(&[&[1.0, 0.0], &[0.0, 1.0]], Regime::Crisp);
        let t = g_terms(&hard, &data, &DistanceSpec::euclidean()).unwrap();
        assert_eq!(t.ds_s, 0.5);
        assert_eq!(t.cp, 0.0);
        assert_eq!(
            g_index(&hard, &data, &DistanceSpec::euclidean()).unwrap_err(),
            AnalysisError::ZeroCompactness
        );
    }

    #[test]
    fn g_separation_grows_with_distance() {
        let u = pm(&[&[0.9, 0.3, 0.6], &[0.2, 0.8, 0.5]], Regime::Bfpm);
        let spec = DistanceSpec::euclidean();
        let mut last = 0.0;
        for scale in [1.0, 2.0, 3.0] {
            let data = ds(&[&[0.0], &[scale], &[scale * 0.4]]);
            let t = g_terms(&u, &data, &spec).unwrap();
            assert!(t.ds_s > last);
            last = t.ds_s;
            assert_eq!(ig_index(&u, &data, &spec, 1.0).unwrap(), 1.0);
        }
    }

    #[test]
    fn accuracy_examples() {
        let hard = pm(&[&[1.0, 1.0, 0.0, 0.0], &[0.0, 0.0, 1.0, 1.0]], Regime::Crisp);
        assert_eq!(clustering_accuracy(&hard, &[1, 1, 0, 0]).unwrap(), 1.0);
        assert_eq!(clustering_accuracy_hungarian(&hard, &[1, 1, 0, 0]).unwrap(), 1.0);
        let lumped = pm(&[&[1.0, 1.0, 1.0, 1.0], &[0.0, 0.0, 0.0, 0.0]], Regime::Crisp);
        assert_eq!(clustering_accuracy(&lumped, &[0, 1, 0, 1]).unwrap(), 0.5);
        assert_eq!(majority_mapping(&lumped, &[0, 1, 0, 1]).unwrap(), vec![Some(0), None]);
        // majority mapping may reuse a label; the one-to-one assignment may not
        let skew = pm(
            &[&[1.0, 1.0, 0.0, 0.0], &[0.0, 0.0, 1.0, 1.0]],
            Regime::Crisp,
        );
        assert_eq!(clustering_accuracy(&skew, &[0, 0, 0, 1]).unwrap(), 0.75);
        assert_eq!(clustering_accuracy_hungarian(&skew, &[0, 0, 0, 1]).unwrap(), 0.75);
        assert_eq!(clustering_accuracy(&skew, &[0, 1, 0, 0]).unwrap(), 0.75);
        let three = pm(
            &[&[1.0, 1.0, 1.0, 0.0, 0.0, 0.0], &[0.0, 0.0, 0.0, 1.0, 1.0, 1.0]],
            Regime::Crisp,
        );
        // both clusters lean to label 0
        assert_eq!(clustering_accuracy(&three, &[0, 0, 1, 0, 0, 1]).unwrap(), 4.0 / 6.0);
        assert_eq!(clustering_accuracy_hungarian(&three, &[0, 0, 1, 0, 0, 1]).unwrap(), 3.0 / 6.0);
    }

    #[test]
    fn hungarian_matches_brute_force() {
        let cost = vec![vec![4, 1, 3], vec![2, 0, 5], vec![3, 2, 2]];
        let a = min_cost_assignment(&cost);
        let total: i64 = a.iter().enumerate().map(|(i, &j)| cost[i][j]).sum();
        assert_eq!(total, 5);
    }

    #[test]
    fn mutation_examples() {
        let hard = pm(&[&[1.0, 0.0], &[0.0, 1.0]], Regime::Crisp);
        let r = mutation_report(&hard).unwrap();
        assert!(r.per_object.iter().all(|e| e.runner_up_membership == 0.0));
        assert!(r.threshold_counts.iter().all(|t| t.count == 0));
        let col = pm(&[&[1.0], &[0.9]], Regime::Bfpm);
        let r = mutation_report(&col).unwrap();
        assert_eq!(r.per_object[0].runner_up_cluster, 1);
        assert_eq!(r.per_object[0].runner_up_membership, 0.9);
        for t in DEFAULT_MUTATION_THRESHOLDS {
            assert_eq!(r.count(t), Some(1));
        }
        assert!(r.to_csv().starts_with("object,"));
        let one = pm(&[&[1.0]], Regime::Crisp);
        assert!(matches!(mutation_report(&one), Err(AnalysisError::TooFewClusters { .. })));
    }

    #[test]
    fn critical_examples() {
        let both = pm(&[&[1.0], &[1.0]], Regime::Bfpm);
        let f = detect_critical(&both, 1e-6).unwrap();
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].clusters_involved, BTreeSet::from([0, 1]));
        let apart = pm(&[&[0.9], &[0.1]], Regime::Fuzzy);
        assert!(detect_critical(&apart, 0.05).unwrap().is_empty());
        let three = pm(&[&[0.8], &[0.78], &[0.2]], Regime::Bfpm);
        let f = detect_critical(&three, 0.05).unwrap();
        assert_eq!(f[0].clusters_involved, BTreeSet::from([0, 1]));
        assert!(detect_critical(&three, 0.0).is_err());
    }

    #[test]
    fn critical_at_tiny_epsilon_finds_ties() {
        let u = pm(
            &[&[0.5, 0.7, 0.3, 0.0], &[0.5, 0.6, 0.3, 0.0], &[0.1, 0.7, 0.2, 1.0]],
            Regime::Bfpm,
        );
        let f = detect_critical(&u, 1e-12).unwrap();
        let objects: Vec<usize> = f.iter().map(|c| c.object_index).collect();
        assert_eq!(objects, vec![0, 1, 2]);
        assert_eq!(f[1].clusters_involved, BTreeSet::from([0, 2]));
    }
}
