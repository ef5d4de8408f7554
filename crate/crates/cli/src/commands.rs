use std::io::BufRead;
use std::path::Path;

use bfpm::analysis::{
    clustering_accuracy, clustering_accuracy_hungarian, cs_index, db_index, detect_critical, g_index,
    ig_index, mutation_report_with, v_pc, v_pe, v_xb, CriticalFlag, MutationReport,
};
use bfpm::classify::{bfpcm_classify, confusion, error_measures, ErrorMeasures, Metrics};
use bfpm::clustering::{run, ReseedEvent};
use bfpm::dataset::{load_csv, normalize_min_max};
use bfpm::distance::detect_dominant;
use bfpm::membership::harden;
use bfpm::{
    Algorithm, Centroids, ClassifierModel, ClusterConfig, ConfusionMatrix, Dataset, DistanceSpec,
    PartitionMatrix, Regime, SplitPlan, Weights,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{Command, Format, LabelChoice, Settings, SplitChoice};
use crate::error::CliError;
use crate::output::{emit, num, to_json};

/// Loads `path` with the chosen label column and min-max normalises it.
pub fn load_dataset(path: &Path, labels: &LabelChoice) -> Result<Dataset, CliError> {
    let column = match labels {
        LabelChoice::None => None,
        LabelChoice::Column(c) => Some(c.clone()),
        LabelChoice::Auto => detect_label_column(path)?,
    };
    let ds = load_csv(path, column.as_deref())?;
    Ok(normalize_min_max(&ds))
}

fn detect_label_column(path: &Path) -> Result<Option<String>, CliError> {
    let file = std::fs::File::open(path)
        .map_err(|e| CliError::Runtime(format!("cannot open {}: {e}", path.display())))?;
    let mut header = String::new();
    std::io::BufReader::new(file).read_line(&mut header)?;
    Ok(header
        .trim()
        .split(',')
        .map(|h| h.trim().trim_matches('"'))
        .find(|h| h.eq_ignore_ascii_case("class") || h.eq_ignore_ascii_case("label"))
        .map(str::to_string))
}

/// Runs `cmd` and returns the text it would write plus a summary line.
pub fn execute(cmd: &Command, s: &Settings) -> Result<(String, String), CliError> {
    let ds = load_dataset(cmd.dataset(), &s.label_column)?;
    match cmd {
        Command::Cluster { .. } => cmd_cluster(&ds, s),
        Command::Classify { .. } => cmd_classify(&ds, s),
        Command::Validate { .. } => cmd_validate(&ds, s),
        Command::Mutation { .. } => cmd_mutation(&ds, s),
        Command::Split { .. } => cmd_split(&ds, s),
        Command::Sweep { .. } => cmd_sweep(&ds, s),
    }
}

pub fn run_and_write(cmd: &Command, s: &Settings) -> Result<(), CliError> {
    let (text, summary) = execute(cmd, s)?;
    emit(s.output.as_deref(), &text)?;
    if !summary.is_empty() {
        eprintln!("{summary}");
    }
    Ok(())
}

fn accuracy(pm: &PartitionMatrix, ds: &Dataset, hungarian: bool) -> Result<Option<f64>, CliError> {
    let Some(truth) = ds.labels() else { return Ok(None) };
    let acc = if hungarian {
        clustering_accuracy_hungarian(pm, truth)?
    } else {
        clustering_accuracy(pm, truth)?
    };
    Ok(Some(acc))
}

fn clustered(ds: &Dataset, s: &Settings) -> Result<(bfpm::ClusterResult, PartitionMatrix), CliError> {
    let res = run(ds, &s.cluster)?;
    let pm = if s.harden_first { harden(&res.pm)? } else { res.pm.clone() };
    Ok((res, pm))
}

fn rows(pm: &PartitionMatrix) -> Vec<Vec<f64>> {
    pm.values().rows().into_iter().map(|r| r.to_vec()).collect()
}

fn centroid_rows(c: &Centroids) -> Vec<Vec<f64>> {
    (0..c.len()).map(|i| c.centroid(i).to_vec()).collect()
}

#[derive(Debug, Serialize, Deserialize)]
pub struct DominantSummary {
    pub lambda: f64,
    pub objects_flagged: usize,
    pub per_feature: Vec<usize>,
}

fn dominant_summary(ds: &Dataset, lambda: f64) -> Result<Option<DominantSummary>, CliError> {
    if ds.dim() < 2 {
        return Ok(None);
    }
    let mut per_feature = vec![0; ds.dim()];
    let mut objects_flagged = 0;
    for j in 0..ds.len() {
        let report = detect_dominant(ds.object(j), lambda)?;
        let flagged = report.dominant_features();
        objects_flagged += usize::from(!flagged.is_empty());
        for f in flagged {
            per_feature[f] += 1;
        }
    }
    Ok(Some(DominantSummary { lambda, objects_flagged, per_feature }))
}

/// JSON shape of `cluster` and the input shape of `validate --result`.
#[derive(Debug, Serialize, Deserialize)]
pub struct ClusterReport {
    pub config: ClusterConfig,
    pub regime: Regime,
    pub memberships: Vec<Vec<f64>>,
    pub centroids: Vec<Vec<f64>>,
    pub iterations: usize,
    pub converged: bool,
    pub objective: f64,
    pub reseeds: Vec<ReseedEvent>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accuracy: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dominant: Option<DominantSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub critical: Option<Vec<CriticalFlag>>,
}

fn cmd_cluster(ds: &Dataset, s: &Settings) -> Result<(String, String), CliError> {
    let (res, pm) = clustered(ds, s)?;
    let acc = accuracy(&pm, ds, s.hungarian)?;
    let critical = s.critical_epsilon.map(|e| detect_critical(&pm, e)).transpose()?;
    let mut summary = format!(
        "{}: iterations={} converged={} objective={:.6}",
        s.cluster.algorithm, res.iterations, res.converged, res.objective
    );
    if let Some(a) = acc {
        summary.push_str(&format!(" accuracy={a:.4}"));
    }
    let text = match s.format {
        Format::Json => to_json(&ClusterReport {
            config: s.cluster.clone(),
            regime: pm.regime(),
            memberships: rows(&pm),
            centroids: centroid_rows(&res.cents),
            iterations: res.iterations,
            converged: res.converged,
            objective: res.objective,
            reseeds: res.reseeds.clone(),
            accuracy: acc,
            dominant: dominant_summary(ds, s.lambda)?,
            critical,
        })?,
        Format::Csv => {
            let c = pm.clusters();
            let mut out = String::from("object");
            for i in 0..c {
                out.push_str(&format!(",u_{i}"));
            }
            out.push_str(",label\n");
            for j in 0..pm.objects() {
                out.push_str(&j.to_string());
                for i in 0..c {
                    out.push(',');
                    out.push_str(&num(pm.get(i, j)));
                }
                out.push_str(&format!(",{}\n", pm.argmax(j)));
            }
            out
        }
    };
    Ok((text, summary))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexCell {
    pub index: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

fn cell(index: &str, r: Result<f64, bfpm::AnalysisError>) -> IndexCell {
    match r {
        Ok(v) => IndexCell { index: index.into(), value: Some(v), error: None },
        Err(e) => IndexCell { index: index.into(), value: None, error: Some(e.to_string()) },
    }
}

/// Every requested index, each computed independently.
pub fn index_table(
    pm: &PartitionMatrix,
    cents: &Centroids,
    ds: &Dataset,
    spec: &DistanceSpec,
    extra: &[String],
    ig_exponent: f64,
) -> Vec<IndexCell> {
    let mut cells = vec![
        cell("v_pc", Ok(v_pc(pm))),
        cell("v_pe", Ok(v_pe(pm))),
        cell("v_xb", v_xb(pm, cents, ds)),
    ];
    for name in extra {
        cells.push(match name.as_str() {
            "db" => cell("db", db_index(pm, cents, ds)),
            "cs" => cell("cs", cs_index(pm, cents, ds)),
            "g" => cell("g", g_index(pm, ds, spec)),
            _ => cell("ig", ig_index(pm, ds, spec, ig_exponent)),
        });
    }
    cells
}

fn cmd_validate(ds: &Dataset, s: &Settings) -> Result<(String, String), CliError> {
    let (pm, cents) = match &s.result {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Runtime(format!("cannot read {}: {e}", path.display())))?;
            let stored: StoredResult = serde_json::from_str(&text)?;
            let pm = PartitionMatrix::from_rows(&stored.memberships, stored.regime.unwrap_or(Regime::Bfpm))?;
            let cents = Centroids::from_rows(&stored.centroids)?;
            (pm, cents)
        }
        None => {
            let (res, pm) = clustered(ds, s)?;
            (pm, res.cents)
        }
    };
    let pm = if s.harden_first { harden(&pm)? } else { pm };
    let cells = index_table(&pm, &cents, ds, &s.cluster.distance, &s.indices, s.ig_exponent);
    let failed = cells.iter().filter(|c| c.error.is_some()).count();
    let summary = format!("validate: {} indices, {failed} failed", cells.len());
    let text = match s.format {
        Format::Json => to_json(&cells)?,
        Format::Csv => {
            let mut out = String::from("index,value,error\n");
            for c in &cells {
                out.push_str(&format!(
                    "{},{},{}\n",
                    c.index,
                    c.value.map(num).unwrap_or_default(),
                    c.error.as_deref().unwrap_or("").replace(',', ";")
                ));
            }
            out
        }
    };
    Ok((text, summary))
}

#[derive(Debug, Deserialize)]
struct StoredResult {
    memberships: Vec<Vec<f64>>,
    centroids: Vec<Vec<f64>>,
    #[serde(default)]
    regime: Option<Regime>,
}

#[derive(Debug, Serialize)]
struct MutationOutput<'a> {
    #[serde(flatten)]
    report: &'a MutationReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    critical: Option<Vec<CriticalFlag>>,
}

fn cmd_mutation(ds: &Dataset, s: &Settings) -> Result<(String, String), CliError> {
    let (_, pm) = clustered(ds, s)?;
    let report = mutation_report_with(&pm, &s.thresholds)?;
    let counts: Vec<String> = report
        .threshold_counts
        .iter()
        .map(|t| format!("{}:{}", t.threshold, t.count))
        .collect();
    let summary = format!("mutation: runner-up above thresholds {}", counts.join(" "));
    let text = match s.format {
        Format::Csv => report.to_csv(),
        Format::Json => to_json(&MutationOutput {
            report: &report,
            critical: s.critical_epsilon.map(|e| detect_critical(&pm, e)).transpose()?,
        })?,
    };
    Ok((text, summary))
}

#[derive(Debug, Serialize)]
struct SplitIndices<'a> {
    split: usize,
    train_indices: &'a [usize],
    test_indices: &'a [usize],
}

fn splits(ds: &Dataset, s: &Settings) -> Result<Vec<bfpm::Split>, CliError> {
    match s.split {
        SplitChoice::Plan(kind) => Ok(SplitPlan { kind, seed: s.cluster.seed }.apply(ds)?),
        SplitChoice::Resubstitution => {
            let all: Vec<usize> = (0..ds.len()).collect();
            Ok(vec![bfpm::Split {
                train_indices: all.clone(),
                test_indices: all,
                train: ds.clone(),
                test: ds.clone(),
            }])
        }
    }
}

fn cmd_split(ds: &Dataset, s: &Settings) -> Result<(String, String), CliError> {
    let parts = splits(ds, s)?;
    let summary = format!("split: {} partitions of {} objects", parts.len(), ds.len());
    let text = match s.format {
        Format::Json => {
            let view: Vec<SplitIndices> = parts
                .iter()
                .enumerate()
                .map(|(k, p)| SplitIndices { split: k, train_indices: &p.train_indices, test_indices: &p.test_indices })
                .collect();
            to_json(&view)?
        }
        Format::Csv => {
            let mut out = String::from("split,role,object\n");
            for (k, p) in parts.iter().enumerate() {
                for j in &p.train_indices {
                    out.push_str(&format!("{k},train,{j}\n"));
                }
                for j in &p.test_indices {
                    out.push_str(&format!("{k},test,{j}\n"));
                }
            }
            out
        }
    };
    Ok((text, summary))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Prediction {
    pub object: usize,
    pub memberships: Vec<f64>,
    pub predicted: usize,
    pub truth: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SplitOutcome {
    pub split: usize,
    pub train_size: usize,
    pub test_size: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub skipped: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub accuracy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub confusion: Option<ConfusionMatrix>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metrics: Option<Metrics>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error_measures: Option<ErrorMeasures>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error_measures_error: Option<String>,
    pub predictions: Vec<Prediction>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassifyReport {
    pub positive_class: String,
    pub splits: Vec<SplitOutcome>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_accuracy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_sensitivity: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_specificity: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_precision: Option<f64>,
}

fn positive_index(ds: &Dataset, choice: Option<&str>) -> Result<usize, CliError> {
    let names = ds.class_names();
    match choice {
        None => Ok(0),
        Some(s) => names
            .iter()
            .position(|n| n == s)
            .or_else(|| s.parse::<usize>().ok().filter(|&i| i < names.len()))
            .ok_or_else(|| CliError::usage(format!("unknown positive class {s:?}"))),
    }
}

fn mean(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Vec<f64> = values.flatten().collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

pub fn classify_report(ds: &Dataset, s: &Settings) -> Result<ClassifyReport, CliError> {
    if ds.labels().is_none() {
        return Err(CliError::usage("classify needs a label column"));
    }
    let positive = positive_index(ds, s.positive_class.as_deref())?;
    let weights = s.weights.clone().unwrap_or_else(Weights::ones).resolve(ds.dim());
    let mut outcomes = Vec::new();
    for (k, part) in splits(ds, s)?.into_iter().enumerate() {
        let mut out = SplitOutcome {
            split: k,
            train_size: part.train_indices.len(),
            test_size: part.test_indices.len(),
            skipped: None,
            accuracy: None,
            confusion: None,
            metrics: None,
            error_measures: None,
            error_measures_error: None,
            predictions: Vec::new(),
        };
        if part.test_indices.is_empty() {
            out.skipped = Some("no test objects".into());
            outcomes.push(out);
            continue;
        }
        let model = ClassifierModel::with_weights(part.train, weights.clone())?;
        let result = bfpcm_classify(&model, &part.test)?;
        let truth = part.test.labels().expect("labels survive subsetting");
        let cm = confusion(&result.predicted, truth, positive)?;
        out.accuracy = Some(bfpm::classify::accuracy(&result.predicted, truth)?);
        out.metrics = Some(bfpm::classify::metrics(&cm));
        out.confusion = Some(cm);
        let y: Vec<f64> = truth.iter().map(|&t| f64::from(u8::from(t == positive))).collect();
        let y_hat: Vec<f64> = (0..truth.len()).map(|j| result.pm.get(positive, j)).collect();
        match error_measures(&y_hat, &y) {
            Ok(e) => out.error_measures = Some(e),
            Err(e) => out.error_measures_error = Some(e.to_string()),
        }
        out.predictions = part
            .test_indices
            .iter()
            .enumerate()
            .map(|(j, &object)| Prediction {
                object,
                memberships: result.pm.column(j),
                predicted: result.predicted[j],
                truth: truth[j],
            })
            .collect();
        outcomes.push(out);
    }
    Ok(ClassifyReport {
        positive_class: ds.class_names()[positive].clone(),
        mean_accuracy: mean(outcomes.iter().map(|o| o.accuracy)),
        mean_sensitivity: mean(outcomes.iter().map(|o| o.metrics.and_then(|m| m.sensitivity))),
        mean_specificity: mean(outcomes.iter().map(|o| o.metrics.and_then(|m| m.specificity))),
        mean_precision: mean(outcomes.iter().map(|o| o.metrics.and_then(|m| m.precision))),
        splits: outcomes,
    })
}

fn cmd_classify(ds: &Dataset, s: &Settings) -> Result<(String, String), CliError> {
    let report = classify_report(ds, s)?;
    let evaluated = report.splits.iter().filter(|o| o.skipped.is_none()).count();
    let summary = match report.mean_accuracy {
        Some(a) => format!("classify: {evaluated} of {} splits evaluated, mean accuracy={a:.4}", report.splits.len()),
        None => "classify: no test objects".to_string(),
    };
    let text = match s.format {
        Format::Json => to_json(&report)?,
        Format::Csv => {
            let c = ds.class_names().len();
            let mut out = String::from("split,object");
            for i in 0..c {
                out.push_str(&format!(",u_{i}"));
            }
            out.push_str(",predicted,truth\n");
            for o in &report.splits {
                for p in &o.predictions {
                    out.push_str(&format!("{},{}", o.split, p.object));
                    for u in &p.memberships {
                        out.push(',');
                        out.push_str(&num(*u));
                    }
                    out.push_str(&format!(",{},{}\n", p.predicted, p.truth));
                }
            }
            out
        }
    };
    Ok((text, summary))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub weights: String,
    pub m: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub accuracy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub converged: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Config for one sweep cell: `euclidean` runs BFPM, anything else runs
/// BFPM-WFD with `w = w'` set from that weight string.
pub fn sweep_config(base: &ClusterConfig, weights: &str, m: f64) -> Result<ClusterConfig, CliError> {
    let mut cfg = base.clone();
    cfg.m = m;
    if weights.eq_ignore_ascii_case("euclidean") {
        cfg.algorithm = Algorithm::Bfpm;
        cfg.distance = DistanceSpec::euclidean();
    } else {
        let w: Weights = weights.parse().map_err(|e: bfpm::DistanceError| CliError::usage(e.to_string()))?;
        cfg.algorithm = Algorithm::BfpmWfd;
        cfg.distance = DistanceSpec::wfd(2.0, w.clone(), w);
    }
    Ok(cfg)
}

/// Runs every (weights, m) cell; rows follow `weight_specs`, columns `m_values`.
pub fn sweep_grid(ds: &Dataset, s: &Settings) -> Result<Vec<SweepCell>, CliError> {
    if ds.labels().is_none() {
        return Err(CliError::usage("sweep needs a label column"));
    }
    let mut jobs = Vec::new();
    for spec in &s.weight_specs {
        for &m in &s.m_values {
            jobs.push((spec.clone(), m, sweep_config(&s.cluster, spec, m)?));
        }
    }
    Ok(jobs
        .into_par_iter()
        .map(|(weights, m, cfg)| {
            let outcome = run(ds, &cfg)
                .map_err(CliError::from)
                .and_then(|res| Ok((accuracy(&res.pm, ds, s.hungarian)?, res)));
            match outcome {
                Ok((acc, res)) => SweepCell {
                    weights,
                    m,
                    accuracy: acc,
                    converged: Some(res.converged),
                    iterations: Some(res.iterations),
                    error: None,
                },
                Err(e) => SweepCell {
                    weights,
                    m,
                    accuracy: None,
                    converged: None,
                    iterations: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect())
}

pub const SWEEP_FOOTER: &str =
    "# reference baselines (Iris, m=2, majority mapping): euclidean 0.9733, wfd uniform:1/2 1.0000\n";

fn cmd_sweep(ds: &Dataset, s: &Settings) -> Result<(String, String), CliError> {
    let cells = sweep_grid(ds, s)?;
    let failed = cells.iter().filter(|c| c.error.is_some()).count();
    let summary = format!("sweep: {} cells, {failed} failed", cells.len());
    let text = match s.format {
        Format::Json => to_json(&cells)?,
        Format::Csv => {
            let mut out = String::from("weights");
            for m in &s.m_values {
                out.push_str(&format!(",m={m}"));
            }
            out.push('\n');
            for row in cells.chunks(s.m_values.len()) {
                out.push_str(&row[0].weights.replace(',', ";"));
                for c in row {
                    out.push(',');
                    match c.accuracy {
                        Some(a) => out.push_str(&num(a)),
                        None => out.push_str("ERR"),
                    }
                }
                out.push('\n');
            }
            out.push_str(SWEEP_FOOTER);
            out
        }
    };
    Ok((text, summary))
}
