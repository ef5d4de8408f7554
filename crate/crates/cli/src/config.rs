//! Command-line flags and their resolution against a config file.
//!
//! Every tunable is looked up as: flag, then `key = value` line in the
//! `--config` file (keys are the long flag names), then the default. The
//! seed additionally falls back to `BFPM_SEED` before the default of 42.

use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use bfpm::analysis::DEFAULT_MUTATION_THRESHOLDS;
use bfpm::distance::DEFAULT_LAMBDA;
use bfpm::{Algorithm, ClusterConfig, DistanceSpec, ExponentForm, Family, Weights};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::CliError;

pub const SEED_ENV: &str = "BFPM_SEED";
pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Parser)]
#[command(name = "bfpm", version, about = "Bounded fuzzy possibilistic clustering toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub opts: Options,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Cluster a dataset and write memberships and centroids.
    Cluster { dataset: PathBuf },
    /// Train and evaluate the BFPCM classifier over a split plan.
    Classify { dataset: PathBuf },
    /// Compute validity indices for a run or a stored result.
    Validate { dataset: PathBuf },
    /// Runner-up membership report for every object.
    Mutation { dataset: PathBuf },
    /// Write the train/test indices of a split plan.
    Split { dataset: PathBuf },
    /// Accuracy grid over fuzzifier values and weight specs.
    Sweep { dataset: PathBuf },
}

impl Command {
    pub fn dataset(&self) -> &Path {
        match self {
            Command::Cluster { dataset }
            | Command::Classify { dataset }
            | Command::Validate { dataset }
            | Command::Mutation { dataset }
            | Command::Split { dataset }
            | Command::Sweep { dataset } => dataset,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

impl FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        <Format as ValueEnum>::from_str(s, true)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SplitArg {
    Holdout,
    Subsampling,
    Kfold,
    Bootstrap,
    /// Train and test on the whole dataset.
    Resubstitution,
}

impl FromStr for SplitArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        <SplitArg as ValueEnum>::from_str(s, true)
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct Options {
    /// Flat `key = value` file; keys are long flag names.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// fpm, fpm1, fpm2, bfpm or bfpm_wfd.
    #[arg(long, global = true)]
    pub algo: Option<Algorithm>,
    #[arg(long, global = true)]
    pub c: Option<usize>,
    #[arg(long, global = true)]
    pub m: Option<f64>,
    #[arg(long, global = true)]
    pub epsilon: Option<f64>,
    #[arg(long = "max-iter", global = true)]
    pub max_iter: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// lp, wfd or pwfd.
    #[arg(long, global = true)]
    pub distance: Option<Family>,
    #[arg(long, global = true)]
    pub p: Option<f64>,
    #[arg(long, global = true)]
    pub r: Option<f64>,
    /// Feature weights w = w', e.g. `uniform:0.5`, `uniform:1/d`, `1,0.5,0.25`.
    #[arg(long, global = true)]
    pub weights: Option<String>,
    /// PWFD divisors w''.
    #[arg(long = "priority-weights", global = true)]
    pub priority_weights: Option<String>,
    #[arg(long, global = true)]
    pub lambda: Option<f64>,
    #[arg(long = "critical-epsilon", global = true)]
    pub critical_epsilon: Option<f64>,
    /// Comma-separated mutation thresholds.
    #[arg(long, global = true)]
    pub thresholds: Option<String>,
    /// Label column name, or `none`.
    #[arg(long = "label-column", global = true)]
    pub label_column: Option<String>,
    #[arg(long, global = true)]
    pub split: Option<SplitArg>,
    #[arg(long, global = true)]
    pub ratio: Option<f64>,
    #[arg(long, global = true)]
    pub k: Option<usize>,
    /// Repetitions for random subsampling.
    #[arg(long, global = true)]
    pub t: Option<usize>,
    #[arg(long, global = true)]
    pub format: Option<Format>,
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long = "harden-first", global = true)]
    pub harden_first: bool,
    /// Use the positive +1/m membership exponent instead of -1/m.
    #[arg(long = "raw-exponent", global = true)]
    pub raw_exponent: bool,
    /// One-to-one cluster/label matching instead of majority vote.
    #[arg(long, global = true)]
    pub hungarian: bool,
    /// Extra validity indices: any of db,cs,g,ig or `all`.
    #[arg(long, global = true)]
    pub indices: Option<String>,
    /// Exponent y of the I_G normaliser G^y.
    #[arg(long = "ig-exponent", global = true)]
    pub ig_exponent: Option<f64>,
    /// Comma-separated fuzzifier values for `sweep`.
    #[arg(long = "m-values", global = true)]
    pub m_values: Option<String>,
    /// Weight spec for `sweep`, repeatable; `euclidean` means plain BFPM.
    #[arg(long = "weight-spec", global = true)]
    pub weight_specs: Vec<String>,
    /// Positive class name or index for the confusion matrix.
    #[arg(long = "positive-class", global = true)]
    pub positive_class: Option<String>,
    /// Stored cluster result (JSON) to validate instead of clustering.
    #[arg(long, global = true)]
    pub result: Option<PathBuf>,
}

const KNOWN_KEYS: &[&str] = &[
    "algo", "c", "m", "epsilon", "max-iter", "seed", "distance", "p", "r", "weights",
    "priority-weights", "lambda", "critical-epsilon", "thresholds", "label-column", "split",
    "ratio", "k", "t", "format", "output", "harden-first", "raw-exponent", "hungarian",
    "indices", "ig-exponent", "m-values", "weight-spec", "positive-class", "result",
];

/// Parses the flat key/value format: `key = value`, `#` comments, blank lines.
pub fn parse_config(text: &str) -> Result<HashMap<String, String>, CliError> {
    let mut map = HashMap::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::usage(format!("config line {}: expected key = value", no + 1)))?;
        let key = key.trim().trim_start_matches("--").replace('_', "-");
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(CliError::usage(format!("config line {}: unknown key {key:?}", no + 1)));
        }
        map.insert(key, value.trim().to_string());
    }
    Ok(map)
}

struct Resolver {
    file: HashMap<String, String>,
}

impl Resolver {
    fn pick<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: fmt::Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.file.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|e| CliError::usage(format!("config key {key}: {e}"))),
        }
    }

    fn switch(&self, flag: bool, key: &str) -> Result<bool, CliError> {
        Ok(flag || self.pick::<bool>(None, key)?.unwrap_or(false))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LabelChoice {
    /// Use `class` or `label` when the header has one.
    Auto,
    None,
    Column(String),
}

/// A split plan as chosen on the command line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SplitChoice {
    Plan(bfpm::SplitKind),
    Resubstitution,
}

/// All options after precedence has been applied.
#[derive(Debug, Clone)]
pub struct Settings {
    pub cluster: ClusterConfig,
    /// Raw `--weights`, reused as BFPCM feature weights.
    pub weights: Option<Weights>,
    pub lambda: f64,
    pub critical_epsilon: Option<f64>,
    pub thresholds: Vec<f64>,
    pub label_column: LabelChoice,
    pub split: SplitChoice,
    pub format: Format,
    pub output: Option<PathBuf>,
    pub harden_first: bool,
    pub hungarian: bool,
    pub indices: Vec<String>,
    pub ig_exponent: f64,
    pub m_values: Vec<f64>,
    pub weight_specs: Vec<String>,
    pub positive_class: Option<String>,
    pub result: Option<PathBuf>,
}

fn parse_list(s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| CliError::usage(format!("{t:?}: {e}"))))
        .collect()
}

fn parse_weights(s: &str) -> Result<Weights, CliError> {
    s.parse().map_err(|e: bfpm::DistanceError| CliError::usage(e.to_string()))
}

impl Settings {
    pub fn resolve(opts: &Options, env_seed: Option<&str>) -> Result<Self, CliError> {
        let file = match &opts.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
                parse_config(&text)?
            }
            None => HashMap::new(),
        };
        let r = Resolver { file };
        let defaults = ClusterConfig::default();

        let algorithm = r.pick(opts.algo, "algo")?.unwrap_or(defaults.algorithm);
        let env_seed = match env_seed {
            Some(s) => Some(
                s.trim()
                    .parse::<u64>()
                    .map_err(|e| CliError::usage(format!("{SEED_ENV}={s:?}: {e}")))?,
            ),
            None => None,
        };
        let seed = r.pick(opts.seed, "seed")?.or(env_seed).unwrap_or(DEFAULT_SEED);

        let weights = r.pick(opts.weights.clone(), "weights")?.map(|s| parse_weights(&s)).transpose()?;
        let priority = r
            .pick(opts.priority_weights.clone(), "priority-weights")?
            .map(|s| parse_weights(&s))
            .transpose()?;
        let family = r.pick(opts.distance, "distance")?.unwrap_or(if algorithm == Algorithm::BfpmWfd {
            Family::Wfd
        } else {
            Family::Lp
        });
        let p = r.pick(opts.p, "p")?.unwrap_or(2.0);
        let w = weights.clone().unwrap_or_else(Weights::ones);
        let mut distance = match family {
            Family::Lp => DistanceSpec::lp(p),
            Family::Wfd => DistanceSpec::wfd(p, w.clone(), w),
            Family::Pwfd => DistanceSpec::pwfd(p, w.clone(), w, priority.unwrap_or_else(Weights::ones)),
        };
        if let Some(root) = r.pick(opts.r, "r")? {
            distance = distance.with_root(root);
        }

        let cluster = ClusterConfig {
            algorithm,
            c: r.pick(opts.c, "c")?.unwrap_or(defaults.c),
            m: r.pick(opts.m, "m")?.unwrap_or(defaults.m),
            epsilon: r.pick(opts.epsilon, "epsilon")?.unwrap_or(defaults.epsilon),
            max_iter: r.pick(opts.max_iter, "max-iter")?.unwrap_or(defaults.max_iter),
            seed,
            distance,
            exponent: if r.switch(opts.raw_exponent, "raw-exponent")? {
                ExponentForm::Positive
            } else {
                ExponentForm::Reciprocal
            },
        };

        let lambda = r.pick(opts.lambda, "lambda")?.unwrap_or(DEFAULT_LAMBDA);
        let critical_epsilon = r.pick(opts.critical_epsilon, "critical-epsilon")?;
        let thresholds = match r.pick(opts.thresholds.clone(), "thresholds")? {
            Some(s) => parse_list(&s)?,
            None => DEFAULT_MUTATION_THRESHOLDS.to_vec(),
        };
        let label_column = match r.pick(opts.label_column.clone(), "label-column")? {
            None => LabelChoice::Auto,
            Some(s) if s.eq_ignore_ascii_case("none") => LabelChoice::None,
            Some(s) => LabelChoice::Column(s),
        };

        let ratio = r.pick(opts.ratio, "ratio")?.unwrap_or(0.7);
        let split = match r.pick(opts.split, "split")?.unwrap_or(SplitArg::Kfold) {
            SplitArg::Holdout => SplitChoice::Plan(bfpm::SplitKind::Holdout { ratio }),
            SplitArg::Subsampling => SplitChoice::Plan(bfpm::SplitKind::RandomSubsampling {
                ratio,
                repeats: r.pick(opts.t, "t")?.unwrap_or(10),
            }),
            SplitArg::Kfold => SplitChoice::Plan(bfpm::SplitKind::KFold {
                k: r.pick(opts.k, "k")?.unwrap_or(5),
            }),
            SplitArg::Bootstrap => SplitChoice::Plan(bfpm::SplitKind::Bootstrap),
            SplitArg::Resubstitution => SplitChoice::Resubstitution,
        };

        let indices = match r.pick(opts.indices.clone(), "indices")? {
            None => Vec::new(),
            Some(s) => {
                let mut out = Vec::new();
                for name in s.split(',').map(|t| t.trim().to_ascii_lowercase()) {
                    match name.as_str() {
                        "all" => out.extend(["db", "cs", "g", "ig"].map(String::from)),
                        "db" | "cs" | "g" | "ig" => out.push(name),
                        "" => {}
                        other => return Err(CliError::usage(format!("unknown index {other:?}"))),
                    }
                }
                out.dedup();
                out
            }
        };

        let m_values = match r.pick(opts.m_values.clone(), "m-values")? {
            Some(s) => parse_list(&s)?,
            None => vec![cluster.m],
        };
        let mut weight_specs = opts.weight_specs.clone();
        if weight_specs.is_empty() {
            if let Some(s) = r.file.get("weight-spec") {
                weight_specs = s.split(';').map(|t| t.trim().to_string()).collect();
            }
        }
        if weight_specs.is_empty() {
            weight_specs = vec!["euclidean".to_string()];
        }

        Ok(Settings {
            cluster,
            weights,
            lambda,
            critical_epsilon,
            thresholds,
            label_column,
            split,
            format: r.pick(opts.format, "format")?.unwrap_or(Format::Json),
            output: r.pick(opts.output.clone(), "output")?,
            harden_first: r.switch(opts.harden_first, "harden-first")?,
            hungarian: r.switch(opts.hungarian, "hungarian")?,
            indices,
            ig_exponent: r.pick(opts.ig_exponent, "ig-exponent")?.unwrap_or(2.0),
            m_values,
            weight_specs,
            positive_class: r.pick(opts.positive_class.clone(), "positive-class")?,
            result: r.pick(opts.result.clone(), "result")?,
        })
    }
}
