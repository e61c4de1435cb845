//! Wrapper feature selection: the optimizers search `[0, 1]^d`, positions
//! decode to feature masks, and the cost is a random forest's error rate on
//! held-out rows.

mod dataset;
pub mod forest;
pub mod synthetic;

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::base::{mix_seed, stable_hash, Bounds, SeededRng};
use crate::benchmarks::Budgets;
use crate::harness::{optimize, summarize, ChmSettings, Method};
use crate::optimizers::{OptimizerParams, ParamError};

pub use dataset::{
    load_csv, read_csv, split, split_indices, stratified_allocation, validate_for_selection, write_csv, CellPolicy,
    Dataset, Loaded,
};
pub use forest::{Forest, ForestParams};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FsError {
    #[error("label column '{label}' not found; available columns: {}", available.join(", "))]
    MissingLabel { label: String, available: Vec<String> },
    #[error("file has no header or no data rows")]
    EmptyFile,
    #[error("all {dropped} data rows were dropped during ingestion")]
    AllRowsDropped { dropped: usize },
    #[error("csv: {0}")]
    Csv(String),
    #[error("{}: {message}", path.display())]
    Io { path: PathBuf, message: String },
    #[error("dataset too small: {0}")]
    TooSmall(String),
    #[error("class {class} has {count} member(s); stratified splitting needs at least 2")]
    Stratify { class: usize, count: usize },
    #[error("train and evaluation sets have different schemas")]
    Schema,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error("repetition {rep}, method {method}: {message}")]
    Run { rep: usize, method: String, message: String },
}

pub const MASK_THRESHOLD: f64 = 0.5;

/// Feature `i` is selected when `position[i] >= 0.5`.
pub fn decode_mask(position: &[f64]) -> Vec<bool> {
    position.iter().map(|&p| p >= MASK_THRESHOLD).collect()
}

fn error_rate(predict: impl Fn(&[f64]) -> usize, eval: &Dataset) -> f64 {
    let wrong = eval.features.iter().zip(&eval.labels).filter(|(x, &y)| predict(x) != y).count();
    wrong as f64 / eval.n_rows() as f64
}

/// `1 − accuracy` on `eval` of a forest trained on `train` restricted to the
/// masked features. An empty mask costs 1.0 without training; a training
/// set with one class predicts that class everywhere.
pub fn fs_cost(mask: &[bool], train: &Dataset, eval: &Dataset, params: &ForestParams, seed: u64) -> Result<f64, FsError> {
    if !train.same_schema(eval) || mask.len() != train.n_features() {
        return Err(FsError::Schema);
    }
    if eval.n_rows() == 0 || train.n_rows() == 0 {
        return Err(FsError::TooSmall("empty train or evaluation set".into()));
    }
    let features: Vec<usize> = (0..mask.len()).filter(|&j| mask[j]).collect();
    if features.is_empty() {
        return Ok(1.0);
    }
    let counts = train.class_counts();
    if counts.iter().filter(|&&c| c > 0).count() < 2 {
        let only = forest::majority(&counts);
        return Ok(error_rate(|_| only, eval));
    }
    let f = Forest::fit(&train.features, &train.labels, train.n_classes(), &features, params, seed);
    Ok(error_rate(|x| f.predict(x), eval))
}

/// Search settings. The orchestrator defaults here are for desk-scale data:
/// population 10, n = 4, probing 80 FE and fit 200 FE per iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FsConfig {
    pub repetitions: usize,
    pub seed: u64,
    pub test_fraction: f64,
    /// Share of the training part held out to score masks during search.
    pub validation_fraction: f64,
    pub chm: ChmSettings,
    pub optimizers: OptimizerParams,
    pub forest: ForestParams,
}

impl Default for FsConfig {
    fn default() -> Self {
        Self {
            repetitions: 10,
            seed: 1,
            test_fraction: 0.3,
            validation_fraction: 0.3,
            chm: ChmSettings {
                population_size: 10,
                maxfe_probing: Some(80),
                maxfe_fit: Some(200),
                ..ChmSettings::default()
            },
            optimizers: OptimizerParams::default(),
            forest: ForestParams::default(),
        }
    }
}

impl FsConfig {
    fn budgets(&self) -> Budgets {
        Budgets { maxfe_probing: self.chm.maxfe_probing.unwrap_or(80), maxfe_fit: self.chm.maxfe_fit.unwrap_or(200) }
    }

    pub fn validate(&self) -> Result<(), FsError> {
        if self.repetitions == 0 {
            return Err(FsError::Config("repetitions must be at least 1".into()));
        }
        for (name, v) in [("test_fraction", self.test_fraction), ("validation_fraction", self.validation_fraction)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(FsError::Config(format!("{name} must lie in (0, 1), got {v}")));
            }
        }
        self.forest.validate()?;
        self.optimizers.validate()?;
        self.chm
            .config(&self.optimizers, self.budgets())
            .validate()
            .map_err(|e| FsError::Config(e.to_string()))
    }
}

/// Outcome of one method in one repetition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FsRun {
    pub method: Method,
    pub rep: usize,
    /// Error of the final mask on the test split.
    pub test_cost: f64,
    /// Best search-time cost (validation split).
    pub search_cost: f64,
    pub mask: Vec<bool>,
    pub num_features: usize,
    pub fe_used: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FsRow {
    pub meta_name: String,
    pub avg_cost: f64,
    pub std_cost: f64,
    pub avg_num_features: f64,
    pub median_num_features: f64,
    pub std_num_features: f64,
}

/// Per-method aggregates plus a `None` row for the all-features forest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FsReport {
    pub n_features: usize,
    pub repetitions: usize,
    pub rows: Vec<FsRow>,
    pub runs: Vec<FsRun>,
    /// All-features test error per repetition.
    pub baseline: Vec<f64>,
}

pub const BASELINE_NAME: &str = "None";

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

fn row(meta_name: &str, costs: &[f64], counts: &[f64]) -> FsRow {
    let c = summarize(costs);
    let k = summarize(counts);
    FsRow {
        meta_name: meta_name.to_string(),
        avg_cost: c.mean,
        std_cost: c.std,
        avg_num_features: k.mean,
        median_num_features: median(counts),
        std_num_features: k.std,
    }
}

impl FsReport {
    pub fn row(&self, meta_name: &str) -> Option<&FsRow> {
        self.rows.iter().find(|r| r.meta_name == meta_name)
    }

    pub fn runs_for(&self, method: Method) -> impl Iterator<Item = &FsRun> {
        self.runs.iter().filter(move |r| r.method == method)
    }

    /// Fixed-width table with the columns of the CSV form.
    pub fn to_table(&self) -> String {
        let mut out = format!(
            "{:<10} {:>9} {:>9} {:>16} {:>19} {:>16}\n",
            "meta_name", "avg_cost", "std_cost", "avg_num_features", "median_num_features", "std_num_features"
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:<10} {:>9.4} {:>9.4} {:>16.2} {:>19.1} {:>16.2}",
                r.meta_name, r.avg_cost, r.std_cost, r.avg_num_features, r.median_num_features, r.std_num_features
            );
        }
        out
    }

    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<(), FsError> {
        let mut w = csv::Writer::from_writer(writer);
        let wrap = |e: csv::Error| FsError::Csv(e.to_string());
        w.write_record(["meta_name", "avg_cost", "std_cost", "avg_num_features", "median_num_features", "std_num_features"])
            .map_err(wrap)?;
        for r in &self.rows {
            w.write_record([
                r.meta_name.clone(),
                format!("{:.4}", r.avg_cost),
                format!("{:.4}", r.std_cost),
                format!("{:.2}", r.avg_num_features),
                format!("{:.1}", r.median_num_features),
                format!("{:.2}", r.std_num_features),
            ])
            .map_err(wrap)?;
        }
        w.flush().map_err(|e| FsError::Csv(e.to_string()))
    }
}

/// Memoizes mask costs within one repetition. Costs are a pure function of
/// the mask there, so sharing the cache across methods changes no result,
/// only the time taken.
struct CostCache<'a> {
    train: &'a Dataset,
    valid: &'a Dataset,
    params: &'a ForestParams,
    seed: u64,
    memo: Mutex<HashMap<Vec<bool>, f64>>,
}

impl CostCache<'_> {
    fn cost(&self, mask: Vec<bool>) -> f64 {
        if let Some(&c) = self.memo.lock().expect("cache lock").get(&mask) {
            return c;
        }
        let c = fs_cost(&mask, self.train, self.valid, self.params, self.seed).expect("schema checked before search");
        self.memo.lock().expect("cache lock").insert(mask, c);
        c
    }
}

const TEST_SPLIT: u64 = 0;
const VALIDATION_SPLIT: u64 = 1;
const FOREST: u64 = 2;
const SEARCH: u64 = 3;

/// Data and forest seed of one repetition.
#[derive(Debug, Clone)]
pub struct RepSplits {
    /// Training part of the test split; the reported forests train here.
    pub train_full: Dataset,
    pub test: Dataset,
    /// `train_full` divided again; masks are scored on `valid` during search.
    pub train: Dataset,
    pub valid: Dataset,
    pub forest_seed: u64,
}

impl FsConfig {
    pub fn rep_splits(&self, data: &Dataset, rep: usize) -> Result<RepSplits, FsError> {
        let r = rep as u64;
        let (train_full, test) = split(data, self.test_fraction, mix_seed(self.seed, &[r, TEST_SPLIT]))?;
        let (train, valid) = split(&train_full, self.validation_fraction, mix_seed(self.seed, &[r, VALIDATION_SPLIT]))?;
        Ok(RepSplits { train_full, test, train, valid, forest_seed: mix_seed(self.seed, &[r, FOREST]) })
    }
}

fn run_rep(data: &Dataset, methods: &[Method], cfg: &FsConfig, rep: usize) -> Result<(Vec<FsRun>, f64), FsError> {
    let RepSplits { train_full, test, train, valid, forest_seed } = cfg.rep_splits(data, rep)?;
    let r = rep as u64;
    let d = data.n_features();
    let baseline = fs_cost(&vec![true; d], &train_full, &test, &cfg.forest, forest_seed)?;

    let cache = CostCache { train: &train, valid: &valid, params: &cfg.forest, seed: forest_seed, memo: Mutex::default() };
    let objective = |x: &[f64]| cache.cost(decode_mask(x));
    let bounds = Bounds::uniform(0.0, 1.0, d).expect("at least one feature");
    let config = cfg.chm.config(&cfg.optimizers, cfg.budgets());
    let mut runs = Vec::with_capacity(methods.len());
    for &method in methods {
        let root = SeededRng::new(mix_seed(cfg.seed, &[r, SEARCH, stable_hash(method.as_str())]));
        let out = optimize(method, &config, &cfg.optimizers, &objective, &bounds, &root)
            .map_err(|message| FsError::Run { rep, method: method.to_string(), message })?;
        let mask = decode_mask(&out.best.position);
        runs.push(FsRun {
            method,
            rep,
            test_cost: fs_cost(&mask, &train_full, &test, &cfg.forest, forest_seed)?,
            search_cost: out.best.cost_or_inf(),
            num_features: mask.iter().filter(|&&m| m).count(),
            mask,
            fe_used: out.fe_used,
        });
    }
    Ok((runs, baseline))
}

/// Runs every method for `cfg.repetitions` repetitions. Each repetition
/// draws its own stratified test split and, inside the training part, a
/// validation split that scores masks during search. The final mask of
/// each run is scored on the test split with the same forest seed as the
/// all-features baseline.
pub fn run_feature_selection(data: &Dataset, methods: &[Method], cfg: &FsConfig) -> Result<FsReport, FsError> {
    validate_for_selection(data)?;
    cfg.validate()?;
    if methods.is_empty() {
        return Err(FsError::Config("methods must not be empty".into()));
    }
    let per_rep: Vec<(Vec<FsRun>, f64)> =
        (0..cfg.repetitions).into_par_iter().map(|rep| run_rep(data, methods, cfg, rep)).collect::<Result<_, _>>()?;
    let baseline: Vec<f64> = per_rep.iter().map(|(_, b)| *b).collect();
    let runs: Vec<FsRun> = per_rep.into_iter().flat_map(|(r, _)| r).collect();

    let d = data.n_features();
    let mut rows: Vec<FsRow> = methods
        .iter()
        .map(|&m| {
            let mine: Vec<&FsRun> = runs.iter().filter(|r| r.method == m).collect();
            let costs: Vec<f64> = mine.iter().map(|r| r.test_cost).collect();
            let counts: Vec<f64> = mine.iter().map(|r| r.num_features as f64).collect();
            row(m.as_str(), &costs, &counts)
        })
        .collect();
    rows.push(row(BASELINE_NAME, &baseline, &vec![d as f64; baseline.len()]));
    Ok(FsReport { n_features: d, repetitions: cfg.repetitions, rows, runs, baseline })
}
