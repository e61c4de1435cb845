//! Seeded multi-run experiment driver: per-function repeated runs of cHM and
//! each single optimizer, aggregate statistics, selection frequencies and
//! result export.

mod export;
mod plan;
mod stats;

use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::base::{euclidean_distance, fitness, mix_seed, stable_hash, Bounds, BudgetedObjective, Individual, Objective, SeededRng};
use crate::benchmarks::{BenchmarkError, BenchmarkRegistry, BenchmarkSpec};
use crate::chm::{check_convergence, chm_run, initial_population, ChmConfig, ChmError, ChmTrace};
use crate::optimizers::{Metaheuristic, OptimizerParams, ParamError};

pub use export::{export_results, write_raw_records, ExportFormat, RESULTS_DIR_ENV};
pub use plan::{ChmSettings, ExperimentPlan, Method};
pub use stats::{
    aggregate, leaderboard, selection_frequencies, summarize, CellStats, FunctionLeader, LeaderBoard, MethodSummary,
    SelectionCounts, Summary,
};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid plan: {0}")]
    Plan(String),
    #[error(transparent)]
    Benchmark(#[from] BenchmarkError),
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error(transparent)]
    Chm(#[from] ChmError),
    #[error("run {function}/{method}/rep {rep} (seed {seed}) failed: {message}")]
    Run { function: String, method: String, rep: usize, seed: u64, message: String },
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("thread pool: {0}")]
    Pool(String),
}

/// Seed of one (function, method, repetition) cell.
pub fn cell_seed(base_seed: u64, function: &str, method: Method, rep: usize) -> u64 {
    mix_seed(base_seed, &[stable_hash(function), stable_hash(method.as_str()), rep as u64])
}

const SEGMENT_STREAM: u64 = 2;

/// Stream for segment `segment` (1-based) of a single-method run.
pub fn segment_stream(root: &SeededRng, segment: usize) -> SeededRng {
    root.derive(&[segment as u64, SEGMENT_STREAM])
}

/// One point of a best-fitness-vs-FE curve. Iteration 0 is the initial
/// population.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub iteration: usize,
    pub cumulative_fe: usize,
    pub best_fitness: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selected: Option<String>,
}

/// Raw per-run record; enough to replay the cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub function: String,
    pub method: Method,
    pub rep: usize,
    pub seed: u64,
    pub best_fitness: f64,
    pub best_value: f64,
    pub best_position: Vec<f64>,
    pub distance: f64,
    pub fe_used: usize,
    pub fe_cap: usize,
    pub iterations: usize,
    pub converged: bool,
    /// Inner method chosen for each fit phase (cHM only).
    pub selections: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl RunRecord {
    pub fn is_ok(&self) -> bool {
        self.error.is_none()
    }
}

/// A run record together with its convergence curve.
#[derive(Debug, Clone)]
pub struct CellOutcome {
    pub record: RunRecord,
    pub curve: Vec<TracePoint>,
    pub chm_trace: Option<ChmTrace>,
}

fn distance_to_optimum(spec: &BenchmarkSpec, x: &[f64], nearest: bool) -> f64 {
    let d = |o: &[f64]| euclidean_distance(x, o).expect("matching dimensions");
    if nearest {
        spec.all_optima().map(d).fold(f64::INFINITY, f64::min)
    } else {
        d(&spec.optimum)
    }
}

/// Executes one cell. Errors are reported inside the record.
pub fn run_cell(plan: &ExperimentPlan, spec: &BenchmarkSpec, method: Method, rep: usize) -> CellOutcome {
    let seed = cell_seed(plan.base_seed, spec.name, method, rep);
    let reference = spec.reference_value;
    let formula = spec.formula;
    let objective = move |x: &[f64]| fitness(formula(x), reference).unwrap_or(f64::NAN);
    let config = plan.chm.config(&plan.optimizers, plan.chm.budgets_for(spec));
    let fe_cap = config.run_fe_cap();
    let root = SeededRng::new(seed);

    let result = optimize(method, &config, &plan.optimizers, &objective, &spec.bounds, &root);

    let base = RunRecord {
        function: spec.name.to_string(),
        method,
        rep,
        seed,
        best_fitness: f64::NAN,
        best_value: f64::NAN,
        best_position: Vec::new(),
        distance: f64::NAN,
        fe_used: 0,
        fe_cap,
        iterations: 0,
        converged: false,
        selections: Vec::new(),
        error: None,
    };
    match result {
        Ok(MethodRun { best, fe_used, converged, curve, chm_trace }) => {
            let best_fitness = best.cost_or_inf();
            let position = best.position;
            let record = RunRecord {
                best_fitness,
                best_value: formula(&position),
                distance: distance_to_optimum(spec, &position, plan.nearest_optimum),
                best_position: position,
                fe_used,
                iterations: curve.len() - 1,
                converged,
                selections: chm_trace.iter().flat_map(|t| t.selections().map(String::from)).collect(),
                ..base
            };
            CellOutcome { record, curve, chm_trace }
        }
        Err(message) => CellOutcome { record: RunRecord { error: Some(message), ..base }, curve: Vec::new(), chm_trace: None },
    }
}

/// Result of running one method on one objective.
#[derive(Debug, Clone)]
pub struct MethodRun {
    pub best: Individual,
    pub fe_used: usize,
    pub converged: bool,
    /// Best cost after initialization and after each iteration or segment.
    pub curve: Vec<TracePoint>,
    pub chm_trace: Option<ChmTrace>,
}

/// Runs cHM, or a single inner optimizer under the same total cap: the
/// same initial population, then `n` segments of `k·probing + fit` FE each
/// with the orchestrator's convergence test between segments.
pub fn optimize(
    method: Method,
    config: &ChmConfig,
    params: &OptimizerParams,
    objective: &dyn Objective,
    bounds: &Bounds,
    root: &SeededRng,
) -> Result<MethodRun, String> {
    let kind = match method {
        Method::Chm => {
            let out = chm_run(config, objective, bounds, root).map_err(|e| e.to_string())?;
            let t = out.trace;
            let mut curve =
                vec![TracePoint { iteration: 0, cumulative_fe: t.init_fe, best_fitness: t.init_best, selected: None }];
            curve.extend(t.iterations.iter().map(|i| TracePoint {
                iteration: i.iteration,
                cumulative_fe: i.cumulative_fe,
                best_fitness: i.best_so_far,
                selected: Some(i.selected_name.clone()),
            }));
            return Ok(MethodRun { best: out.best, fe_used: t.total_fe, converged: t.converged, curve, chm_trace: Some(t) });
        }
        Method::Single(kind) => kind,
    };
    let opt = params.build(kind);
    let mut pop = initial_population(config.population_size, objective, bounds, root).map_err(|e| e.to_string())?;
    let mut fe = pop.len();
    let mut history = vec![pop.best_cost()];
    let mut curve = vec![TracePoint { iteration: 0, cumulative_fe: fe, best_fitness: pop.best_cost(), selected: None }];
    let mut converged = false;
    for segment in 1..=config.n {
        let mut obj = BudgetedObjective::new(objective, config.iteration_fe_cap());
        pop = opt
            .run(pop, &mut obj, bounds, &mut segment_stream(root, segment))
            .map_err(|e| format!("segment {segment}, method {kind}: {e}"))?;
        fe += obj.used();
        history.push(pop.best_cost());
        curve.push(TracePoint { iteration: segment, cumulative_fe: fe, best_fitness: pop.best_cost(), selected: None });
        if check_convergence(&history, config.convergence_epsilon, config.convergence_patience) {
            converged = true;
            break;
        }
    }
    let best = pop.best().expect("evaluated population").clone();
    Ok(MethodRun { best, fe_used: fe, converged, curve, chm_trace: None })
}

/// Everything produced by [`run_experiment`], with cells in
/// (function, method, rep) plan order.
#[derive(Debug, Clone)]
pub struct ExperimentResults {
    pub plan: ExperimentPlan,
    pub functions: Vec<String>,
    pub cells: Vec<CellOutcome>,
    pub stats: Vec<CellStats>,
    pub leaderboard: LeaderBoard,
}

impl ExperimentResults {
    pub fn records(&self) -> impl Iterator<Item = &RunRecord> {
        self.cells.iter().map(|c| &c.record)
    }

    pub fn stats_for(&self, function: &str, method: Method) -> Option<&CellStats> {
        self.stats.iter().find(|s| s.function == function && s.method == method)
    }

    pub fn chm_traces(&self) -> impl Iterator<Item = &ChmTrace> {
        self.cells.iter().filter_map(|c| c.chm_trace.as_ref())
    }
}

/// Runs every (function, method, repetition) cell, in parallel up to the
/// plan's worker count, and aggregates in a fixed order.
pub fn run_experiment(plan: &ExperimentPlan, registry: &BenchmarkRegistry) -> Result<ExperimentResults, HarnessError> {
    let specs = plan.validate(registry)?;
    let keys: Vec<(usize, Method, usize)> = specs
        .iter()
        .enumerate()
        .flat_map(|(f, _)| plan.methods.iter().flat_map(move |&m| (0..plan.repetitions).map(move |r| (f, m, r))))
        .collect();
    let run_all = || keys.par_iter().map(|&(f, m, r)| run_cell(plan, &specs[f], m, r)).collect::<Vec<_>>();
    let cells = match plan.workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| HarnessError::Pool(e.to_string()))?
            .install(run_all),
        None => run_all(),
    };
    if !plan.skip_on_error {
        if let Some(bad) = cells.iter().map(|c| &c.record).find(|r| !r.is_ok()) {
            return Err(HarnessError::Run {
                function: bad.function.clone(),
                method: bad.method.to_string(),
                rep: bad.rep,
                seed: bad.seed,
                message: bad.error.clone().unwrap_or_default(),
            });
        }
    }
    let functions: Vec<String> = specs.iter().map(|s| s.name.to_string()).collect();
    let stats = aggregate(&functions, &plan.methods, cells.iter().map(|c| &c.record));
    let leaderboard = leaderboard(&functions, &plan.methods, &stats);
    Ok(ExperimentResults { plan: plan.clone(), functions, cells, stats, leaderboard })
}

/// Re-runs one recorded cell from the plan.
pub fn replay(plan: &ExperimentPlan, registry: &BenchmarkRegistry, record: &RunRecord) -> Result<RunRecord, HarnessError> {
    let specs = plan.resolve_functions(registry)?;
    let spec = specs
        .iter()
        .find(|s| s.name == record.function)
        .ok_or_else(|| HarnessError::Plan(format!("function '{}' is not in the plan", record.function)))?;
    let out = run_cell(plan, spec, record.method, record.rep);
    debug_assert_eq!(out.record.seed, record.seed);
    Ok(out.record)
}
