//! The probing/fitting orchestrator.
//!
//! Each iteration probes every inner optimizer on its own copy of the shared
//! population under a small budget, keeps the winner's population, runs the
//! winner again under the larger fit budget and carries the fitted
//! population forward only if it improved.

use std::fmt;
use std::io::{self, Write};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::base::{Bounds, BudgetedObjective, EvalError, Individual, Objective, Population, SeededRng};
use crate::benchmarks::Budgets;
use crate::optimizers::{InnerOptimizer, Metaheuristic, OptimizerKind, OptimizerParams};

const INIT_STREAM: u64 = 0x494E_4954;
const PROBE_STREAM: u64 = 0;
const FIT_STREAM: u64 = 1;

/// Stream for drawing the initial population.
pub fn init_stream(root: &SeededRng) -> SeededRng {
    root.derive(&[INIT_STREAM])
}

/// Stream for method `method` in the probing phase of `iteration` (1-based).
pub fn probe_stream(root: &SeededRng, iteration: usize, method: usize) -> SeededRng {
    root.derive(&[iteration as u64, PROBE_STREAM, method as u64])
}

/// Stream for the fit phase of `iteration` (1-based).
pub fn fit_stream(root: &SeededRng, iteration: usize) -> SeededRng {
    root.derive(&[iteration as u64, FIT_STREAM])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Init,
    Probing,
    Fit,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::Init => "initialization",
            Phase::Probing => "probing",
            Phase::Fit => "fit",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChmError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{phase} phase failed (iteration {iteration}, method {}): {source}", method.as_deref().unwrap_or("-"))]
    Eval { phase: Phase, iteration: usize, method: Option<String>, source: EvalError },
    #[error("method {method} returned {found} members, expected {expected}")]
    SizeChanged { method: String, expected: usize, found: usize },
}

/// Orchestrator parameters. Cloning shares the optimizer instances.
#[derive(Clone)]
pub struct ChmConfig {
    pub n: usize,
    pub population_size: usize,
    pub maxfe_probing: usize,
    pub maxfe_fit: usize,
    pub convergence_epsilon: f64,
    pub convergence_patience: usize,
    pub optimizers: Vec<Arc<dyn Metaheuristic>>,
}

impl fmt::Debug for ChmConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ChmConfig")
            .field("n", &self.n)
            .field("population_size", &self.population_size)
            .field("maxfe_probing", &self.maxfe_probing)
            .field("maxfe_fit", &self.maxfe_fit)
            .field("convergence_epsilon", &self.convergence_epsilon)
            .field("convergence_patience", &self.convergence_patience)
            .field("optimizers", &self.method_names())
            .finish()
    }
}

impl ChmConfig {
    pub const DEFAULT_N: usize = 4;
    pub const DEFAULT_POPULATION: usize = 20;
    pub const DEFAULT_EPSILON: f64 = 1e-8;
    pub const DEFAULT_PATIENCE: usize = 1;

    /// Defaults with the given optimizers and per-phase budgets.
    pub fn new(optimizers: Vec<Arc<dyn Metaheuristic>>, budgets: Budgets) -> Self {
        Self {
            n: Self::DEFAULT_N,
            population_size: Self::DEFAULT_POPULATION,
            maxfe_probing: budgets.maxfe_probing,
            maxfe_fit: budgets.maxfe_fit,
            convergence_epsilon: Self::DEFAULT_EPSILON,
            convergence_patience: Self::DEFAULT_PATIENCE,
            optimizers,
        }
    }

    /// All five inner methods in the order PSO, SA, GA, DE, BFO.
    pub fn standard(params: &OptimizerParams, budgets: Budgets) -> Self {
        let optimizers =
            OptimizerKind::ALL.into_iter().map(|k| Arc::new(params.build(k)) as Arc<dyn Metaheuristic>).collect();
        Self::new(optimizers, budgets)
    }

    pub fn k(&self) -> usize {
        self.optimizers.len()
    }

    pub fn method_names(&self) -> Vec<String> {
        self.optimizers.iter().map(|o| o.name().to_string()).collect()
    }

    pub fn probing_ratio(&self) -> f64 {
        self.maxfe_probing as f64 / self.maxfe_fit as f64
    }

    /// FE used by one iteration at most.
    pub fn iteration_fe_cap(&self) -> usize {
        self.k() * self.maxfe_probing + self.maxfe_fit
    }

    /// Hard ceiling on FE for a whole run, including initialization.
    pub fn run_fe_cap(&self) -> usize {
        self.population_size + self.n * self.iteration_fe_cap()
    }

    /// Rejects unusable settings; warns when hybridization is off or the
    /// probing-to-fit ratio leaves [0.2, 0.5].
    pub fn validate(&self) -> Result<(), ChmError> {
        let fail = |m: &str| Err(ChmError::Config(m.to_string()));
        if self.optimizers.is_empty() {
            return fail("at least one inner optimizer is required");
        }
        if self.n == 0 {
            return fail("n must be at least 1");
        }
        if self.population_size == 0 {
            return fail("population_size must be at least 1");
        }
        if self.maxfe_fit == 0 {
            return fail("maxfe_fit must be at least 1");
        }
        if !(self.convergence_epsilon >= 0.0) {
            return fail("convergence_epsilon must be non-negative");
        }
        if self.k() < 2 {
            log::warn!("only one inner optimizer configured; running without hybridization");
        }
        let ratio = self.probing_ratio();
        if !(0.2..=0.5).contains(&ratio) {
            log::warn!("probing-to-fit ratio {ratio:.3} lies outside the recommended range [0.2, 0.5]");
        }
        Ok(())
    }
}

/// Convergence test on a best-fitness history: the latest value is below
/// `epsilon`, or it improved by less than `epsilon` over the last `patience`
/// entries. Returns false while the history is too short for the stagnation
/// test to apply.
pub fn check_convergence(best_history: &[f64], epsilon: f64, patience: usize) -> bool {
    let Some(&latest) = best_history.last() else { return false };
    if latest < epsilon {
        return true;
    }
    if patience == 0 || best_history.len() <= patience {
        return false;
    }
    best_history[best_history.len() - 1 - patience] - latest < epsilon
}

/// One probing result.
#[derive(Debug, Clone)]
pub struct ProbeResult {
    pub method: usize,
    pub population: Population,
    pub best_cost: f64,
    pub fe_used: usize,
}

/// Runs `opt` under a fresh cap and enforces the elitist contract: if the
/// returned population lost the input's best member, that member replaces
/// the worst one.
fn run_phase(
    opt: &dyn Metaheuristic,
    pop: &Population,
    objective: &dyn Objective,
    cap: usize,
    bounds: &Bounds,
    mut rng: SeededRng,
) -> Result<(Population, usize), EvalError> {
    let mut obj = BudgetedObjective::new(objective, cap);
    let out = opt.run(pop.clone(), &mut obj, bounds, &mut rng)?;
    let used = obj.used();
    let (Some(elite), true) = (pop.best(), out.len() == pop.len()) else {
        return Ok((out, used));
    };
    if out.best_cost() <= elite.cost_or_inf() {
        return Ok((out, used));
    }
    let mut members = out.into_members();
    let worst = (0..members.len())
        .max_by(|&a, &b| members[a].cost_or_inf().total_cmp(&members[b].cost_or_inf()))
        .expect("non-empty");
    members[worst] = elite.clone();
    Ok((Population::new(members).expect("same shape"), used))
}

fn check_size(opt: &dyn Metaheuristic, expected: usize, out: &Population) -> Result<(), ChmError> {
    if out.len() != expected || (!out.is_empty() && out.dim() == 0) {
        return Err(ChmError::SizeChanged { method: opt.name().to_string(), expected, found: out.len() });
    }
    Ok(())
}

/// Probes every optimizer on an independent copy of `theta` with its own
/// budget of `maxfe_probing`. Results come back in configured order.
pub fn probe_all(
    theta: &Population,
    optimizers: &[Arc<dyn Metaheuristic>],
    maxfe_probing: usize,
    objective: &dyn Objective,
    bounds: &Bounds,
    root: &SeededRng,
    iteration: usize,
) -> Result<Vec<ProbeResult>, ChmError> {
    optimizers
        .iter()
        .enumerate()
        .map(|(j, opt)| {
            let (population, fe_used) =
                run_phase(opt.as_ref(), theta, objective, maxfe_probing, bounds, probe_stream(root, iteration, j))
                    .map_err(|source| ChmError::Eval {
                        phase: Phase::Probing,
                        iteration,
                        method: Some(opt.name().to_string()),
                        source,
                    })?;
            check_size(opt.as_ref(), theta.len(), &population)?;
            Ok(ProbeResult { method: j, best_cost: population.best_cost(), population, fe_used })
        })
        .collect()
}

/// Lowest best cost wins; ties go to the earliest method.
pub fn select_best(results: &[ProbeResult]) -> usize {
    let mut best = 0;
    for (i, r) in results.iter().enumerate().skip(1) {
        if r.best_cost < results[best].best_cost {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChmIteration {
    pub iteration: usize,
    pub probing_best: Vec<f64>,
    pub probing_fe: Vec<usize>,
    pub selected: usize,
    pub selected_name: String,
    /// Best cost of the winner's post-probing population.
    pub pre_fit_best: f64,
    pub fit_best: f64,
    pub fit_fe: usize,
    /// Probing plus fit FE of this iteration.
    pub fe_used: usize,
    pub carryover: bool,
    pub best_so_far: f64,
    pub cumulative_fe: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChmTrace {
    pub methods: Vec<String>,
    pub init_fe: usize,
    pub init_best: f64,
    pub iterations: Vec<ChmIteration>,
    pub converged: bool,
    pub total_fe: usize,
    pub final_best: Individual,
}

impl ChmTrace {
    /// Names of the method selected in each iteration.
    pub fn selections(&self) -> impl Iterator<Item = &str> {
        self.iterations.iter().map(|i| i.selected_name.as_str())
    }

    /// Best-so-far history, starting with the initial population.
    pub fn best_history(&self) -> Vec<f64> {
        std::iter::once(self.init_best).chain(self.iterations.iter().map(|i| i.best_so_far)).collect()
    }

    /// One JSON object per iteration, newline-terminated.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> io::Result<()> {
        for it in &self.iterations {
            serde_json::to_writer(&mut out, it)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct ChmOutcome {
    pub best: Individual,
    pub trace: ChmTrace,
    /// The shared population after the last iteration.
    pub population: Population,
}

fn keep_best(best: &mut Individual, pop: &Population) {
    if let Some(b) = pop.best() {
        if b.cost_or_inf() < best.cost_or_inf() {
            *best = b.clone();
        }
    }
}

/// Draws `size` members uniformly in `bounds` and evaluates them.
pub fn initial_population(
    size: usize,
    objective: &dyn Objective,
    bounds: &Bounds,
    root: &SeededRng,
) -> Result<Population, ChmError> {
    let pop = Population::random(size, bounds, &mut init_stream(root));
    evaluate_initial(pop, objective)
}

fn evaluate_initial(mut pop: Population, objective: &dyn Objective) -> Result<Population, ChmError> {
    let mut obj = BudgetedObjective::new(objective, pop.len());
    pop.evaluate_missing(&mut obj)
        .map_err(|source| ChmError::Eval { phase: Phase::Init, iteration: 0, method: None, source })?;
    Ok(pop)
}

/// A full cHM run from a random initial population.
pub fn chm_run(
    config: &ChmConfig,
    objective: &dyn Objective,
    bounds: &Bounds,
    rng: &SeededRng,
) -> Result<ChmOutcome, ChmError> {
    config.validate()?;
    let theta = Population::random(config.population_size, bounds, &mut init_stream(rng));
    chm_run_from(config, theta, objective, bounds, rng)
}

/// A full cHM run from a given initial population. Members without a
/// cached cost are evaluated first and counted in `init_fe`.
pub fn chm_run_from(
    config: &ChmConfig,
    theta: Population,
    objective: &dyn Objective,
    bounds: &Bounds,
    rng: &SeededRng,
) -> Result<ChmOutcome, ChmError> {
    config.validate()?;
    let init_fe = theta.members().iter().filter(|m| m.cost.is_none()).count();
    let mut theta = evaluate_initial(theta, objective)?;
    let mut best = theta.best().expect("evaluated population").clone();
    let init_best = best.cost_or_inf();
    let mut history = vec![init_best];
    let mut iterations = Vec::with_capacity(config.n);
    let mut cumulative_fe = init_fe;
    let mut converged = false;

    for iteration in 1..=config.n {
        let probes =
            probe_all(&theta, &config.optimizers, config.maxfe_probing, objective, bounds, rng, iteration)?;
        for p in &probes {
            keep_best(&mut best, &p.population);
        }
        let winner = select_best(&probes);
        let opt = config.optimizers[winner].as_ref();
        let probing_fe: Vec<usize> = probes.iter().map(|p| p.fe_used).collect();
        let probing_best: Vec<f64> = probes.iter().map(|p| p.best_cost).collect();
        let pre_fit = probes.into_iter().nth(winner).expect("winner index").population;
        let pre_fit_best = pre_fit.best_cost();

        let (fitted, fit_fe) = run_phase(opt, &pre_fit, objective, config.maxfe_fit, bounds, fit_stream(rng, iteration))
            .map_err(|source| ChmError::Eval {
                phase: Phase::Fit,
                iteration,
                method: Some(opt.name().to_string()),
                source,
            })?;
        check_size(opt, pre_fit.len(), &fitted)?;
        let fit_best = fitted.best_cost();
        keep_best(&mut best, &fitted);
        let carryover = fit_best < pre_fit_best;
        theta = if carryover { fitted } else { pre_fit };

        let fe_used = probing_fe.iter().sum::<usize>() + fit_fe;
        cumulative_fe += fe_used;
        history.push(best.cost_or_inf());
        iterations.push(ChmIteration {
            iteration,
            probing_best,
            probing_fe,
            selected: winner,
            selected_name: opt.name().to_string(),
            pre_fit_best,
            fit_best,
            fit_fe,
            fe_used,
            carryover,
            best_so_far: best.cost_or_inf(),
            cumulative_fe,
        });
        if check_convergence(&history, config.convergence_epsilon, config.convergence_patience) {
            converged = true;
            break;
        }
    }

    let trace = ChmTrace {
        methods: config.method_names(),
        init_fe,
        init_best,
        iterations,
        converged,
        total_fe: cumulative_fe,
        final_best: best.clone(),
    };
    Ok(ChmOutcome { best, trace, population: theta })
}

/// Convenience constructor for a single default inner optimizer.
pub fn default_optimizer(kind: OptimizerKind) -> Arc<dyn Metaheuristic> {
    Arc::new(InnerOptimizer::with_defaults(kind))
}
