//! The five inner metaheuristics behind one interface.
//!
//! Every optimizer takes a [`Population`], runs until its
//! [`BudgetedObjective`] is exhausted and hands back a population of the
//! same size and dimension whose best cost is no worse than the input's.
//! Auxiliary state (velocities, temperatures, health) is rebuilt from the
//! incoming population on every call.

mod bfo;
mod de;
mod ga;
mod pso;
mod sa;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::base::{Bounds, BudgetedObjective, EvalError, Individual, Population, SeededRng};

pub use bfo::{bfo_reproduce, bfo_step, bfo_tumble_direction, BfoParams};
pub use de::{de_mutate, DeParams};
pub use ga::{blend_crossover, ga_step, tournament_select, GaParams};
pub use pso::{pso_velocity_update, PsoParams};
pub use sa::{sa_accept, SaParams};

/// Uniform interface shared by the inner optimizers; also lets tests inject
/// stub methods into the orchestrator.
pub trait Metaheuristic: Send + Sync {
    fn name(&self) -> &str;

    fn run(
        &self,
        pop: Population,
        obj: &mut BudgetedObjective<'_>,
        bounds: &Bounds,
        rng: &mut SeededRng,
    ) -> Result<Population, EvalError>;
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamError {
    #[error("{kind}: {message}")]
    Invalid { kind: OptimizerKind, message: String },
    #[error("unknown optimizer '{0}'; valid: PSO, SA, GA, DE, BFO")]
    UnknownKind(String),
}

fn invalid(kind: OptimizerKind, message: impl Into<String>) -> ParamError {
    ParamError::Invalid { kind, message: message.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum OptimizerKind {
    Pso,
    Sa,
    Ga,
    De,
    Bfo,
}

impl OptimizerKind {
    pub const ALL: [OptimizerKind; 5] =
        [OptimizerKind::Pso, OptimizerKind::Sa, OptimizerKind::Ga, OptimizerKind::De, OptimizerKind::Bfo];

    pub fn as_str(self) -> &'static str {
        match self {
            OptimizerKind::Pso => "PSO",
            OptimizerKind::Sa => "SA",
            OptimizerKind::Ga => "GA",
            OptimizerKind::De => "DE",
            OptimizerKind::Bfo => "BFO",
        }
    }
}

impl fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for OptimizerKind {
    type Err = ParamError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        OptimizerKind::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| ParamError::UnknownKind(s.to_string()))
    }
}

/// Parameter records for all five methods, as read from a plan file.
/// Missing keys fall back to the defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerParams {
    pub pso: PsoParams,
    pub sa: SaParams,
    pub ga: GaParams,
    pub de: DeParams,
    pub bfo: BfoParams,
}

impl OptimizerParams {
    pub fn build(&self, kind: OptimizerKind) -> InnerOptimizer {
        match kind {
            OptimizerKind::Pso => InnerOptimizer::Pso(self.pso.clone()),
            OptimizerKind::Sa => InnerOptimizer::Sa(self.sa.clone()),
            OptimizerKind::Ga => InnerOptimizer::Ga(self.ga.clone()),
            OptimizerKind::De => InnerOptimizer::De(self.de.clone()),
            OptimizerKind::Bfo => InnerOptimizer::Bfo(self.bfo.clone()),
        }
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        self.pso.validate()?;
        self.sa.validate()?;
        self.ga.validate()?;
        self.de.validate()?;
        self.bfo.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InnerOptimizer {
    Pso(PsoParams),
    Sa(SaParams),
    Ga(GaParams),
    De(DeParams),
    Bfo(BfoParams),
}

impl InnerOptimizer {
    pub fn with_defaults(kind: OptimizerKind) -> Self {
        OptimizerParams::default().build(kind)
    }

    pub fn kind(&self) -> OptimizerKind {
        match self {
            InnerOptimizer::Pso(_) => OptimizerKind::Pso,
            InnerOptimizer::Sa(_) => OptimizerKind::Sa,
            InnerOptimizer::Ga(_) => OptimizerKind::Ga,
            InnerOptimizer::De(_) => OptimizerKind::De,
            InnerOptimizer::Bfo(_) => OptimizerKind::Bfo,
        }
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        match self {
            InnerOptimizer::Pso(p) => p.validate(),
            InnerOptimizer::Sa(p) => p.validate(),
            InnerOptimizer::Ga(p) => p.validate(),
            InnerOptimizer::De(p) => p.validate(),
            InnerOptimizer::Bfo(p) => p.validate(),
        }
    }
}

impl Metaheuristic for InnerOptimizer {
    fn name(&self) -> &str {
        self.kind().as_str()
    }

    fn run(
        &self,
        mut pop: Population,
        obj: &mut BudgetedObjective<'_>,
        bounds: &Bounds,
        rng: &mut SeededRng,
    ) -> Result<Population, EvalError> {
        if !pop.evaluate_missing(obj)? || obj.is_exhausted() {
            return Ok(pop);
        }
        match self {
            InnerOptimizer::Pso(p) => pso::run(p, pop, obj, bounds, rng),
            InnerOptimizer::Sa(p) => sa::run(p, pop, obj, bounds, rng),
            InnerOptimizer::Ga(p) => ga::run(p, pop, obj, bounds, rng),
            InnerOptimizer::De(p) => de::run(p, pop, obj, bounds, rng),
            InnerOptimizer::Bfo(p) => bfo::run(p, pop, obj, bounds, rng),
        }
    }
}

/// Swaps the worst member for `elite` when the population has lost it.
fn restore_elite(members: &mut [Individual], elite: &Individual) {
    let elite_cost = elite.cost_or_inf();
    if members.iter().any(|m| m.cost_or_inf() <= elite_cost) {
        return;
    }
    let worst = members
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.cost_or_inf().total_cmp(&b.1.cost_or_inf()))
        .map(|(i, _)| i)
        .expect("non-empty population");
    members[worst] = elite.clone();
}

fn rebuild(members: Vec<Individual>) -> Population {
    Population::new(members).expect("optimizers preserve size and dimension")
}
