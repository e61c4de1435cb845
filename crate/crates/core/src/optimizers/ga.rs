use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{invalid, rebuild, restore_elite, OptimizerKind, ParamError};
use crate::base::{Bounds, BudgetedObjective, EvalError, Individual, Population, SeededRng};

/// Real-coded generational GA.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaParams {
    pub tournament_size: usize,
    pub crossover_rate: f64,
    pub blend_alpha: f64,
    /// Per-gene mutation probability; `None` means `1 / D`.
    pub mutation_rate: Option<f64>,
    pub mutation_fraction: f64,
    pub elitism: usize,
}

impl Default for GaParams {
    fn default() -> Self {
        Self {
            tournament_size: 2,
            crossover_rate: 0.9,
            blend_alpha: 0.5,
            mutation_rate: None,
            mutation_fraction: 0.1,
            elitism: 1,
        }
    }
}

impl GaParams {
    pub fn validate(&self) -> Result<(), ParamError> {
        let k = OptimizerKind::Ga;
        if self.tournament_size < 2 {
            return Err(invalid(k, "tournament_size must be at least 2"));
        }
        let rates = [Some(self.crossover_rate), self.mutation_rate];
        if rates.into_iter().flatten().any(|r| !(0.0..=1.0).contains(&r)) {
            return Err(invalid(k, "rates must lie in [0, 1]"));
        }
        if !(self.blend_alpha >= 0.0 && self.mutation_fraction >= 0.0) {
            return Err(invalid(k, "blend_alpha and mutation_fraction must be non-negative"));
        }
        Ok(())
    }
}

/// Index of the best of `size` distinct members drawn at random (fewer if
/// the population is smaller). Ties go to the earlier draw.
pub fn tournament_select(members: &[Individual], size: usize, rng: &mut SeededRng) -> usize {
    let picks = index::sample(rng, members.len(), size.min(members.len()).max(1));
    picks
        .iter()
        .reduce(|a, b| if members[b].cost_or_inf() < members[a].cost_or_inf() { b } else { a })
        .expect("at least one pick")
}

/// BLX-α: per gene, `lo + u·(hi − lo)` over `[min − α·I, max + α·I]` with
/// `I = |p1 − p2|`. `u` supplies one draw per gene.
pub fn blend_crossover(p1: &[f64], p2: &[f64], alpha: f64, u: &[f64]) -> Vec<f64> {
    p1.iter()
        .zip(p2)
        .zip(u)
        .map(|((&a, &b), &u)| {
            let (min, max) = (a.min(b), a.max(b));
            let span = max - min;
            let (lo, hi) = (min - alpha * span, max + alpha * span);
            lo + u * (hi - lo)
        })
        .collect()
}

fn sorted_by_cost(members: &[Individual]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..members.len()).collect();
    order.sort_by(|&a, &b| members[a].cost_or_inf().total_cmp(&members[b].cost_or_inf()));
    order
}

/// One generation. The best `elitism` members pass unchanged; the rest are
/// children of tournament-selected parents. If the budget runs out part-way,
/// the open slots are filled with the previous generation's best members in
/// rank order.
pub fn ga_step(
    pop: &Population,
    obj: &mut BudgetedObjective<'_>,
    params: &GaParams,
    bounds: &Bounds,
    rng: &mut SeededRng,
) -> Result<Population, EvalError> {
    let members = pop.members();
    let n = members.len();
    let dim = pop.dim();
    let order = sorted_by_cost(members);
    let mutation_rate = params.mutation_rate.unwrap_or(1.0 / dim as f64);
    let sigmas: Vec<f64> = (0..dim).map(|d| params.mutation_fraction * bounds.width(d)).collect();

    let mut next: Vec<Individual> = order.iter().take(params.elitism.min(n)).map(|&i| members[i].clone()).collect();
    while next.len() < n {
        let a = tournament_select(members, params.tournament_size, rng);
        let b = tournament_select(members, params.tournament_size, rng);
        let mut changed = false;
        let mut child = if rng.random::<f64>() < params.crossover_rate {
            changed = true;
            let u: Vec<f64> = (0..dim).map(|_| rng.random()).collect();
            blend_crossover(&members[a].position, &members[b].position, params.blend_alpha, &u)
        } else {
            members[a].position.clone()
        };
        for (d, gene) in child.iter_mut().enumerate() {
            if rng.random::<f64>() < mutation_rate && sigmas[d] > 0.0 {
                changed = true;
                *gene += Normal::new(0.0, sigmas[d]).expect("finite sigma").sample(rng);
            }
        }
        bounds.clamp_in_place(&mut child);
        if !changed || child == members[a].position {
            next.push(Individual { position: child, cost: members[a].cost });
            continue;
        }
        match obj.try_evaluate(&child)? {
            Some(c) => next.push(Individual::evaluated(child, c)),
            None => {
                let missing = n - next.len();
                next.extend(order.iter().take(missing).map(|&i| members[i].clone()));
                break;
            }
        }
    }
    Ok(rebuild(next))
}

/// Consecutive generations without a single evaluation after which the run
/// gives up; only reachable when no child can differ from its parent.
const STALL_LIMIT: usize = 100;

pub(super) fn run(
    params: &GaParams,
    mut pop: Population,
    obj: &mut BudgetedObjective<'_>,
    bounds: &Bounds,
    rng: &mut SeededRng,
) -> Result<Population, EvalError> {
    // Keep at least one child slot so every generation can spend budget.
    let step_params = GaParams { elitism: params.elitism.min(pop.len() - 1), ..params.clone() };
    let mut elite = pop.best().expect("evaluated population").clone();
    let mut stalled = 0;
    while !obj.is_exhausted() && stalled < STALL_LIMIT {
        let before = obj.used();
        pop = ga_step(&pop, obj, &step_params, bounds, rng)?;
        if let Some(b) = pop.best() {
            if b.cost_or_inf() < elite.cost_or_inf() {
                elite = b.clone();
            }
        }
        stalled = if obj.used() == before { stalled + 1 } else { 0 };
    }
    let mut members = pop.into_members();
    restore_elite(&mut members, &elite);
    Ok(rebuild(members))
}
