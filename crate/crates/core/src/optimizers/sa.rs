use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{invalid, rebuild, OptimizerKind, ParamError};
use crate::base::{Bounds, BudgetedObjective, EvalError, Individual, Population, SeededRng};

/// One annealing chain per individual.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SaParams {
    /// Starting temperature. `None` uses the population standard deviation
    /// of the incoming costs, floored at [`SaParams::T0_FLOOR`].
    pub t0: Option<f64>,
    /// Geometric cooling factor applied after every sweep.
    pub cooling: f64,
    pub step_fraction: f64,
}

impl Default for SaParams {
    fn default() -> Self {
        Self { t0: None, cooling: 0.95, step_fraction: 0.1 }
    }
}

impl SaParams {
    pub const T0_FLOOR: f64 = 1e-3;

    pub fn validate(&self) -> Result<(), ParamError> {
        let k = OptimizerKind::Sa;
        if let Some(t0) = self.t0 {
            if !(t0 > 0.0 && t0.is_finite()) {
                return Err(invalid(k, format!("t0 must be positive, got {t0}")));
            }
        }
        if !(self.cooling > 0.0 && self.cooling < 1.0) {
            return Err(invalid(k, format!("cooling must be in (0, 1), got {}", self.cooling)));
        }
        if !(self.step_fraction > 0.0) {
            return Err(invalid(k, "step_fraction must be positive"));
        }
        Ok(())
    }

    fn initial_temperature(&self, costs: &[f64]) -> f64 {
        self.t0.unwrap_or_else(|| {
            let n = costs.len() as f64;
            let mean = costs.iter().sum::<f64>() / n;
            let var = costs.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / n;
            var.sqrt().max(Self::T0_FLOOR)
        })
    }
}

/// Metropolis rule: improvements always pass, worsening moves pass with
/// probability `exp(-delta / T)`.
pub fn sa_accept(delta_cost: f64, temperature: f64, u: f64) -> bool {
    delta_cost <= 0.0 || u < (-delta_cost / temperature).exp()
}

pub(super) fn run(
    params: &SaParams,
    pop: Population,
    obj: &mut BudgetedObjective<'_>,
    bounds: &Bounds,
    rng: &mut SeededRng,
) -> Result<Population, EvalError> {
    let dim = pop.dim();
    let steps: Vec<Normal<f64>> = (0..dim)
        .map(|d| Normal::new(0.0, params.step_fraction * bounds.width(d)).expect("finite step"))
        .collect();
    let mut best = pop.into_members();
    let mut current = best.clone();
    let costs: Vec<f64> = current.iter().map(Individual::cost_or_inf).collect();
    let mut temperature = params.initial_temperature(&costs);

    'outer: loop {
        for i in 0..current.len() {
            let mut cand: Vec<f64> = current[i].position.iter().zip(&steps).map(|(x, n)| x + n.sample(rng)).collect();
            bounds.clamp_in_place(&mut cand);
            let Some(c) = obj.try_evaluate(&cand)? else { break 'outer };
            let u: f64 = rng.random();
            if sa_accept(c - current[i].cost_or_inf(), temperature, u) {
                current[i] = Individual::evaluated(cand, c);
                if c < best[i].cost_or_inf() {
                    best[i] = current[i].clone();
                }
            }
        }
        temperature *= params.cooling;
    }
    Ok(rebuild(best))
}
