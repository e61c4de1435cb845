use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{invalid, rebuild, OptimizerKind, ParamError};
use crate::base::{Bounds, BudgetedObjective, EvalError, Individual, Population, SeededRng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PsoParams {
    pub inertia: f64,
    pub cognitive: f64,
    pub social: f64,
    /// Velocity clip per dimension, as a fraction of that dimension's width.
    pub vmax_fraction: f64,
}

impl Default for PsoParams {
    fn default() -> Self {
        Self { inertia: 0.729, cognitive: 1.49445, social: 1.49445, vmax_fraction: 0.5 }
    }
}

impl PsoParams {
    pub fn validate(&self) -> Result<(), ParamError> {
        let k = OptimizerKind::Pso;
        if !(self.inertia > 0.0 && self.inertia < 1.0) {
            return Err(invalid(k, format!("inertia must be in (0, 1), got {}", self.inertia)));
        }
        if !(self.cognitive > 0.0 && self.social > 0.0) {
            return Err(invalid(k, "cognitive and social weights must be positive"));
        }
        if !(self.vmax_fraction > 0.0) {
            return Err(invalid(k, "vmax_fraction must be positive"));
        }
        Ok(())
    }
}

/// `ω·v + c1·r1·(pbest − x) + c2·r2·(gbest − x)`, clipped to `±vmax` per
/// dimension. `r1`, `r2` hold one uniform draw per dimension.
#[allow(clippy::too_many_arguments)]
pub fn pso_velocity_update(
    v: &[f64],
    x: &[f64],
    pbest: &[f64],
    gbest: &[f64],
    params: &PsoParams,
    r1: &[f64],
    r2: &[f64],
    vmax: &[f64],
) -> Vec<f64> {
    (0..v.len())
        .map(|d| {
            let raw = params.inertia * v[d]
                + params.cognitive * r1[d] * (pbest[d] - x[d])
                + params.social * r2[d] * (gbest[d] - x[d]);
            raw.clamp(-vmax[d], vmax[d])
        })
        .collect()
}

pub(super) fn run(
    params: &PsoParams,
    pop: Population,
    obj: &mut BudgetedObjective<'_>,
    bounds: &Bounds,
    rng: &mut SeededRng,
) -> Result<Population, EvalError> {
    let dim = pop.dim();
    let vmax: Vec<f64> = (0..dim).map(|d| params.vmax_fraction * bounds.width(d)).collect();
    let g0 = pop.best_index().expect("evaluated population");
    let mut pbest = pop.into_members();
    let mut xs: Vec<Vec<f64>> = pbest.iter().map(|m| m.position.clone()).collect();
    let mut vs = vec![vec![0.0; dim]; xs.len()];
    let mut g = g0;

    'outer: loop {
        for i in 0..xs.len() {
            let r1: Vec<f64> = (0..dim).map(|_| rng.random()).collect();
            let r2: Vec<f64> = (0..dim).map(|_| rng.random()).collect();
            vs[i] = pso_velocity_update(&vs[i], &xs[i], &pbest[i].position, &pbest[g].position, params, &r1, &r2, &vmax);
            for d in 0..dim {
                xs[i][d] += vs[i][d];
            }
            bounds.clamp_in_place(&mut xs[i]);
            let Some(c) = obj.try_evaluate(&xs[i])? else { break 'outer };
            if c < pbest[i].cost_or_inf() {
                pbest[i] = Individual::evaluated(xs[i].clone(), c);
                if c < pbest[g].cost_or_inf() {
                    g = i;
                }
            }
        }
    }
    Ok(rebuild(pbest))
}

#[cfg(test)]
mod tests {
    use super::*;

    const BIG: [f64; 2] = [1e9, 1e9];

    #[test]
    fn stationary_at_consensus() {
        let p = PsoParams::default();
        let v = pso_velocity_update(&[0.0, 0.0], &[1.0, 2.0], &[1.0, 2.0], &[1.0, 2.0], &p, &[0.3; 2], &[0.7; 2], &BIG);
        assert_eq!(v, vec![0.0, 0.0]);
    }

    #[test]
    fn pure_inertia_decay() {
        let p = PsoParams { inertia: 0.5, ..PsoParams::default() };
        let v = pso_velocity_update(&[2.0, 0.0], &[0.0, 0.0], &[0.0, 0.0], &[0.0, 0.0], &p, &[1.0; 2], &[1.0; 2], &BIG);
        assert_eq!(v, vec![1.0, 0.0]);
    }

    #[test]
    fn attraction_terms_sum() {
        let p = PsoParams { inertia: 0.0, cognitive: 1.0, social: 1.0, vmax_fraction: 0.5 };
        let v = pso_velocity_update(&[0.0, 0.0], &[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0], &p, &[1.0; 2], &[1.0; 2], &BIG);
        assert_eq!(v, vec![1.0, 1.0]);
        let clipped =
            pso_velocity_update(&[0.0, 0.0], &[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0], &p, &[1.0; 2], &[1.0; 2], &[0.25, 0.5]);
        assert_eq!(clipped, vec![0.25, 0.5]);
    }

    #[test]
    fn validation() {
        assert!(PsoParams::default().validate().is_ok());
        assert!(PsoParams { inertia: 1.0, ..PsoParams::default() }.validate().is_err());
        assert!(PsoParams { social: 0.0, ..PsoParams::default() }.validate().is_err());
    }
}
