use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{invalid, rebuild, restore_elite, OptimizerKind, ParamError};
use crate::base::{Bounds, BudgetedObjective, EvalError, Individual, Population, SeededRng};

/// Bacterial foraging without the swarming attractant term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BfoParams {
    pub chemotaxis_steps: usize,
    pub swim_length: usize,
    pub reproduction_steps: usize,
    pub elimination_dispersal_steps: usize,
    pub dispersal_probability: f64,
    pub step_fraction: f64,
}

impl Default for BfoParams {
    fn default() -> Self {
        Self {
            chemotaxis_steps: 4,
            swim_length: 4,
            reproduction_steps: 2,
            elimination_dispersal_steps: 1,
            dispersal_probability: 0.25,
            step_fraction: 0.05,
        }
    }
}

impl BfoParams {
    pub fn validate(&self) -> Result<(), ParamError> {
        let k = OptimizerKind::Bfo;
        let counts = [self.chemotaxis_steps, self.swim_length, self.reproduction_steps, self.elimination_dispersal_steps];
        if counts.contains(&0) {
            return Err(invalid(k, "all step counts must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.dispersal_probability) {
            return Err(invalid(k, "dispersal_probability must lie in [0, 1]"));
        }
        if !(self.step_fraction > 0.0) {
            return Err(invalid(k, "step_fraction must be positive"));
        }
        Ok(())
    }
}

/// Random direction of unit Euclidean norm.
pub fn bfo_tumble_direction(dim: usize, rng: &mut SeededRng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// Sorts by accumulated health (lower is healthier) and replaces the worse
/// half with copies of the better half. With an odd count the middle member
/// survives once.
pub fn bfo_reproduce(members: Vec<Individual>, health: &[f64]) -> Vec<Individual> {
    let n = members.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| health[a].total_cmp(&health[b]));
    let half = n / 2;
    let mut out: Vec<Individual> = order[..half].iter().map(|&i| members[i].clone()).collect();
    if n % 2 == 1 {
        out.push(members[order[half]].clone());
    }
    out.extend(order[..half].iter().map(|&i| members[i].clone()));
    out
}

/// Outcome of one BFO cycle.
#[derive(Debug, Clone)]
pub struct BfoCycle {
    pub population: Population,
    /// Best member seen at any point during the cycle, including positions
    /// the bacteria later left.
    pub best_seen: Individual,
    pub exhausted: bool,
}

fn moved(x: &[f64], dir: &[f64], steps: &[f64], bounds: &Bounds) -> Vec<f64> {
    let mut y: Vec<f64> = x.iter().zip(dir).zip(steps).map(|((x, d), s)| x + s * d).collect();
    bounds.clamp_in_place(&mut y);
    y
}

/// One full cycle of chemotaxis (tumble and swim), reproduction and
/// elimination-dispersal. Stops at the first exhausted evaluation.
pub fn bfo_step(
    pop: &Population,
    obj: &mut BudgetedObjective<'_>,
    params: &BfoParams,
    bounds: &Bounds,
    rng: &mut SeededRng,
) -> Result<BfoCycle, EvalError> {
    let dim = pop.dim();
    let steps: Vec<f64> = (0..dim).map(|d| params.step_fraction * bounds.width(d)).collect();
    let mut cells = pop.members().to_vec();
    let mut best_seen = pop.best().cloned().unwrap_or_else(|| cells[0].clone());
    let note = |ind: &Individual, best: &mut Individual| {
        if ind.cost_or_inf() < best.cost_or_inf() {
            *best = ind.clone();
        }
    };
    let finish = |cells: Vec<Individual>, best_seen: Individual, exhausted| {
        Ok(BfoCycle { population: rebuild(cells), best_seen, exhausted })
    };

    for _ in 0..params.elimination_dispersal_steps {
        for _ in 0..params.reproduction_steps {
            let mut health = vec![0.0; cells.len()];
            for _ in 0..params.chemotaxis_steps {
                for (i, cell) in cells.iter_mut().enumerate() {
                    let dir = bfo_tumble_direction(dim, rng);
                    let pos = moved(&cell.position, &dir, &steps, bounds);
                    let Some(mut cost) = obj.try_evaluate(&pos)? else {
                        return finish(cells, best_seen, true);
                    };
                    *cell = Individual::evaluated(pos, cost);
                    note(cell, &mut best_seen);
                    for _ in 0..params.swim_length {
                        let pos = moved(&cell.position, &dir, &steps, bounds);
                        let Some(c) = obj.try_evaluate(&pos)? else {
                            return finish(cells, best_seen, true);
                        };
                        if c >= cost {
                            break;
                        }
                        cost = c;
                        *cell = Individual::evaluated(pos, c);
                        note(cell, &mut best_seen);
                    }
                    health[i] += cost;
                }
            }
            cells = bfo_reproduce(cells, &health);
        }
        for cell in cells.iter_mut() {
            if rng.random::<f64>() < params.dispersal_probability {
                let pos = bounds.sample_uniform(rng);
                let Some(c) = obj.try_evaluate(&pos)? else {
                    return finish(cells, best_seen, true);
                };
                *cell = Individual::evaluated(pos, c);
                note(cell, &mut best_seen);
            }
        }
    }
    finish(cells, best_seen, obj.is_exhausted())
}

pub(super) fn run(
    params: &BfoParams,
    mut pop: Population,
    obj: &mut BudgetedObjective<'_>,
    bounds: &Bounds,
    rng: &mut SeededRng,
) -> Result<Population, EvalError> {
    let mut elite = pop.best().expect("evaluated population").clone();
    loop {
        let cycle = bfo_step(&pop, obj, params, bounds, rng)?;
        if cycle.best_seen.cost_or_inf() < elite.cost_or_inf() {
            elite = cycle.best_seen;
        }
        pop = cycle.population;
        if cycle.exhausted {
            break;
        }
    }
    let mut members = pop.into_members();
    restore_elite(&mut members, &elite);
    Ok(rebuild(members))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tumble_is_unit_norm() {
        let mut rng = SeededRng::new(2);
        for dim in 1..6 {
            for _ in 0..50 {
                let d = bfo_tumble_direction(dim, &mut rng);
                let norm = d.iter().map(|x| x * x).sum::<f64>().sqrt();
                assert!((norm - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn reproduction_duplicates_best_half() {
        let members: Vec<_> = [3.0, 1.0, 4.0, 2.0].iter().map(|&c| Individual::evaluated(vec![c], c)).collect();
        let health = [3.0, 1.0, 4.0, 2.0];
        let mut costs: Vec<f64> = bfo_reproduce(members, &health).iter().map(|m| m.cost.unwrap()).collect();
        costs.sort_by(f64::total_cmp);
        assert_eq!(costs, vec![1.0, 1.0, 2.0, 2.0]);
    }

    #[test]
    fn reproduction_keeps_middle_of_odd_count() {
        let members: Vec<_> = [5.0, 1.0, 3.0].iter().map(|&c| Individual::evaluated(vec![c], c)).collect();
        let mut costs: Vec<f64> = bfo_reproduce(members, &[5.0, 1.0, 3.0]).iter().map(|m| m.cost.unwrap()).collect();
        costs.sort_by(f64::total_cmp);
        assert_eq!(costs, vec![1.0, 1.0, 3.0]);
    }

    #[test]
    fn zero_dispersal_keeps_positions_near() {
        // With no dispersal every bacterium moves at most Nc·(1+Ns) steps.
        let f = |x: &[f64]| x[0].abs() + x[1].abs();
        let bounds = Bounds::uniform(-100.0, 100.0, 2).unwrap();
        let params = BfoParams { dispersal_probability: 0.0, reproduction_steps: 1, ..BfoParams::default() };
        let start = Population::new(vec![Individual::evaluated(vec![50.0, 50.0], 100.0); 4]).unwrap();
        let mut obj = BudgetedObjective::new(&f, 10_000);
        let cycle = bfo_step(&start, &mut obj, &params, &bounds, &mut SeededRng::new(4)).unwrap();
        let max_travel = (params.chemotaxis_steps * (1 + params.swim_length)) as f64 * params.step_fraction * 200.0;
        for m in cycle.population.members() {
            let d = ((m.position[0] - 50.0).powi(2) + (m.position[1] - 50.0).powi(2)).sqrt();
            assert!(d <= max_travel + 1e-9);
        }
        assert!(!cycle.exhausted);
    }

    #[test]
    fn validation() {
        assert!(BfoParams::default().validate().is_ok());
        assert!(BfoParams { swim_length: 0, ..BfoParams::default() }.validate().is_err());
        assert!(BfoParams { dispersal_probability: -0.1, ..BfoParams::default() }.validate().is_err());
    }
}
