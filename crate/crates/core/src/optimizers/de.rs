use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{invalid, rebuild, OptimizerKind, ParamError};
use crate::base::{Bounds, BudgetedObjective, EvalError, Individual, Population, SeededRng};

/// DE/rand/1/bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeParams {
    pub f: f64,
    pub cr: f64,
}

impl Default for DeParams {
    fn default() -> Self {
        Self { f: 0.8, cr: 0.9 }
    }
}

impl DeParams {
    pub fn validate(&self) -> Result<(), ParamError> {
        let k = OptimizerKind::De;
        if !(self.f > 0.0 && self.f <= 2.0) {
            return Err(invalid(k, format!("f must be in (0, 2], got {}", self.f)));
        }
        if !(0.0..=1.0).contains(&self.cr) {
            return Err(invalid(k, format!("cr must be in [0, 1], got {}", self.cr)));
        }
        Ok(())
    }
}

/// `base + F·(a − b)`.
pub fn de_mutate(base: &[f64], a: &[f64], b: &[f64], f: f64) -> Vec<f64> {
    base.iter().zip(a).zip(b).map(|((x, a), b)| x + f * (a - b)).collect()
}

/// Three donor indices, distinct from `target` and from each other when the
/// population allows it.
fn donors(n: usize, target: usize, rng: &mut SeededRng) -> [usize; 3] {
    if n < 4 {
        return [0; 3].map(|_| rng.random_range(0..n));
    }
    let mut picked = [target; 3];
    for k in 0..3 {
        loop {
            let r = rng.random_range(0..n);
            if r != target && !picked[..k].contains(&r) {
                picked[k] = r;
                break;
            }
        }
    }
    picked
}

pub(super) fn run(
    params: &DeParams,
    pop: Population,
    obj: &mut BudgetedObjective<'_>,
    bounds: &Bounds,
    rng: &mut SeededRng,
) -> Result<Population, EvalError> {
    let mut current = pop.into_members();
    let n = current.len();
    let dim = current[0].position.len();

    'outer: loop {
        let mut next = current.clone();
        for i in 0..n {
            let [r1, r2, r3] = donors(n, i, rng);
            let mutant = de_mutate(&current[r1].position, &current[r2].position, &current[r3].position, params.f);
            let jrand = rng.random_range(0..dim);
            let mut trial: Vec<f64> = (0..dim)
                .map(|d| if d == jrand || rng.random::<f64>() < params.cr { mutant[d] } else { current[i].position[d] })
                .collect();
            bounds.clamp_in_place(&mut trial);
            let Some(c) = obj.try_evaluate(&trial)? else {
                current = next;
                break 'outer;
            };
            if c <= current[i].cost_or_inf() {
                next[i] = Individual::evaluated(trial, c);
            }
        }
        current = next;
    }
    Ok(rebuild(current))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mutation_examples() {
        assert_eq!(de_mutate(&[0.0, 0.0], &[1.0, 1.0], &[0.0, 0.0], 0.8), vec![0.8, 0.8]);
        assert_eq!(de_mutate(&[0.3, -2.0], &[5.0, 1.0], &[5.0, 1.0], 0.8), vec![0.3, -2.0]);
        assert_eq!(de_mutate(&[0.3, -2.0], &[5.0, 1.0], &[1.0, 9.0], 0.0), vec![0.3, -2.0]);
    }

    #[test]
    fn donors_are_distinct() {
        let mut rng = SeededRng::new(1);
        for t in 0..50 {
            let target = t % 6;
            let d = donors(6, target, &mut rng);
            assert!(!d.contains(&target));
            assert!(d[0] != d[1] && d[1] != d[2] && d[0] != d[2]);
        }
    }

    #[test]
    fn validation() {
        assert!(DeParams::default().validate().is_ok());
        assert!(DeParams { f: 0.0, cr: 0.5 }.validate().is_err());
        assert!(DeParams { f: 0.5, cr: 1.1 }.validate().is_err());
    }
}
