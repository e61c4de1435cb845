//! Shared domain types: search boxes, individuals, populations, the
//! budget-enforcing objective wrapper, fitness metrics and seeded randomness.

use std::fmt;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors raised while evaluating an objective under a budget.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    /// The evaluation counter reached its cap. Optimizers treat this as
    /// "stop now and return the best population so far".
    #[error("evaluation budget of {cap} exhausted")]
    BudgetExhausted { cap: usize },
    /// The objective produced NaN or an infinity.
    #[error("objective returned non-finite value {value} at {position:?}")]
    NonFinite { position: Vec<f64>, value: f64 },
}

/// Errors from the metric helpers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error("non-finite input to fitness: candidate={candidate}, reference={reference}")]
    NonFinite { candidate: f64, reference: f64 },
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
}

/// Errors building a [`Bounds`] box.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum BoundsError {
    #[error("bounds must have at least one dimension")]
    Empty,
    #[error("dimension {index}: invalid interval [{low}, {high}]")]
    InvalidInterval { index: usize, low: f64, high: f64 },
}

/// Axis-aligned search box, one closed interval per dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bounds(Vec<(f64, f64)>);

impl Bounds {
    pub fn new(intervals: Vec<(f64, f64)>) -> Result<Self, BoundsError> {
        if intervals.is_empty() {
            return Err(BoundsError::Empty);
        }
        for (index, &(low, high)) in intervals.iter().enumerate() {
            if !(low.is_finite() && high.is_finite() && low <= high) {
                return Err(BoundsError::InvalidInterval { index, low, high });
            }
        }
        Ok(Self(intervals))
    }

    /// The same interval repeated over `dim` dimensions.
    pub fn uniform(low: f64, high: f64, dim: usize) -> Result<Self, BoundsError> {
        Self::new(vec![(low, high); dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.0
    }

    pub fn width(&self, d: usize) -> f64 {
        let (low, high) = self.0[d];
        high - low
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && x.iter().zip(&self.0).all(|(&v, &(lo, hi))| v >= lo && v <= hi)
    }

    /// Projects `x` into the box in place.
    pub fn clamp_in_place(&self, x: &mut [f64]) {
        for (v, &(lo, hi)) in x.iter_mut().zip(&self.0) {
            *v = v.clamp(lo, hi);
        }
    }

    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.0
            .iter()
            .map(|&(lo, hi)| if hi > lo { rng.random_range(lo..=hi) } else { lo })
            .collect()
    }
}

/// Projects each coordinate of `x` into its interval.
pub fn clamp_to_bounds(x: &[f64], bounds: &Bounds) -> Vec<f64> {
    let mut out = x.to_vec();
    bounds.clamp_in_place(&mut out);
    out
}

/// Absolute gap between a candidate's objective value and the reference
/// (optimal) value.
pub fn fitness(candidate_value: f64, reference_value: f64) -> Result<f64, MetricError> {
    if !(candidate_value.is_finite() && reference_value.is_finite()) {
        return Err(MetricError::NonFinite { candidate: candidate_value, reference: reference_value });
    }
    Ok((candidate_value - reference_value).abs())
}

pub fn euclidean_distance(x: &[f64], x0: &[f64]) -> Result<f64, MetricError> {
    if x.len() != x0.len() {
        return Err(MetricError::DimensionMismatch { left: x.len(), right: x0.len() });
    }
    Ok(x.iter().zip(x0).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
}

/// A candidate solution with its cached cost.
///
/// `cost` is `None` until the position has been evaluated; any code that
/// moves `position` must reset it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Individual {
    pub position: Vec<f64>,
    pub cost: Option<f64>,
}

impl Individual {
    pub fn new(position: Vec<f64>) -> Self {
        Self { position, cost: None }
    }

    pub fn evaluated(position: Vec<f64>, cost: f64) -> Self {
        Self { position, cost: Some(cost) }
    }

    /// Cost for ordering purposes; unevaluated members sort last.
    pub fn cost_or_inf(&self) -> f64 {
        self.cost.unwrap_or(f64::INFINITY)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PopulationError {
    #[error("population must not be empty")]
    Empty,
    #[error("member {index} has dimension {found}, expected {expected}")]
    RaggedDimension { index: usize, expected: usize, found: usize },
}

/// The shared population handed between inner optimizers.
///
/// This type is also the transfer format: an optimizer receives one, runs,
/// and hands back one of identical size and dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Population {
    members: Vec<Individual>,
}

impl Population {
    pub fn new(members: Vec<Individual>) -> Result<Self, PopulationError> {
        let expected = members.first().ok_or(PopulationError::Empty)?.position.len();
        for (index, m) in members.iter().enumerate() {
            if m.position.len() != expected {
                return Err(PopulationError::RaggedDimension { index, expected, found: m.position.len() });
            }
        }
        Ok(Self { members })
    }

    /// `size` unevaluated members drawn uniformly from `bounds`.
    pub fn random<R: Rng + ?Sized>(size: usize, bounds: &Bounds, rng: &mut R) -> Self {
        assert!(size > 0, "population size must be positive");
        let members = (0..size).map(|_| Individual::new(bounds.sample_uniform(rng))).collect();
        Self { members }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.members[0].position.len()
    }

    pub fn members(&self) -> &[Individual] {
        &self.members
    }

    pub fn into_members(self) -> Vec<Individual> {
        self.members
    }

    pub fn is_fully_evaluated(&self) -> bool {
        self.members.iter().all(|m| m.cost.is_some())
    }

    /// Index of the lowest-cost evaluated member; the first one wins ties.
    pub fn best_index(&self) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (i, m) in self.members.iter().enumerate() {
            if let Some(c) = m.cost {
                if best.is_none_or(|(_, b)| c < b) {
                    best = Some((i, c));
                }
            }
        }
        best.map(|(i, _)| i)
    }

    pub fn best(&self) -> Option<&Individual> {
        self.best_index().map(|i| &self.members[i])
    }

    /// Best cached cost, or `+inf` if nothing has been evaluated.
    pub fn best_cost(&self) -> f64 {
        self.best().map_or(f64::INFINITY, Individual::cost_or_inf)
    }

    /// Evaluates every member without a cached cost.
    ///
    /// Returns `Ok(false)` if the budget ran out first; members evaluated
    /// before that keep their costs.
    pub fn evaluate_missing(&mut self, obj: &mut BudgetedObjective<'_>) -> Result<bool, EvalError> {
        for m in &mut self.members {
            if m.cost.is_none() {
                match obj.try_evaluate(&m.position)? {
                    Some(c) => m.cost = Some(c),
                    None => return Ok(false),
                }
            }
        }
        Ok(true)
    }
}

/// An objective function mapping a position to a real cost.
pub trait Objective: Sync {
    fn value(&self, x: &[f64]) -> f64;
}

impl<F> Objective for F
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    fn value(&self, x: &[f64]) -> f64 {
        self(x)
    }
}

/// Wraps an objective with an evaluation counter and a hard cap.
pub struct BudgetedObjective<'a> {
    inner: &'a dyn Objective,
    used: usize,
    cap: usize,
}

impl fmt::Debug for BudgetedObjective<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BudgetedObjective").field("used", &self.used).field("cap", &self.cap).finish()
    }
}

impl<'a> BudgetedObjective<'a> {
    pub fn new(inner: &'a dyn Objective, cap: usize) -> Self {
        Self { inner, used: 0, cap }
    }

    pub fn used(&self) -> usize {
        self.used
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    pub fn remaining(&self) -> usize {
        self.cap - self.used
    }

    pub fn is_exhausted(&self) -> bool {
        self.used >= self.cap
    }

    /// One counted call to the objective.
    pub fn evaluate(&mut self, x: &[f64]) -> Result<f64, EvalError> {
        if self.used >= self.cap {
            return Err(EvalError::BudgetExhausted { cap: self.cap });
        }
        self.used += 1;
        let value = self.inner.value(x);
        if !value.is_finite() {
            return Err(EvalError::NonFinite { position: x.to_vec(), value });
        }
        Ok(value)
    }

    /// Like [`evaluate`](Self::evaluate), but maps budget exhaustion to
    /// `Ok(None)` so optimizer loops can stop without unwinding.
    pub fn try_evaluate(&mut self, x: &[f64]) -> Result<Option<f64>, EvalError> {
        match self.evaluate(x) {
            Ok(v) => Ok(Some(v)),
            Err(EvalError::BudgetExhausted { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    }
}

const SPLITMIX_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds a root seed and a path of indices into a single stream seed.
pub fn mix_seed(root: u64, path: &[u64]) -> u64 {
    path.iter().fold(splitmix64(root.wrapping_add(SPLITMIX_GAMMA)), |acc, &p| {
        splitmix64(acc ^ splitmix64(p.wrapping_add(SPLITMIX_GAMMA)))
    })
}

/// Stable 64-bit FNV-1a hash, used to key seeds by names.
pub fn stable_hash(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01B3))
}

/// A reproducible random stream. Same seed and same call sequence give the
/// same values.
#[derive(Debug, Clone)]
pub struct SeededRng {
    seed: u64,
    inner: ChaCha8Rng,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self { seed, inner: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// An independent stream keyed by this generator's seed and `path`.
    /// Does not advance `self`.
    pub fn derive(&self, path: &[u64]) -> SeededRng {
        SeededRng::new(mix_seed(self.seed, path))
    }
}

impl RngCore for SeededRng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn b2() -> Bounds {
        Bounds::uniform(-2.0, 2.0, 2).unwrap()
    }

    #[test]
    fn fitness_examples() {
        assert_eq!(fitness(5.0, 3.0).unwrap(), 2.0);
        assert_eq!(fitness(-200.0, -200.0).unwrap(), 0.0);
        assert_eq!(fitness(-197.0, -200.0).unwrap(), 3.0);
        assert!(fitness(f64::NAN, 0.0).is_err());
        assert!(fitness(1.0, f64::INFINITY).is_err());
    }

    #[test]
    fn distance_examples() {
        assert_eq!(euclidean_distance(&[3.0, 4.0], &[0.0, 0.0]).unwrap(), 5.0);
        assert_eq!(euclidean_distance(&[1.0, 1.0], &[1.0, 1.0]).unwrap(), 0.0);
        assert_eq!(euclidean_distance(&[0.0, 1.253115], &[0.0, 0.0]).unwrap(), 1.253115);
        assert!(matches!(
            euclidean_distance(&[1.0], &[1.0, 2.0]),
            Err(MetricError::DimensionMismatch { left: 1, right: 2 })
        ));
    }

    #[test]
    fn clamp_examples() {
        let one = Bounds::uniform(-2.0, 2.0, 1).unwrap();
        assert_eq!(clamp_to_bounds(&[3.0], &one), vec![2.0]);
        assert_eq!(clamp_to_bounds(&[0.5], &one), vec![0.5]);
        assert_eq!(clamp_to_bounds(&[-9.0, 9.0], &b2()), vec![-2.0, 2.0]);
    }

    #[test]
    fn bounds_validation() {
        assert_eq!(Bounds::new(vec![]), Err(BoundsError::Empty));
        assert!(Bounds::new(vec![(1.0, 0.0)]).is_err());
        assert!(Bounds::new(vec![(0.0, f64::NAN)]).is_err());
        assert!(Bounds::new(vec![(1.0, 1.0)]).is_ok());
    }

    #[test]
    fn budget_counter_semantics() {
        let f = |x: &[f64]| x[0];
        let mut obj = BudgetedObjective::new(&f, 3);
        for _ in 0..3 {
            assert!(obj.evaluate(&[1.0]).is_ok());
        }
        assert_eq!(obj.evaluate(&[1.0]), Err(EvalError::BudgetExhausted { cap: 3 }));
        assert_eq!(obj.used(), 3);

        let idle = BudgetedObjective::new(&f, 100);
        assert_eq!(idle.used(), 0);
    }

    #[test]
    fn evaluate_matyas_origin() {
        let matyas = |x: &[f64]| 0.26 * (x[0] * x[0] + x[1] * x[1]) - 0.48 * x[0] * x[1];
        let mut obj = BudgetedObjective::new(&matyas, 10);
        assert_eq!(obj.evaluate(&[0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(obj.used(), 1);
    }

    #[test]
    fn non_finite_is_reported_with_position() {
        let f = |_: &[f64]| f64::NAN;
        let mut obj = BudgetedObjective::new(&f, 2);
        match obj.evaluate(&[0.5, 1.5]) {
            Err(EvalError::NonFinite { position, .. }) => assert_eq!(position, vec![0.5, 1.5]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn population_rejects_ragged_members() {
        let err = Population::new(vec![Individual::new(vec![0.0, 0.0]), Individual::new(vec![0.0])]);
        assert!(matches!(err, Err(PopulationError::RaggedDimension { index: 1, .. })));
        assert_eq!(Population::new(vec![]), Err(PopulationError::Empty));
    }

    #[test]
    fn best_prefers_first_on_ties_and_skips_unevaluated() {
        let pop = Population::new(vec![
            Individual::new(vec![9.0]),
            Individual::evaluated(vec![1.0], 2.0),
            Individual::evaluated(vec![2.0], 2.0),
        ])
        .unwrap();
        assert_eq!(pop.best_index(), Some(1));
        assert_eq!(pop.best_cost(), 2.0);
    }

    #[test]
    fn derived_streams_are_reproducible_and_distinct() {
        let root = SeededRng::new(42);
        let a: Vec<u64> = {
            let mut r = root.derive(&[1, 2]);
            (0..4).map(|_| r.next_u64()).collect()
        };
        let b: Vec<u64> = {
            let mut r = root.derive(&[1, 2]);
            (0..4).map(|_| r.next_u64()).collect()
        };
        let c: Vec<u64> = {
            let mut r = root.derive(&[2, 1]);
            (0..4).map(|_| r.next_u64()).collect()
        };
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    proptest! {
        #[test]
        fn clamp_is_idempotent_and_inside(xs in prop::collection::vec(-50.0f64..50.0, 2)) {
            let b = b2();
            let once = clamp_to_bounds(&xs, &b);
            prop_assert!(b.contains(&once));
            prop_assert_eq!(clamp_to_bounds(&once, &b), once);
        }

        #[test]
        fn fitness_symmetric_and_triangle(a in -1e6f64..1e6, b in -1e6f64..1e6, c in -1e6f64..1e6) {
            let ab = fitness(a, b).unwrap();
            prop_assert_eq!(ab, fitness(b, a).unwrap());
            prop_assert!(ab >= 0.0);
            prop_assert!(ab <= fitness(a, c).unwrap() + fitness(c, b).unwrap() + 1e-9);
        }

        #[test]
        fn used_counts_successful_calls(cap in 0usize..20, calls in 0usize..30) {
            let f = |x: &[f64]| x[0];
            let mut obj = BudgetedObjective::new(&f, cap);
            let ok = (0..calls).filter(|_| obj.evaluate(&[0.0]).is_ok()).count();
            prop_assert_eq!(obj.used(), ok);
            prop_assert_eq!(ok, calls.min(cap));
        }
    }
}
