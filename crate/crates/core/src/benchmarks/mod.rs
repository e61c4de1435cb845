//! Registry of the 28 two-dimensional benchmark functions with their search
//! boxes, known optima, reference values and bucket budgets.

pub mod functions;

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::base::{clamp_to_bounds, Bounds, SeededRng};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BenchmarkError {
    #[error("unknown benchmark '{name}'; valid names: {}", valid.join(", "))]
    Unknown { name: String, valid: Vec<String> },
    #[error("unknown bucket '{name}'; valid buckets: {}", Bucket::ALL.map(|b| b.slug()).join(", "))]
    UnknownBucket { name: String },
    #[error("expected a point of dimension {expected}, got {found}")]
    Dimension { expected: usize, found: usize },
    #[error("non-finite coordinate in {0:?}")]
    NonFinite(Vec<f64>),
    #[error("optimum {optimum:?} lies outside the bounds {bounds:?}")]
    OptimumOutOfBounds { optimum: Vec<f64>, bounds: Vec<(f64, f64)> },
}

/// Landscape class; determines the default probing/fit budgets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Bucket {
    SingleBasin,
    IllConditioned,
    HighlyMultimodal,
    FewSeparatedMinima,
    ShiftedMinima,
}

impl Bucket {
    pub const ALL: [Bucket; 5] = [
        Bucket::SingleBasin,
        Bucket::IllConditioned,
        Bucket::HighlyMultimodal,
        Bucket::FewSeparatedMinima,
        Bucket::ShiftedMinima,
    ];

    pub fn slug(self) -> &'static str {
        match self {
            Bucket::SingleBasin => "single-basin",
            Bucket::IllConditioned => "ill-conditioned",
            Bucket::HighlyMultimodal => "highly-multimodal",
            Bucket::FewSeparatedMinima => "few-separated-minima",
            Bucket::ShiftedMinima => "shifted-minima",
        }
    }

    pub fn budgets(self) -> Budgets {
        match self {
            Bucket::SingleBasin | Bucket::IllConditioned | Bucket::FewSeparatedMinima => {
                Budgets { maxfe_probing: 300, maxfe_fit: 600 }
            }
            Bucket::HighlyMultimodal | Bucket::ShiftedMinima => Budgets { maxfe_probing: 400, maxfe_fit: 800 },
        }
    }
}

impl fmt::Display for Bucket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.slug())
    }
}

impl FromStr for Bucket {
    type Err = BenchmarkError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = normalize(s);
        Bucket::ALL
            .into_iter()
            .find(|b| normalize(b.slug()) == key)
            .ok_or_else(|| BenchmarkError::UnknownBucket { name: s.to_string() })
    }
}

/// Per-phase evaluation caps for one cHM run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budgets {
    pub maxfe_probing: usize,
    pub maxfe_fit: usize,
}

/// One registered test function.
#[derive(Debug, Clone)]
pub struct BenchmarkSpec {
    pub name: &'static str,
    pub display_name: &'static str,
    pub formula: fn(&[f64]) -> f64,
    pub bounds: Bounds,
    /// Optimum used for the reference value and distance reporting.
    pub optimum: Vec<f64>,
    /// Coordinates as printed in the function table. Differs from `optimum`
    /// only where the printed digits are not a stationary point.
    pub listed_optimum: Vec<f64>,
    /// Further global optima, for nearest-optimum distance.
    pub extra_optima: Vec<Vec<f64>>,
    pub reference_value: f64,
    pub bucket: Bucket,
}

impl BenchmarkSpec {
    pub fn dimension(&self) -> usize {
        self.optimum.len()
    }

    pub fn budgets(&self) -> Budgets {
        self.bucket.budgets()
    }

    /// Replaces the default search box; the optimum must stay inside.
    pub fn with_bounds(mut self, bounds: Bounds) -> Result<Self, BenchmarkError> {
        if !bounds.contains(&self.optimum) {
            return Err(BenchmarkError::OptimumOutOfBounds {
                optimum: self.optimum.clone(),
                bounds: bounds.intervals().to_vec(),
            });
        }
        self.bounds = bounds;
        Ok(self)
    }

    /// All known global optima, the primary one first.
    pub fn all_optima(&self) -> impl Iterator<Item = &[f64]> {
        std::iter::once(self.optimum.as_slice()).chain(self.extra_optima.iter().map(Vec::as_slice))
    }
}

pub fn eval_benchmark(spec: &BenchmarkSpec, x: &[f64]) -> Result<f64, BenchmarkError> {
    if x.len() != spec.dimension() {
        return Err(BenchmarkError::Dimension { expected: spec.dimension(), found: x.len() });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(BenchmarkError::NonFinite(x.to_vec()));
    }
    Ok((spec.formula)(x))
}

pub fn reference_minimum(spec: &BenchmarkSpec) -> f64 {
    spec.reference_value
}

/// True iff no sampled point within `radius` of the optimum (clamped to the
/// box) has a value more than 1e-9 below the reference value.
pub fn local_minimality_check(spec: &BenchmarkSpec, radius: f64, samples: usize, rng: &mut SeededRng) -> bool {
    assert!(radius > 0.0 && samples >= 1);
    let f0 = (spec.formula)(&spec.optimum);
    let dim = spec.dimension();
    (0..samples).all(|_| {
        let dir: Vec<f64> = (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
        let r = radius * rng.random::<f64>().powf(1.0 / dim as f64);
        let probe: Vec<f64> = spec.optimum.iter().zip(&dir).map(|(o, d)| o + r * d / norm).collect();
        let probe = clamp_to_bounds(&probe, &spec.bounds);
        f0 <= (spec.formula)(&probe) + 1e-9
    })
}

fn normalize(s: &str) -> String {
    s.chars().filter(char::is_ascii_alphanumeric).map(|c| c.to_ascii_lowercase()).collect()
}

/// Name-indexed collection of the 28 benchmark specs.
#[derive(Debug, Clone)]
pub struct BenchmarkRegistry {
    specs: Vec<BenchmarkSpec>,
}

struct Entry {
    name: &'static str,
    display_name: &'static str,
    formula: fn(&[f64]) -> f64,
    bounds: [(f64, f64); 2],
    optimum: [f64; 2],
    listed: [f64; 2],
    extra: &'static [[f64; 2]],
    bucket: Bucket,
}

const TAU: f64 = 2.0 * std::f64::consts::PI;
const FIVE_PI: f64 = 5.0 * std::f64::consts::PI;

// Polished optima: the printed coordinates rounded to 5-6 digits sit up to
// 1e-4 away from the stationary point.
const BIRD_OPT: [f64; 2] = [4.701_043_130_249_553, 3.152_938_503_724_93];
const BRANIN02_OPT: [f64; 2] = [-3.196_988_424_744_383, 12.526_257_885_290_117];
const SCHAFFER03_B: f64 = 1.253_001_696_218_815_6;
const SCHAFFER04_B: f64 = 1.253_028_146_509_577_8;
const ZIRILLI_OPT: [f64; 2] = [-1.046_680_531_804_602_3, 0.0];

fn table() -> Vec<Entry> {
    use functions as f;
    use Bucket::*;
    let e = |name,
             display_name,
             formula: fn(&[f64]) -> f64,
             bounds: [(f64, f64); 2],
             listed: [f64; 2],
             optimum: Option<[f64; 2]>,
             extra: &'static [[f64; 2]],
             bucket| Entry {
        name,
        display_name,
        formula,
        bounds,
        optimum: optimum.unwrap_or(listed),
        listed,
        extra,
        bucket,
    };
    vec![
        e("ackley02", "Ackley02", f::ackley02, [(-32.0, 32.0); 2], [0.0, 0.0], None, &[], HighlyMultimodal),
        e("beale", "Beale", f::beale, [(-4.5, 4.5); 2], [3.0, 0.5], None, &[], FewSeparatedMinima),
        e(
            "bird",
            "Bird",
            f::bird,
            [(-TAU, TAU); 2],
            [4.70106, 3.15295],
            Some(BIRD_OPT),
            &[[-1.582_142_176_930_033_5, -3.130_246_803_454_656_4]],
            FewSeparatedMinima,
        ),
        e("bohachevsky01", "Bohachevsky01", f::bohachevsky01, [(-100.0, 100.0); 2], [0.0, 0.0], None, &[], HighlyMultimodal),
        e("branin02", "Branin02", f::branin02, [(-5.0, 15.0); 2], [-3.2, 12.53], Some(BRANIN02_OPT), &[], FewSeparatedMinima),
        e("brent", "Brent", f::brent, [(-10.0, 10.0); 2], [-10.0, -10.0], None, &[], ShiftedMinima),
        e("brown", "Brown", f::brown, [(-1.0, 4.0); 2], [0.0, 0.0], None, &[], IllConditioned),
        e("eggcrate", "Eggcrate", f::eggcrate, [(-FIVE_PI, FIVE_PI); 2], [0.0, 0.0], None, &[], HighlyMultimodal),
        e("goldstein-price", "Goldstein-Price", f::goldstein_price, [(-2.0, 2.0); 2], [0.0, -1.0], None, &[], FewSeparatedMinima),
        e(
            "himmelblau",
            "Himmelblau",
            f::himmelblau,
            [(-5.0, 5.0); 2],
            [3.0, 2.0],
            None,
            &[[-2.805_118, 3.131_312], [-3.779_310, -3.283_186], [3.584_428, -1.848_126]],
            FewSeparatedMinima,
        ),
        e("hosaki", "Hosaki", f::hosaki, [(0.0, 5.0), (0.0, 6.0)], [4.0, 2.0], None, &[], FewSeparatedMinima),
        e("keane", "Keane", f::keane, [(0.0, 10.0); 2], [7.853_961_53, 7.853_961_53], None, &[], HighlyMultimodal),
        e("levy03", "Levy03", f::levy03, [(-10.0, 10.0); 2], [1.0, 1.0], None, &[], HighlyMultimodal),
        e("matyas", "Matyas", f::matyas, [(-10.0, 10.0); 2], [0.0, 0.0], None, &[], SingleBasin),
        e("price02", "Price02", f::price02, [(-10.0, 10.0); 2], [0.0, 0.0], None, &[], HighlyMultimodal),
        e("quadratic", "Quadratic", f::quadratic, [(-10.0, 10.0); 2], [0.19388, 0.48513], None, &[], SingleBasin),
        e("rastrigin", "Rastrigin", f::rastrigin, [(-5.12, 5.12); 2], [0.0, 0.0], None, &[], HighlyMultimodal),
        e("rosenbrock", "Rosenbrock", f::rosenbrock, [(-5.0, 10.0); 2], [1.0, 1.0], None, &[], IllConditioned),
        e("rotatedellipse01", "Rotatedellipse01", f::rotated_ellipse01, [(-500.0, 500.0); 2], [0.0, 0.0], None, &[], SingleBasin),
        e("salomon", "Salomon", f::salomon, [(-100.0, 100.0); 2], [0.0, 0.0], None, &[], HighlyMultimodal),
        e(
            "schaffer03",
            "Schaffer03",
            f::schaffer03,
            [(-100.0, 100.0); 2],
            [0.0, 1.253115],
            Some([0.0, SCHAFFER03_B]),
            &[[0.0, -SCHAFFER03_B], [SCHAFFER03_B, 0.0], [-SCHAFFER03_B, 0.0]],
            HighlyMultimodal,
        ),
        e(
            "schaffer04",
            "Schaffer04",
            f::schaffer04,
            [(-100.0, 100.0); 2],
            [0.0, 1.253115],
            Some([0.0, SCHAFFER04_B]),
            &[[0.0, -SCHAFFER04_B], [SCHAFFER04_B, 0.0], [-SCHAFFER04_B, 0.0]],
            HighlyMultimodal,
        ),
        e("schwefel04", "Schwefel04", f::schwefel04, [(0.0, 10.0); 2], [1.0, 1.0], None, &[], HighlyMultimodal),
        e("treccani", "Treccani", f::treccani, [(-5.0, 5.0); 2], [0.0, 0.0], None, &[[-2.0, 0.0]], FewSeparatedMinima),
        e("ursem04", "Ursem04", f::ursem04, [(-2.0, 2.0); 2], [0.0, 0.0], None, &[], HighlyMultimodal),
        e("whitley", "Whitley", f::whitley, [(-10.24, 10.24); 2], [1.0, 1.0], None, &[], HighlyMultimodal),
        e("zettl", "Zettl", f::zettl, [(-1.0, 5.0); 2], [-0.02990, 0.0], None, &[], FewSeparatedMinima),
        e("zirilli", "Zirilli", f::zirilli, [(-10.0, 10.0); 2], [-1.0465, 0.0], Some(ZIRILLI_OPT), &[], SingleBasin),
    ]
}

impl Default for BenchmarkRegistry {
    fn default() -> Self {
        Self::new()
    }
}

impl BenchmarkRegistry {
    pub fn new() -> Self {
        let specs = table()
            .into_iter()
            .map(|e| {
                let optimum = e.optimum.to_vec();
                BenchmarkSpec {
                    name: e.name,
                    display_name: e.display_name,
                    formula: e.formula,
                    bounds: Bounds::new(e.bounds.to_vec()).expect("static bounds are valid"),
                    reference_value: (e.formula)(&optimum),
                    optimum,
                    listed_optimum: e.listed.to_vec(),
                    extra_optima: e.extra.iter().map(|o| o.to_vec()).collect(),
                    bucket: e.bucket,
                }
            })
            .collect();
        Self { specs }
    }

    pub fn len(&self) -> usize {
        self.specs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.specs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &BenchmarkSpec> {
        self.specs.iter()
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.specs.iter().map(|s| s.name).collect()
    }

    /// Case- and punctuation-insensitive lookup ("Goldstein-Price",
    /// "goldstein_price" and "goldsteinprice" all resolve).
    pub fn get(&self, name: &str) -> Result<&BenchmarkSpec, BenchmarkError> {
        let key = normalize(name);
        self.specs.iter().find(|s| normalize(s.name) == key).ok_or_else(|| BenchmarkError::Unknown {
            name: name.to_string(),
            valid: self.names().into_iter().map(String::from).collect(),
        })
    }

    pub fn by_bucket(&self, bucket: Bucket) -> impl Iterator<Item = &BenchmarkSpec> {
        self.specs.iter().filter(move |s| s.bucket == bucket)
    }

    /// Writes the catalogue as comma-separated text with a header row:
    /// `name,bucket,low_1,high_1,low_2,high_2,optimum_1,optimum_2,reference_value,maxfe_probing,maxfe_fit`.
    /// Floats use the shortest representation that round-trips.
    pub fn write_catalogue<'a, W: Write>(
        specs: impl IntoIterator<Item = &'a BenchmarkSpec>,
        out: W,
    ) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "name",
            "bucket",
            "low_1",
            "high_1",
            "low_2",
            "high_2",
            "optimum_1",
            "optimum_2",
            "reference_value",
            "maxfe_probing",
            "maxfe_fit",
        ])?;
        for s in specs {
            let iv = s.bounds.intervals();
            let b = s.budgets();
            w.write_record([
                s.name.to_string(),
                s.bucket.slug().to_string(),
                iv[0].0.to_string(),
                iv[0].1.to_string(),
                iv[1].0.to_string(),
                iv[1].1.to_string(),
                s.optimum[0].to_string(),
                s.optimum[1].to_string(),
                s.reference_value.to_string(),
                b.maxfe_probing.to_string(),
                b.maxfe_fit.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}
