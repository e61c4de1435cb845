use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::benchmarks::{BenchmarkRegistry, BenchmarkSpec, Budgets};
use crate::chm::ChmConfig;
use crate::optimizers::{OptimizerKind, OptimizerParams, ParamError};
use crate::base::Bounds;

/// A method column in the experiment: the orchestrator or one inner
/// optimizer on its own.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Method {
    Chm,
    Single(OptimizerKind),
}

impl Method {
    /// cHM first, then the inner methods in their standard order.
    pub fn all() -> Vec<Method> {
        std::iter::once(Method::Chm).chain(OptimizerKind::ALL.map(Method::Single)).collect()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Chm => "cHM",
            Method::Single(k) => k.as_str(),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = ParamError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.trim().eq_ignore_ascii_case("chm") {
            Ok(Method::Chm)
        } else {
            s.parse().map(Method::Single)
        }
    }
}

impl TryFrom<String> for Method {
    type Error = ParamError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<Method> for String {
    fn from(m: Method) -> String {
        m.as_str().to_string()
    }
}

/// Orchestrator settings shared by every cell. Budgets default to the
/// function's bucket.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChmSettings {
    pub n: usize,
    pub population_size: usize,
    pub maxfe_probing: Option<usize>,
    pub maxfe_fit: Option<usize>,
    pub convergence_epsilon: f64,
    pub convergence_patience: usize,
}

impl Default for ChmSettings {
    fn default() -> Self {
        Self {
            n: ChmConfig::DEFAULT_N,
            population_size: ChmConfig::DEFAULT_POPULATION,
            maxfe_probing: None,
            maxfe_fit: None,
            convergence_epsilon: ChmConfig::DEFAULT_EPSILON,
            convergence_patience: ChmConfig::DEFAULT_PATIENCE,
        }
    }
}

impl ChmSettings {
    pub fn budgets_for(&self, spec: &BenchmarkSpec) -> Budgets {
        let b = spec.budgets();
        Budgets {
            maxfe_probing: self.maxfe_probing.unwrap_or(b.maxfe_probing),
            maxfe_fit: self.maxfe_fit.unwrap_or(b.maxfe_fit),
        }
    }

    pub fn config(&self, params: &OptimizerParams, budgets: Budgets) -> ChmConfig {
        let mut cfg = ChmConfig::standard(params, budgets);
        cfg.n = self.n;
        cfg.population_size = self.population_size;
        cfg.convergence_epsilon = self.convergence_epsilon;
        cfg.convergence_patience = self.convergence_patience;
        cfg
    }
}

/// Everything needed to reproduce an experiment. Loadable from TOML; every
/// key is optional.
///
/// ```toml
/// name = "quick"
/// functions = ["matyas", "rastrigin"]
/// methods = ["cHM", "DE"]
/// repetitions = 5
/// base_seed = 7
///
/// [chm]
/// n = 4
/// maxfe_probing = 100
/// maxfe_fit = 200
///
/// [optimizers.de]
/// f = 0.5
///
/// [bounds]
/// matyas = [[-5.0, 5.0], [-5.0, 5.0]]
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentPlan {
    pub name: String,
    /// Benchmark names; empty means all 28.
    pub functions: Vec<String>,
    pub methods: Vec<Method>,
    pub repetitions: usize,
    pub base_seed: u64,
    /// Worker threads for run cells; `None` uses one per core.
    pub workers: Option<usize>,
    /// Record failed cells and leave them out of the aggregates instead of
    /// aborting the experiment.
    pub skip_on_error: bool,
    /// Report the distance to the nearest known global optimum rather than
    /// to the primary one.
    pub nearest_optimum: bool,
    pub chm: ChmSettings,
    pub optimizers: OptimizerParams,
    /// Per-function search box overrides.
    pub bounds: BTreeMap<String, Vec<(f64, f64)>>,
}

impl Default for ExperimentPlan {
    fn default() -> Self {
        Self {
            name: "default".to_string(),
            functions: Vec::new(),
            methods: Method::all(),
            repetitions: 50,
            base_seed: 1,
            workers: None,
            skip_on_error: false,
            nearest_optimum: false,
            chm: ChmSettings::default(),
            optimizers: OptimizerParams::default(),
            bounds: BTreeMap::new(),
        }
    }
}

impl ExperimentPlan {
    pub fn from_toml_str(text: &str) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| HarnessError::Plan(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| HarnessError::Io { path: path.to_path_buf(), source })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("plan serializes")
    }

    /// Resolves the function list against the registry, applying bounds
    /// overrides. Order follows the plan (registry order when empty).
    pub fn resolve_functions(&self, registry: &BenchmarkRegistry) -> Result<Vec<BenchmarkSpec>, HarnessError> {
        let names: Vec<String> = if self.functions.is_empty() {
            registry.names().into_iter().map(String::from).collect()
        } else {
            self.functions.clone()
        };
        let mut specs: Vec<BenchmarkSpec> = Vec::with_capacity(names.len());
        for name in &names {
            let spec = registry.get(name)?.clone();
            if specs.iter().any(|s| s.name == spec.name) {
                return Err(HarnessError::Plan(format!("function '{}' listed twice", spec.name)));
            }
            specs.push(spec);
        }
        for (name, intervals) in &self.bounds {
            let canonical = registry.get(name)?.name;
            if let Some(spec) = specs.iter_mut().find(|s| s.name == canonical) {
                let bounds = Bounds::new(intervals.clone()).map_err(|e| HarnessError::Plan(format!("{name}: {e}")))?;
                *spec = spec.clone().with_bounds(bounds)?;
            }
        }
        Ok(specs)
    }

    /// Checks everything that can be checked before a run starts.
    pub fn validate(&self, registry: &BenchmarkRegistry) -> Result<Vec<BenchmarkSpec>, HarnessError> {
        if self.repetitions == 0 {
            return Err(HarnessError::Plan("repetitions must be at least 1".into()));
        }
        if self.methods.is_empty() {
            return Err(HarnessError::Plan("methods must not be empty".into()));
        }
        for (i, m) in self.methods.iter().enumerate() {
            if self.methods[..i].contains(m) {
                return Err(HarnessError::Plan(format!("method '{m}' listed twice")));
            }
        }
        if self.workers == Some(0) {
            return Err(HarnessError::Plan("workers must be at least 1".into()));
        }
        self.optimizers.validate()?;
        let specs = self.resolve_functions(registry)?;
        for spec in &specs {
            self.chm.config(&self.optimizers, self.chm.budgets_for(spec)).validate()?;
        }
        Ok(specs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_names_round_trip() {
        for m in Method::all() {
            assert_eq!(m.as_str().parse::<Method>().unwrap(), m);
        }
        assert_eq!("chm".parse::<Method>().unwrap(), Method::Chm);
        assert!("nope".parse::<Method>().is_err());
    }

    #[test]
    fn plan_defaults_and_overrides_from_toml() {
        let plan = ExperimentPlan::from_toml_str(
            "functions = [\"matyas\"]\nmethods = [\"chm\", \"de\"]\nrepetitions = 3\n[chm]\nmaxfe_fit = 250\n[optimizers.de]\nf = 0.5\n",
        )
        .unwrap();
        assert_eq!(plan.methods, vec![Method::Chm, Method::Single(OptimizerKind::De)]);
        assert_eq!(plan.repetitions, 3);
        assert_eq!(plan.chm.n, 4);
        assert_eq!(plan.chm.maxfe_fit, Some(250));
        assert_eq!(plan.optimizers.de.f, 0.5);
        let reg = BenchmarkRegistry::new();
        let specs = plan.validate(&reg).unwrap();
        assert_eq!(plan.chm.budgets_for(&specs[0]), Budgets { maxfe_probing: 300, maxfe_fit: 250 });
    }

    #[test]
    fn plan_rejects_bad_input() {
        let reg = BenchmarkRegistry::new();
        assert!(ExperimentPlan::from_toml_str("bogus = 1").is_err());
        let zero = ExperimentPlan { repetitions: 0, ..ExperimentPlan::default() };
        assert!(zero.validate(&reg).is_err());
        let empty = ExperimentPlan { methods: vec![], ..ExperimentPlan::default() };
        assert!(empty.validate(&reg).is_err());
        let unknown = ExperimentPlan { functions: vec!["nosuchfn".into()], ..ExperimentPlan::default() };
        assert!(matches!(unknown.validate(&reg), Err(HarnessError::Benchmark(_))));
    }

    #[test]
    fn bounds_override_applies() {
        let reg = BenchmarkRegistry::new();
        let plan = ExperimentPlan::from_toml_str("functions = [\"matyas\"]\n[bounds]\nmatyas = [[-1.0, 1.0], [-2.0, 2.0]]\n")
            .unwrap();
        let specs = plan.validate(&reg).unwrap();
        assert_eq!(specs[0].bounds.intervals(), &[(-1.0, 1.0), (-2.0, 2.0)]);
    }

    #[test]
    fn plan_toml_round_trip() {
        let plan = ExperimentPlan::default();
        assert_eq!(ExperimentPlan::from_toml_str(&plan.to_toml_string()).unwrap(), plan);
    }
}
