use serde::{Deserialize, Serialize};

use super::{Method, RunRecord};
use crate::chm::ChmTrace;
use crate::optimizers::OptimizerKind;

/// Mean, population standard deviation, minimum and sum of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub sum: f64,
}

/// Aggregates in input order. An empty sample yields NaN statistics.
pub fn summarize(values: &[f64]) -> Summary {
    let count = values.len();
    if count == 0 {
        return Summary { count, mean: f64::NAN, std: f64::NAN, min: f64::NAN, sum: 0.0 };
    }
    let sum: f64 = values.iter().sum();
    let mean = sum / count as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / count as f64;
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    Summary { count, mean, std: var.sqrt(), min, sum }
}

/// Per-method selection counts in a fixed method order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionCounts(pub Vec<(String, usize)>);

impl SelectionCounts {
    /// All five inner methods at zero.
    pub fn standard() -> Self {
        Self(OptimizerKind::ALL.iter().map(|k| (k.as_str().to_string(), 0)).collect())
    }

    pub fn add(&mut self, name: &str, by: usize) {
        match self.0.iter_mut().find(|(n, _)| n == name) {
            Some((_, c)) => *c += by,
            None => self.0.push((name.to_string(), by)),
        }
    }

    pub fn get(&self, name: &str) -> usize {
        self.0.iter().find(|(n, _)| n == name).map_or(0, |(_, c)| *c)
    }

    pub fn total(&self) -> usize {
        self.0.iter().map(|(_, c)| c).sum()
    }

    pub fn merge(&mut self, other: &SelectionCounts) {
        for (n, c) in &other.0 {
            self.add(n, *c);
        }
    }

    /// Every method with the highest count; empty when nothing was selected.
    pub fn most_selected(&self) -> Vec<String> {
        let top = self.0.iter().map(|(_, c)| *c).max().unwrap_or(0);
        if top == 0 {
            return Vec::new();
        }
        self.0.iter().filter(|(_, c)| *c == top).map(|(n, _)| n.clone()).collect()
    }
}

/// Fit-phase selection counts across traces. Methods appear in the order of
/// the first trace's method list; every listed method is present.
pub fn selection_frequencies<'a>(traces: impl IntoIterator<Item = &'a ChmTrace>) -> SelectionCounts {
    let mut counts = SelectionCounts::default();
    for t in traces {
        for m in &t.methods {
            counts.add(m, 0);
        }
        for s in t.selections() {
            counts.add(s, 1);
        }
    }
    counts
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellStats {
    pub function: String,
    pub method: Method,
    pub runs: usize,
    pub failed: usize,
    pub fitness: Summary,
    pub mean_distance: f64,
    pub mean_fe: f64,
    /// cHM only; empty for single methods.
    pub selections: SelectionCounts,
}

/// Aggregates successful records per (function, method), function-major in
/// the given orders. Records within a cell are reduced in repetition order.
pub fn aggregate<'a>(
    functions: &[String],
    methods: &[Method],
    records: impl IntoIterator<Item = &'a RunRecord>,
) -> Vec<CellStats> {
    let mut records: Vec<&RunRecord> = records.into_iter().collect();
    records.sort_by_key(|r| r.rep);
    let mut out = Vec::with_capacity(functions.len() * methods.len());
    for f in functions {
        for &m in methods {
            let cell: Vec<&RunRecord> = records.iter().copied().filter(|r| &r.function == f && r.method == m).collect();
            let ok: Vec<&RunRecord> = cell.iter().copied().filter(|r| r.is_ok()).collect();
            let fit: Vec<f64> = ok.iter().map(|r| r.best_fitness).collect();
            let dist: Vec<f64> = ok.iter().map(|r| r.distance).collect();
            let fe: Vec<f64> = ok.iter().map(|r| r.fe_used as f64).collect();
            let mut selections = if m == Method::Chm { SelectionCounts::standard() } else { SelectionCounts::default() };
            for r in &ok {
                for s in &r.selections {
                    selections.add(s, 1);
                }
            }
            out.push(CellStats {
                function: f.clone(),
                method: m,
                runs: ok.len(),
                failed: cell.len() - ok.len(),
                fitness: summarize(&fit),
                mean_distance: summarize(&dist).mean,
                mean_fe: summarize(&fe).mean,
                selections,
            });
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionLeader {
    pub function: String,
    /// Single method(s) with the lowest mean fitness; ties list every one.
    pub single_best: Vec<Method>,
    /// Inner method(s) cHM selected most often for this function.
    pub best_chm: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Method,
    pub suite_sum: f64,
    pub suite_average: f64,
    /// Functions on which this method has the lowest mean fitness (ties
    /// count for every tied method).
    pub wins_fitness: usize,
    pub wins_distance: usize,
    /// Total fit-phase selections as an inner method of cHM.
    pub selections: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaderBoard {
    pub per_function: Vec<FunctionLeader>,
    pub methods: Vec<MethodSummary>,
}

impl LeaderBoard {
    pub fn method(&self, m: Method) -> Option<&MethodSummary> {
        self.methods.iter().find(|s| s.method == m)
    }
}

/// Every method whose value equals the minimum exactly.
fn argmins<T: Clone>(items: &[(T, f64)]) -> Vec<T> {
    let best = items.iter().map(|(_, v)| *v).filter(|v| !v.is_nan()).fold(f64::INFINITY, f64::min);
    items.iter().filter(|(_, v)| *v == best).map(|(t, _)| t.clone()).collect()
}

pub fn leaderboard(functions: &[String], methods: &[Method], stats: &[CellStats]) -> LeaderBoard {
    let cell = |f: &str, m: Method| stats.iter().find(|s| s.function == f && s.method == m);
    let mut wins_fit = vec![0usize; methods.len()];
    let mut wins_dist = vec![0usize; methods.len()];
    let mut suite_selections = SelectionCounts::standard();
    let mut per_function = Vec::with_capacity(functions.len());

    for f in functions {
        let fit: Vec<(usize, f64)> =
            methods.iter().enumerate().filter_map(|(i, &m)| cell(f, m).map(|s| (i, s.fitness.mean))).collect();
        let dist: Vec<(usize, f64)> =
            methods.iter().enumerate().filter_map(|(i, &m)| cell(f, m).map(|s| (i, s.mean_distance))).collect();
        for i in argmins(&fit) {
            wins_fit[i] += 1;
        }
        for i in argmins(&dist) {
            wins_dist[i] += 1;
        }
        let singles: Vec<(Method, f64)> =
            fit.iter().filter(|(i, _)| methods[*i] != Method::Chm).map(|&(i, v)| (methods[i], v)).collect();
        let chm_sel = cell(f, Method::Chm).map(|s| s.selections.clone()).unwrap_or_default();
        suite_selections.merge(&chm_sel);
        per_function.push(FunctionLeader {
            function: f.clone(),
            single_best: argmins(&singles),
            best_chm: chm_sel.most_selected(),
        });
    }

    let methods = methods
        .iter()
        .enumerate()
        .map(|(i, &m)| {
            let means: Vec<f64> = functions.iter().filter_map(|f| cell(f, m)).map(|s| s.fitness.mean).collect();
            let suite_sum: f64 = means.iter().sum();
            MethodSummary {
                method: m,
                suite_sum,
                suite_average: suite_sum / means.len().max(1) as f64,
                wins_fitness: wins_fit[i],
                wins_distance: wins_dist[i],
                selections: match m {
                    Method::Single(k) => suite_selections.get(k.as_str()),
                    Method::Chm => 0,
                },
            }
        })
        .collect();
    LeaderBoard { per_function, methods }
}
