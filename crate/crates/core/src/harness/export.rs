//! Result persistence.
//!
//! Layout under the output directory:
//!
//! ```text
//! plan.toml                      the plan that produced the results
//! tables/mean_fitness.csv        function × method, 3 decimals
//! tables/std_fitness.csv
//! tables/min_fitness.csv
//! tables/sum_fitness.csv
//! tables/mean_distance.csv
//! tables/mean_fe.csv
//! tables/selection_frequency.csv function × inner method, plus best_chm and single_best
//! tables/summary.csv             method, suite_sum, suite_average, wins_fitness, wins_distance, selections
//! raw/runs.jsonl                 one RunRecord per line, full precision, with seeds
//! traces/<function>.jsonl        best-fitness-vs-FE points per run
//! traces/chm_iterations.jsonl    full per-iteration cHM records
//! ```
//!
//! With [`ExportFormat::Records`] the `tables/` directory holds
//! `stats.jsonl` and `leaderboard.json` instead of the CSV views.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::{CellStats, ExperimentResults, HarnessError, Method, RunRecord};
use crate::chm::ChmIteration;
use crate::optimizers::OptimizerKind;

/// Environment variable that overrides the default `results/` root.
pub const RESULTS_DIR_ENV: &str = "CHM_RESULTS_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    /// Comma-separated tables rounded to 3 decimals.
    Table,
    /// Line-oriented JSON at full precision.
    Records,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io { path: path.to_path_buf(), source }
}

fn create(path: &Path) -> Result<BufWriter<File>, HarnessError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    File::create(path).map(BufWriter::new).map_err(io_err(path))
}

fn round3(v: f64) -> String {
    format!("{v:.3}")
}

fn write_lines<T: Serialize>(path: &Path, items: impl IntoIterator<Item = T>) -> Result<(), HarnessError> {
    let mut w = create(path)?;
    for item in items {
        serde_json::to_writer(&mut w, &item).map_err(|e| io_err(path)(e.into()))?;
        w.write_all(b"\n").map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

fn write_csv(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(create(path)?);
    let wrap = |e: csv::Error| io_err(path)(e.into());
    w.write_record(header).map_err(wrap)?;
    for r in rows {
        w.write_record(r).map_err(wrap)?;
    }
    w.flush().map_err(io_err(path))
}

/// Writes raw run records, one JSON object per line.
pub fn write_raw_records<'a>(path: &Path, records: impl IntoIterator<Item = &'a RunRecord>) -> Result<(), HarnessError> {
    write_lines(path, records)
}

#[derive(Serialize)]
struct CurveLine<'a> {
    function: &'a str,
    method: Method,
    rep: usize,
    seed: u64,
    #[serde(flatten)]
    point: &'a super::TracePoint,
}

#[derive(Serialize)]
struct IterationLine<'a> {
    function: &'a str,
    rep: usize,
    seed: u64,
    #[serde(flatten)]
    iteration: &'a ChmIteration,
}

fn metric_table(
    results: &ExperimentResults,
    methods: &[Method],
    value: impl Fn(&CellStats) -> f64,
) -> (Vec<String>, Vec<Vec<String>>) {
    let header = std::iter::once("function".to_string()).chain(methods.iter().map(|m| m.to_string())).collect();
    let rows = results
        .functions
        .iter()
        .map(|f| {
            std::iter::once(f.clone())
                .chain(methods.iter().map(|&m| results.stats_for(f, m).map_or_else(String::new, |s| round3(value(s)))))
                .collect()
        })
        .collect();
    (header, rows)
}

/// Writes tables, raw records and traces under `out_dir`. Returns the paths
/// written.
pub fn export_results(results: &ExperimentResults, out_dir: &Path, format: ExportFormat) -> Result<Vec<PathBuf>, HarnessError> {
    let methods = &results.plan.methods;
    if methods.is_empty() {
        return Err(HarnessError::Plan("methods must not be empty".into()));
    }
    let mut written = Vec::new();
    let mut push = |p: PathBuf| -> PathBuf {
        written.push(p.clone());
        p
    };

    let plan_path = push(out_dir.join("plan.toml"));
    let mut w = create(&plan_path)?;
    w.write_all(results.plan.to_toml_string().as_bytes()).map_err(io_err(&plan_path))?;
    w.flush().map_err(io_err(&plan_path))?;

    let tables = out_dir.join("tables");
    match format {
        ExportFormat::Table => {
            let metrics: [(&str, fn(&CellStats) -> f64); 6] = [
                ("mean_fitness", |s| s.fitness.mean),
                ("std_fitness", |s| s.fitness.std),
                ("min_fitness", |s| s.fitness.min),
                ("sum_fitness", |s| s.fitness.sum),
                ("mean_distance", |s| s.mean_distance),
                ("mean_fe", |s| s.mean_fe),
            ];
            for (name, f) in metrics {
                let (header, rows) = metric_table(results, methods, f);
                write_csv(&push(tables.join(format!("{name}.csv"))), &header, &rows)?;
            }

            let inner: Vec<&str> = OptimizerKind::ALL.iter().map(|k| k.as_str()).collect();
            let mut header: Vec<String> = vec!["function".into()];
            header.extend(inner.iter().map(|s| s.to_string()));
            header.extend(["best_chm".into(), "single_best".into()]);
            let mut rows: Vec<Vec<String>> = Vec::new();
            for leader in &results.leaderboard.per_function {
                let sel = results.stats_for(&leader.function, Method::Chm).map(|s| &s.selections);
                let mut row = vec![leader.function.clone()];
                row.extend(inner.iter().map(|k| sel.map_or(0, |s| s.get(k)).to_string()));
                row.push(leader.best_chm.join("|"));
                row.push(leader.single_best.iter().map(|m| m.to_string()).collect::<Vec<_>>().join("|"));
                rows.push(row);
            }
            if methods.contains(&Method::Chm) {
                let mut total = vec!["total".to_string()];
                total.extend(inner.iter().map(|k| {
                    results.stats.iter().filter(|s| s.method == Method::Chm).map(|s| s.selections.get(k)).sum::<usize>().to_string()
                }));
                total.extend([String::new(), String::new()]);
                rows.push(total);
            }
            write_csv(&push(tables.join("selection_frequency.csv")), &header, &rows)?;

            let header: Vec<String> = ["method", "suite_sum", "suite_average", "wins_fitness", "wins_distance", "selections"]
                .map(String::from)
                .to_vec();
            let rows: Vec<Vec<String>> = results
                .leaderboard
                .methods
                .iter()
                .map(|m| {
                    vec![
                        m.method.to_string(),
                        round3(m.suite_sum),
                        round3(m.suite_average),
                        m.wins_fitness.to_string(),
                        m.wins_distance.to_string(),
                        m.selections.to_string(),
                    ]
                })
                .collect();
            write_csv(&push(tables.join("summary.csv")), &header, &rows)?;
        }
        ExportFormat::Records => {
            write_lines(&push(tables.join("stats.jsonl")), &results.stats)?;
            let path = push(tables.join("leaderboard.json"));
            let mut w = create(&path)?;
            serde_json::to_writer_pretty(&mut w, &results.leaderboard).map_err(|e| io_err(&path)(e.into()))?;
            w.write_all(b"\n").map_err(io_err(&path))?;
        }
    }

    write_raw_records(&push(out_dir.join("raw").join("runs.jsonl")), results.records())?;

    let traces = out_dir.join("traces");
    for f in &results.functions {
        let lines = results.cells.iter().filter(|c| &c.record.function == f).flat_map(|c| {
            c.curve.iter().map(move |point| CurveLine {
                function: f,
                method: c.record.method,
                rep: c.record.rep,
                seed: c.record.seed,
                point,
            })
        });
        write_lines(&push(traces.join(format!("{f}.jsonl"))), lines)?;
    }
    if methods.contains(&Method::Chm) {
        let lines = results.cells.iter().filter_map(|c| c.chm_trace.as_ref().map(|t| (c, t))).flat_map(|(c, t)| {
            t.iterations.iter().map(move |iteration| IterationLine {
                function: &c.record.function,
                rep: c.record.rep,
                seed: c.record.seed,
                iteration,
            })
        });
        write_lines(&push(traces.join("chm_iterations.jsonl")), lines)?;
    }
    Ok(written)
}
