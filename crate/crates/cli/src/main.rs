use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chm::benchmarks::{BenchmarkRegistry, Bucket};
use chm::fselect::{load_csv, run_feature_selection, CellPolicy, FsConfig, FsError};
use chm::harness::{
    export_results, run_cell, run_experiment, ExperimentPlan, ExportFormat, HarnessError, Method, RESULTS_DIR_ENV,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

const AFTER_HELP: &str = "\
Exit codes: 0 success, 1 usage or validation error, 2 runtime error.

Environment:
  CHM_RESULTS_DIR  root for output directories when --out is not given (default: results)";

#[derive(Parser, Debug)]
#[command(name = "chm", version, about = "Constrained hybrid metaheuristic: benchmarks, experiments, feature selection")]
#[command(after_help = AFTER_HELP)]
struct Cli {
    /// Output style for everything printed to stdout.
    #[arg(long, value_enum, global = true, default_value_t = Format::Table)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    /// Human-readable tables.
    Table,
    /// One JSON object per line.
    Records,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the benchmark catalogue.
    List {
        /// Only functions in this bucket.
        #[arg(long)]
        bucket: Option<String>,
    },
    /// Optimize one function with one method.
    Run(RunArgs),
    /// Run a multi-function, multi-method experiment and write results.
    Bench(BenchArgs),
    /// Wrapper feature selection on a CSV dataset.
    Fselect(FselectArgs),
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Benchmark name (see `chm list`).
    function: String,
    /// cHM, PSO, SA, GA, DE or BFO (case-insensitive).
    method: String,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Trace directory [default: $CHM_RESULTS_DIR/run].
    #[arg(long)]
    out: Option<PathBuf>,
    /// Orchestrator iterations.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    population: Option<usize>,
    /// Probing budget per inner method and iteration.
    #[arg(long)]
    probing: Option<usize>,
    /// Fit budget per iteration.
    #[arg(long)]
    fit: Option<usize>,
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// TOML plan; flags below override its fields.
    #[arg(long)]
    plan: Option<PathBuf>,
    /// Comma-separated benchmark names.
    #[arg(long, value_delimiter = ',')]
    functions: Option<Vec<String>>,
    /// Comma-separated methods.
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<String>>,
    /// Restrict to one bucket.
    #[arg(long)]
    bucket: Option<String>,
    #[arg(long)]
    reps: Option<usize>,
    /// Base seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: one per core).
    #[arg(long)]
    workers: Option<usize>,
    /// Results directory [default: $CHM_RESULTS_DIR/<plan name>].
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct FselectArgs {
    /// CSV file with a header row.
    csv: PathBuf,
    /// Name of the label column.
    #[arg(long)]
    label: String,
    /// A method name, or `all` for cHM and every single method.
    #[arg(long, default_value = "chm")]
    method: String,
    #[arg(long, default_value_t = 10)]
    reps: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Drop rows with non-numeric feature cells instead of encoding them.
    #[arg(long)]
    strict: bool,
    /// Also write fs_report.csv and fs_runs.jsonl here.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl ToString) -> Self {
        Self { code: 1, message: message.to_string() }
    }

    fn runtime(message: impl ToString) -> Self {
        Self { code: 2, message: message.to_string() }
    }
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Plan(_) | HarnessError::Benchmark(_) | HarnessError::Params(_) | HarnessError::Chm(_) => {
                Failure::usage(e)
            }
            HarnessError::Run { .. } | HarnessError::Io { .. } | HarnessError::Pool(_) => Failure::runtime(e),
        }
    }
}

impl From<FsError> for Failure {
    fn from(e: FsError) -> Self {
        match e {
            FsError::Config(_) | FsError::Params(_) => Failure::usage(e),
            _ => Failure::runtime(e),
        }
    }
}

fn io_failure(e: io::Error) -> Failure {
    Failure::runtime(format!("writing output: {e}"))
}

fn results_root() -> PathBuf {
    std::env::var_os(RESULTS_DIR_ENV).map_or_else(|| PathBuf::from("results"), PathBuf::from)
}

fn parse_method(s: &str) -> Result<Method, Failure> {
    s.parse().map_err(|_| {
        let valid: Vec<&str> = Method::all().iter().map(|m| m.as_str()).collect();
        Failure::usage(format!("unknown method '{s}'; valid methods: {}", valid.join(", ")))
    })
}

fn parse_bucket(s: &str) -> Result<Bucket, Failure> {
    s.parse().map_err(Failure::usage)
}

fn cmd_list(out: &mut impl Write, format: Format, bucket: Option<&str>) -> Result<(), Failure> {
    let reg = BenchmarkRegistry::new();
    let bucket = bucket.map(parse_bucket).transpose()?;
    let specs: Vec<_> = reg.iter().filter(|s| bucket.is_none_or(|b| s.bucket == b)).collect();
    match format {
        Format::Table => BenchmarkRegistry::write_catalogue(specs, out).map_err(Failure::runtime),
        Format::Records => {
            for s in specs {
                let line = json!({
                    "name": s.name,
                    "bucket": s.bucket,
                    "bounds": s.bounds.intervals(),
                    "optimum": s.optimum,
                    "reference_value": s.reference_value,
                    "budgets": s.budgets(),
                });
                writeln!(out, "{line}").map_err(io_failure)?;
            }
            Ok(())
        }
    }
}

fn cmd_run(out: &mut impl Write, format: Format, args: &RunArgs) -> Result<(), Failure> {
    let reg = BenchmarkRegistry::new();
    let method = parse_method(&args.method)?;
    let mut plan = ExperimentPlan {
        name: "run".into(),
        functions: vec![args.function.clone()],
        methods: vec![method],
        repetitions: 1,
        base_seed: args.seed,
        ..ExperimentPlan::default()
    };
    if let Some(n) = args.n {
        plan.chm.n = n;
    }
    if let Some(p) = args.population {
        plan.chm.population_size = p;
    }
    plan.chm.maxfe_probing = args.probing.or(plan.chm.maxfe_probing);
    plan.chm.maxfe_fit = args.fit.or(plan.chm.maxfe_fit);
    let specs = plan.validate(&reg)?;
    let spec = &specs[0];

    let cell = run_cell(&plan, spec, method, 0);
    let r = &cell.record;
    if let Some(e) = &r.error {
        return Err(Failure::runtime(format!("run aborted: {e}")));
    }

    let dir = args.out.clone().unwrap_or_else(|| results_root().join("run"));
    let trace_path = dir.join(format!("{}_{}_seed{}.jsonl", spec.name, method, args.seed));
    write_trace(&trace_path, &cell).map_err(|e| Failure::runtime(format!("{}: {e}", trace_path.display())))?;

    match format {
        Format::Table => {
            let pos: Vec<String> = r.best_position.iter().map(|v| format!("{v:.6}")).collect();
            writeln!(out, "function      {}", r.function).map_err(io_failure)?;
            writeln!(out, "method        {}", r.method).map_err(io_failure)?;
            writeln!(out, "seed          {}", r.seed).map_err(io_failure)?;
            writeln!(out, "best_fitness  {:e}", r.best_fitness).map_err(io_failure)?;
            writeln!(out, "best_value    {}", r.best_value).map_err(io_failure)?;
            writeln!(out, "best_position ({})", pos.join(", ")).map_err(io_failure)?;
            writeln!(out, "distance      {:e}", r.distance).map_err(io_failure)?;
            writeln!(out, "fe_used       {} / {}", r.fe_used, r.fe_cap).map_err(io_failure)?;
            writeln!(out, "iterations    {}{}", r.iterations, if r.converged { " (converged)" } else { "" })
                .map_err(io_failure)?;
            if !r.selections.is_empty() {
                writeln!(out, "selections    {}", r.selections.join(" ")).map_err(io_failure)?;
            }
            writeln!(out, "trace         {}", trace_path.display()).map_err(io_failure)?;
        }
        Format::Records => {
            writeln!(out, "{}", serde_json::to_string(r).expect("record serializes")).map_err(io_failure)?;
        }
    }
    Ok(())
}

fn write_trace(path: &Path, cell: &chm::harness::CellOutcome) -> io::Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut w = io::BufWriter::new(fs::File::create(path)?);
    for p in &cell.curve {
        writeln!(w, "{}", serde_json::to_string(p).expect("trace point serializes"))?;
    }
    if let Some(t) = &cell.chm_trace {
        for it in &t.iterations {
            writeln!(w, "{}", serde_json::to_string(&json!({ "chm_iteration": it })).expect("iteration serializes"))?;
        }
    }
    w.flush()
}

fn bench_plan(args: &BenchArgs, reg: &BenchmarkRegistry) -> Result<ExperimentPlan, Failure> {
    let mut plan = match &args.plan {
        Some(p) => ExperimentPlan::load(p)?,
        None => ExperimentPlan::default(),
    };
    if let Some(f) = &args.functions {
        plan.functions = f.clone();
    }
    if let Some(m) = &args.methods {
        plan.methods = m.iter().map(|s| parse_method(s)).collect::<Result<_, _>>()?;
    }
    if let Some(b) = &args.bucket {
        let bucket = parse_bucket(b)?;
        let names: Vec<String> = if plan.functions.is_empty() {
            reg.by_bucket(bucket).map(|s| s.name.to_string()).collect()
        } else {
            let mut keep = Vec::new();
            for f in &plan.functions {
                if reg.get(f).map_err(Failure::usage)?.bucket == bucket {
                    keep.push(f.clone());
                }
            }
            keep
        };
        if names.is_empty() {
            return Err(Failure::usage(format!("no listed function is in bucket '{bucket}'")));
        }
        plan.functions = names;
    }
    if let Some(r) = args.reps {
        plan.repetitions = r;
    }
    if let Some(s) = args.seed {
        plan.base_seed = s;
    }
    if args.workers.is_some() {
        plan.workers = args.workers;
    }
    plan.validate(reg)?;
    Ok(plan)
}

fn cmd_bench(out: &mut impl Write, format: Format, args: &BenchArgs) -> Result<(), Failure> {
    let reg = BenchmarkRegistry::new();
    let plan = bench_plan(args, &reg)?;
    let dir = args.out.clone().unwrap_or_else(|| results_root().join(&plan.name));
    let results = run_experiment(&plan, &reg)?;
    let export = match format {
        Format::Table => ExportFormat::Table,
        Format::Records => ExportFormat::Records,
    };
    export_results(&results, &dir, export)?;

    let lb = &results.leaderboard;
    match format {
        Format::Table => {
            writeln!(
                out,
                "{} functions x {} methods x {} reps -> {}",
                results.functions.len(),
                plan.methods.len(),
                plan.repetitions,
                dir.display()
            )
            .map_err(io_failure)?;
            writeln!(out, "{:<8} {:>14} {:>14} {:>12} {:>13} {:>10}", "method", "suite_sum", "suite_average", "wins_fitness", "wins_distance", "selections")
                .map_err(io_failure)?;
            for m in &lb.methods {
                writeln!(
                    out,
                    "{:<8} {:>14.6} {:>14.6} {:>12} {:>13} {:>10}",
                    m.method.as_str(),
                    m.suite_sum,
                    m.suite_average,
                    m.wins_fitness,
                    m.wins_distance,
                    m.selections
                )
                .map_err(io_failure)?;
            }
            let failed: usize = results.stats.iter().map(|s| s.failed).sum();
            if failed > 0 {
                writeln!(out, "{failed} run(s) failed; see raw/runs.jsonl").map_err(io_failure)?;
            }
        }
        Format::Records => {
            for m in &lb.methods {
                writeln!(out, "{}", serde_json::to_string(m).expect("summary serializes")).map_err(io_failure)?;
            }
        }
    }
    Ok(())
}

fn cmd_fselect(out: &mut impl Write, err: &mut impl Write, format: Format, args: &FselectArgs) -> Result<(), Failure> {
    let methods: Vec<Method> =
        if args.method.eq_ignore_ascii_case("all") { Method::all() } else { vec![parse_method(&args.method)?] };
    let cfg = FsConfig { repetitions: args.reps, seed: args.seed, ..FsConfig::default() };
    cfg.validate()?;
    let policy = if args.strict { CellPolicy::Strict } else { CellPolicy::Auto };
    let loaded = load_csv(&args.csv, &args.label, policy)?;
    if loaded.dropped_rows > 0 {
        let shown: Vec<String> = loaded.dropped_lines.iter().take(20).map(|l| l.to_string()).collect();
        let more = if loaded.dropped_rows > 20 { ", ..." } else { "" };
        writeln!(err, "dropped {} row(s) at data line(s) {}{more}", loaded.dropped_rows, shown.join(", "))
            .map_err(io_failure)?;
    }
    let report = run_feature_selection(&loaded.dataset, &methods, &cfg)?;

    if let Some(dir) = &args.out {
        let wrap = |e: io::Error| Failure::runtime(format!("{}: {e}", dir.display()));
        fs::create_dir_all(dir).map_err(wrap)?;
        report.write_csv(fs::File::create(dir.join("fs_report.csv")).map_err(wrap)?)?;
        let mut w = io::BufWriter::new(fs::File::create(dir.join("fs_runs.jsonl")).map_err(wrap)?);
        for r in &report.runs {
            writeln!(w, "{}", serde_json::to_string(r).expect("run serializes")).map_err(wrap)?;
        }
        w.flush().map_err(wrap)?;
    }
    match format {
        Format::Table => write!(out, "{}", report.to_table()).map_err(io_failure)?,
        Format::Records => {
            for r in &report.rows {
                writeln!(out, "{}", serde_json::to_string(r).expect("row serializes")).map_err(io_failure)?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let result = match &cli.command {
        Command::List { bucket } => cmd_list(&mut out, cli.format, bucket.as_deref()),
        Command::Run(args) => cmd_run(&mut out, cli.format, args),
        Command::Bench(args) => cmd_bench(&mut out, cli.format, args),
        Command::Fselect(args) => cmd_fselect(&mut out, &mut io::stderr(), cli.format, args),
    };
    match result.and_then(|()| out.flush().map_err(io_failure)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
