use std::fs;

use chm::benchmarks::BenchmarkRegistry;
use chm::harness::{export_results, replay, run_experiment, ExperimentPlan, ExportFormat, Method, RunRecord};
use chm::optimizers::OptimizerKind;

const PLAN: &str = r#"
name = "integration"
functions = ["matyas", "himmelblau", "rastrigin"]
methods = ["cHM", "DE", "PSO"]
repetitions = 4
base_seed = 11
"#;

fn plan() -> ExperimentPlan {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("plan.toml");
    fs::write(&path, PLAN).unwrap();
    ExperimentPlan::load(&path).unwrap()
}

#[test]
fn experiment_export_and_replay() {
    let reg = BenchmarkRegistry::new();
    let plan = plan();
    let res = run_experiment(&plan, &reg).unwrap();
    assert_eq!(res.cells.len(), 3 * 3 * 4);
    for r in res.records() {
        assert!(r.is_ok(), "{r:?}");
        assert!(r.fe_used <= r.fe_cap);
        assert!(r.best_fitness >= 0.0);
        if r.method == Method::Chm {
            assert_eq!(r.selections.len(), r.iterations);
        }
    }

    let dir = tempfile::tempdir().unwrap();
    export_results(&res, dir.path(), ExportFormat::Table).unwrap();
    let mean = fs::read_to_string(dir.path().join("tables/mean_fitness.csv")).unwrap();
    let lines: Vec<&str> = mean.lines().collect();
    assert_eq!(lines[0], "function,cHM,DE,PSO");
    assert_eq!(lines.len(), 4);
    let sel = fs::read_to_string(dir.path().join("tables/selection_frequency.csv")).unwrap();
    assert_eq!(sel.lines().next().unwrap(), "function,PSO,SA,GA,DE,BFO,best_chm,single_best");
    assert_eq!(sel.lines().count(), 5);

    let raw = fs::read_to_string(dir.path().join("raw/runs.jsonl")).unwrap();
    let recs: Vec<RunRecord> = raw.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(recs.len(), 36);
    let reloaded = ExperimentPlan::load(&dir.path().join("plan.toml")).unwrap();
    assert_eq!(reloaded, plan);
    for rec in recs.iter().step_by(5) {
        let again = replay(&reloaded, &reg, rec).unwrap();
        assert_eq!(again.best_fitness.to_bits(), rec.best_fitness.to_bits());
        assert_eq!(again.best_position, rec.best_position);
    }
    for f in ["matyas", "himmelblau", "rastrigin"] {
        assert!(dir.path().join(format!("traces/{f}.jsonl")).exists());
    }
    assert!(dir.path().join("traces/chm_iterations.jsonl").exists());
}

#[test]
fn records_format_writes_machine_views() {
    let reg = BenchmarkRegistry::new();
    let plan = ExperimentPlan { repetitions: 2, functions: vec!["beale".into()], ..ExperimentPlan::default() };
    let res = run_experiment(&plan, &reg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    export_results(&res, dir.path(), ExportFormat::Records).unwrap();
    let stats = fs::read_to_string(dir.path().join("tables/stats.jsonl")).unwrap();
    assert_eq!(stats.lines().count(), 6);
    let lb: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("tables/leaderboard.json")).unwrap()).unwrap();
    assert_eq!(lb["methods"].as_array().unwrap().len(), 6);
}

#[test]
fn thread_count_does_not_change_results() {
    let reg = BenchmarkRegistry::new();
    let base = ExperimentPlan {
        functions: vec!["zettl".into(), "bird".into()],
        methods: vec![Method::Chm, Method::Single(OptimizerKind::Ga)],
        repetitions: 3,
        ..ExperimentPlan::default()
    };
    let one = run_experiment(&ExperimentPlan { workers: Some(1), ..base.clone() }, &reg).unwrap();
    let three = run_experiment(&ExperimentPlan { workers: Some(3), ..base }, &reg).unwrap();
    assert_eq!(one.records().collect::<Vec<_>>(), three.records().collect::<Vec<_>>());
}

#[test]
fn single_methods_share_the_chm_cap() {
    let reg = BenchmarkRegistry::new();
    let plan = ExperimentPlan { functions: vec!["keane".into()], repetitions: 2, ..ExperimentPlan::default() };
    let res = run_experiment(&plan, &reg).unwrap();
    let caps: Vec<usize> = res.records().map(|r| r.fe_cap).collect();
    assert!(caps.iter().all(|&c| c == 20 + 4 * (5 * 400 + 800)), "{caps:?}");
}
