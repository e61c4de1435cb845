use std::sync::OnceLock;

use chm::fselect::{
    decode_mask, fs_cost, load_csv, run_feature_selection, split, synthetic, CellPolicy, FsConfig, FsReport,
    ForestParams, BASELINE_NAME,
};
use chm::harness::Method;
use proptest::prelude::*;

fn shipped_path() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("data/synthetic_oracle.csv")
}

#[test]
fn shipped_csv_matches_the_generator() {
    let loaded = load_csv(&shipped_path(), "y", CellPolicy::Strict).unwrap();
    assert_eq!(loaded.dropped_rows, 0);
    assert_eq!(loaded.dataset, synthetic::shipped_oracle());
}

fn full_report() -> &'static FsReport {
    static REPORT: OnceLock<FsReport> = OnceLock::new();
    REPORT.get_or_init(|| run_feature_selection(&synthetic::shipped_oracle(), &Method::all(), &FsConfig::default()).unwrap())
}

#[test]
fn report_rows_and_feature_counts() {
    let rep = full_report();
    let names: Vec<&str> = rep.rows.iter().map(|r| r.meta_name.as_str()).collect();
    assert_eq!(names, vec!["cHM", "PSO", "SA", "GA", "DE", "BFO", "None"]);
    for r in &rep.rows {
        assert!(r.avg_num_features <= 10.0);
        assert!((0.0..=1.0).contains(&r.avg_cost));
    }
    let none = rep.row(BASELINE_NAME).unwrap();
    assert_eq!((none.avg_num_features, none.std_num_features), (10.0, 0.0));
}

#[test]
fn baseline_row_is_the_all_features_test_error() {
    let data = synthetic::shipped_oracle();
    let cfg = FsConfig::default();
    let rep = full_report();
    for r in 0..cfg.repetitions {
        let s = cfg.rep_splits(&data, r).unwrap();
        let direct = fs_cost(&[true; 10], &s.train_full, &s.test, &cfg.forest, s.forest_seed).unwrap();
        assert_eq!(direct, rep.baseline[r]);
    }
    let mean = rep.baseline.iter().sum::<f64>() / rep.baseline.len() as f64;
    assert!((rep.row(BASELINE_NAME).unwrap().avg_cost - mean).abs() < 1e-15);
}

#[test]
fn reported_cost_is_the_final_mask_on_test() {
    let data = synthetic::shipped_oracle();
    let cfg = FsConfig::default();
    for run in full_report().runs_for(Method::Chm).take(3) {
        let s = cfg.rep_splits(&data, run.rep).unwrap();
        assert_eq!(fs_cost(&run.mask, &s.train_full, &s.test, &cfg.forest, s.forest_seed).unwrap(), run.test_cost);
    }
}

#[test]
fn chm_prunes_features_and_matches_the_baseline() {
    let rep = full_report();
    let chm = rep.row("cHM").unwrap();
    let baseline = rep.row(BASELINE_NAME).unwrap();
    assert!(chm.avg_num_features < 10.0);
    assert!(chm.avg_cost <= baseline.avg_cost, "cHM {} vs baseline {}", chm.avg_cost, baseline.avg_cost);
}

#[test]
fn chm_is_not_worse_than_every_single_method() {
    let rep = full_report();
    let chm = rep.row("cHM").unwrap().avg_cost;
    let worst = rep
        .rows
        .iter()
        .filter(|r| r.meta_name != "cHM" && r.meta_name != BASELINE_NAME)
        .map(|r| r.avg_cost)
        .fold(f64::NEG_INFINITY, f64::max);
    assert!(chm <= worst, "cHM {chm} vs worst single {worst}");
}

#[test]
fn single_repetition_has_zero_spread() {
    let cfg = FsConfig { repetitions: 1, ..FsConfig::default() };
    let rep = run_feature_selection(&synthetic::shipped_oracle(), &[Method::Chm], &cfg).unwrap();
    assert_eq!(rep.rows.len(), 2);
    assert!(rep.rows.iter().all(|r| r.std_cost == 0.0 && r.std_num_features == 0.0));
}

#[test]
fn repeated_runs_are_identical() {
    let cfg = FsConfig { repetitions: 2, ..FsConfig::default() };
    let data = synthetic::synthetic_oracle(120, 5);
    let a = run_feature_selection(&data, &[Method::Chm], &cfg).unwrap();
    let b = run_feature_selection(&data, &[Method::Chm], &cfg).unwrap();
    assert_eq!(a, b);
}

/// Training error with and without the informative column, added to the
/// same random noise subset.
#[test]
fn informative_feature_does_not_raise_training_error() {
    let data = synthetic::shipped_oracle();
    let params = ForestParams::default();
    let mut with = Vec::new();
    let mut without = Vec::new();
    for seed in 0..12u64 {
        let (train, _) = split(&data, 0.3, seed).unwrap();
        let mut mask: Vec<bool> = (0..10).map(|j| (seed >> (j % 6)) & 1 == 1).collect();
        mask[synthetic::INFORMATIVE] = false;
        mask[(seed as usize % 9 + 4) % 10] = true;
        without.push(fs_cost(&mask, &train, &train, &params, seed).unwrap());
        mask[synthetic::INFORMATIVE] = true;
        with.push(fs_cost(&mask, &train, &train, &params, seed).unwrap());
    }
    let median = |v: &mut Vec<f64>| {
        v.sort_by(f64::total_cmp);
        (v[5] + v[6]) / 2.0
    };
    assert!(median(&mut with) <= median(&mut without) + 0.02);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn cost_is_a_rate(position in proptest::collection::vec(0.0f64..=1.0, 10), seed in 0u64..1000) {
        let data = synthetic::synthetic_oracle(80, seed);
        let (train, test) = split(&data, 0.3, seed).unwrap();
        let params = ForestParams { n_trees: 5, ..ForestParams::default() };
        let c = fs_cost(&decode_mask(&position), &train, &test, &params, seed).unwrap();
        prop_assert!((0.0..=1.0).contains(&c));
        let again = fs_cost(&decode_mask(&position), &train, &test, &params, seed).unwrap();
        prop_assert_eq!(c, again);
    }

    #[test]
    fn decode_is_total(position in proptest::collection::vec(-10.0f64..10.0, 1..20)) {
        let mask = decode_mask(&position);
        prop_assert_eq!(mask.len(), position.len());
        for (m, p) in mask.iter().zip(&position) {
            prop_assert_eq!(*m, *p >= 0.5);
        }
    }
}
