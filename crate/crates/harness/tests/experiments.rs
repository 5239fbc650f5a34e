use proptest::prelude::*;
use uhlmann_dmrg_harness::{parse_config, run_experiment, ExperimentConfig, ExperimentKind, HarnessError};

fn small(kind: ExperimentKind) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(kind);
    cfg.two_level.points = 21;
    cfg.two_level.max_dt = 0.05;
    cfg.spin_chain.sites = 4;
    cfg.spin_chain.points = 5;
    cfg.spin_chain.field_min = 0.9;
    cfg.spin_chain.field_max = 1.1;
    cfg.benchmark.sites = vec![4];
    cfg.benchmark.fields = vec![1.0];
    cfg.diagnostics.families = 3;
    cfg
}

#[test]
fn every_kind_dispatches_and_writes_its_files() {
    let dir = tempfile::tempdir().unwrap();
    for kind in [
        ExperimentKind::CrossingScan,
        ExperimentKind::PecComparison,
        ExperimentKind::DmrgBenchmark,
        ExperimentKind::GaugeDiagnostics,
    ] {
        let report = run_experiment(&small(kind)).unwrap();
        assert_eq!(report.experiment, kind);
        let out = dir.path().join(kind.as_str());
        let paths = report.write(&out).unwrap();
        let rendered = report.render().unwrap();
        assert_eq!(paths.len(), rendered.len());
        for (path, (name, contents)) in paths.iter().zip(&rendered) {
            assert!(path.ends_with(name));
            assert_eq!(&std::fs::read_to_string(path).unwrap(), contents);
        }
    }
}

#[test]
fn csv_tables_read_back_unchanged() {
    let report = run_experiment(&small(ExperimentKind::PecComparison)).unwrap();
    for table in report.tables.values() {
        let text = table.to_csv().unwrap();
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        let header: Vec<String> = reader.headers().unwrap().iter().map(String::from).collect();
        assert_eq!(header, table.columns);
        let rows: Vec<Vec<String>> =
            reader.records().map(|r| r.unwrap().iter().map(String::from).collect()).collect();
        assert_eq!(rows, table.rows);
    }
}

#[test]
fn summary_json_has_sorted_keys() {
    let report = run_experiment(&small(ExperimentKind::DmrgBenchmark)).unwrap();
    let text = report.summary_json().unwrap();
    let value: serde_json::Value = serde_json::from_str(&text).unwrap();
    let keys: Vec<&String> = value.as_object().unwrap().keys().collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
    assert!(text.find("\"converged\"").unwrap() < text.find("\"experiment\"").unwrap());
}

#[test]
fn different_seeds_change_diagnostics_but_not_determinism() {
    let a = small(ExperimentKind::GaugeDiagnostics);
    let mut b = a.clone();
    b.seed = 1;
    let ra = run_experiment(&a).unwrap().render().unwrap();
    assert_eq!(ra, run_experiment(&a).unwrap().render().unwrap());
    assert_ne!(ra, run_experiment(&b).unwrap().render().unwrap());
}

#[test]
fn invalid_config_is_a_config_error() {
    let mut cfg = small(ExperimentKind::CrossingScan);
    cfg.two_level.points = 1;
    assert!(matches!(run_experiment(&cfg), Err(HarnessError::Config(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn numeric_settings_round_trip(coupling in 0.01f64..1.0, points in 3usize..1000, seed in 0..=i64::MAX as u64) {
        let text = format!(
            "experiment = \"crossing_scan\"\nseed = {seed}\n[two_level]\ncoupling = {coupling:?}\npoints = {points}\n"
        );
        let cfg = parse_config(&text).unwrap();
        prop_assert_eq!(cfg.two_level.coupling, coupling);
        prop_assert_eq!(cfg.two_level.points, points);
        prop_assert_eq!(cfg.seed, seed);
    }

    #[test]
    fn unknown_keys_are_named(key in "[a-z]{3,10}_x") {
        let text = format!("experiment = \"dmrg_benchmark\"\n[benchmark]\n{key} = 1\n");
        let err = parse_config(&text).unwrap_err();
        prop_assert_eq!(err.issues.len(), 1);
        prop_assert_eq!(&err.issues[0].field, &format!("benchmark.{key}"));
    }

    #[test]
    fn grids_are_accepted_exactly_when_they_contain_zero(grid in prop::collection::vec(0.0f64..2.0, 1..5)) {
        let list = grid.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", ");
        let text = format!("experiment = \"pec_comparison\"\n[coefficient_grids]\ngamma1 = [{list}]\n");
        prop_assert_eq!(parse_config(&text).is_ok(), grid.contains(&0.0));
    }
}
