use innovcp::nulldist::{build_table, NullTable};
use innovcp::{run_study, StudyConfig, StudyFamily};

fn small_table() -> NullTable {
    build_table(32, 2000, 3).unwrap()
}

#[test]
fn studies_are_deterministic() {
    let config = StudyConfig {
        zetas: Some(vec![0.0, 0.8]),
        n_values: Some(vec![60]),
        replications: 50,
        base_seed: 5,
        ..StudyConfig::for_family(StudyFamily::Arch1StudentT)
    };
    let a = run_study(&config, &small_table(), |_| {}).unwrap();
    let b = run_study(&config, &small_table(), |_| {}).unwrap();
    assert_eq!(a, b);
}

#[test]
fn single_replication_reports_zero_stderr() {
    let config = StudyConfig {
        zetas: Some(vec![0.5]),
        n_values: Some(vec![50]),
        replications: 1,
        ..StudyConfig::for_family(StudyFamily::Ar1MeanMixture)
    };
    let t = run_study(&config, &small_table(), |_| {}).unwrap();
    let r = &t.rows[0];
    assert_eq!(r.completed + r.failures, 1);
    if r.completed == 1 {
        assert_eq!(r.stderr, 0.0);
        assert!(r.rejection_rate == 0.0 || r.rejection_rate == 1.0);
    }
}
