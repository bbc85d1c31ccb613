use std::fs::File;

use nacstruct::builders::BinaryMethod;
use nacstruct::collapse::CollapseRule;
use nacstruct::study::{paper_config, read_records, run_study, Estimator, StudyConfig};

fn small_config() -> StudyConfig {
    let mut c = paper_config("fig8_middle").unwrap();
    c.estimators = vec![
        Estimator::two_step(BinaryMethod::Kt, CollapseRule::Kagg),
        Estimator::two_step(BinaryMethod::Kt, CollapseRule::Kb),
    ];
    c.sample_sizes = vec![40, 90];
    c.replicates = 4;
    c.bootstrap_b = 19;
    c.seed = 31;
    c.timing = false;
    c
}

#[test]
fn records_survive_a_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let result = run_study(&small_config()).unwrap();
    let path = dir.path().join("results.csv");
    result.write_csv(File::create(&path).unwrap()).unwrap();
    let back = read_records(File::open(&path).unwrap()).unwrap();
    assert_eq!(back.len(), result.records.len());
    for (a, b) in back.iter().zip(&result.records) {
        assert_eq!((&a.estimator, a.n, a.threshold, a.replicate), (&b.estimator, b.n, b.threshold, b.replicate));
        assert_eq!((a.dist01, a.dist_tri), (b.dist01, b.dist_tri));
    }
}

#[test]
fn config_json_round_trip_reproduces_results() {
    let config = small_config();
    let text = serde_json::to_string(&config.to_json()).unwrap();
    let again = StudyConfig::from_json_str(&text).unwrap();
    let a = run_study(&config).unwrap();
    let b = run_study(&again).unwrap();
    let (mut x, mut y) = (Vec::new(), Vec::new());
    a.write_csv(&mut x).unwrap();
    b.write_csv(&mut y).unwrap();
    assert_eq!(x, y);
}

#[test]
fn timing_mode_does_not_change_distances() {
    let mut config = small_config();
    let shared = run_study(&config).unwrap();
    config.timing = true;
    let timed = run_study(&config).unwrap();
    let key = |r: &nacstruct::study::EstimateRecord| (r.estimator.clone(), r.n, r.threshold.to_bits(), r.replicate, r.dist01, r.dist_tri);
    let a: Vec<_> = shared.records.iter().map(key).collect();
    let b: Vec<_> = timed.records.iter().map(key).collect();
    assert_eq!(a, b);
}
