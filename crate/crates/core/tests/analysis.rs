use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use snn_topo::analysis::{
    adjusted_r2, feature_importance, join_records, read_accuracy_csv, run_regression, stratified_folds,
    AnalysisError, AnalysisRecord, MinMaxScaler, RegressionConfig, RegressionReport, RegressorKind, Scenario,
};
use snn_topo::fixtures;
use snn_topo::topometrics::{Metrics16, MetricsRow, TopometricVector, METRIC_NAMES};

fn records(n: usize, seed: u64) -> Vec<AnalysisRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let mut m = Metrics16::default();
            for j in 0..4 {
                m.0[j] = rng.random();
            }
            let y = 0.5 * m.0[0] - 0.25 * m.0[1] + 0.1;
            AnalysisRecord {
                architecture: ["p", "q"][i % 2].into(),
                dataset: ["a", "b", "c"][i % 3].into(),
                sparsity: [0.6, 0.9][i % 2],
                algorithm: format!("alg{}", i % 5),
                run: i,
                acc_sparse: 1.0 - y,
                acc_dense: 1.0,
                topometrics: m,
            }
        })
        .collect()
}

#[test]
fn linear_drop_is_recovered_by_every_regressor() {
    let cfg = RegressionConfig {
        runs: 5,
        seed: 3,
        ..Default::default()
    };
    let report = run_regression(&records(150, 1), &Scenario::All, &cfg).unwrap();
    assert_eq!(report.features.len(), 4);
    assert_eq!(report.dropped_features.len(), 12);
    for s in &report.regressors {
        let adj = s.adj_r2_mean.unwrap();
        let floor = match s.regressor {
            RegressorKind::Ridge | RegressorKind::Pcr => 0.8,
            _ => 0.99,
        };
        assert!(adj >= floor, "{}: {adj}", s.regressor);
        assert_eq!(s.folds_evaluated + s.folds_skipped, 5 * cfg.folds);
    }
    let imp = report.importance_vector();
    assert!(imp[0] > 0.5 && imp[1] < -0.2, "{imp:?}");
    assert!(report.importance[5].undefined && imp[5] == 0.0);
    let back = RegressionReport::from_json(&report.to_json().unwrap()).unwrap();
    assert_eq!(back, report);
}

#[test]
fn runs_are_reproducible_and_seed_dependent() {
    let data = records(90, 2);
    let cfg = |seed| RegressionConfig {
        runs: 4,
        seed,
        regressors: vec![RegressorKind::Ols, RegressorKind::Lasso],
        ..Default::default()
    };
    let a = run_regression(&data, &Scenario::All, &cfg(1)).unwrap();
    let b = run_regression(&data, &Scenario::All, &cfg(1)).unwrap();
    let c = run_regression(&data, &Scenario::All, &cfg(2)).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.regressors[0].mae_mean, c.regressors[0].mae_mean);
    assert_eq!(
        feature_importance(&data, &Scenario::All, &cfg(1)).unwrap(),
        feature_importance(&data, &Scenario::All, &cfg(9)).unwrap()
    );
}

#[test]
fn scenarios_slice_records() {
    let data = records(60, 3);
    let s: Scenario = "sparsity:0.9".parse().unwrap();
    assert_eq!(s.select(&data).len(), 30);
    let a: Scenario = "arch:p".parse().unwrap();
    assert!(a.select(&data).iter().all(|r| r.architecture == "p"));
    assert_eq!(Scenario::All.select(&data).len(), 60);
    let cfg = RegressionConfig {
        runs: 1,
        ..Default::default()
    };
    match run_regression(&data, &"sparsity:0.5".parse().unwrap(), &cfg) {
        Err(AnalysisError::TooFewRecords { found: 0, needed: 10, .. }) => {}
        other => panic!("{other:?}"),
    }
}

#[test]
fn folds_are_balanced_within_each_dataset() {
    let datasets: Vec<String> = (0..103).map(|i| ["x", "y", "z", "w"][i % 4].to_string()).collect();
    let k = 5;
    let folds = stratified_folds(&datasets, k, 7, 0);
    assert_eq!(folds, stratified_folds(&datasets, k, 7, 0));
    assert_ne!(folds, stratified_folds(&datasets, k, 7, 1));
    let mut sizes = vec![0; k];
    for &f in &folds {
        sizes[f] += 1;
    }
    assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1, "{sizes:?}");
    for d in ["x", "y", "z", "w"] {
        let mut per = vec![0i64; k];
        for (i, &f) in folds.iter().enumerate() {
            if datasets[i] == d {
                per[f] += 1;
            }
        }
        assert!(per.iter().max().unwrap() - per.iter().min().unwrap() <= 1, "{d}: {per:?}");
    }
}

#[test]
fn scaler_and_adjusted_r2() {
    let xs = vec![vec![1.0, 5.0], vec![3.0, 5.0], vec![2.0, 5.0]];
    let s = MinMaxScaler::fit(&xs);
    assert_eq!(s.transform(&xs), vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.5, 0.0]]);
    assert_eq!(s.transform(&[vec![5.0, 1.0]]), vec![vec![2.0, 0.0]]);
    assert_eq!(adjusted_r2(0.5, 11, 4), Some(1.0 - 0.5 * 10.0 / 6.0));
    assert_eq!(adjusted_r2(0.5, 5, 4), None);
}

#[test]
fn bundled_tables_join_with_wildcard_metrics() {
    let mut acc = Vec::new();
    for (_, text) in fixtures::ACCURACY_TABLES {
        acc.extend(read_accuracy_csv(text.as_bytes()).unwrap());
    }
    let v = TopometricVector {
        normalized: Metrics16([0.5; 16]),
        raw: Metrics16([0.5; 16]),
        nodes: 1,
        edges: 1,
        padding_nodes: 0,
        motif_size: 4,
        motif_sampling: 1.0,
        spectral: None,
    };
    let rows: Vec<MetricsRow> = acc
        .iter()
        .filter(|r| r.architecture == "conv6" && r.algorithm != "dense")
        .map(|r| MetricsRow::new("conv6", "*", r.sparsity, &r.algorithm, 0, &v))
        .collect();
    let (joined, summary) = join_records(&acc, &rows);
    assert_eq!(summary.joined, joined.len());
    assert_eq!(summary.joined + summary.skipped_accuracy + summary.unmatched, acc.len());
    assert!(joined.iter().all(|r| r.architecture == "conv6"));
    let expected = acc
        .iter()
        .filter(|r| r.architecture == "conv6" && r.algorithm != "dense" && r.acc.is_some())
        .count();
    assert_eq!(joined.len(), expected);
    assert_eq!(METRIC_NAMES.len(), joined[0].topometrics.0.len());
}
