use proptest::prelude::*;

use snn_topo::analysis::AccuracyRecord;
use snn_topo::ranking::{
    evaluate_strategies, ground_truth, rank_scores, ranking_coefficient, rbo, rbo_mean, rbo_truncated, Order,
    StrategyScore, RBO_ALPHAS,
};

fn names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("a{i}")).collect()
}

fn permuted(n: usize, keys: &[u32]) -> Vec<String> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by_key(|&i| (keys[i % keys.len()].wrapping_mul(i as u32 + 1), i));
    idx.into_iter().map(|i| format!("a{i}")).collect()
}

proptest! {
    #[test]
    fn rbo_is_symmetric_and_bounded(n in 1usize..12, ka in prop::collection::vec(any::<u32>(), 1..12),
                                    kb in prop::collection::vec(any::<u32>(), 1..12), alpha in 0.05f64..0.95) {
        let a = permuted(n, &ka);
        let b = permuted(n, &kb);
        let x = rbo_truncated(&a, &b, alpha).unwrap();
        let y = rbo_truncated(&b, &a, alpha).unwrap();
        prop_assert!((x.value - y.value).abs() < 1e-12);
        prop_assert!(x.value >= 0.0 && x.value + x.residual <= 1.0 + 1e-12);
        let same = rbo(&a, &a, alpha).unwrap();
        prop_assert!((same - (1.0 - alpha.powi(n as i32))).abs() < 1e-12);
        prop_assert!(x.value <= same + 1e-12);
    }

    #[test]
    fn coefficient_is_linear(x in prop::collection::vec(-4.0f64..4.0, 16), w in prop::collection::vec(-1.0f64..1.0, 32),
                             v in prop::collection::vec(-1.0f64..1.0, 32)) {
        let (wm, ws) = w.split_at(16);
        let (vm, vs) = v.split_at(16);
        let sum_m: Vec<f64> = wm.iter().zip(vm).map(|(a, b)| a + b).collect();
        let sum_s: Vec<f64> = ws.iter().zip(vs).map(|(a, b)| a + b).collect();
        let lhs = ranking_coefficient(&x, &sum_m, &sum_s).unwrap();
        let rhs = ranking_coefficient(&x, wm, ws).unwrap() + ranking_coefficient(&x, vm, vs).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-9);
        let swapped = ranking_coefficient(&x, ws, wm).unwrap();
        prop_assert!((swapped - ranking_coefficient(&x, wm, ws).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn ranking_ignores_input_order(scores in prop::collection::vec(-5i32..5, 2..10), keys in prop::collection::vec(any::<u32>(), 1..10)) {
        let pairs: Vec<(String, f64)> = scores.iter().enumerate().map(|(i, &s)| (format!("a{i}"), s as f64)).collect();
        let order = permuted(pairs.len(), &keys);
        let shuffled: Vec<(String, f64)> = order
            .iter()
            .map(|n| pairs.iter().find(|p| &p.0 == n).unwrap().clone())
            .collect();
        for o in [Order::Asc, Order::Desc] {
            let a = rank_scores(&pairs, o);
            prop_assert_eq!(&a, &rank_scores(&shuffled, o));
            for w in a.coefficients.windows(2) {
                let sorted = if o == Order::Asc { w[0] <= w[1] } else { w[0] >= w[1] };
                prop_assert!(sorted);
            }
        }
    }
}

fn accuracy(cells: &[(&str, &str, f64)], algos: usize) -> Vec<AccuracyRecord> {
    let mut out = Vec::new();
    for &(arch, ds, s) in cells {
        for (i, a) in names(algos).into_iter().enumerate() {
            out.push(AccuracyRecord {
                architecture: arch.into(),
                dataset: ds.into(),
                algorithm: a,
                sparsity: s,
                run: 0,
                acc: Some(90.0 - i as f64),
                acc_dense: 91.0,
                acc_std: None,
                acc_dense_std: None,
            });
        }
    }
    out
}

#[test]
fn oracle_strategy_scores_the_identity_value() {
    let cells = [("n", "d1", 0.9), ("n", "d2", 0.9), ("n", "d1", 0.6)];
    let acc = accuracy(&cells, 5);
    let truth = ground_truth(&acc);
    assert_eq!(truth.len(), 3);
    assert!(truth.iter().all(|t| t.algorithms == names(5)));
    let perfect: Vec<StrategyScore> = acc
        .iter()
        .map(|r| StrategyScore {
            architecture: r.architecture.clone(),
            dataset: r.dataset.clone(),
            sparsity: r.sparsity,
            algorithm: r.algorithm.clone(),
            score: r.acc.unwrap(),
            order: Order::Desc,
        })
        .collect();
    let reversed: Vec<StrategyScore> = perfect
        .iter()
        .map(|s| StrategyScore {
            dataset: "*".into(),
            order: Order::Asc,
            ..s.clone()
        })
        .collect();
    let results = evaluate_strategies(&acc, &[("perfect".into(), perfect), ("reversed".into(), reversed)]).unwrap();
    let identity = RBO_ALPHAS.iter().map(|a| 1.0 - a.powi(5)).sum::<f64>() / 3.0;
    let rev = rbo_mean(&names(5), &names(5).into_iter().rev().collect::<Vec<_>>()).unwrap();
    for r in &results {
        let want = if r.strategy == "perfect" { identity } else { rev };
        assert!((r.rbo_mean - want).abs() < 1e-12, "{r:?}");
    }
    let at_09 = results.iter().find(|r| r.strategy == "perfect" && r.sparsity == 0.9).unwrap();
    assert_eq!(at_09.datasets, 2);
    assert!(rev < identity);
}
