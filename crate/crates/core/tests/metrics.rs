mod common;

use proptest::prelude::*;
use rand::Rng;

use srgcae::change::{ChangeMap, DifferenceImage, DifferenceKind};
use srgcae::metrics::{confusion, oa_f1_kappa, roc_auc, ConfusionCounts, MetricsRow, METRICS_HEADER};
use srgcae::Error;

fn maps(seed: u64, n: usize) -> (ChangeMap, ChangeMap) {
    let mut rng = common::rng(seed);
    let a = (0..n).map(|_| rng.random_bool(0.4)).collect();
    let b = (0..n).map(|_| rng.random_bool(0.3)).collect();
    (ChangeMap::new(1, n, a).unwrap(), ChangeMap::new(1, n, b).unwrap())
}

/// AUC as the probability that a random changed pixel outscores a random
/// unchanged one, ties counting one half.
fn mann_whitney(scores: &[f64], labels: &[bool]) -> f64 {
    let mut wins = 0.0;
    let mut pairs = 0.0;
    for (i, &si) in scores.iter().enumerate() {
        if !labels[i] {
            continue;
        }
        for (j, &sj) in scores.iter().enumerate() {
            if labels[j] {
                continue;
            }
            pairs += 1.0;
            wins += if si > sj {
                1.0
            } else if si == sj {
                0.5
            } else {
                0.0
            };
        }
    }
    wins / pairs
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn counts_partition_the_pixels(seed in any::<u64>(), n in 1usize..200) {
        let (a, b) = maps(seed, n);
        let c = confusion(&a, &b).unwrap();
        prop_assert_eq!(c.total(), n as u64);
        prop_assert_eq!(c.tp + c.fp, a.count_changed() as u64);
        prop_assert_eq!(c.tp + c.fn_, b.count_changed() as u64);
    }

    #[test]
    fn accuracy_matches_textbook_formulas(tp in 0u64..500, fp in 0u64..500, tn in 0u64..500, fn_ in 0u64..500) {
        let c = ConfusionCounts { tp, fp, tn, fn_ };
        prop_assume!(c.total() > 0);
        let acc = oa_f1_kappa(&c).unwrap();
        let n = c.total() as f64;
        let (tp, fp, tn, fn_) = (tp as f64, fp as f64, tn as f64, fn_ as f64);
        let po = (tp + tn) / n;
        prop_assert!((acc.oa - po).abs() < 1e-12);
        if 2.0 * tp + fp + fn_ > 0.0 {
            prop_assert!((acc.f1 - 2.0 * tp / (2.0 * tp + fp + fn_)).abs() < 1e-12);
        }
        let pe = ((tp + fp) * (tp + fn_) + (fn_ + tn) * (fp + tn)) / (n * n);
        if (1.0 - pe).abs() > 1e-9 {
            prop_assert!((acc.kappa - (po - pe) / (1.0 - pe)).abs() < 1e-9);
        }
        prop_assert!(acc.kappa <= 1.0 + 1e-12 && acc.kappa >= -1.0 - 1e-12);
    }

    #[test]
    fn auc_equals_mann_whitney(seed in any::<u64>(), n in 2usize..120, levels in 2u32..50) {
        let mut rng = common::rng(seed);
        let labels: Vec<bool> = (0..n).map(|i| i == 0 || (i > 1 && rng.random_bool(0.4))).collect();
        prop_assume!(labels.iter().any(|&l| !l));
        let scores: Vec<f64> = (0..n).map(|_| rng.random_range(0..levels) as f64).collect();
        let di = DifferenceImage::new(1, n, scores.clone(), DifferenceKind::Fused).unwrap();
        let reference = ChangeMap::new(1, n, labels.clone()).unwrap();
        let roc = roc_auc(&di, &reference).unwrap();
        prop_assert!((roc.auc - mann_whitney(&scores, &labels)).abs() < 1e-12);
        prop_assert_eq!(roc.points.first().copied(), Some((0.0, 0.0)));
        prop_assert_eq!(roc.points.last().copied(), Some((1.0, 1.0)));
        prop_assert!(roc.points.windows(2).all(|w| w[0].0 <= w[1].0 && w[0].1 <= w[1].1));
    }

    #[test]
    fn auc_is_invariant_to_monotone_transforms(seed in any::<u64>(), n in 4usize..100) {
        let mut rng = common::rng(seed);
        let labels: Vec<bool> = (0..n).map(|i| i % 3 == 0).collect();
        let scores: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
        let reference = ChangeMap::new(1, n, labels).unwrap();
        let a = roc_auc(&DifferenceImage::new(1, n, scores.clone(), DifferenceKind::Fused).unwrap(), &reference).unwrap();
        let warped: Vec<f64> = scores.iter().map(|s| (3.0 * s).exp() + 2.0).collect();
        let b = roc_auc(&DifferenceImage::new(1, n, warped, DifferenceKind::Fused).unwrap(), &reference).unwrap();
        prop_assert!((a.auc - b.auc).abs() < 1e-12);
    }
}

#[test]
fn perfect_and_inverted_detectors() {
    let reference = ChangeMap::new(1, 4, vec![true, true, false, false]).unwrap();
    let good = DifferenceImage::new(1, 4, vec![0.9, 0.8, 0.1, 0.2], DifferenceKind::Fused).unwrap();
    let bad = DifferenceImage::new(1, 4, vec![0.1, 0.2, 0.9, 0.8], DifferenceKind::Fused).unwrap();
    assert_eq!(roc_auc(&good, &reference).unwrap().auc, 1.0);
    assert_eq!(roc_auc(&bad, &reference).unwrap().auc, 0.0);
    let flat = DifferenceImage::new(1, 4, vec![0.5; 4], DifferenceKind::Fused).unwrap();
    assert_eq!(roc_auc(&flat, &reference).unwrap().auc, 0.5);

    let acc = oa_f1_kappa(&confusion(&reference, &reference).unwrap()).unwrap();
    assert_eq!((acc.oa, acc.f1, acc.kappa), (1.0, 1.0, 1.0));
}

#[test]
fn degenerate_inputs_are_rejected() {
    assert!(matches!(oa_f1_kappa(&ConfusionCounts::default()), Err(Error::EmptyCounts)));
    let all = ChangeMap::new(1, 3, vec![true; 3]).unwrap();
    let di = DifferenceImage::new(1, 3, vec![0.0, 1.0, 2.0], DifferenceKind::Fused).unwrap();
    assert!(matches!(roc_auc(&di, &all), Err(Error::SingleClassReference)));
    let other = ChangeMap::new(3, 1, vec![true; 3]).unwrap();
    assert!(matches!(confusion(&all, &other), Err(Error::ShapeMismatch(_))));
}

#[test]
fn metrics_row_csv_layout() {
    let row = MetricsRow {
        dataset: "synthetic".into(),
        accuracy: oa_f1_kappa(&ConfusionCounts { tp: 1, fp: 0, tn: 1, fn_: 0 }).unwrap(),
        auc: 1.0,
        runtime_seconds: 2.5,
    };
    let csv = row.to_csv();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(METRICS_HEADER));
    let fields: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(fields.len(), 6);
    assert_eq!(fields[0], "synthetic");
}
