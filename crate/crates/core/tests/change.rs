mod common;

use ndarray::Array2;
use proptest::prelude::*;
use rand::Rng;

use srgcae::change::{
    adaptive_fuse, close, dilate, erode, intensity_variance, knn_similar_objects, local_difference_from_features,
    morph_refine, nonlocal_difference_from_features, object_signature, open, otsu_threshold,
    otsu_threshold_with_bins, ChangeMap, DifferenceImage, DifferenceKind, KernelRole, MorphKernel, NonlocalConfig,
};
use srgcae::segment::SegmentationMap;
use srgcae::Error;

fn features(rng: &mut impl Rng, n_objects: usize, width: usize) -> Vec<Array2<f64>> {
    (0..n_objects)
        .map(|_| {
            let n = rng.random_range(1..5);
            Array2::from_shape_fn((n, width), |_| rng.random_range(-1.0..1.0))
        })
        .collect()
}

/// One object per column of a `1 × n` image.
fn strip(n: usize) -> SegmentationMap {
    SegmentationMap::from_labels(1, n, (0..n as u32).collect()).unwrap()
}

/// Nonlocal distance of one object written directly from its definition.
fn nonlocal_oracle(sx: &[Vec<f64>], sy: &[Vec<f64>], i: usize, k: usize, phi2: f64) -> f64 {
    let neighbors = |s: &[Vec<f64>]| {
        let mut order: Vec<(f64, usize)> = (0..s.len())
            .filter(|&j| j != i)
            .map(|j| (s[i].iter().zip(&s[j]).map(|(a, b)| (a - b).powi(2)).sum::<f64>(), j))
            .collect();
        order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        order.into_iter().take(k).map(|(_, j)| j).collect::<Vec<_>>()
    };
    let directed = |src: &[Vec<f64>], other: &[Vec<f64>], nb: &[usize]| {
        nb.iter()
            .map(|&j| {
                (0..src[i].len())
                    .map(|c| {
                        ((-phi2 * (src[i][c] - src[j][c]).abs()).exp()
                            - (-phi2 * (other[i][c] - other[j][c]).abs()).exp())
                        .abs()
                    })
                    .sum::<f64>()
            })
            .sum::<f64>()
            / nb.len() as f64
    };
    directed(sx, sy, &neighbors(sx)) + directed(sy, sx, &neighbors(sy))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn local_difference_matches_definition(seed in any::<u64>(), n in 1usize..10) {
        let mut rng = common::rng(seed);
        let fx = features(&mut rng, n, 4);
        let fy: Vec<Array2<f64>> = fx.iter().map(|f| f.mapv(|_| rng.random_range(-1.0..1.0))).collect();
        let di = local_difference_from_features(&fx, &fy, &strip(n)).unwrap();
        for i in 0..n {
            let expected = (&fx[i] - &fy[i]).mapv(f64::abs).sum() / fx[i].nrows() as f64;
            prop_assert!((di.intensity()[i] - expected).abs() < 1e-12);
            prop_assert!(di.intensity()[i] >= 0.0);
        }
        let same = local_difference_from_features(&fx, &fx, &strip(n)).unwrap();
        prop_assert!(same.intensity().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn knn_matches_sorted_scan(seed in any::<u64>(), n in 2usize..30) {
        let mut rng = common::rng(seed);
        // Coarse values so that distance ties actually occur.
        let sigs: Vec<Vec<f64>> = (0..n).map(|_| (0..3).map(|_| rng.random_range(0..4) as f64).collect()).collect();
        let i = rng.random_range(0..n);
        let k = rng.random_range(1..n);
        let mut expected: Vec<(f64, usize)> = (0..n)
            .filter(|&j| j != i)
            .map(|j| (sigs[i].iter().zip(&sigs[j]).map(|(a, b)| (a - b).powi(2)).sum(), j))
            .collect();
        expected.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let expected: Vec<usize> = expected.into_iter().take(k).map(|(_, j)| j).collect();
        prop_assert_eq!(knn_similar_objects(&sigs, i, k).unwrap(), expected);
    }

    #[test]
    fn nonlocal_difference_matches_definition(seed in any::<u64>(), n in 2usize..14, phi2 in 0.1f64..20.0) {
        let mut rng = common::rng(seed);
        let fx = features(&mut rng, n, 5);
        let fy = features(&mut rng, n, 5);
        let k = rng.random_range(1..n);
        let cfg = NonlocalConfig { k_similar: k, phi2 };
        let di = nonlocal_difference_from_features(&fx, &fy, &strip(n), &cfg).unwrap();
        let sx: Vec<Vec<f64>> = fx.iter().map(object_signature).collect();
        let sy: Vec<Vec<f64>> = fy.iter().map(object_signature).collect();
        for i in 0..n {
            let expected = nonlocal_oracle(&sx, &sy, i, k, phi2);
            prop_assert!((di.intensity()[i] - expected).abs() < 1e-12);
        }
        let same = nonlocal_difference_from_features(&fx, &fx, &strip(n), &cfg).unwrap();
        prop_assert!(same.intensity().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn fusion_is_a_convex_combination(seed in any::<u64>(), n in 2usize..40) {
        let mut rng = common::rng(seed);
        let a: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..5.0)).collect();
        let b: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
        let l = DifferenceImage::new(1, n, a.clone(), DifferenceKind::Local).unwrap();
        let nl = DifferenceImage::new(1, n, b.clone(), DifferenceKind::Nonlocal).unwrap();
        let fused = adaptive_fuse(&l, &nl).unwrap();
        let (vl, vn) = (intensity_variance(&l), intensity_variance(&nl));
        let w = vl / (vl + vn);
        for i in 0..n {
            let f = fused.intensity()[i];
            prop_assert!((f - (w * a[i] + (1.0 - w) * b[i])).abs() < 1e-12);
            prop_assert!(f >= a[i].min(b[i]) - 1e-12 && f <= a[i].max(b[i]) + 1e-12);
        }
    }

    #[test]
    fn otsu_matches_brute_force(seed in any::<u64>(), bins in 2usize..300) {
        let mut rng = common::rng(seed);
        let di = common::random_difference_image(&mut rng);
        match common::brute_force_otsu(di.intensity(), bins) {
            Some(t) => prop_assert_eq!(otsu_threshold_with_bins(&di, bins).unwrap().bin, t),
            None => prop_assert!(matches!(otsu_threshold_with_bins(&di, bins), Err(Error::ConstantImage))),
        }
    }

    #[test]
    fn otsu_is_invariant_to_affine_rescaling(seed in any::<u64>(), scale in 0.5f64..4.0) {
        let mut rng = common::rng(seed);
        let di = common::random_difference_image(&mut rng);
        prop_assume!(common::brute_force_otsu(di.intensity(), 256).is_some());
        // Power-of-two scaling is exact in floating point, so the bins agree.
        let scale = scale.log2().round().exp2();
        let scaled = DifferenceImage::new(
            di.height(), di.width(),
            di.intensity().iter().map(|v| v * scale).collect(),
            DifferenceKind::Fused,
        ).unwrap();
        prop_assert_eq!(
            otsu_threshold(&di).unwrap().change_map,
            otsu_threshold(&scaled).unwrap().change_map
        );
    }

    #[test]
    fn morphology_matches_oracle_for_any_square(seed in any::<u64>(), half in 0usize..4, h in 1usize..20, w in 1usize..20) {
        let side = 2 * half + 1;
        let mut rng = common::rng(seed);
        let m = common::random_mask(&mut rng, h, w);
        let k = MorphKernel::new(side, KernelRole::Close).unwrap();
        prop_assert_eq!(dilate(&m, &k), common::dilate_oracle(&m, side));
        prop_assert_eq!(erode(&m, &k), common::erode_oracle(&m, side));
        let closed = close(&m, &k);
        let opened = open(&m, &k);
        prop_assert_eq!(close(&closed, &k), closed.clone());
        prop_assert_eq!(open(&opened, &k), opened.clone());
        // Opening is anti-extensive.
        prop_assert!(opened.mask().iter().zip(m.mask()).all(|(&o, &x)| !o || x));
        prop_assert_eq!(morph_refine(&m, &k, &k), open(&closed, &k));
    }
}

#[test]
fn even_kernels_are_rejected() {
    assert!(MorphKernel::new(4, KernelRole::Open).is_err());
    assert!(MorphKernel::new(0, KernelRole::Open).is_err());
}

#[test]
fn otsu_separates_two_levels() {
    let mut values = vec![0.1; 60];
    values.extend(vec![0.9; 40]);
    let di = DifferenceImage::new(10, 10, values, DifferenceKind::Fused).unwrap();
    let r = otsu_threshold(&di).unwrap();
    assert_eq!(r.change_map.count_changed(), 40);
    assert_eq!(r.threshold, 0.1);
}

#[test]
fn fusion_rejects_two_constants_and_shape_mismatch() {
    let c = DifferenceImage::new(2, 2, vec![1.0; 4], DifferenceKind::Local).unwrap();
    assert!(matches!(adaptive_fuse(&c, &c), Err(Error::BothVariancesZero)));
    let other = DifferenceImage::new(1, 4, vec![0.0, 1.0, 0.0, 1.0], DifferenceKind::Nonlocal).unwrap();
    assert!(matches!(adaptive_fuse(&c, &other), Err(Error::ShapeMismatch(_))));
}

#[test]
fn knn_rejects_bad_arguments() {
    let sigs = vec![vec![0.0], vec![1.0], vec![2.0]];
    assert!(matches!(knn_similar_objects(&sigs, 0, 3), Err(Error::KTooLarge { .. })));
    assert!(matches!(knn_similar_objects(&sigs, 5, 1), Err(Error::BadObjectId { .. })));
    assert_eq!(knn_similar_objects(&sigs, 1, 2).unwrap(), vec![0, 2]);
}

#[test]
fn change_map_pgm_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cm.pgm");
    let cm = ChangeMap::new(2, 3, vec![true, false, false, true, true, false]).unwrap();
    cm.save_pgm(&path).unwrap();
    assert_eq!(ChangeMap::load_pgm(&path).unwrap(), cm);
    assert_eq!(&cm.to_pgm_bytes()[cm.to_pgm_bytes().len() - 6..], &[255, 0, 0, 255, 255, 0]);
}
