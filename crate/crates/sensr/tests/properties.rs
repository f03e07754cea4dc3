use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sensr::auditor::{c_transform, dual_update, AttackConfig};
use sensr::data::fit_scaler;
use sensr::fair_metric::{projection_complement, SensitiveSubspace};
use sensr::linalg::{qr_orthonormal, Matrix};
use sensr::metrics::{balanced_accuracy, tpr_gaps};
use sensr::models::{softmax_in_place, Architecture, ModelParams};
use sensr::trainer::{balanced_minibatch, class_index};

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = Matrix> {
    proptest::collection::vec(-5.0f64..5.0, rows * cols).prop_map(move |v| Matrix::new(rows, cols, v).unwrap())
}

fn dims() -> impl Strategy<Value = (usize, usize)> {
    (2usize..12).prop_flat_map(|d| (Just(d), 1..d))
}

proptest! {
    #[test]
    fn matmul_matches_naive((m, k, n) in (1usize..9, 1usize..9, 1usize..9), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = Matrix::from_fn(m, k, |_, _| rand::Rng::random_range(&mut rng, -1.0..1.0));
        let b = Matrix::from_fn(k, n, |_, _| rand::Rng::random_range(&mut rng, -1.0..1.0));
        let c = a.matmul(&b).unwrap();
        for i in 0..m {
            for j in 0..n {
                let naive: f64 = (0..k).map(|l| a.get(i, l) * b.get(l, j)).sum();
                prop_assert!((c.get(i, j) - naive).abs() < 1e-12);
            }
        }
        prop_assert_eq!(a.transpose().transpose(), a);
    }

    #[test]
    fn qr_columns_orthonormal(m in matrix(12, 4)) {
        if let Ok(q) = qr_orthonormal(&m) {
            let gram = q.transpose_matmul(&q).unwrap();
            prop_assert!(gram.max_abs_diff(&Matrix::identity(q.cols())) < 1e-9);
        }
    }

    #[test]
    fn projector_properties(((d, k), seed) in (dims(), any::<u64>())) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dirs = Matrix::from_fn(d, k, |_, _| rand::Rng::random_range(&mut rng, -1.0..1.0));
        let sub = SensitiveSubspace::from_directions(dirs).unwrap();
        let metric = projection_complement(&sub).unwrap();
        let s = metric.sigma();
        prop_assert!(s.matmul(s).unwrap().max_abs_diff(s) < 1e-10);
        prop_assert!(s.is_symmetric(1e-12));
        // moving along the subspace costs nothing
        let x: Vec<f64> = (0..d).map(|i| i as f64 * 0.3).collect();
        let mut moved = x.clone();
        for (m, q) in moved.iter_mut().zip(sub.basis().column(0)) {
            *m += 4.0 * q;
        }
        prop_assert!(metric.distance_sq(&x, &moved).unwrap().abs() < 1e-10);
        let other: Vec<f64> = (0..d).map(|i| (i as f64).sin()).collect();
        prop_assert!(metric.distance_sq(&x, &other).unwrap() >= -1e-12);
    }

    #[test]
    fn dual_update_is_nonnegative_and_monotone(
        lambda in 0.0f64..10.0, step in 1e-3f64..10.0, eps in 1e-4f64..1.0, c1 in 0.0f64..2.0, c2 in 0.0f64..2.0
    ) {
        let (lo, hi) = if c1 <= c2 { (c1, c2) } else { (c2, c1) };
        let a = dual_update(lambda, step, eps, lo);
        let b = dual_update(lambda, step, eps, hi);
        prop_assert!(a >= 0.0 && a <= b);
    }

    #[test]
    fn attack_never_worse_than_start(seed in 0u64..500, lambda in 0.05f64..20.0, x0 in -3.0f64..3.0, x1 in -3.0f64..3.0) {
        let model = ModelParams::init(Architecture::mlp(6), 2, 2, seed).unwrap();
        let metric = projection_complement(&SensitiveSubspace::from_axes(2, &[0]).unwrap()).unwrap();
        let attack = AttackConfig { subspace_step: 0.3, subspace_epochs: 5, full_step: 0.05, full_epochs: 5, ..AttackConfig::adult() };
        let r = c_transform(&model, &metric, &[x0, x1], (seed % 2) as usize, lambda, &attack).unwrap();
        prop_assert!(r.value >= r.clean_loss - 1e-12);
        prop_assert!((r.value - (r.loss - lambda * r.dist_sq)).abs() < 1e-9);
        prop_assert!((metric.distance_sq(&r.x_star, &[x0, x1]).unwrap() - r.dist_sq).abs() < 1e-9);
    }

    #[test]
    fn minibatch_is_balanced(labels in proptest::collection::vec(0usize..3, 3..60), batch in 3usize..40, seed in any::<u64>()) {
        prop_assume!((0..3).all(|c| labels.contains(&c)));
        let by_class = class_index(&labels, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let idx = balanced_minibatch(&by_class, batch, &mut rng).unwrap();
        prop_assert_eq!(idx.len(), batch);
        let counts: Vec<usize> = (0..3).map(|c| idx.iter().filter(|&&i| labels[i] == c).count()).collect();
        prop_assert!(counts.iter().max().unwrap() - counts.iter().min().unwrap() <= 1);
    }

    #[test]
    fn score_ranges(preds in proptest::collection::vec(0usize..2, 40), labels in proptest::collection::vec(0usize..2, 40), attr in proptest::collection::vec(0usize..2, 40)) {
        let b = balanced_accuracy(&preds, &labels).unwrap();
        prop_assert!((0.0..=1.0).contains(&b));
        let g = tpr_gaps(&preds, &labels, &attr, 2).unwrap();
        prop_assert!(g.gap_rms <= g.gap_max + 1e-15);
        prop_assert!(g.gap_max <= 1.0);
    }

    #[test]
    fn softmax_is_a_distribution(mut z in proptest::collection::vec(-700.0f64..700.0, 1..10)) {
        softmax_in_place(&mut z);
        prop_assert!((z.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(z.iter().all(|p| *p >= 0.0));
    }

    #[test]
    fn scaler_roundtrip(values in proptest::collection::vec(-1e3f64..1e3, 2..50)) {
        let s = fit_scaler(&values);
        for v in &values {
            prop_assert!((s.invert(s.apply(*v)) - v).abs() < 1e-9 * (1.0 + v.abs()));
        }
    }
}
