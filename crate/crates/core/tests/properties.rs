use proptest::prelude::*;
use volterra_ergodic::covariance::{fbm_cov, kernel_cov, CovMode, CovarianceOracle, DEFAULT_QUAD_TOL};
use volterra_ergodic::pathcsv::{read_paths, write_paths};
use volterra_ergodic::simulate::{sample_bm_increments, EnsembleMeta, PathEnsemble, Seed, TimeGrid};
use volterra_ergodic::transform::{power_path, transfer_function, z_alpha_forward, ForwardOperator, TransformParams};
use volterra_ergodic::{AlphaParam, HurstIndex, KernelSpec};

fn alpha() -> impl Strategy<Value = f64> {
    -0.45..3.0f64
}

fn hurst() -> impl Strategy<Value = f64> {
    0.05..0.95f64
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn transfer_function_is_unimodular(a in alpha(), lambda in -1e3..1e3f64) {
        let h = transfer_function(AlphaParam::new(a).unwrap(), lambda);
        prop_assert!((h.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fbm_kernel_is_homogeneous(h in hurst(), t in 0.1..10.0f64, x in 0.01..0.99f64, scale in 0.1..10.0f64) {
        let spec = KernelSpec::fbm(h).unwrap();
        let s = x * t;
        let lhs = spec.kernel_eval(scale * t, scale * s).unwrap();
        let rhs = scale.powf(h - 0.5) * spec.kernel_eval(t, s).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * rhs.abs());
    }

    #[test]
    fn kernel_vanishes_above_diagonal(h in hurst(), t in 0.1..10.0f64, extra in 0.0..5.0f64) {
        prop_assert_eq!(KernelSpec::fbm(h).unwrap().kernel_eval(t, t + extra).unwrap(), 0.0);
    }

    #[test]
    fn covariance_is_symmetric(h in hurst(), s in 0.01..5.0f64, t in 0.01..5.0f64) {
        let hi = HurstIndex::new(h).unwrap();
        prop_assert_eq!(fbm_cov(hi, s, t), fbm_cov(hi, t, s));
        let oracle = CovarianceOracle::new(KernelSpec::fbm(h).unwrap(), CovMode::Quadrature, DEFAULT_QUAD_TOL).unwrap();
        prop_assert_eq!(kernel_cov(&oracle, s, t).unwrap(), kernel_cov(&oracle, t, s).unwrap());
    }

    #[test]
    fn forward_transform_is_linear(
        a in alpha(),
        beta in 0.1..2.0f64,
        c1 in -3.0..3.0f64,
        c2 in -3.0..3.0f64,
        seed in any::<u64>(),
    ) {
        let grid = TimeGrid::uniform(1.0, 32).unwrap();
        let op = ForwardOperator::new(&grid, AlphaParam::new(a).unwrap(), beta).unwrap();
        let inc = sample_bm_increments(&grid, 2, Seed::new(seed)).unwrap().brownian_paths();
        let (x, y) = (inc.path(0), inc.path(1));
        let mix: Vec<f64> = x.iter().zip(y).map(|(u, v)| c1 * u + c2 * v).collect();
        let (zx, zy, zm) = (op.apply(x), op.apply(y), op.apply(&mix));
        for i in 0..zm.len() {
            let want = c1 * zx[i] + c2 * zy[i];
            prop_assert!((zm[i] - want).abs() <= 1e-12 * (1.0 + zx[i].abs() + zy[i].abs()) * (1.0 + c1.abs() + c2.abs()));
        }
    }

    #[test]
    fn power_paths_change_sign(a in alpha(), beta in 0.05..2.0f64, n in 4usize..200) {
        let grid = TimeGrid::uniform(2.0, n).unwrap();
        let x = power_path(&grid, beta);
        let p = TransformParams::new(AlphaParam::new(a).unwrap(), beta).unwrap();
        let z = z_alpha_forward(&x, &p).unwrap();
        for (zi, xi) in z.path(0).iter().zip(x.path(0)) {
            prop_assert!((zi + xi).abs() <= 1e-10 * (1.0 + xi.abs()));
        }
    }

    #[test]
    fn merged_grid_contains_both(n in 1usize..50, m in 1usize..30, lo in 1e-6..0.5f64) {
        let u = TimeGrid::uniform(1.0, n).unwrap();
        let g = TimeGrid::geometric(lo, 1.0, m, true).unwrap();
        let merged = u.merge(&g).unwrap();
        for &t in u.points() {
            prop_assert!(merged.points().contains(&t));
        }
        for &t in g.points() {
            prop_assert!(merged.index_of(t).is_some());
        }
        prop_assert!(merged.points().windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn csv_round_trip(rows in prop::collection::vec(prop::collection::vec(any::<f64>().prop_filter("finite", |v| v.is_finite()), 6), 1..5), seed in any::<u64>()) {
        let grid = TimeGrid::uniform(1.0, 5).unwrap();
        let meta = EnsembleMeta { spec: "fbm(H=0.3)".into(), beta: Some(0.3), seed: Some(seed), method: "csv".into() };
        let e = PathEnsemble::from_rows(grid, rows, meta).unwrap();
        let mut buf = Vec::new();
        write_paths(&mut buf, &e, None).unwrap();
        let back = read_paths(buf.as_slice()).unwrap();
        prop_assert_eq!(back.ensemble, e);
    }

    #[test]
    fn increments_are_reproducible(seed in any::<u64>(), paths in 1usize..4) {
        let grid = TimeGrid::uniform(1.0, 16).unwrap();
        let a = sample_bm_increments(&grid, paths, Seed::new(seed)).unwrap();
        let b = sample_bm_increments(&grid, paths, Seed::new(seed)).unwrap();
        prop_assert_eq!(&a, &b);
        let c = sample_bm_increments(&grid, paths, Seed::new(seed).derive(1)).unwrap();
        prop_assert_ne!(a.row(0), c.row(0));
    }
}
