mod common;

use common::*;
use lexnorm::stats::spearman;
use lexnorm::svr::{svr_train, KernelKind, SvrParams};
use ndarray::{array, Array2, Axis};
use proptest::prelude::*;
use rand::Rng;

fn five_points() -> (Array2<f64>, Vec<f64>) {
    (array![[0.0], [1.0], [2.0], [3.0], [4.0]], vec![0.1, 0.9, 2.2, 2.8, 4.3])
}

fn params(kernel: KernelKind, c: f64, gamma: f64, tol: f64) -> SvrParams {
    SvrParams {
        c,
        gamma,
        kernel,
        tol,
        ..SvrParams::default()
    }
}

#[test]
fn five_point_linear_matches_dense_dual() {
    let (x, y) = five_points();
    for c in [0.05, 0.3, 1.0] {
        let p = params(KernelKind::Linear, c, 0.0, 1e-6);
        let model = svr_train(&x, &y, &p, 0).unwrap();
        let oracle = svr_dual_oracle(&x, &y, c, p.epsilon, true, 0.0);
        let grid = Array2::from_shape_fn((41, 1), |(i, _)| -1.0 + 0.15 * i as f64);
        let got = model.predict(&grid).unwrap();
        let want = oracle_predict(&oracle, &x, &grid, true, 0.0);
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-3, "C={c}: {g} vs {w}");
        }
        let w_oracle: f64 = oracle.beta.iter().zip(x.column(0)).map(|(b, xi)| b * xi).sum();
        let w = model.linear_weights().unwrap();
        assert!((w[0] - w_oracle).abs() < 1e-3, "C={c}: w {} vs {w_oracle}", w[0]);
    }
}

#[test]
fn linear_weights_reproduce_predictions() {
    let mut r = rng(3);
    let x = normal_matrix(&mut r, 40, 4);
    let y: Vec<f64> = x.rows().into_iter().map(|row| row[0] - 0.5 * row[2] + 0.1 * r.random::<f64>()).collect();
    let model = svr_train(&x, &y, &SvrParams::linear(), 1).unwrap();
    let w = model.linear_weights().unwrap();
    let probe = normal_matrix(&mut r, 100, 4);
    let pred = model.predict(&probe).unwrap();
    for (row, p) in probe.rows().into_iter().zip(pred) {
        assert!((row.dot(&w) + model.bias - p).abs() < 1e-9);
    }
}

#[test]
fn smooth_curve_is_fitted_with_rbf() {
    let x = Array2::from_shape_fn((30, 1), |(i, _)| i as f64 * 0.1);
    let y: Vec<f64> = x.column(0).iter().map(|v| (1.5 * v).sin() + 0.3 * v).collect();
    let model = svr_train(&x, &y, &params(KernelKind::Rbf, 1.0, 2.0, 1e-3), 0).unwrap();
    let pred = model.predict(&x).unwrap();
    let rho = spearman(&y, &pred).unwrap();
    assert!(rho >= 0.95, "training Spearman {rho}");
}

#[test]
fn kkt_and_dual_feasibility_hold_after_training() {
    let mut r = rng(11);
    for case in 0..20 {
        let n = 10 + case * 3;
        let x = normal_matrix(&mut r, n, 3);
        let y = normal_vec(&mut r, n);
        for kernel in [KernelKind::Rbf, KernelKind::Linear] {
            let p = params(kernel, 2.0, 0.5, 1e-3);
            let model = svr_train(&x, &y, &p, case as u64).unwrap();
            assert!(model.converged);
            let kkt = model.kkt_violation(&x, &y).unwrap();
            assert!(kkt.max_violation <= p.tol, "{kernel}: KKT {}", kkt.max_violation);
            assert!(kkt.max_abs_dual <= p.c);
            assert!(kkt.dual_sum.abs() <= p.tol * p.c * n as f64);
        }
    }
}

#[test]
fn prediction_ignores_training_row_order() {
    let mut r = rng(5);
    let x = normal_matrix(&mut r, 60, 3);
    let y: Vec<f64> = x.rows().into_iter().map(|row| (row[0] + row[1]).tanh()).collect();
    let mut perm: Vec<usize> = (0..60).collect();
    perm.reverse();
    perm.swap(3, 40);
    let xp = x.select(Axis(0), &perm);
    let yp: Vec<f64> = perm.iter().map(|&i| y[i]).collect();
    let probe = normal_matrix(&mut r, 50, 3);
    for kernel in [KernelKind::Rbf, KernelKind::Linear] {
        let p = params(kernel, 1.0, 0.3, 1e-9);
        let a = svr_train(&x, &y, &p, 0).unwrap().predict(&probe).unwrap();
        let b = svr_train(&xp, &yp, &p, 9).unwrap().predict(&probe).unwrap();
        for (u, v) in a.iter().zip(&b) {
            assert!((u - v).abs() < 1e-6, "{kernel}: {u} vs {v}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn smo_matches_dense_dual(
        seed in any::<u64>(),
        n in 2usize..=8,
        dim in 1usize..=3,
        linear in any::<bool>(),
        c in 0.1f64..5.0,
    ) {
        let mut r = rng(seed);
        let x = normal_matrix(&mut r, n, dim);
        let y = normal_vec(&mut r, n);
        let kernel = if linear { KernelKind::Linear } else { KernelKind::Rbf };
        let p = params(kernel, c, 0.5, 1e-6);
        let model = svr_train(&x, &y, &p, seed).unwrap();
        let oracle = svr_dual_oracle(&x, &y, c, p.epsilon, linear, 0.5);
        let probe = normal_matrix(&mut r, 10, dim);
        let got = model.predict(&probe).unwrap();
        let want = oracle_predict(&oracle, &x, &probe, linear, 0.5);
        for (g, w) in got.iter().zip(&want) {
            prop_assert!((g - w).abs() < 1e-3, "{} vs {}", g, w);
        }
    }
}
