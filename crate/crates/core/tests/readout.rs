mod common;

use common::*;
use dqrc::exec::{Executor, LocalExecutor};
use dqrc::readout::*;
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::Rng;

fn random_problem(seed: u64, d: usize, m: usize) -> (DMatrix<f64>, Vec<f64>) {
    let mut r = rng(seed);
    let f = DMatrix::from_fn(d, m, |_, _| r.random_range(-1.0..1.0));
    let y = (0..m).map(|_| r.random_range(-1.0..1.0)).collect();
    (f, y)
}

#[test]
fn ridge_matches_double_double_oracle() {
    let mut r = rng(100);
    for case in 0..12 {
        let d = r.random_range(1..=32);
        let m = r.random_range(d..=200);
        let (f, y) = random_problem(case, d, m);
        let lambda = 10f64.powf(r.random_range(-4.0..0.0));
        let w = ridge_fit(&f, &y, lambda).unwrap().weights;
        let want = dd_ridge(&f, &y, lambda);
        let err = w.iter().zip(&want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-8, "case {case}: {err}");
    }
}

#[test]
fn larger_lambda_shrinks_weights() {
    let (f, y) = random_problem(7, 10, 80);
    let mut last = f64::INFINITY;
    for lambda in [1e-6, 1e-3, 1e-1, 1.0, 10.0, 100.0] {
        let w = ridge_fit(&f, &y, lambda).unwrap().weights;
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!(norm <= last + 1e-12);
        last = norm;
    }
}

#[test]
fn tiny_lambda_interpolates_square_systems() {
    let (f, y) = random_problem(8, 6, 6);
    let model = ridge_fit(&f, &y, 1e-12).unwrap();
    for (col, target) in f.column_iter().zip(&y) {
        let col: Vec<f64> = col.iter().copied().collect();
        assert!((ridge_predict(&model, &col).unwrap() - target).abs() < 1e-6);
    }
}

#[test]
fn bad_lambda_rejected() {
    let (f, y) = random_problem(9, 3, 5);
    assert!(ridge_fit(&f, &y, 0.0).is_err());
    assert!(ridge_fit(&f, &y, f64::NAN).is_err());
}

#[test]
fn linear_dual_equals_primal() {
    for seed in 0..5 {
        let (f, y) = random_problem(seed + 20, 5, 40);
        let lambda = 1e-2;
        let primal = ridge_fit(&f, &y, lambda).unwrap();
        let gram = f.transpose() * &f;
        let alpha = solve_dual(&gram, &y, lambda).unwrap();
        let (probe, _) = random_problem(seed + 50, 5, 10);
        for c in 0..10 {
            let x: Vec<f64> = probe.column(c).iter().copied().collect();
            let dual: f64 = (0..40).map(|s| alpha[s] * f.column(s).dot(&probe.column(c))).sum();
            assert!((dual - ridge_predict(&primal, &x).unwrap()).abs() < 1e-8);
        }
    }
}

fn gram_for(n: usize, dim: usize, seed: u64) -> DMatrix<f64> {
    let mut r = rng(seed);
    let rows: Vec<Vec<f64>> = (0..50).map(|_| (0..dim).map(|_| r.random_range(-1.0..1.0)).collect()).collect();
    let cfg = KernelFeatureMapConfig::for_dimension(n, 2, dim).unwrap();
    let refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
    let circuits: Vec<_> = refs.iter().map(|x| build_kernel_feature_map(&cfg, x).unwrap()).collect();
    LocalExecutor::ideal().kernel_matrix(&circuits, &circuits, true, 0, 4).unwrap()
}

#[test]
fn gram_properties_n5_and_n10() {
    for (n, dim) in [(5, 5), (10, 10), (10, 20)] {
        let g = gram_for(n, dim, n as u64);
        for i in 0..g.nrows() {
            assert!((g[(i, i)] - 1.0).abs() < 1e-10);
            for j in 0..g.ncols() {
                assert!((g[(i, j)] - g[(j, i)]).abs() < 1e-12);
                assert!((-1e-12..=1.0 + 1e-10).contains(&g[(i, j)]));
            }
        }
        let min = g.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min);
        assert!(min >= -1e-9, "n={n}: {min}");
    }
}

#[test]
fn kernel_entries_match_dense_oracle() {
    let cfg = KernelFeatureMapConfig::for_dimension(3, 2, 5).unwrap();
    let mut r = rng(4);
    for _ in 0..5 {
        let a: Vec<f64> = (0..5).map(|_| r.random_range(-1.0..1.0)).collect();
        let b: Vec<f64> = (0..5).map(|_| r.random_range(-1.0..1.0)).collect();
        let (ca, cb) = (build_kernel_feature_map(&cfg, &a).unwrap(), build_kernel_feature_map(&cfg, &b).unwrap());
        let want = oracle_overlap_sq(&oracle_state(&ca), &oracle_state(&cb));
        let got = kernel_value(&cfg, &a, &b, &LocalExecutor::ideal(), 0).unwrap();
        assert!((got - want).abs() < 1e-12);
    }
}

#[test]
fn kernel_ridge_fits_training_targets() {
    let mut r = rng(12);
    let rows: Vec<Vec<f64>> = (0..20).map(|_| (0..4).map(|_| r.random_range(0.0..1.0)).collect()).collect();
    let y: Vec<f64> = rows.iter().map(|x| x.iter().sum::<f64>() / 4.0).collect();
    let refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
    let cfg = KernelFeatureMapConfig::for_dimension(4, 2, 4).unwrap();
    let exec = LocalExecutor::ideal();
    let model = kernel_ridge_fit(&refs, &y, cfg, 1e-8, &exec, 0, 2).unwrap();
    let pred = kernel_ridge_predict_many(&model, &refs, &exec, 0, 2).unwrap();
    for (p, t) in pred.iter().zip(&y) {
        assert!((p - t).abs() < 1e-4);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn multi_readout_mean_of_slices(seed in 0u64..1000, k in 1usize..5) {
        let (f, y) = random_problem(seed, 8, 30);
        let rows: Vec<Vec<f64>> = (0..30).map(|s| f.column(s).iter().copied().collect()).collect();
        let refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
        let exec = LocalExecutor::ideal();
        let execs: Vec<&dyn Executor> = vec![&exec];
        let model = multi_readout_fit(&refs, &y, k, &ReadoutSettings::classical(1e-3), &execs, 0, 1).unwrap();
        let slices = split_slices(8, k).unwrap();
        let x = &rows[0];
        let mut sum = 0.0;
        for s in &slices {
            let sub = DMatrix::from_fn(s.len(), 30, |i, c| f[(s.start + i, c)]);
            let m = ridge_fit(&sub, &y, 1e-3).unwrap();
            sum += ridge_predict(&m, &x[s.clone()]).unwrap();
        }
        let got = multi_readout_predict(&model, x, &execs, 0).unwrap();
        prop_assert!((got - sum / k as f64).abs() < 1e-12);
    }
}
