use std::f64::consts::PI;

use nalgebra::DMatrix;
use qctl_core::operator::{max_abs_diff, phase_aligned_distance};
use qctl_core::*;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// exp(a) by scaling and squaring around a degree-20 Taylor polynomial.
fn taylor_expm(a: &DMatrix<C64>) -> DMatrix<C64> {
    let norm = a.iter().map(|z| z.norm()).sum::<f64>();
    let s = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let scaled = a / c(2f64.powi(s), 0.0);
    let n = a.nrows();
    let mut term = DMatrix::<C64>::identity(n, n);
    let mut sum = term.clone();
    for k in 1..=20 {
        term = &term * &scaled / c(k as f64, 0.0);
        sum += &term;
    }
    for _ in 0..s {
        sum = &sum * &sum;
    }
    sum
}

#[test]
fn exponential_of_zero_is_identity() {
    let u = matrix_exponential(&DMatrix::zeros(3, 3)).unwrap();
    assert!(max_abs_diff(u.entries(), &DMatrix::identity(3, 3)) < 1e-15);
    assert_eq!(u.kind(), OperatorKind::Unitary);
}

#[test]
fn exponential_of_diagonal_generator() {
    let (a, b, e, dt) = (0.7, -2.3, 5.1, 0.37);
    let gen = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
        c(0.0, -a * dt),
        c(0.0, -b * dt),
        c(0.0, -e * dt),
    ]));
    let u = matrix_exponential(&gen).unwrap();
    for (i, x) in [a, b, e].iter().enumerate() {
        assert!((u.get(i, i) - C64::from_polar(1.0, -x * dt)).norm() < 1e-14);
    }
}

#[test]
fn half_pi_sigma_x_block_matches_taylor_oracle() {
    let mut gen = DMatrix::zeros(3, 3);
    gen[(0, 2)] = c(0.0, -PI / 2.0);
    gen[(2, 0)] = c(0.0, -PI / 2.0);
    let u = matrix_exponential(&gen).unwrap();
    assert!((u.get(0, 2) - c(0.0, -1.0)).norm() < 1e-14);
    assert!((u.get(2, 0) - c(0.0, -1.0)).norm() < 1e-14);
    assert!(u.get(0, 0).norm() < 1e-14 && (u.get(1, 1) - c(1.0, 0.0)).norm() < 1e-14);
    assert!(max_abs_diff(u.entries(), &taylor_expm(&gen)) < 1e-13);
}

#[test]
fn synthesized_step_generators_match_taylor_oracle() {
    let s = PathSchedule::single_transfer(10.0, 1.0).unwrap();
    let h = hamiltonian(&s, ErrorModel::new(ErrorKind::Commutative, 0.2).unwrap());
    for &t in &[0.05, 0.33, 0.71] {
        let gen = h(t).unwrap().entries() * c(0.0, -0.02);
        let u = matrix_exponential(&gen).unwrap();
        assert!(max_abs_diff(u.entries(), &taylor_expm(&gen)) < 1e-13);
    }
}

#[test]
fn exponential_rejects_bad_input() {
    assert!(matches!(
        matrix_exponential(&DMatrix::zeros(2, 3)),
        Err(Error::Dimension(_))
    ));
    let mut m = DMatrix::zeros(2, 2);
    m[(0, 1)] = c(1.0, 0.0);
    assert!(matches!(matrix_exponential(&m), Err(Error::Contract(_))));
}

#[test]
fn error_free_lambda_five_transfer_reaches_one() {
    let s = PathSchedule::single_transfer(5.0, 1.0).unwrap();
    let grid = TimeGrid::new(0.0, 1.0, 4000).unwrap();
    let traj = propagate(
        hamiltonian(&s, ErrorModel::none()),
        &StateVector::level(Level::Ground),
        &grid,
    )
    .unwrap();
    assert!((traj.last().unwrap().population(Level::One.index()) - 1.0).abs() < 1e-6);
}

#[test]
fn numerical_propagator_matches_exact_propagator() {
    let s = PathSchedule::single_transfer(5.0, 1.0).unwrap();
    let grid = TimeGrid::new(0.0, 1.0, 8000).unwrap();
    let u = propagator_accumulate(hamiltonian(&s, ErrorModel::none()), 3, &grid).unwrap();
    let exact = exact_propagator(&s, 1.0).unwrap();
    let d = phase_aligned_distance(u.entries(), exact.entries());
    assert!(d < 1e-6, "{d:e}");
}

/// Trapezoid sums at h, h/2, h/4 combined by two Richardson steps.
fn richardson_trapezoid<F: Fn(f64) -> C64>(f: F, a: f64, b: f64, n: usize) -> C64 {
    let trap = |m: usize| {
        let h = (b - a) / m as f64;
        let inner: C64 = (1..m).map(|i| f(a + h * i as f64)).sum();
        (f(a) * 0.5 + f(b) * 0.5 + inner) * h
    };
    let (t1, t2, t4) = (trap(n), trap(2 * n), trap(4 * n));
    let r1 = (t2 * 4.0 - t1) / 3.0;
    let r2 = (t4 * 4.0 - t2) / 3.0;
    (r2 * 16.0 - r1) / 15.0
}

#[test]
fn quadrature_of_oscillating_kernel_matches_richardson_oracle() {
    let s = PathSchedule::single_transfer(5.0, 1.0).unwrap();
    let k12 = |t: f64| m_kernels_commutative(&s, t).unwrap().k12;
    let simpson = quadrature(k12, 0.0, 1.0, 1000).unwrap();
    let oracle = richardson_trapezoid(k12, 0.0, 1.0, 4000);
    assert!((simpson - oracle).norm() < 1e-8, "{simpson} vs {oracle}");
    let refined = quadrature(k12, 0.0, 1.0, 2000).unwrap();
    assert!((simpson - refined).norm() < 1e-8);
}
