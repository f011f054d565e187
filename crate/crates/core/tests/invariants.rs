use nalgebra::DMatrix;
use proptest::prelude::*;
use qctl_core::frame::global_phase_rates;
use qctl_core::operator::max_abs_diff;
use qctl_core::*;

fn gain() -> impl Strategy<Value = f64> {
    prop_oneof![Just(0.0), Just(3.0), Just(5.0), Just(10.0), 0.0..12.0]
}

fn kind() -> impl Strategy<Value = ErrorKind> {
    prop_oneof![Just(ErrorKind::Commutative), Just(ErrorKind::Noncommutative)]
}

fn hermitian() -> impl Strategy<Value = DMatrix<C64>> {
    prop::collection::vec(-5.0..5.0f64, 18).prop_map(|v| {
        let a = DMatrix::from_fn(3, 3, |i, j| C64::new(v[3 * i + j], v[9 + 3 * i + j]));
        (&a + a.adjoint()) * C64::new(0.5, 0.0)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn propagation_preserves_norm(h in hermitian(), n in 1usize..200, amp in prop::array::uniform3(-1.0..1.0f64)) {
        let norm = amp.iter().map(|a| a * a).sum::<f64>().sqrt();
        prop_assume!(norm > 1e-3);
        let psi0 = StateVector::from_slice(&amp.map(|a| C64::new(a / norm, 0.0)));
        let op = Operator::new(h, OperatorKind::Hermitian).unwrap();
        let traj = propagate(|_| Ok(op.clone()), &psi0, &TimeGrid::new(0.0, 1.0, n).unwrap()).unwrap();
        for psi in traj {
            prop_assert!((psi.norm_sqr() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn exponential_of_hermitian_generator_is_unitary(h in hermitian(), dt in 0.0..2.0f64) {
        let u = matrix_exponential(&(h * C64::new(0.0, -dt))).unwrap();
        prop_assert!(u.unitarity_defect() < 1e-10);
    }

    #[test]
    fn ancillary_basis_is_orthonormal(lambda in gain(), t in 0.0..3.0f64) {
        let s = PathSchedule::cyclic(lambda, 2, 1.0).unwrap();
        let m = ancillary_states(&s, t).unwrap().matrix();
        prop_assert!(max_abs_diff(&(m.adjoint() * &m), &DMatrix::identity(3, 3)) < 1e-12);
    }

    #[test]
    fn alpha_rate_never_exceeds_phase_rate(lambda in gain(), t in 0.0..1.5f64) {
        let s = PathSchedule::cyclic(lambda, 1, 1.0).unwrap();
        let p = phase_functions(&s, t).unwrap();
        let r = global_phase_rates(&s, t).unwrap();
        prop_assert!((p.dalpha / 2.0).abs() <= r.f2.abs() + 1e-12);
        prop_assert!((r.f1 + r.f2 + r.f3).abs() < 1e-12 * (1.0 + r.f2.abs()));
    }

    #[test]
    fn detunings_balance_and_h0_is_hermitian(lambda in gain(), t in 0.0..1.5f64) {
        let s = PathSchedule::cyclic(lambda, 1, 1.0).unwrap();
        let f = synthesize_fields_lambda(&s, t).unwrap();
        prop_assert!((f.delta_1 + f.delta_0 + f.delta_e).abs() < 1e-10 * (1.0 + f.delta_e.abs()));
        prop_assert!(assemble_h0(&f).unwrap().hermiticity_defect() < 1e-15);
    }

    #[test]
    fn general_fields_match_lambda_fields(lambda in gain(), t in 0.0..1.5f64) {
        let s = PathSchedule::cyclic(lambda, 1, 1.0).unwrap();
        let a = synthesize_fields_lambda(&s, t).unwrap();
        let b = synthesize_fields_general(&s, t).unwrap();
        for n in 0..3 {
            prop_assert!((a.drive(n) - b.drive(n)).norm() < 1e-9);
        }
        prop_assert!((a.delta_e - b.delta_e).abs() < 1e-9);
        prop_assert!((a.delta_1 - b.delta_1).abs() < 1e-9);
    }

    #[test]
    fn dtilde_is_hermitian(lambda in gain(), t in 0.0..1.5f64, k in kind(), eps in -0.5..0.5f64) {
        let s = PathSchedule::cyclic(lambda, 1, 1.0).unwrap();
        let d = dtilde_err(&s, &ErrorModel::new(k, eps).unwrap(), t).unwrap();
        prop_assert!(d.hermiticity_defect() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn rotation_is_hermitian(lambda in gain(), t in 0.0..1.5f64, k in kind()) {
        let s = PathSchedule::cyclic(lambda, 1, 1.0).unwrap();
        let m = error_rotation(&s, &ErrorModel::new(k, 0.1).unwrap(), t).unwrap().m;
        prop_assert!(max_abs_diff(&m, &m.adjoint()) < 1e-8);
    }

    #[test]
    fn magnus_fidelity_stays_in_unit_interval(lambda in gain(), k in kind(), eps in -0.5..0.5f64) {
        let s = PathSchedule::single_transfer(lambda, 1.0).unwrap();
        let f = magnus_fidelity(&s, &ErrorModel::new(k, eps).unwrap(), Path::Mu2, 1.0).unwrap();
        prop_assert!(f.value >= 0.0 && f.value <= 1.0 + 1e-12);
    }
}
