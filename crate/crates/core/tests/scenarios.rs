use qctl_core::scenarios::{epsilon_grid, transfer_fidelity};
use qctl_core::*;

const LAMBDAS: [f64; 4] = [0.0, 3.0, 5.0, 10.0];

fn model(kind: ErrorKind, eps: f64) -> ErrorModel {
    ErrorModel::new(kind, eps).unwrap()
}

fn fidelity(lambda: f64, kind: ErrorKind, eps: f64) -> f64 {
    transfer_fidelity(&TransferSpec::new(lambda, model(kind, eps), 4000).unwrap()).unwrap()
}

#[test]
fn level_populations() {
    assert_eq!(StateVector::level(Level::Excited).populations(), vec![0.0, 0.0, 1.0]);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let psi = StateVector::from_slice(&[C64::new(h, 0.0), C64::new(0.0, h), C64::new(0.0, 0.0)]);
    let p = psi.populations();
    assert!((p[0] - 0.5).abs() < 1e-15 && (p[1] - 0.5).abs() < 1e-15 && p[2] == 0.0);
}

#[test]
fn error_free_single_transfers_are_perfect() {
    for lambda in LAMBDAS {
        let r = single_transfer(&TransferSpec::new(lambda, ErrorModel::none(), 4000).unwrap()).unwrap();
        assert!((r.checkpoint("Pe(0.5T)").unwrap() - 1.0).abs() < 1e-6, "λ = {lambda}");
        assert!((r.checkpoint("P1(1T)").unwrap() - 1.0).abs() < 1e-6, "λ = {lambda}");
    }
}

#[test]
fn error_free_cycles_are_perfect() {
    for lambda in LAMBDAS {
        let r = cyclic_transfer(&CyclicSpec::new(lambda, ErrorModel::none(), 4000, 2).unwrap()).unwrap();
        assert_eq!(r.checkpoints.len(), 6);
        for c in &r.checkpoints {
            assert!((c.value - 1.0).abs() < 1e-6, "λ = {lambda}, {}: {}", c.label, c.value);
        }
        let p = r.population_at(Level::Ground, 1.5);
        assert!((p - 1.0).abs() < 1e-6);
    }
}

#[test]
fn populations_are_conserved() {
    let r = cyclic_transfer(&CyclicSpec::new(3.0, model(ErrorKind::Noncommutative, 0.3), 2000, 1).unwrap()).unwrap();
    let p = populations(&r);
    assert_eq!(p.p0.len(), r.times.len());
    for i in 0..p.p0.len() {
        assert!((p.p0[i] + p.p1[i] + p.pe[i] - 1.0).abs() < 1e-9);
    }
}

#[test]
fn unprotected_transfer_values() {
    let f = fidelity(0.0, ErrorKind::Commutative, -0.2);
    assert!((f - 0.673).abs() <= 0.01, "{f}");
    for eps in [-0.2, 0.2] {
        let f = fidelity(0.0, ErrorKind::Noncommutative, eps);
        assert!((f - 0.883).abs() <= 0.01, "ε = {eps}: {f}");
    }
}

#[test]
fn robustness_grows_with_gain() {
    let fs: Vec<f64> = LAMBDAS
        .iter()
        .map(|&l| fidelity(l, ErrorKind::Commutative, -0.2))
        .collect();
    for w in fs.windows(2) {
        assert!(w[1] >= w[0], "{fs:?}");
    }
}

#[test]
fn doubling_the_grid_moves_checkpoints_little() {
    for kind in [ErrorKind::Commutative, ErrorKind::Noncommutative] {
        let run = |n| cyclic_transfer(&CyclicSpec::new(5.0, model(kind, -0.2), n, 2).unwrap()).unwrap();
        let (a, b) = (run(2400), run(4800));
        for (x, y) in a.checkpoints.iter().zip(&b.checkpoints) {
            assert_eq!(x.label, y.label);
            assert!(
                (x.value - y.value).abs() < 5e-4,
                "{kind} {}: {} vs {}",
                x.label,
                x.value,
                y.value
            );
        }
    }
}

#[test]
fn sweep_rows_are_sorted_and_complete() {
    let eps = epsilon_grid(-0.2, 0.2, 0.1).unwrap();
    assert_eq!(eps.len(), 5);
    let table = epsilon_sweep(&[5.0, 0.0], &eps, ErrorKind::Commutative, Some(1000)).unwrap();
    assert!(table.failures.is_empty());
    assert_eq!(table.rows.len(), 10);
    assert!(table
        .rows
        .windows(2)
        .all(|w| (w[0].lambda, w[0].epsilon) < (w[1].lambda, w[1].epsilon)));
    assert_eq!(table.fidelity(0.0, 0.0), Some(table.rows[2].fidelity));
    assert!(table.min_fidelity(5.0).unwrap() > table.min_fidelity(0.0).unwrap());
}

#[test]
fn specs_are_validated() {
    assert!(matches!(
        TransferSpec::new(1.0, ErrorModel::none(), 999),
        Err(Error::InvalidSpec(_))
    ));
    assert!(matches!(
        TransferSpec::new(-1.0, ErrorModel::none(), 1000),
        Err(Error::InvalidSpec(_))
    ));
    assert!(CyclicSpec::new(1.0, ErrorModel::none(), 1001, 1).is_err());
    assert!(CyclicSpec::new(1.0, ErrorModel::none(), 1000, 0).is_err());
}

#[test]
fn audit_reports_all_diagnostics() {
    let r = audit(&TransferSpec::new(5.0, model(ErrorKind::Commutative, 0.02), 4000).unwrap()).unwrap();
    assert_eq!(r.margins.keys().collect::<Vec<_>>(), ["12", "13", "23"]);
    assert!((r.fidelity_magnus - r.fidelity_numerical).abs() < 1e-4);
    assert!(r.m12 > 0.0 && r.m13 > 0.0 && r.m23 > 0.0);
    assert!(audit(&TransferSpec::new(5.0, ErrorModel::none(), 1000).unwrap()).is_err());
}
