//! Error-rotation diagnostics in the doubly rotated picture: `D̃(t)`, `M(t)`, Magnus estimates and margins.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fields::{error_hamiltonian, fields_lambda_from, ErrorKind, ErrorModel};
use crate::frame::{
    basis_from, exact_propagator_in_stage, phase_functions_from, phase_rates_from, phases_from, FD_STEP,
};
use crate::operator::{Operator, OperatorKind};
use crate::propagate::TimeGrid;
use crate::quadrature::{quadrature, quadrature_matrix};
use crate::schedule::{Path, PathSchedule};

/// Largest `|ε|` accepted by the second-order estimates.
pub const MAX_EPSILON: f64 = 0.5;

/// Simpson panels for an interval of length `len` at gain `lambda`.
pub fn panels_for(lambda: f64, len: f64) -> usize {
    let per_t = (200.0 * lambda.abs()).max(400.0);
    ((per_t * len).ceil() as usize).max(2)
}

/// Columns `e^{i f_k(0)} |μ_k(0)>` carried to time `t` by the exact propagator.
fn moving_frame(schedule: &PathSchedule, index: usize, t: f64) -> Result<DMatrix<C64>> {
    let k0 = schedule.kinematics_in_stage(0, schedule.t_start());
    let b0 = basis_from(&k0, &phase_functions_from(&k0)?).matrix();
    let f0 = phases_from(&k0).as_array();
    let phases = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        3,
        f0.iter().map(|&f| C64::from_polar(1.0, f)),
    ));
    Ok(exact_propagator_in_stage(schedule, index, t)? * b0 * phases)
}

fn dtilde_in_stage(schedule: &PathSchedule, model: &ErrorModel, index: usize, t: f64) -> Result<DMatrix<C64>> {
    if model.kind == ErrorKind::None {
        return Ok(DMatrix::zeros(3, 3));
    }
    let k = schedule.kinematics_in_stage(index, t);
    let h1 = error_hamiltonian(&fields_lambda_from(&k)?, model)?;
    let w = moving_frame(schedule, index, t)?;
    Ok(w.adjoint() * h1.entries() * w)
}

/// `D̃_kn(t) = <μ_k|H_1|μ_n> e^{-i(f_k - f_n)}`, hermitian.
pub fn dtilde_err(schedule: &PathSchedule, model: &ErrorModel, t: f64) -> Result<Operator> {
    let index = schedule.stage_index(t)?;
    let d = dtilde_in_stage(schedule, model, index, t)?;
    Operator::new((&d + d.adjoint()) * C64::new(0.5, 0.0), OperatorKind::Hermitian)
}

/// `M(t) = ∫ D̃` from the start of the schedule.
#[derive(Clone, Debug, PartialEq)]
pub struct ErrorRotation {
    pub m: DMatrix<C64>,
    pub at_time: f64,
    pub model: ErrorModel,
}

impl ErrorRotation {
    pub fn element(&self, k: Path, n: Path) -> C64 {
        self.m[(k.index(), n.index())]
    }

    pub fn magnitude(&self, k: Path, n: Path) -> f64 {
        self.element(k, n).norm()
    }
}

/// Sub-intervals `(stage index, a, b)` of `[t_start, t]`.
fn pieces(schedule: &PathSchedule, t: f64) -> Result<Vec<(usize, f64, f64)>> {
    schedule.stage_index(t)?;
    let mut out = Vec::new();
    for (i, s) in schedule.stages().iter().enumerate() {
        let b = s.t_end.min(t);
        if b <= s.t_begin {
            break;
        }
        out.push((i, s.t_begin, b));
    }
    Ok(out)
}

pub fn error_rotation(schedule: &PathSchedule, model: &ErrorModel, t: f64) -> Result<ErrorRotation> {
    let mut m = DMatrix::zeros(3, 3);
    for (i, a, b) in pieces(schedule, t)? {
        let panels = panels_for(schedule.stages()[i].lambda, b - a);
        m += quadrature_matrix(|x| dtilde_in_stage(schedule, model, i, x), a, b, panels)?;
    }
    Ok(ErrorRotation {
        m,
        at_time: t,
        model: *model,
    })
}

/// Integrands of `M_12`, `M_13`, `M_23` for the commutative model in closed form.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct Kernels {
    pub k12: C64,
    pub k13: C64,
    pub k23: C64,
}

pub fn m_kernels_commutative(schedule: &PathSchedule, t: f64) -> Result<Kernels> {
    let k = schedule.kinematics(t)?;
    let p = phase_functions_from(&k)?;
    let c2p = (2.0 * k.phi).cos();
    let s4t = (4.0 * k.theta).sin();
    let s2t = (2.0 * k.theta).sin();
    let lead = 0.25 * (p.dalpha + 2.0 * k.df * c2p) * s4t;
    let rot = C64::from_polar(1.0, p.alpha / 2.0 + k.f);
    let k23 = C64::new(k.df + 0.25 * (p.dalpha - 2.0 * k.df * c2p) * s2t * s2t, k.dphi)
        * (2.0 * k.phi).sin()
        * C64::from_polar(1.0, -2.0 * k.f);
    Ok(Kernels {
        k12: rot * (lead * k.phi.cos()),
        k13: rot * (lead * k.phi.sin()),
        k23,
    })
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize)]
pub struct FidelityEstimate {
    pub value: f64,
    pub order: u32,
    pub path_index: usize,
}

fn check_epsilon(model: &ErrorModel) -> Result<()> {
    if model.epsilon.abs() > MAX_EPSILON {
        return Err(Error::InvalidSpec(format!(
            "|epsilon| = {} exceeds {MAX_EPSILON} for the second-order expansion",
            model.epsilon.abs()
        )));
    }
    Ok(())
}

/// `1 - ε² Σ_{n≠k} |M_kn(t)|²`, clamped to `[0, 1]`.
pub fn magnus_fidelity(schedule: &PathSchedule, model: &ErrorModel, k: Path, t: f64) -> Result<FidelityEstimate> {
    check_epsilon(model)?;
    let rot = error_rotation(schedule, model, t)?;
    let leak: f64 = Path::ALL
        .iter()
        .filter(|&&n| n != k)
        .map(|&n| rot.magnitude(k, n).powi(2))
        .sum();
    Ok(FidelityEstimate {
        value: (1.0 - model.epsilon * model.epsilon * leak).clamp(0.0, 1.0),
        order: 2,
        path_index: k.number(),
    })
}

/// `M(t)` together with `C(t) = ∫ [D̃(t_1), M(t_1)] dt_1`.
///
/// Integrated per Simpson panel with a classical Runge-Kutta step on the panel's three nodes.
pub fn rotation_with_commutator(
    schedule: &PathSchedule,
    model: &ErrorModel,
    t: f64,
) -> Result<(DMatrix<C64>, DMatrix<C64>)> {
    let mut m = DMatrix::zeros(3, 3);
    let mut c = DMatrix::zeros(3, 3);
    for (i, a, b) in pieces(schedule, t)? {
        let panels = panels_for(schedule.stages()[i].lambda, b - a);
        let step = (b - a) / panels as f64;
        let mut d_left = dtilde_in_stage(schedule, model, i, a)?;
        for j in 0..panels {
            let t0 = a + step * j as f64;
            let d_mid = dtilde_in_stage(schedule, model, i, t0 + 0.5 * step)?;
            let d_right = dtilde_in_stage(schedule, model, i, if j + 1 == panels { b } else { t0 + step })?;
            let comm = |d: &DMatrix<C64>, mm: &DMatrix<C64>| d * mm - mm * d;
            let h = C64::new(step, 0.0);
            let half = C64::new(0.5 * step, 0.0);
            let k1 = comm(&d_left, &m);
            let m2 = &m + &d_left * half;
            let k2 = comm(&d_mid, &m2);
            let m3 = &m + &d_mid * half;
            let k3 = comm(&d_mid, &m3);
            let m4 = &m + &d_mid * h;
            let k4 = comm(&d_right, &m4);
            c += (k1 + (k2 + k3) * C64::new(2.0, 0.0) + k4) * C64::new(step / 6.0, 0.0);
            m += (&d_left + &d_mid * C64::new(4.0, 0.0) + &d_right) * C64::new(step / 6.0, 0.0);
            d_left = d_right;
        }
    }
    Ok((m, c))
}

/// `U_I ≈ 1 - iεM - ε²/2 (M² + C)` in the `|μ_k(0)>` basis.
pub fn magnus_propagator(schedule: &PathSchedule, model: &ErrorModel, t: f64) -> Result<Operator> {
    check_epsilon(model)?;
    let eps = model.epsilon;
    let (m, c) = rotation_with_commutator(schedule, model, t)?;
    let u = DMatrix::identity(3, 3) - &m * C64::new(0.0, eps) - (&m * &m + c) * C64::new(0.5 * eps * eps, 0.0);
    Operator::general(u)
}

/// `min_t |ḟ_k - ḟ_n| / max(|d/dt <μ_k|H_1|μ_n>|, 1e-12)` over the midpoints of `grid`.
pub fn correction_margin(
    schedule: &PathSchedule,
    model: &ErrorModel,
    k: Path,
    n: Path,
    grid: &TimeGrid,
) -> Result<f64> {
    if k == n {
        return Err(Error::InvalidSpec("correction margin needs two distinct paths".into()));
    }
    let element = |index: usize, t: f64| -> Result<C64> {
        let kin = schedule.kinematics_in_stage(index, t);
        let basis = basis_from(&kin, &phase_functions_from(&kin)?);
        let h1 = error_hamiltonian(&fields_lambda_from(&kin)?, model)?;
        Ok(h1.matrix_element(basis.mu(k), basis.mu(n)))
    };
    let mut best = f64::INFINITY;
    for j in 0..grid.n_steps {
        let t = grid.midpoint(j);
        let index = schedule.stage_index(t)?;
        let stage = &schedule.stages()[index];
        if t - FD_STEP < stage.t_begin || t + FD_STEP > stage.t_end {
            continue;
        }
        let rate = ((element(index, t + FD_STEP)? - element(index, t - FD_STEP)?) / (2.0 * FD_STEP)).norm();
        let rates = phase_rates_from(&schedule.kinematics_in_stage(index, t));
        let gap = (rates.get(k) - rates.get(n)).abs();
        best = best.min(gap / rate.max(1e-12));
    }
    if !best.is_finite() {
        return Err(Error::InvalidSpec("grid has no midpoint inside a stage".into()));
    }
    Ok(best)
}

/// Integration-by-parts bound on `|M_12(T)|` for the commutative model, truncated after `k_max` terms.
///
/// Evaluated on the first stage; needs `ḟ ≠ 0` throughout.
pub fn m12_ibp_bound(schedule: &PathSchedule, k_max: u32) -> Result<f64> {
    let stage = &schedule.stages()[0];
    if stage.lambda == 0.0 {
        return Err(Error::SingularSchedule {
            t: stage.t_begin,
            reason: "bound requires a varying global phase".into(),
        });
    }
    // Pieces of the integrand at time t: (f, α̇/(2ḟ), F_θφ/ḟ, F_1).
    let parts = |t: f64| -> Result<(f64, f64, C64, C64)> {
        let k = schedule.kinematics_in_stage(0, t);
        let p = phase_functions_from(&k)?;
        let (s4t, c4t) = (4.0 * k.theta).sin_cos();
        let (s2p, c2p) = (2.0 * k.phi).sin_cos();
        let (sp, cp) = k.phi.sin_cos();
        let ea = C64::from_polar(1.0, p.alpha / 2.0);
        let f1 = ea * (s4t * c2p * cp);
        let fthph = ea * (4.0 * k.dtheta * c4t * c2p * cp - k.dphi * s4t * c2p * sp - 2.0 * k.dphi * s4t * s2p * cp);
        Ok((k.f, p.dalpha / (2.0 * k.df), fthph / k.df, f1))
    };
    let g = |t: f64, power: i32| -> Result<C64> {
        let (_, r, fr, _) = parts(t)?;
        Ok(fr * r.powi(power))
    };
    let panels = panels_for(stage.lambda, stage.duration());
    let mut total = 0.0;
    for power in 0..=k_max as i32 {
        let v = quadrature(
            |t| {
                let dg = (g(t + FD_STEP, power).unwrap_or(C64::new(f64::NAN, 0.0))
                    - g(t - FD_STEP, power).unwrap_or(C64::new(f64::NAN, 0.0)))
                    / (2.0 * FD_STEP);
                let f = parts(t).map(|x| x.0).unwrap_or(f64::NAN);
                C64::from_polar(1.0, f) * dg
            },
            stage.t_begin,
            stage.t_end,
            panels,
        )?;
        total += v.norm();
    }
    let tail = quadrature(
        |t| match parts(t) {
            Ok((f, r, _, f1)) => C64::from_polar(1.0, f) * f1 * r.powi(k_max as i32 + 1),
            Err(_) => C64::new(f64::NAN, 0.0),
        },
        stage.t_begin,
        stage.t_end,
        panels,
    )?;
    Ok(total + tail.norm())
}
