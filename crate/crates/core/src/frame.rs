//! Ancillary basis `|μ_k(t)>`, its phase functions, global phases and the exact error-free propagator.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::operator::{Operator, OperatorKind, StateVector};
use crate::schedule::{Kinematics, Path, PathSchedule};

/// Agreement required between the closed-form and quotient determinations of `α̇`.
const DALPHA_TOL: f64 = 1e-9;

/// Finite-difference step for the von Neumann residual.
pub const FD_STEP: f64 = 1e-6;

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct PhaseFunctions {
    pub alpha0: f64,
    pub alpha: f64,
    pub dalpha0: f64,
    pub dalpha: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AncillaryBasis {
    pub mu1: StateVector,
    pub mu2: StateVector,
    pub mu3: StateVector,
    pub alpha0: f64,
    pub alpha: f64,
    pub at_time: f64,
}

impl AncillaryBasis {
    pub fn mu(&self, path: Path) -> &StateVector {
        match path {
            Path::Mu1 => &self.mu1,
            Path::Mu2 => &self.mu2,
            Path::Mu3 => &self.mu3,
        }
    }

    /// Columns `(μ_1, μ_2, μ_3)` as a unitary matrix.
    pub fn matrix(&self) -> DMatrix<C64> {
        DMatrix::from_columns(&[
            self.mu1.amplitudes().clone(),
            self.mu2.amplitudes().clone(),
            self.mu3.amplitudes().clone(),
        ])
    }

    pub fn projector(&self, path: Path) -> DMatrix<C64> {
        let v = self.mu(path).amplitudes();
        v * v.adjoint()
    }
}

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct GlobalPhases {
    pub f1: f64,
    pub f2: f64,
    pub f3: f64,
}

impl GlobalPhases {
    pub fn get(&self, path: Path) -> f64 {
        match path {
            Path::Mu1 => self.f1,
            Path::Mu2 => self.f2,
            Path::Mu3 => self.f3,
        }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.f1, self.f2, self.f3]
    }
}

/// `α₀`, `α` and their rates from the stage kinematics.
pub(crate) fn phase_functions_from(k: &Kinematics) -> Result<PhaseFunctions> {
    let (s, c) = (2.0 * k.phi).sin_cos();
    let den = k.df * k.df * s * s + k.dphi * k.dphi;
    if den <= 0.0 || den.is_nan() {
        return Err(Error::SingularSchedule {
            t: k.t,
            reason: "ḟ² sin²2φ + φ̇² vanishes".into(),
        });
    }
    let dalpha = -(k.ddphi * k.df * s - k.ddf * k.dphi * s - 2.0 * k.df * k.dphi * k.dphi * c) / den;
    let closed = if k.dphi != 0.0 {
        2.0 * k.lambda * k.dphi * c / (1.0 + k.lambda * k.lambda * s * s)
    } else {
        dalpha
    };
    if (closed - dalpha).abs() > DALPHA_TOL * (1.0 + dalpha.abs()) {
        return Err(Error::Contract(format!(
            "α̇ determinations disagree at t = {}: {closed} vs {dalpha}",
            k.t
        )));
    }
    let alpha = k.dphi.atan2(-k.df * s);

    let (s0, c0) = (2.0 * k.theta).sin_cos();
    let den0 = k.df1 * k.df1 * s0 * s0 + k.dtheta * k.dtheta;
    let (alpha0, dalpha0) = if den0 > 0.0 {
        let d = -(k.ddtheta * k.df1 * s0 - k.ddf1 * k.dtheta * s0 - 2.0 * k.df1 * k.dtheta * k.dtheta * c0) / den0;
        let sign = if k.dtheta >= 0.0 { 1.0 } else { -1.0 };
        ((sign * k.dtheta).atan2(-sign * k.df1 * s0), d)
    } else {
        (PI / 2.0, 0.0)
    };
    Ok(PhaseFunctions {
        alpha0,
        alpha,
        dalpha0,
        dalpha,
    })
}

pub fn phase_functions(schedule: &PathSchedule, t: f64) -> Result<PhaseFunctions> {
    phase_functions_from(&schedule.kinematics(t)?)
}

pub(crate) fn basis_from(k: &Kinematics, p: &PhaseFunctions) -> AncillaryBasis {
    let (st, ct) = k.theta.sin_cos();
    let (sp, cp) = k.phi.sin_cos();
    let e0p = C64::from_polar(1.0, p.alpha0 / 2.0);
    let e0m = e0p.conj();
    let ep = C64::from_polar(1.0, p.alpha / 2.0);
    let em = ep.conj();
    let zero = C64::new(0.0, 0.0);
    let b = [e0p * st, e0m * ct, zero];
    let mu1 = StateVector::from_slice(&[e0p * ct, -e0m * st, zero]);
    let mu2 = StateVector::from_slice(&[ep * cp * b[0], ep * cp * b[1], -em * sp]);
    let mu3 = StateVector::from_slice(&[ep * sp * b[0], ep * sp * b[1], em * cp]);
    AncillaryBasis {
        mu1,
        mu2,
        mu3,
        alpha0: p.alpha0,
        alpha: p.alpha,
        at_time: k.t,
    }
}

pub fn ancillary_states(schedule: &PathSchedule, t: f64) -> Result<AncillaryBasis> {
    let k = schedule.kinematics(t)?;
    Ok(basis_from(&k, &phase_functions_from(&k)?))
}

/// Basis evaluated with the profiles of stage `index`, valid on its closed interval.
pub fn ancillary_states_in_stage(schedule: &PathSchedule, index: usize, t: f64) -> Result<AncillaryBasis> {
    let k = schedule.kinematics_in_stage(index, t);
    Ok(basis_from(&k, &phase_functions_from(&k)?))
}

pub(crate) fn phases_from(k: &Kinematics) -> GlobalPhases {
    GlobalPhases {
        f1: k.f1,
        f2: k.f,
        f3: -k.f,
    }
}

pub(crate) fn phase_rates_from(k: &Kinematics) -> GlobalPhases {
    GlobalPhases {
        f1: k.df1,
        f2: k.df,
        f3: -k.df,
    }
}

pub fn global_phases(schedule: &PathSchedule, t: f64) -> Result<GlobalPhases> {
    Ok(phases_from(&schedule.kinematics(t)?))
}

/// `ḟ_1`, `ḟ_2`, `ḟ_3` at `t`.
pub fn global_phase_rates(schedule: &PathSchedule, t: f64) -> Result<GlobalPhases> {
    Ok(phase_rates_from(&schedule.kinematics(t)?))
}

/// `Σ_k e^{i(f_k(t) - f_k(t_b))} |μ_k(t)><μ_k(t_b)|` within one stage.
fn stage_propagator(schedule: &PathSchedule, index: usize, t: f64) -> Result<DMatrix<C64>> {
    let t_b = schedule.stages()[index].t_begin;
    let kb = schedule.kinematics_in_stage(index, t_b);
    let kt = schedule.kinematics_in_stage(index, t);
    let bb = basis_from(&kb, &phase_functions_from(&kb)?);
    let bt = basis_from(&kt, &phase_functions_from(&kt)?);
    let (fb, ft) = (phases_from(&kb), phases_from(&kt));
    let mut u = DMatrix::zeros(3, 3);
    for p in Path::ALL {
        let phase = C64::from_polar(1.0, ft.get(p) - fb.get(p));
        u += bt.mu(p).amplitudes() * bb.mu(p).amplitudes().adjoint() * phase;
    }
    Ok(u)
}

/// Exact error-free propagator from the start of stage 0 up to `t` evaluated in stage `index`.
pub fn exact_propagator_in_stage(schedule: &PathSchedule, index: usize, t: f64) -> Result<DMatrix<C64>> {
    let mut u = DMatrix::identity(3, 3);
    for (i, s) in schedule.stages().iter().enumerate().take(index) {
        u = stage_propagator(schedule, i, s.t_end)? * u;
    }
    Ok(stage_propagator(schedule, index, t)? * u)
}

/// Exact propagator of the synthesized error-free Hamiltonian, composed across stages.
pub fn exact_propagator(schedule: &PathSchedule, t: f64) -> Result<Operator> {
    let index = schedule.stage_index(t)?;
    Operator::new(exact_propagator_in_stage(schedule, index, t)?, OperatorKind::Unitary)
}

/// `max_k |dΠ_k/dt + i[H, Π_k]|` with `Π_k = |μ_k><μ_k|` and a central difference of step [`FD_STEP`].
pub fn von_neumann_residual<H>(schedule: &PathSchedule, hamiltonian: H, t: f64) -> Result<f64>
where
    H: Fn(f64) -> Result<Operator>,
{
    let index = schedule.stage_index(t)?;
    let stage = &schedule.stages()[index];
    if t - FD_STEP <= stage.t_begin || t + FD_STEP >= stage.t_end {
        return Err(Error::Domain {
            t,
            reason: "too close to a stage boundary for a central difference".into(),
        });
    }
    let plus = ancillary_states_in_stage(schedule, index, t + FD_STEP)?;
    let minus = ancillary_states_in_stage(schedule, index, t - FD_STEP)?;
    let here = ancillary_states_in_stage(schedule, index, t)?;
    let h = hamiltonian(t)?;
    let h = h.entries();
    let i = C64::new(0.0, 1.0);
    let mut worst: f64 = 0.0;
    for p in Path::ALL {
        let dp = (plus.projector(p) - minus.projector(p)) / C64::new(2.0 * FD_STEP, 0.0);
        let pr = here.projector(p);
        let r = dp + (h * &pr - &pr * h) * i;
        worst = worst.max(r.iter().map(|z| z.norm()).fold(0.0, f64::max));
    }
    Ok(worst)
}
