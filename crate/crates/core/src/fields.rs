//! Lab-frame control fields from a path schedule, and the ideal and error Hamiltonians.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::phase_functions_from;
use crate::operator::{Operator, OperatorKind};
use crate::schedule::{Kinematics, PathSchedule};

pub const CSV_HEADER: &str = "t,delta_e,delta_1,delta_0,omega_0,omega_1,omega_2,varphi_0,varphi_1,varphi_2";

/// Detunings, Rabi amplitudes (nonnegative) and drive phases (in `(-π, π]`) at one instant.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldSet {
    pub delta_e: f64,
    pub delta_1: f64,
    pub delta_0: f64,
    pub omega_0: f64,
    pub omega_1: f64,
    pub omega_2: f64,
    pub varphi_0: f64,
    pub varphi_1: f64,
    pub varphi_2: f64,
    pub at_time: f64,
}

fn polar(z: C64) -> (f64, f64) {
    let r = z.norm();
    if r == 0.0 {
        return (0.0, 0.0);
    }
    let mut p = z.arg();
    if p <= -PI {
        p += 2.0 * PI;
    }
    (r, p)
}

impl FieldSet {
    /// Normal form from signed detunings and complex drives `Ω_n e^{iφ_n}`.
    pub fn from_complex(at_time: f64, delta_e: f64, delta_1: f64, delta_0: f64, drives: [C64; 3]) -> Self {
        let (omega_0, varphi_0) = polar(drives[0]);
        let (omega_1, varphi_1) = polar(drives[1]);
        let (omega_2, varphi_2) = polar(drives[2]);
        Self {
            delta_e,
            delta_1,
            delta_0,
            omega_0,
            omega_1,
            omega_2,
            varphi_0,
            varphi_1,
            varphi_2,
            at_time,
        }
    }

    /// `Ω_n e^{iφ_n}` for `n` in 0..3.
    pub fn drive(&self, n: usize) -> C64 {
        match n {
            0 => C64::from_polar(self.omega_0, self.varphi_0),
            1 => C64::from_polar(self.omega_1, self.varphi_1),
            2 => C64::from_polar(self.omega_2, self.varphi_2),
            _ => panic!("drive index {n} out of range"),
        }
    }

    pub fn with_detunings_zeroed(&self) -> Self {
        Self {
            delta_e: 0.0,
            delta_1: 0.0,
            delta_0: 0.0,
            ..*self
        }
    }

    pub fn values(&self) -> [f64; 10] {
        [
            self.at_time,
            self.delta_e,
            self.delta_1,
            self.delta_0,
            self.omega_0,
            self.omega_1,
            self.omega_2,
            self.varphi_0,
            self.varphi_1,
            self.varphi_2,
        ]
    }

    /// One CSV line in [`CSV_HEADER`] order.
    pub fn csv_row(&self) -> String {
        self.values()
            .iter()
            .map(|v| format!("{v:.11e}"))
            .collect::<Vec<_>>()
            .join(",")
    }

    fn is_finite(&self) -> bool {
        self.values().iter().all(|v| v.is_finite())
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorKind {
    None,
    Commutative,
    Noncommutative,
}

impl ErrorKind {
    pub fn name(self) -> &'static str {
        match self {
            ErrorKind::None => "none",
            ErrorKind::Commutative => "commutative",
            ErrorKind::Noncommutative => "noncommutative",
        }
    }
}

impl fmt::Display for ErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ErrorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(ErrorKind::None),
            "commutative" => Ok(ErrorKind::Commutative),
            "noncommutative" => Ok(ErrorKind::Noncommutative),
            _ => Err(Error::InvalidSpec(format!("unknown error model '{s}'"))),
        }
    }
}

/// Systematic error `ε H_1` with a constant magnitude.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorModel {
    pub kind: ErrorKind,
    pub epsilon: f64,
}

impl ErrorModel {
    pub fn new(kind: ErrorKind, epsilon: f64) -> Result<Self> {
        if !epsilon.is_finite() {
            return Err(Error::InvalidSpec(format!("epsilon must be finite, got {epsilon}")));
        }
        Ok(Self { kind, epsilon })
    }

    pub fn none() -> Self {
        Self {
            kind: ErrorKind::None,
            epsilon: 0.0,
        }
    }
}

pub(crate) fn fields_lambda_from(k: &Kinematics) -> Result<FieldSet> {
    let p = phase_functions_from(k)?;
    let (s2p, c2p) = (2.0 * k.phi).sin_cos();
    let (st, ct) = k.theta.sin_cos();
    let dalpha = if k.dphi != 0.0 {
        2.0 * k.lambda * k.dphi * c2p / (1.0 + k.lambda * k.lambda * s2p * s2p)
    } else {
        p.dalpha
    };
    let delta = dalpha + 2.0 * k.lambda * k.dphi * c2p;
    let omega = -k.dphi.abs() * (1.0 + k.lambda * k.lambda * s2p * s2p).sqrt();
    let half0 = C64::from_polar(1.0, p.alpha0 / 2.0);
    let drives = [
        half0.conj() * (omega * st),
        half0 * (omega * ct),
        C64::new(-k.dtheta, 0.0) - C64::from_polar(0.25 * delta * (2.0 * k.theta).sin(), -p.alpha0),
    ];
    Ok(FieldSet::from_complex(
        k.t,
        delta,
        -delta * ct * ct,
        -delta * st * st,
        drives,
    ))
}

pub(crate) fn fields_general_from(k: &Kinematics) -> Result<FieldSet> {
    let p = phase_functions_from(k)?;
    let (s2t, c2t) = (2.0 * k.theta).sin_cos();
    let (s2p, c2p) = (2.0 * k.phi).sin_cos();
    let (st, ct) = k.theta.sin_cos();

    let den0 = k.df1 * k.df1 * s2t * s2t + k.dtheta * k.dtheta;
    let dalpha0 = if den0 > 0.0 {
        -(k.ddtheta * k.df1 * s2t - k.ddf1 * k.dtheta * s2t - 2.0 * k.df1 * k.dtheta * k.dtheta * c2t) / den0
    } else {
        0.0
    };
    let den = k.df * k.df * s2p * s2p + k.dphi * k.dphi;
    let dalpha = -(k.ddphi * k.df * s2p - k.ddf * k.dphi * s2p - 2.0 * k.df * k.dphi * k.dphi * c2p) / den;

    let delta_a = dalpha0 + 2.0 * k.df1 * c2t;
    let omega_a = if k.dtheta >= 0.0 { -den0.sqrt() } else { den0.sqrt() };
    let delta = dalpha + 2.0 * k.df * c2p + k.df1;
    let omega = -den.sqrt();

    let half0 = C64::from_polar(1.0, p.alpha0 / 2.0);
    let drives = [
        half0.conj() * (omega * st),
        half0 * (omega * ct),
        C64::new(omega_a, 0.0) - C64::from_polar(0.5 * delta * st * ct, -p.alpha0),
    ];
    Ok(FieldSet::from_complex(
        k.t,
        delta,
        -delta * ct * ct + delta_a,
        -delta * st * st - delta_a,
        drives,
    ))
}

/// Fields in the closed `λ` form (`ḟ_1 = 0`, `f = λφ`).
pub fn synthesize_fields_lambda(schedule: &PathSchedule, t: f64) -> Result<FieldSet> {
    fields_lambda_from(&schedule.kinematics(t)?)
}

pub fn synthesize_fields_lambda_in_stage(schedule: &PathSchedule, index: usize, t: f64) -> Result<FieldSet> {
    fields_lambda_from(&schedule.kinematics_in_stage(index, t))
}

/// Fields from the general inversion in terms of `θ, φ, f_1, f` and their derivatives.
pub fn synthesize_fields_general(schedule: &PathSchedule, t: f64) -> Result<FieldSet> {
    fields_general_from(&schedule.kinematics(t)?)
}

fn check_finite(fields: &FieldSet) -> Result<()> {
    if !fields.is_finite() {
        return Err(Error::NumericalDomain(format!(
            "non-finite field at t = {}",
            fields.at_time
        )));
    }
    Ok(())
}

/// `H_0` in the basis `(|0>, |1>, |e>)`.
pub fn assemble_h0(fields: &FieldSet) -> Result<Operator> {
    check_finite(fields)?;
    let mut m = DMatrix::zeros(3, 3);
    m[(0, 0)] = C64::new(fields.delta_0 / 2.0, 0.0);
    m[(1, 1)] = C64::new(fields.delta_1 / 2.0, 0.0);
    m[(2, 2)] = C64::new(fields.delta_e / 2.0, 0.0);
    let (d0, d1, d2) = (fields.drive(0), fields.drive(1), fields.drive(2));
    m[(2, 0)] = d0;
    m[(0, 2)] = d0.conj();
    m[(2, 1)] = d1;
    m[(1, 2)] = d1.conj();
    m[(1, 0)] = d2;
    m[(0, 1)] = d2.conj();
    Operator::new(m, OperatorKind::Hermitian)
}

/// Unscaled `H_1`; the caller multiplies by `ε`.
///
/// The noncommutative model shifts `|1>` by `-Δ_1/2` together with the `|0>-|e>` drive.
pub fn error_hamiltonian(fields: &FieldSet, model: &ErrorModel) -> Result<Operator> {
    check_finite(fields)?;
    match model.kind {
        ErrorKind::None => Err(Error::Contract("error model 'none' has no error hamiltonian".into())),
        ErrorKind::Commutative => assemble_h0(&fields.with_detunings_zeroed()),
        ErrorKind::Noncommutative => {
            let mut m = DMatrix::zeros(3, 3);
            m[(1, 1)] = C64::new(-fields.delta_1 / 2.0, 0.0);
            let d0 = fields.drive(0);
            m[(2, 0)] = d0;
            m[(0, 2)] = d0.conj();
            Operator::new(m, OperatorKind::Hermitian)
        }
    }
}

/// `H_0 + ε H_1` as a function of time, with fields in the `λ` form.
pub fn hamiltonian<'a>(schedule: &'a PathSchedule, model: ErrorModel) -> impl Fn(f64) -> Result<Operator> + 'a {
    move |t| {
        let fields = synthesize_fields_lambda(schedule, t)?;
        let h0 = assemble_h0(&fields)?;
        if model.kind == ErrorKind::None || model.epsilon == 0.0 {
            return Ok(h0);
        }
        let h1 = error_hamiltonian(&fields, &model)?;
        Operator::new(
            h0.into_entries() + h1.into_entries() * C64::new(model.epsilon, 0.0),
            OperatorKind::Hermitian,
        )
    }
}
