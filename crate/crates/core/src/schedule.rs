//! Path schedules: the mixing angles θ(t), φ(t) and the global-phase gain λ, piecewise over stages.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default constant global phase carried by path 1.
pub const DEFAULT_F1: f64 = PI / 2.0;

/// Tolerance used when checking that stages tile the run interval.
const TILING_TOL: f64 = 1e-12;

/// An angle as an explicit function of the time elapsed since the start of its stage.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Profile {
    /// `at_begin + slope * τ`
    Linear { at_begin: f64, slope: f64 },
    /// `from + (to - from) * (1 - cos(π τ / span)) / 2`
    Eased { from: f64, to: f64, span: f64 },
}

impl Profile {
    pub fn linear(at_begin: f64, slope: f64) -> Self {
        Profile::Linear { at_begin, slope }
    }

    pub fn value(&self, tau: f64) -> f64 {
        match *self {
            Profile::Linear { at_begin, slope } => at_begin + slope * tau,
            Profile::Eased { from, to, span } => from + (to - from) * 0.5 * (1.0 - (PI * tau / span).cos()),
        }
    }

    pub fn rate(&self, tau: f64) -> f64 {
        match *self {
            Profile::Linear { slope, .. } => slope,
            Profile::Eased { from, to, span } => (to - from) * 0.5 * (PI / span) * (PI * tau / span).sin(),
        }
    }

    pub fn accel(&self, tau: f64) -> f64 {
        match *self {
            Profile::Linear { .. } => 0.0,
            Profile::Eased { from, to, span } => (to - from) * 0.5 * (PI / span).powi(2) * (PI * tau / span).cos(),
        }
    }
}

/// One of the three ancillary paths `|μ_1>`, `|μ_2>`, `|μ_3>`.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Path {
    Mu1,
    Mu2,
    Mu3,
}

impl Path {
    pub const ALL: [Path; 3] = [Path::Mu1, Path::Mu2, Path::Mu3];

    /// Zero-based index into a basis triple.
    pub fn index(self) -> usize {
        match self {
            Path::Mu1 => 0,
            Path::Mu2 => 1,
            Path::Mu3 => 2,
        }
    }

    /// One-based label as used in `M_kn`.
    pub fn number(self) -> usize {
        self.index() + 1
    }

    pub fn from_number(k: usize) -> Result<Self> {
        match k {
            1 => Ok(Path::Mu1),
            2 => Ok(Path::Mu2),
            3 => Ok(Path::Mu3),
            _ => Err(Error::InvalidSpec(format!("path index must be 1, 2 or 3, got {k}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    pub t_begin: f64,
    pub t_end: f64,
    pub theta: Profile,
    pub phi: Profile,
    /// Ratio `ḟ / φ̇` of the oscillating global phase to the transfer angle.
    pub lambda: f64,
    pub f1_const: f64,
    pub transfer_path: Path,
}

impl Stage {
    pub fn duration(&self) -> f64 {
        self.t_end - self.t_begin
    }

    pub fn contains_interior(&self, t: f64) -> bool {
        t > self.t_begin && t < self.t_end
    }

    /// Kinematics at `t`, evaluated with this stage's profiles even at its endpoints.
    pub fn kinematics(&self, t: f64, f_offset: f64) -> Kinematics {
        let tau = t - self.t_begin;
        let phi = self.phi.value(tau);
        let dphi = self.phi.rate(tau);
        Kinematics {
            t,
            theta: self.theta.value(tau),
            dtheta: self.theta.rate(tau),
            ddtheta: self.theta.accel(tau),
            phi,
            dphi,
            ddphi: self.phi.accel(tau),
            lambda: self.lambda,
            f: f_offset + self.lambda * (phi - self.phi.value(0.0)),
            df: self.lambda * dphi,
            ddf: self.lambda * self.phi.accel(tau),
            f1: self.f1_const,
            df1: 0.0,
            ddf1: 0.0,
        }
    }
}

/// Instantaneous control angles and their first two derivatives.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct Kinematics {
    pub t: f64,
    pub theta: f64,
    pub dtheta: f64,
    pub ddtheta: f64,
    pub phi: f64,
    pub dphi: f64,
    pub ddphi: f64,
    pub lambda: f64,
    /// Accumulated oscillating phase `f(t)`, continuous across stage boundaries.
    pub f: f64,
    pub df: f64,
    pub ddf: f64,
    pub f1: f64,
    pub df1: f64,
    pub ddf1: f64,
}

/// Stages tiling a run interval, with the accumulated phase at each stage entry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathSchedule {
    stages: Vec<Stage>,
    f_offsets: Vec<f64>,
}

impl PathSchedule {
    pub fn new(stages: Vec<Stage>) -> Result<Self> {
        if stages.is_empty() {
            return Err(Error::InvalidSpec("schedule has no stages".into()));
        }
        for (i, s) in stages.iter().enumerate() {
            if s.t_end <= s.t_begin || s.t_end.is_nan() || s.t_begin.is_nan() {
                return Err(Error::InvalidSpec(format!("stage {i} has empty interval")));
            }
            if !s.lambda.is_finite() || !s.f1_const.is_finite() {
                return Err(Error::InvalidSpec(format!("stage {i} has non-finite parameters")));
            }
        }
        for (i, w) in stages.windows(2).enumerate() {
            if (w[1].t_begin - w[0].t_end).abs() > TILING_TOL {
                return Err(Error::InvalidSpec(format!(
                    "stages {i} and {} leave a gap or overlap ({} vs {})",
                    i + 1,
                    w[0].t_end,
                    w[1].t_begin
                )));
            }
        }
        let mut f_offsets = Vec::with_capacity(stages.len());
        let mut acc = 0.0;
        for s in &stages {
            f_offsets.push(acc);
            acc += s.lambda * (s.phi.value(s.duration()) - s.phi.value(0.0));
        }
        Ok(Self { stages, f_offsets })
    }

    /// Stage i of the transfer `|0> -> |e> -> |1>` along `|μ_2>`: `φ = π t / T`, `θ = π/2 + φ/2`.
    pub fn single_transfer(lambda: f64, duration: f64) -> Result<Self> {
        Self::new(vec![transfer_stage(0.0, lambda, duration)])
    }

    /// `loops` repetitions of stage i (duration `T`) followed by stage ii (`T/2`, `|1> -> |0>` along `|μ_1>`).
    ///
    /// Stage ii runs `φ` from `π` down to `π/2` with `θ = φ - π/2`, so `θ` goes from `π/2` to `0`.
    pub fn cyclic(lambda: f64, loops: usize, duration: f64) -> Result<Self> {
        if loops == 0 {
            return Err(Error::InvalidSpec("cyclic schedule needs at least one loop".into()));
        }
        let mut stages = Vec::with_capacity(2 * loops);
        for k in 0..loops {
            let start = 1.5 * duration * k as f64;
            stages.push(transfer_stage(start, lambda, duration));
            stages.push(Stage {
                t_begin: start + duration,
                t_end: start + 1.5 * duration,
                theta: Profile::linear(PI / 2.0, -PI / duration),
                phi: Profile::linear(PI, -PI / duration),
                lambda,
                f1_const: DEFAULT_F1,
                transfer_path: Path::Mu1,
            });
        }
        Self::new(stages)
    }

    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    pub fn t_start(&self) -> f64 {
        self.stages[0].t_begin
    }

    pub fn t_end(&self) -> f64 {
        self.stages[self.stages.len() - 1].t_end
    }

    /// Largest λ over all stages.
    pub fn max_lambda(&self) -> f64 {
        self.stages.iter().map(|s| s.lambda.abs()).fold(0.0, f64::max)
    }

    /// Index of the stage owning `t`; stage intervals are half-open except the last.
    pub fn stage_index(&self, t: f64) -> Result<usize> {
        if !t.is_finite() || t < self.t_start() - TILING_TOL || t > self.t_end() + TILING_TOL {
            return Err(Error::Domain {
                t,
                reason: format!("outside [{}, {}]", self.t_start(), self.t_end()),
            });
        }
        let idx = self
            .stages
            .iter()
            .position(|s| t < s.t_end)
            .unwrap_or(self.stages.len() - 1);
        Ok(idx)
    }

    pub fn stage_at(&self, t: f64) -> Result<&Stage> {
        Ok(&self.stages[self.stage_index(t)?])
    }

    pub fn kinematics(&self, t: f64) -> Result<Kinematics> {
        let i = self.stage_index(t)?;
        Ok(self.stages[i].kinematics(t, self.f_offsets[i]))
    }

    /// Kinematics evaluated with stage `index`'s profiles (used for one-sided limits at stage endpoints).
    pub fn kinematics_in_stage(&self, index: usize, t: f64) -> Kinematics {
        self.stages[index].kinematics(t, self.f_offsets[index])
    }
}

fn transfer_stage(start: f64, lambda: f64, duration: f64) -> Stage {
    Stage {
        t_begin: start,
        t_end: start + duration,
        theta: Profile::linear(PI / 2.0, PI / (2.0 * duration)),
        phi: Profile::linear(0.0, PI / duration),
        lambda,
        f1_const: DEFAULT_F1,
        transfer_path: Path::Mu2,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_transfer_boundary_values() {
        let s = PathSchedule::single_transfer(5.0, 1.0).unwrap();
        let k0 = s.kinematics(0.0).unwrap();
        let kh = s.kinematics(0.5).unwrap();
        let k1 = s.kinematics(1.0).unwrap();
        assert!((k0.phi).abs() < 1e-15 && (k0.theta - PI / 2.0).abs() < 1e-15);
        assert!((kh.phi - PI / 2.0).abs() < 1e-15);
        assert!((k1.phi - PI).abs() < 1e-15 && (k1.theta - PI).abs() < 1e-15);
        assert!((k1.f - 5.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn cyclic_stages_tile_and_phase_is_continuous() {
        let s = PathSchedule::cyclic(5.0, 2, 1.0).unwrap();
        assert_eq!(s.stages().len(), 4);
        assert!((s.t_end() - 3.0).abs() < 1e-15);
        for w in s.stages().windows(2) {
            let left = s.kinematics_in_stage(s.stage_index(w[0].t_begin).unwrap(), w[0].t_end);
            let right = s.kinematics(w[1].t_begin).unwrap();
            assert!((left.f - right.f).abs() < 1e-12);
        }
        let ii = s.kinematics(1.25).unwrap();
        assert!((ii.theta - PI / 4.0).abs() < 1e-12 && (ii.phi - 0.75 * PI).abs() < 1e-12);
        assert_eq!(s.stage_at(1.25).unwrap().transfer_path, Path::Mu1);
    }

    #[test]
    fn rejects_gaps_and_out_of_domain_times() {
        let mut st = PathSchedule::single_transfer(1.0, 1.0).unwrap().stages()[0].clone();
        let first = st.clone();
        st.t_begin = 1.1;
        st.t_end = 2.0;
        assert!(PathSchedule::new(vec![first, st]).is_err());
        let s = PathSchedule::single_transfer(1.0, 1.0).unwrap();
        assert!(matches!(s.kinematics(1.5), Err(Error::Domain { .. })));
    }

    #[test]
    fn eased_profile_derivatives_match_finite_differences() {
        let p = Profile::Eased {
            from: 0.2,
            to: 2.9,
            span: 1.3,
        };
        let h = 1e-5;
        for &tau in &[0.1, 0.6, 1.1] {
            let fd = (p.value(tau + h) - p.value(tau - h)) / (2.0 * h);
            let fdd = (p.rate(tau + h) - p.rate(tau - h)) / (2.0 * h);
            assert!((fd - p.rate(tau)).abs() < 1e-8);
            assert!((fdd - p.accel(tau)).abs() < 1e-7);
        }
    }
}
