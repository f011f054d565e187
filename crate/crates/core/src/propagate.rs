//! Unitary time stepping with the midpoint exponential `exp(-i H(t_mid) dt)`.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{matrix_exponential, Operator, OperatorKind, StateVector, HERMITIAN_TOL};

/// Norm drift tolerated after a single step.
pub const NORM_TOL: f64 = 1e-10;

/// Uniform time grid with `n_steps + 1` samples.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t_start: f64,
    pub t_end: f64,
    pub n_steps: usize,
}

impl TimeGrid {
    pub fn new(t_start: f64, t_end: f64, n_steps: usize) -> Result<Self> {
        if n_steps == 0 {
            return Err(Error::InvalidSpec("time grid needs at least one step".into()));
        }
        if !(t_start.is_finite() && t_end.is_finite()) || t_end <= t_start {
            return Err(Error::InvalidSpec(format!(
                "time grid [{t_start}, {t_end}] is not increasing"
            )));
        }
        Ok(Self {
            t_start,
            t_end,
            n_steps,
        })
    }

    pub fn dt(&self) -> f64 {
        (self.t_end - self.t_start) / self.n_steps as f64
    }

    pub fn sample(&self, i: usize) -> f64 {
        if i == self.n_steps {
            self.t_end
        } else {
            self.t_start + self.dt() * i as f64
        }
    }

    pub fn midpoint(&self, i: usize) -> f64 {
        self.t_start + self.dt() * (i as f64 + 0.5)
    }

    pub fn samples(&self) -> Vec<f64> {
        (0..=self.n_steps).map(|i| self.sample(i)).collect()
    }

    /// Index of the sample nearest to `t`, clamped to the grid.
    pub fn nearest_index(&self, t: f64) -> usize {
        let x = ((t - self.t_start) / self.dt()).round();
        x.clamp(0.0, self.n_steps as f64) as usize
    }
}

fn step_unitary<H>(hamiltonian: &H, t_mid: f64, dt: f64, dim: usize) -> Result<Operator>
where
    H: Fn(f64) -> Result<Operator>,
{
    let h = hamiltonian(t_mid)?;
    if h.dim() != dim {
        return Err(Error::Dimension(format!(
            "hamiltonian is {0}x{0}, expected {dim}x{dim}",
            h.dim()
        )));
    }
    let defect = h.hermiticity_defect();
    if defect >= HERMITIAN_TOL {
        return Err(Error::Contract(format!(
            "hamiltonian at t = {t_mid} is not hermitian (defect {defect:.3e})"
        )));
    }
    matrix_exponential(&(h.entries() * C64::new(0.0, -dt)))
}

/// Trajectory of `psi0` on every sample of `grid`.
pub fn propagate<H>(hamiltonian: H, psi0: &StateVector, grid: &TimeGrid) -> Result<Vec<StateVector>>
where
    H: Fn(f64) -> Result<Operator>,
{
    let norm = psi0.norm_sqr();
    if (norm - 1.0).abs() > NORM_TOL {
        return Err(Error::Contract(format!("initial state has squared norm {norm}")));
    }
    let dim = psi0.dim();
    let dt = grid.dt();
    let mut out = Vec::with_capacity(grid.n_steps + 1);
    out.push(psi0.clone());
    let mut psi = psi0.clone();
    for i in 0..grid.n_steps {
        let u = step_unitary(&hamiltonian, grid.midpoint(i), dt, dim)?;
        psi = u.apply(&psi)?;
        let drift = (psi.norm_sqr() - 1.0).abs();
        if drift > NORM_TOL {
            return Err(Error::Contract(format!("norm drift {drift:.3e} at step {i}")));
        }
        out.push(psi.clone());
    }
    Ok(out)
}

/// Time-ordered product of the step unitaries over `grid`.
pub fn propagator_accumulate<H>(hamiltonian: H, dim: usize, grid: &TimeGrid) -> Result<Operator>
where
    H: Fn(f64) -> Result<Operator>,
{
    let dt = grid.dt();
    let mut acc = DMatrix::<C64>::identity(dim, dim);
    for i in 0..grid.n_steps {
        let u = step_unitary(&hamiltonian, grid.midpoint(i), dt, dim)?;
        acc = u.entries() * acc;
    }
    Operator::new(acc, OperatorKind::Unitary)
}
