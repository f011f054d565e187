//! Transfer runs: single stage-i transfers, ε sweeps, multi-loop cyclic transfers and diagnostics.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::{correction_margin, error_rotation, magnus_fidelity};
use crate::error::{Error, Result};
use crate::fields::{hamiltonian, synthesize_fields_lambda, ErrorKind, ErrorModel, FieldSet};
use crate::operator::{Level, StateVector};
use crate::propagate::{propagate, TimeGrid};
use crate::schedule::{Path, PathSchedule};

/// Lowest number of steps per `T` accepted by the scenario runners.
pub const MIN_STEPS: usize = 1000;

/// Default integration steps per `T` at gain `lambda`.
pub fn default_steps_per_t(lambda: f64) -> usize {
    if lambda >= 10.0 {
        8000
    } else {
        4000
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::InvalidSpec(format!(
            "lambda must be finite and nonnegative, got {lambda}"
        )));
    }
    Ok(())
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize)]
pub struct TransferSpec {
    pub lambda: f64,
    pub model: ErrorModel,
    pub n_steps: usize,
    pub duration: f64,
}

impl TransferSpec {
    pub fn new(lambda: f64, model: ErrorModel, n_steps: usize) -> Result<Self> {
        let spec = Self {
            lambda,
            model,
            n_steps,
            duration: 1.0,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        check_lambda(self.lambda)?;
        if self.n_steps < MIN_STEPS {
            return Err(Error::InvalidSpec(format!(
                "n_steps must be at least {MIN_STEPS}, got {}",
                self.n_steps
            )));
        }
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return Err(Error::InvalidSpec(format!(
                "duration must be positive, got {}",
                self.duration
            )));
        }
        Ok(())
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize)]
pub struct CyclicSpec {
    pub lambda: f64,
    pub model: ErrorModel,
    pub n_steps_per_t: usize,
    pub loops: usize,
    pub duration: f64,
}

impl CyclicSpec {
    pub fn new(lambda: f64, model: ErrorModel, n_steps_per_t: usize, loops: usize) -> Result<Self> {
        let spec = Self {
            lambda,
            model,
            n_steps_per_t,
            loops,
            duration: 1.0,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        check_lambda(self.lambda)?;
        if self.n_steps_per_t < MIN_STEPS || !self.n_steps_per_t.is_multiple_of(2) {
            return Err(Error::InvalidSpec(format!(
                "n_steps_per_T must be even and at least {MIN_STEPS}, got {}",
                self.n_steps_per_t
            )));
        }
        if self.loops == 0 {
            return Err(Error::InvalidSpec("loops must be at least 1".into()));
        }
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return Err(Error::InvalidSpec(format!(
                "duration must be positive, got {}",
                self.duration
            )));
        }
        Ok(())
    }
}

/// Population of `level` read at a named time.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Checkpoint {
    pub label: String,
    pub time: f64,
    pub level: &'static str,
    pub value: f64,
}

/// Local population maximum refined by a parabola through the three nearest samples.
#[derive(Copy, Clone, Debug, PartialEq, Serialize)]
pub struct Peak {
    pub time: f64,
    pub value: f64,
}

#[derive(Clone, Debug)]
pub struct SimulationResult {
    pub times: Vec<f64>,
    pub states: Vec<StateVector>,
    pub populations: Vec<[f64; 3]>,
    pub checkpoints: Vec<Checkpoint>,
}

impl SimulationResult {
    fn new(grid: &TimeGrid, states: Vec<StateVector>) -> Result<Self> {
        let populations: Vec<[f64; 3]> = states
            .iter()
            .map(|s| [s.population(0), s.population(1), s.population(2)])
            .collect();
        for (i, p) in populations.iter().enumerate() {
            let total: f64 = p.iter().sum();
            if (total - 1.0).abs() > 1e-9 {
                return Err(Error::Contract(format!("populations sum to {total} at sample {i}")));
            }
        }
        Ok(Self {
            times: grid.samples(),
            states,
            populations,
            checkpoints: Vec::new(),
        })
    }

    fn nearest(&self, t: f64) -> usize {
        let dt = self.times[1] - self.times[0];
        (((t - self.times[0]) / dt).round().max(0.0) as usize).min(self.times.len() - 1)
    }

    pub fn population_at(&self, level: Level, t: f64) -> f64 {
        self.populations[self.nearest(t)][level.index()]
    }

    fn add_checkpoint(&mut self, level: Level, t: f64, unit: f64) {
        let value = self.population_at(level, t);
        self.checkpoints.push(Checkpoint {
            label: format!("P{}({}T)", level.label(), t / unit),
            time: t,
            level: level.label(),
            value,
        });
    }

    pub fn checkpoint(&self, label: &str) -> Option<f64> {
        self.checkpoints.iter().find(|c| c.label == label).map(|c| c.value)
    }

    /// Largest population of `level` on `[t0, t1]`.
    pub fn peak(&self, level: Level, t0: f64, t1: f64) -> Option<Peak> {
        let idx = level.index();
        let (lo, hi) = (self.nearest(t0), self.nearest(t1));
        let best = (lo..=hi).max_by(|&a, &b| self.populations[a][idx].total_cmp(&self.populations[b][idx]))?;
        if best == 0 || best + 1 >= self.times.len() {
            return Some(Peak {
                time: self.times[best],
                value: self.populations[best][idx],
            });
        }
        let (ym, y0, yp) = (
            self.populations[best - 1][idx],
            self.populations[best][idx],
            self.populations[best + 1][idx],
        );
        let dt = self.times[1] - self.times[0];
        let curv = ym - 2.0 * y0 + yp;
        if curv >= 0.0 {
            return Some(Peak {
                time: self.times[best],
                value: y0,
            });
        }
        let shift = 0.5 * (ym - yp) / curv;
        Some(Peak {
            time: self.times[best] + shift * dt,
            value: y0 - 0.25 * (ym - yp) * shift,
        })
    }

    pub fn final_state(&self) -> &StateVector {
        self.states.last().expect("trajectory is never empty")
    }
}

/// Population time series `(P_0, P_1, P_e)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Populations {
    pub p0: Vec<f64>,
    pub p1: Vec<f64>,
    pub pe: Vec<f64>,
}

pub fn populations(result: &SimulationResult) -> Populations {
    Populations {
        p0: result.populations.iter().map(|p| p[0]).collect(),
        p1: result.populations.iter().map(|p| p[1]).collect(),
        pe: result.populations.iter().map(|p| p[2]).collect(),
    }
}

/// `|0> -> |e> -> |1>` along `|μ_2>` over one `T`; records `Pe(0.5T)` and `P1(1T)`.
pub fn single_transfer(spec: &TransferSpec) -> Result<SimulationResult> {
    spec.validate()?;
    let schedule = PathSchedule::single_transfer(spec.lambda, spec.duration)?;
    let grid = TimeGrid::new(0.0, spec.duration, spec.n_steps)?;
    let states = propagate(
        hamiltonian(&schedule, spec.model),
        &StateVector::level(Level::Ground),
        &grid,
    )?;
    let mut result = SimulationResult::new(&grid, states)?;
    result.add_checkpoint(Level::Excited, 0.5 * spec.duration, spec.duration);
    result.add_checkpoint(Level::One, spec.duration, spec.duration);
    Ok(result)
}

/// `F(T) = |<1|ψ(T)>|²` of a single transfer.
pub fn transfer_fidelity(spec: &TransferSpec) -> Result<f64> {
    Ok(single_transfer(spec)?.final_state().population(Level::One.index()))
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub lambda: f64,
    pub epsilon: f64,
    pub fidelity: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepFailure {
    pub lambda: f64,
    pub epsilon: f64,
    pub reason: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    pub failures: Vec<SweepFailure>,
}

impl SweepTable {
    pub fn fidelity(&self, lambda: f64, epsilon: f64) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| (r.lambda - lambda).abs() < 1e-12 && (r.epsilon - epsilon).abs() < 1e-12)
            .map(|r| r.fidelity)
    }

    pub fn min_fidelity(&self, lambda: f64) -> Option<f64> {
        self.rows
            .iter()
            .filter(|r| (r.lambda - lambda).abs() < 1e-12)
            .map(|r| r.fidelity)
            .min_by(f64::total_cmp)
    }
}

/// `count` evenly spaced values from `min` to `max` inclusive, with `count = round((max - min) / step) + 1`.
pub fn epsilon_grid(min: f64, max: f64, step: f64) -> Result<Vec<f64>> {
    if !(min.is_finite() && max.is_finite() && step.is_finite()) || step <= 0.0 || max < min {
        return Err(Error::InvalidSpec(format!(
            "bad epsilon grid [{min}, {max}] step {step}"
        )));
    }
    let n = ((max - min) / step).round() as usize;
    Ok((0..=n)
        .map(|i| if i == n { max } else { min + step * i as f64 })
        .collect())
}

/// One single transfer per `(λ, ε)`; points run in parallel and rows come back sorted.
///
/// `steps` overrides the per-`λ` default step count.
pub fn epsilon_sweep(lambdas: &[f64], epsilons: &[f64], kind: ErrorKind, steps: Option<usize>) -> Result<SweepTable> {
    if lambdas.is_empty() || epsilons.is_empty() {
        return Err(Error::InvalidSpec("sweep grids must be nonempty".into()));
    }
    let points: Vec<(f64, f64)> = lambdas
        .iter()
        .flat_map(|&l| epsilons.iter().map(move |&e| (l, e)))
        .collect();
    let outcomes: Vec<(f64, f64, Result<f64>)> = points
        .par_iter()
        .map(|&(lambda, epsilon)| {
            let run = || -> Result<f64> {
                let model = ErrorModel::new(kind, epsilon)?;
                let n = steps.unwrap_or_else(|| default_steps_per_t(lambda));
                transfer_fidelity(&TransferSpec::new(lambda, model, n)?)
            };
            (lambda, epsilon, run())
        })
        .collect();
    let mut table = SweepTable::default();
    for (lambda, epsilon, r) in outcomes {
        match r {
            Ok(fidelity) => table.rows.push(SweepRow {
                lambda,
                epsilon,
                fidelity,
            }),
            Err(e) => table.failures.push(SweepFailure {
                lambda,
                epsilon,
                reason: e.to_string(),
            }),
        }
    }
    let key = |l: f64, e: f64| (l, e);
    table
        .rows
        .sort_by(|a, b| key(a.lambda, a.epsilon).partial_cmp(&key(b.lambda, b.epsilon)).unwrap());
    table
        .failures
        .sort_by(|a, b| key(a.lambda, a.epsilon).partial_cmp(&key(b.lambda, b.epsilon)).unwrap());
    Ok(table)
}

/// Repeated `|0> -> |e> -> |1> -> |0>` loops; records `Pe`, `P1`, `P0` at `T/2`, `T`, `3T/2` of each loop.
pub fn cyclic_transfer(spec: &CyclicSpec) -> Result<SimulationResult> {
    spec.validate()?;
    let schedule = PathSchedule::cyclic(spec.lambda, spec.loops, spec.duration)?;
    let n = spec.n_steps_per_t * 3 * spec.loops / 2;
    let grid = TimeGrid::new(0.0, schedule.t_end(), n)?;
    let states = propagate(
        hamiltonian(&schedule, spec.model),
        &StateVector::level(Level::Ground),
        &grid,
    )?;
    let mut result = SimulationResult::new(&grid, states)?;
    let unit = spec.duration;
    for k in 0..spec.loops {
        let start = 1.5 * unit * k as f64;
        result.add_checkpoint(Level::Excited, start + 0.5 * unit, unit);
        result.add_checkpoint(Level::One, start + unit, unit);
        result.add_checkpoint(Level::Ground, start + 1.5 * unit, unit);
    }
    Ok(result)
}

/// Fields sampled on `n_steps + 1` uniform points of `schedule`.
pub fn pulse_table(schedule: &PathSchedule, n_steps: usize) -> Result<Vec<FieldSet>> {
    let grid = TimeGrid::new(schedule.t_start(), schedule.t_end(), n_steps)?;
    grid.samples()
        .into_iter()
        .map(|t| synthesize_fields_lambda(schedule, t))
        .collect()
}

/// `|M_kn(T)|`, correction margins and Magnus versus simulated fidelity for one transfer.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiagnosticsReport {
    pub lambda: f64,
    pub model: String,
    pub epsilon: f64,
    pub m12: f64,
    pub m13: f64,
    pub m23: f64,
    pub margins: BTreeMap<String, f64>,
    pub fidelity_magnus: f64,
    pub fidelity_numerical: f64,
}

pub fn audit(spec: &TransferSpec) -> Result<DiagnosticsReport> {
    spec.validate()?;
    if spec.model.kind == ErrorKind::None {
        return Err(Error::InvalidSpec("audit needs an error model".into()));
    }
    let schedule = PathSchedule::single_transfer(spec.lambda, spec.duration)?;
    let t = spec.duration;
    let rot = error_rotation(&schedule, &spec.model, t)?;
    let grid = TimeGrid::new(0.0, t, spec.n_steps)?;
    let mut margins = BTreeMap::new();
    for (k, n) in [(Path::Mu1, Path::Mu2), (Path::Mu1, Path::Mu3), (Path::Mu2, Path::Mu3)] {
        let m = correction_margin(&schedule, &spec.model, k, n, &grid)?;
        margins.insert(format!("{}{}", k.number(), n.number()), m);
    }
    let fidelity_magnus = magnus_fidelity(&schedule, &spec.model, Path::Mu2, t)?.value;
    let fidelity_numerical = transfer_fidelity(spec)?;
    Ok(DiagnosticsReport {
        lambda: spec.lambda,
        model: spec.model.kind.name().to_string(),
        epsilon: spec.model.epsilon,
        m12: rot.magnitude(Path::Mu1, Path::Mu2),
        m13: rot.magnitude(Path::Mu1, Path::Mu3),
        m23: rot.magnitude(Path::Mu2, Path::Mu3),
        margins,
        fidelity_magnus,
        fidelity_numerical,
    })
}

/// `t,P0,P1,Pe` rows with a fixed 12-digit format.
pub fn trajectory_csv(result: &SimulationResult) -> String {
    let mut out = String::from("t,P0,P1,Pe\n");
    for (t, p) in result.times.iter().zip(&result.populations) {
        out.push_str(&format!("{t:.11e},{:.11e},{:.11e},{:.11e}\n", p[0], p[1], p[2]));
    }
    out
}

pub fn sweep_csv(table: &SweepTable) -> String {
    let mut out = String::from("lambda,epsilon,fidelity\n");
    for r in &table.rows {
        out.push_str(&format!("{:.11e},{:.11e},{:.11e}\n", r.lambda, r.epsilon, r.fidelity));
    }
    out
}

pub fn pulse_csv(fields: &[FieldSet]) -> String {
    let mut out = format!("{}\n", crate::fields::CSV_HEADER);
    for f in fields {
        out.push_str(&f.csv_row());
        out.push('\n');
    }
    out
}
