//! Dispatch of a [`RunConfig`] to the scenario layer and serialization of its results.

use std::io::Write;

use qctl_core::scenarios::{
    audit, cyclic_transfer, default_steps_per_t, epsilon_sweep, pulse_csv, pulse_table, single_transfer, sweep_csv,
    trajectory_csv, CyclicSpec, SimulationResult, TransferSpec,
};
use qctl_core::{ErrorKind, ErrorModel, Level, PathSchedule};
use serde_json::{json, Value};

use crate::config::{Command, Format, RunConfig};
use crate::CliError;

/// Environment variable capping the number of worker threads.
pub const THREADS_VAR: &str = "QCTL_THREADS";

/// Rounds every number to 12 significant digits.
fn round_numbers(v: Value) -> Value {
    match v {
        Value::Number(n) => match n.as_f64() {
            Some(x) if n.is_f64() => {
                let r: f64 = format!("{x:.11e}").parse().unwrap_or(x);
                json!(r)
            }
            _ => Value::Number(n),
        },
        Value::Array(a) => Value::Array(a.into_iter().map(round_numbers).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round_numbers(v))).collect()),
        other => other,
    }
}

fn to_json(v: Value) -> String {
    let mut s = serde_json::to_string_pretty(&round_numbers(v)).expect("json values always serialize");
    s.push('\n');
    s
}

fn model_of(cfg: &RunConfig) -> Result<ErrorModel, CliError> {
    if cfg.model == ErrorKind::None {
        return Ok(ErrorModel::none());
    }
    Ok(ErrorModel::new(cfg.model, cfg.epsilon.unwrap_or(0.0))?)
}

fn checkpoints_json(r: &SimulationResult) -> Value {
    Value::Array(
        r.checkpoints
            .iter()
            .map(|c| json!({"label": c.label, "time": c.time, "value": c.value}))
            .collect(),
    )
}

fn cyclic_peaks(r: &SimulationResult, loops: usize) -> Value {
    let t_end = *r.times.last().expect("trajectory is never empty");
    let mut peaks = Vec::new();
    for k in 0..loops {
        let s = 1.5 * k as f64;
        for (level, a, b) in [(Level::Excited, s + 0.5, s + 0.8), (Level::Ground, s + 1.5, s + 1.9)] {
            if b > t_end + 1e-12 {
                continue;
            }
            if let Some(p) = r.peak(level, a, b) {
                peaks.push(
                    json!({"level": format!("P{}", level.label()), "window": [a, b], "time": p.time, "value": p.value}),
                );
            }
        }
    }
    Value::Array(peaks)
}

/// Output document of a run plus the per-point failures of a sweep.
pub fn render(cfg: &RunConfig) -> Result<(String, Vec<String>), CliError> {
    let model = model_of(cfg)?;
    let mut failures = Vec::new();
    let text = match cfg.command {
        Command::Transfer => {
            let lambda = cfg.lambda();
            let spec = TransferSpec::new(
                lambda,
                model,
                cfg.n_steps.unwrap_or_else(|| default_steps_per_t(lambda)),
            )?;
            let r = single_transfer(&spec)?;
            match cfg.format {
                Format::Csv => trajectory_csv(&r),
                Format::Json => to_json(json!({
                    "command": "transfer",
                    "lambda": lambda,
                    "model": cfg.model.name(),
                    "epsilon": model.epsilon,
                    "n_steps": spec.n_steps,
                    "fidelity": r.final_state().population(Level::One.index()),
                    "checkpoints": checkpoints_json(&r),
                })),
            }
        }
        Command::Sweep => {
            let eps = cfg.sweep_epsilons()?;
            let table = epsilon_sweep(&cfg.lambdas, &eps, cfg.model, cfg.n_steps)?;
            failures = table
                .failures
                .iter()
                .map(|f| format!("lambda = {}, epsilon = {}: {}", f.lambda, f.epsilon, f.reason))
                .collect();
            match cfg.format {
                Format::Csv => sweep_csv(&table),
                Format::Json => to_json(json!({
                    "command": "sweep",
                    "model": cfg.model.name(),
                    "rows": table.rows,
                    "failures": table.failures,
                })),
            }
        }
        Command::Cyclic => {
            let lambda = cfg.lambda();
            let loops = cfg.loops.unwrap_or(2);
            let spec = CyclicSpec::new(
                lambda,
                model,
                cfg.n_steps.unwrap_or_else(|| default_steps_per_t(lambda)),
                loops,
            )?;
            let r = cyclic_transfer(&spec)?;
            match cfg.format {
                Format::Csv => trajectory_csv(&r),
                Format::Json => to_json(json!({
                    "command": "cyclic",
                    "lambda": lambda,
                    "model": cfg.model.name(),
                    "epsilon": model.epsilon,
                    "loops": loops,
                    "n_steps_per_T": spec.n_steps_per_t,
                    "checkpoints": checkpoints_json(&r),
                    "peaks": cyclic_peaks(&r, loops),
                })),
            }
        }
        Command::PulseTable => {
            let lambda = cfg.lambda();
            let schedule = match cfg.loops {
                Some(l) => PathSchedule::cyclic(lambda, l, 1.0)?,
                None => PathSchedule::single_transfer(lambda, 1.0)?,
            };
            let per_t = cfg.n_steps.unwrap_or_else(|| default_steps_per_t(lambda));
            let n = (per_t as f64 * schedule.t_end()).round() as usize;
            let fields = pulse_table(&schedule, n)?;
            match cfg.format {
                Format::Csv => pulse_csv(&fields),
                Format::Json => to_json(serde_json::to_value(&fields).expect("fields serialize")),
            }
        }
        Command::Audit => {
            let lambda = cfg.lambda();
            let spec = TransferSpec::new(
                lambda,
                model,
                cfg.n_steps.unwrap_or_else(|| default_steps_per_t(lambda)),
            )?;
            let report = audit(&spec)?;
            to_json(serde_json::to_value(&report).expect("report serializes"))
        }
    };
    Ok((text, failures))
}

fn write_output(cfg: &RunConfig, text: &str) -> Result<(), CliError> {
    match &cfg.output {
        Some(path) => {
            std::fs::write(path, text).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
        }
        None => std::io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Io(format!("cannot write to stdout: {e}"))),
    }
}

fn thread_pool() -> Result<rayon::ThreadPool, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_VAR) {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| CliError::Usage(format!("{THREADS_VAR}: expected a positive integer, got '{v}'")))?;
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| CliError::Scenario(format!("cannot start worker pool: {e}")))
}

/// Runs `cfg` and writes its output; sweep point failures are reported after the successful rows.
pub fn execute(cfg: &RunConfig) -> Result<(), CliError> {
    let pool = thread_pool()?;
    let (text, failures) = pool.install(|| render(cfg))?;
    write_output(cfg, &text)?;
    if !failures.is_empty() {
        return Err(CliError::Scenario(failures.join("\n")));
    }
    Ok(())
}

/// Parses `args`, runs, and returns the process exit status.
pub fn run_main<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let result = RunConfig::from_args(args).and_then(|cfg| execute(&cfg));
    match result {
        Ok(()) => 0,
        Err(CliError::Info(text)) => {
            print!("{text}");
            0
        }
        Err(e) => {
            eprintln!("qctl: {e}");
            e.exit_code()
        }
    }
}
