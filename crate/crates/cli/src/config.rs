//! Run configuration from command-line flags and flat `key = value` files.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::error::ErrorKind as ClapErrorKind;
use clap::Parser;
use qctl_core::ErrorKind;

use crate::CliError;

/// Largest accepted `|ε|`.
pub const MAX_EPSILON: f64 = 0.5;
/// Smallest accepted number of steps per `T`.
pub const MIN_STEPS: usize = 1000;

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Command {
    Transfer,
    Sweep,
    Cyclic,
    PulseTable,
    Audit,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Transfer => "transfer",
            Command::Sweep => "sweep",
            Command::Cyclic => "cyclic",
            Command::PulseTable => "pulse-table",
            Command::Audit => "audit",
        }
    }
}

impl FromStr for Command {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "transfer" => Ok(Command::Transfer),
            "sweep" => Ok(Command::Sweep),
            "cyclic" => Ok(Command::Cyclic),
            "pulse-table" => Ok(Command::PulseTable),
            "audit" => Ok(Command::Audit),
            _ => Err(usage("command", format!("unknown command '{s}'"))),
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn name(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

impl FromStr for Format {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(usage("format", format!("expected csv or json, got '{s}'"))),
        }
    }
}

/// Validated configuration of one run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub model: ErrorKind,
    pub lambdas: Vec<f64>,
    pub epsilon: Option<f64>,
    pub eps_min: Option<f64>,
    pub eps_max: Option<f64>,
    pub eps_step: Option<f64>,
    pub loops: Option<usize>,
    pub n_steps: Option<usize>,
    pub output: Option<PathBuf>,
    pub format: Format,
}

impl fmt::Display for RunConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_config_text())
    }
}

fn usage(field: &str, msg: impl Into<String>) -> CliError {
    CliError::Usage(format!("{field}: {}", msg.into()))
}

/// Raw settings before validation; every field optional.
#[derive(Clone, Debug, Default, PartialEq)]
struct Settings {
    command: Option<String>,
    model: Option<String>,
    lambdas: Option<String>,
    epsilon: Option<String>,
    eps_min: Option<String>,
    eps_max: Option<String>,
    eps_step: Option<String>,
    loops: Option<String>,
    n_steps: Option<String>,
    output: Option<String>,
    format: Option<String>,
}

impl Settings {
    fn slot(&mut self, key: &str) -> Option<&mut Option<String>> {
        Some(match key {
            "command" => &mut self.command,
            "model" => &mut self.model,
            "lambda" | "lambdas" => &mut self.lambdas,
            "epsilon" => &mut self.epsilon,
            "eps-min" | "eps_min" => &mut self.eps_min,
            "eps-max" | "eps_max" => &mut self.eps_max,
            "eps-step" | "eps_step" => &mut self.eps_step,
            "loops" => &mut self.loops,
            "n-steps" | "n_steps" => &mut self.n_steps,
            "output" => &mut self.output,
            "format" => &mut self.format,
            _ => return None,
        })
    }

    /// Values set in `other` replace those in `self`.
    fn overlay(mut self, other: Settings) -> Settings {
        macro_rules! take {
            ($($f:ident),*) => { $( if other.$f.is_some() { self.$f = other.$f; } )* };
        }
        take!(command, model, lambdas, epsilon, eps_min, eps_max, eps_step, loops, n_steps, output, format);
        self
    }
}

fn parse_text(text: &str) -> Result<Settings, CliError> {
    let mut s = Settings::default();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| usage("config", format!("line {} is not 'key = value'", i + 1)))?;
        let key = key.trim();
        let slot = s
            .slot(key)
            .ok_or_else(|| usage(key, format!("unknown key on line {}", i + 1)))?;
        *slot = Some(value.trim().to_string());
    }
    Ok(s)
}

#[derive(Parser, Debug)]
#[command(
    name = "qctl",
    version,
    about = "Error-corrected control of a driven three-level system"
)]
struct Flags {
    /// transfer, sweep, cyclic, pulse-table or audit
    command: Option<String>,
    /// Flat key = value file; flags take precedence
    #[arg(long)]
    config: Option<PathBuf>,
    /// none, commutative or noncommutative
    #[arg(long)]
    model: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    lambda: Option<String>,
    /// Comma-separated list
    #[arg(long, allow_hyphen_values = true)]
    lambdas: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    epsilon: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    eps_min: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    eps_max: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    eps_step: Option<String>,
    #[arg(long)]
    loops: Option<String>,
    /// Integration steps per T
    #[arg(long)]
    n_steps: Option<String>,
    /// Output file (stdout when absent)
    #[arg(long, short)]
    output: Option<String>,
    /// csv or json
    #[arg(long)]
    format: Option<String>,
}

fn number<T: FromStr>(field: &str, v: &str) -> Result<T, CliError> {
    v.trim()
        .parse()
        .map_err(|_| usage(field, format!("cannot parse '{v}' as a number")))
}

fn opt_number<T: FromStr>(field: &str, v: &Option<String>) -> Result<Option<T>, CliError> {
    v.as_deref().map(|s| number(field, s)).transpose()
}

impl RunConfig {
    fn from_settings(s: Settings) -> Result<Self, CliError> {
        let command: Command = s
            .command
            .as_deref()
            .ok_or_else(|| usage("command", "missing"))?
            .parse()?;
        let model = match s.model.as_deref() {
            Some(m) => m
                .parse()
                .map_err(|_| usage("model", format!("unknown error model '{m}'")))?,
            None => ErrorKind::None,
        };
        let lambdas = match s.lambdas.as_deref() {
            Some(l) => l
                .split(',')
                .map(|x| number::<f64>("lambda", x))
                .collect::<Result<Vec<_>, _>>()?,
            None => Vec::new(),
        };
        let cfg = RunConfig {
            command,
            model,
            lambdas,
            epsilon: opt_number("epsilon", &s.epsilon)?,
            eps_min: opt_number("eps-min", &s.eps_min)?,
            eps_max: opt_number("eps-max", &s.eps_max)?,
            eps_step: opt_number("eps-step", &s.eps_step)?,
            loops: opt_number("loops", &s.loops)?,
            n_steps: opt_number("n-steps", &s.n_steps)?,
            output: s.output.map(PathBuf::from),
            format: match s.format.as_deref() {
                Some(f) => f.parse()?,
                None if command == Command::Audit => Format::Json,
                None => Format::Csv,
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Range checks run before presence checks.
    fn validate(&self) -> Result<(), CliError> {
        for &l in &self.lambdas {
            if !(l.is_finite() && l >= 0.0) {
                return Err(usage("lambda", format!("must be finite and >= 0, got {l}")));
            }
        }
        for (name, v) in [
            ("epsilon", self.epsilon),
            ("eps-min", self.eps_min),
            ("eps-max", self.eps_max),
        ] {
            if let Some(e) = v {
                if !(e.is_finite() && e.abs() <= MAX_EPSILON) {
                    return Err(usage(name, format!("|{name}| must be <= {MAX_EPSILON}, got {e}")));
                }
            }
        }
        if let Some(step) = self.eps_step {
            if !(step.is_finite() && step > 0.0) {
                return Err(usage("eps-step", format!("must be > 0, got {step}")));
            }
        }
        if self.lambdas.is_empty() {
            return Err(usage("lambda", format!("required for {}", self.command.name())));
        }
        if self.command != Command::Sweep && self.lambdas.len() > 1 {
            return Err(usage("lambda", format!("{} takes a single value", self.command.name())));
        }
        let grid = [self.eps_min, self.eps_max, self.eps_step];
        let grid_set = grid.iter().filter(|v| v.is_some()).count();
        if grid_set != 0 && grid_set != 3 {
            return Err(usage("eps-min", "eps-min, eps-max and eps-step must be given together"));
        }
        if let (Some(lo), Some(hi)) = (self.eps_min, self.eps_max) {
            if hi < lo {
                return Err(usage("eps-max", format!("must be >= eps-min ({hi} < {lo})")));
            }
        }
        if grid_set == 3 && self.command != Command::Sweep {
            return Err(usage(
                "eps-min",
                format!("epsilon grids only apply to sweep, not {}", self.command.name()),
            ));
        }
        if grid_set == 3 && self.epsilon.is_some() {
            return Err(usage(
                "epsilon",
                "give either epsilon or an eps-min/eps-max/eps-step grid",
            ));
        }
        let needs_epsilon = matches!(self.command, Command::Transfer | Command::Cyclic | Command::Audit);
        if needs_epsilon && self.model != ErrorKind::None && self.epsilon.is_none() {
            return Err(usage(
                "epsilon",
                format!("required for {} with an error model", self.command.name()),
            ));
        }
        if matches!(self.command, Command::Sweep | Command::Audit) && self.model == ErrorKind::None {
            return Err(usage(
                "model",
                format!("{} needs commutative or noncommutative", self.command.name()),
            ));
        }
        if let Some(n) = self.n_steps {
            if n < MIN_STEPS {
                return Err(usage("n-steps", format!("must be >= {MIN_STEPS}, got {n}")));
            }
            if self.command == Command::Cyclic && !n.is_multiple_of(2) {
                return Err(usage("n-steps", format!("must be even for cyclic runs, got {n}")));
            }
        }
        if let Some(l) = self.loops {
            if l == 0 {
                return Err(usage("loops", "must be >= 1"));
            }
            if !matches!(self.command, Command::Cyclic | Command::PulseTable) {
                return Err(usage("loops", format!("does not apply to {}", self.command.name())));
            }
        }
        if self.command == Command::Audit && self.format != Format::Json {
            return Err(usage("format", "audit writes json only"));
        }
        Ok(())
    }

    /// Parses `argv` (without the program name), reading `--config` first when given.
    pub fn from_args<I, S>(args: I) -> Result<Self, CliError>
    where
        I: IntoIterator<Item = S>,
        S: Into<std::ffi::OsString> + Clone,
    {
        let argv = std::iter::once(std::ffi::OsString::from("qctl")).chain(args.into_iter().map(Into::into));
        let flags = Flags::try_parse_from(argv).map_err(|e| match e.kind() {
            ClapErrorKind::DisplayHelp | ClapErrorKind::DisplayVersion => CliError::Info(e.to_string()),
            _ => CliError::Usage(e.to_string().trim_end().to_string()),
        })?;
        let base = match &flags.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", path.display())))?;
                parse_text(&text)?
            }
            None => Settings::default(),
        };
        if flags.lambda.is_some() && flags.lambdas.is_some() {
            return Err(usage("lambda", "give either --lambda or --lambdas"));
        }
        let from_flags = Settings {
            command: flags.command,
            model: flags.model,
            lambdas: flags.lambdas.or(flags.lambda),
            epsilon: flags.epsilon,
            eps_min: flags.eps_min,
            eps_max: flags.eps_max,
            eps_step: flags.eps_step,
            loops: flags.loops,
            n_steps: flags.n_steps,
            output: flags.output,
            format: flags.format,
        };
        Self::from_settings(base.overlay(from_flags))
    }

    /// Parses a config document on its own.
    pub fn from_config_text(text: &str) -> Result<Self, CliError> {
        Self::from_settings(parse_text(text)?)
    }

    /// Config document that parses back to `self`.
    pub fn to_config_text(&self) -> String {
        let mut out = String::new();
        let mut put = |k: &str, v: String| out.push_str(&format!("{k} = {v}\n"));
        put("command", self.command.name().to_string());
        put("model", self.model.name().to_string());
        put(
            "lambdas",
            self.lambdas
                .iter()
                .map(|l| format!("{l:?}"))
                .collect::<Vec<_>>()
                .join(","),
        );
        for (k, v) in [
            ("epsilon", self.epsilon),
            ("eps-min", self.eps_min),
            ("eps-max", self.eps_max),
            ("eps-step", self.eps_step),
        ] {
            if let Some(v) = v {
                put(k, format!("{v:?}"));
            }
        }
        if let Some(l) = self.loops {
            put("loops", l.to_string());
        }
        if let Some(n) = self.n_steps {
            put("n-steps", n.to_string());
        }
        if let Some(o) = &self.output {
            put("output", o.display().to_string());
        }
        put("format", self.format.name().to_string());
        out
    }

    pub fn lambda(&self) -> f64 {
        self.lambdas[0]
    }

    /// Epsilon values of a sweep; defaults to `-0.2..=0.2` in steps of `0.01`.
    pub fn sweep_epsilons(&self) -> Result<Vec<f64>, CliError> {
        if let Some(e) = self.epsilon {
            return Ok(vec![e]);
        }
        let (lo, hi, step) = match (self.eps_min, self.eps_max, self.eps_step) {
            (Some(lo), Some(hi), Some(step)) => (lo, hi, step),
            _ => (-0.2, 0.2, 0.01),
        };
        qctl_core::scenarios::epsilon_grid(lo, hi, step).map_err(|e| usage("eps-step", e.to_string()))
    }
}
