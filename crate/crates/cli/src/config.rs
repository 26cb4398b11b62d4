//! Flat `key = value` run configuration with presets and overrides.
//!
//! Resolution order: built-in defaults, then the preset (from the file or a
//! flag), then file keys, then flag overrides. Blank lines and lines starting
//! with `#` are ignored.

use std::fmt::{self, Write as _};
use std::path::PathBuf;
use std::str::FromStr;

use qsync_core::limit_cycle::ClassifyOptions;
use qsync_core::model::{Convention, Frame, QubitState, SystemParams};
use qsync_core::observables::QGrid;
use qsync_core::parallel::Execution;
use qsync_core::propagator::EvolutionConfig;
use qsync_core::sweep::{Axis, AxisName, SWEEP_MAX_STEP_SCALE};
use thiserror::Error;

pub const PRESET_T_END: f64 = 500.0;
pub const DEFAULT_SAMPLES: usize = 1000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid configuration: {0}")]
    Validation(String),
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Validation(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Evolve,
    Qfunc,
    Sweep,
    Trajectory,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::Evolve => "evolve",
            Command::Qfunc => "qfunc",
            Command::Sweep => "sweep",
            Command::Trajectory => "trajectory",
        }
    }
}

impl FromStr for Command {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "evolve" => Ok(Command::Evolve),
            "qfunc" => Ok(Command::Qfunc),
            "sweep" => Ok(Command::Sweep),
            "trajectory" => Ok(Command::Trajectory),
            _ => Err(format!("unknown command '{s}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn as_str(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Initial {
    Plus,
    Excited,
    Ground,
}

impl Initial {
    pub fn as_str(self) -> &'static str {
        match self {
            Initial::Plus => "plus",
            Initial::Excited => "excited",
            Initial::Ground => "ground",
        }
    }

    pub fn state(self, frame: Frame) -> QubitState {
        match self {
            Initial::Plus => QubitState::plus(frame),
            Initial::Excited => QubitState::excited(frame),
            Initial::Ground => QubitState::ground(frame),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Markov,
    NonMarkov,
}

impl Preset {
    pub fn params(self) -> SystemParams {
        match self {
            Preset::Markov => SystemParams::markov(),
            Preset::NonMarkov => SystemParams::non_markov(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub params: SystemParams,
    pub t_end: f64,
    /// Number of sampling intervals; `None` picks a command-specific default.
    pub samples: Option<usize>,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: Option<f64>,
    /// `None` uses the command default (sweeps use a coarser ceiling).
    pub max_step_scale: Option<f64>,
    pub basis: Convention,
    pub initial: Initial,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub grid: Option<(Axis, Axis)>,
    /// Evaluation time for `qfunc` and `sweep`; defaults to `t_end`.
    pub t_eval: Option<f64>,
    pub threshold: f64,
    pub window: Option<f64>,
    pub eps_fp: f64,
    pub eps_rec: f64,
    pub transient_cut: Option<f64>,
    pub n_theta: usize,
    pub n_phi: usize,
    pub execution: Execution,
}

impl RunConfig {
    pub fn defaults(command: Command) -> Self {
        let classify = ClassifyOptions::default();
        RunConfig {
            command,
            params: SystemParams::markov(),
            t_end: PRESET_T_END,
            samples: None,
            rel_tol: EvolutionConfig::DEFAULT_REL_TOL,
            abs_tol: EvolutionConfig::DEFAULT_ABS_TOL,
            max_step: None,
            max_step_scale: None,
            basis: Convention::default(),
            initial: Initial::Plus,
            format: Format::Csv,
            out: None,
            grid: None,
            t_eval: None,
            threshold: 0.05,
            window: None,
            eps_fp: classify.eps_fixed_point,
            eps_rec: classify.eps_recurrence,
            transient_cut: None,
            n_theta: QGrid::DEFAULT_THETA_POINTS,
            n_phi: QGrid::DEFAULT_PHI_POINTS,
            execution: Execution::default(),
        }
    }

    pub fn t_eval(&self) -> f64 {
        self.t_eval.unwrap_or(self.t_end)
    }

    pub fn initial_state(&self) -> QubitState {
        self.initial.state(self.basis.frame())
    }

    /// Sampling intervals for the command. Trajectories default to a phase
    /// advance of π/16 per sample in the lab frame.
    pub fn sample_intervals(&self) -> usize {
        self.samples.unwrap_or_else(|| match self.command {
            Command::Trajectory => {
                let advance = std::f64::consts::PI / 16.0;
                ((self.t_end * self.params.omega_laser() / advance).ceil() as usize).max(DEFAULT_SAMPLES)
            }
            _ => DEFAULT_SAMPLES,
        })
    }

    pub fn max_step_scale(&self) -> f64 {
        self.max_step_scale.unwrap_or(match self.command {
            Command::Sweep => SWEEP_MAX_STEP_SCALE,
            _ => EvolutionConfig::DEFAULT_MAX_STEP_SCALE,
        })
    }

    pub fn evolution(&self) -> EvolutionConfig {
        let mut config = match self.command {
            Command::Sweep | Command::Qfunc => {
                let t_eval = self.t_eval();
                let mut times = vec![0.0];
                if t_eval > 0.0 {
                    times.push(t_eval);
                }
                EvolutionConfig {
                    sample_times: times,
                    ..EvolutionConfig::uniform(self.t_end, 1)
                }
            }
            _ => EvolutionConfig::uniform(self.t_end, self.sample_intervals()),
        };
        config.rel_tol = self.rel_tol;
        config.abs_tol = self.abs_tol;
        config.max_step = self.max_step;
        config.max_step_scale = self.max_step_scale();
        config
    }

    pub fn classify_options(&self) -> ClassifyOptions {
        ClassifyOptions {
            eps_fixed_point: self.eps_fp,
            eps_recurrence: self.eps_rec,
            transient_cut: self.transient_cut,
            ..ClassifyOptions::default()
        }
    }

    /// Classification window; defaults to a quarter of the post-transient span.
    pub fn window(&self) -> f64 {
        self.window.unwrap_or_else(|| {
            let cut = self.transient_cut.unwrap_or(0.5 * self.t_end);
            0.25 * (self.t_end - cut)
        })
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.params.validate().map_err(|e| invalid(e.to_string()))?;
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return Err(invalid("t_end must be finite and > 0"));
        }
        if let Some(t) = self.t_eval {
            if !(0.0..=self.t_end).contains(&t) {
                return Err(invalid("t_eval must lie in [0, t_end]"));
            }
        }
        if self.samples == Some(0) {
            return Err(invalid("samples must be >= 1"));
        }
        self.evolution().validate().map_err(|e| invalid(e.to_string()))?;
        if !(self.threshold > 0.0 && self.threshold < 0.125) {
            return Err(invalid("threshold must lie in (0, 1/8)"));
        }
        if !(self.eps_fp > 0.0 && self.eps_rec > 0.0) {
            return Err(invalid("eps_fp and eps_rec must be > 0"));
        }
        if let Some(w) = self.window {
            if !(w > 0.0) {
                return Err(invalid("window must be > 0"));
            }
        }
        if self.n_theta < 2 || self.n_phi < 1 {
            return Err(invalid("n_theta must be >= 2 and n_phi >= 1"));
        }
        match (self.command, &self.grid) {
            (Command::Sweep, None) => Err(invalid("sweep needs a grid")),
            (Command::Sweep, Some((a, b))) if a.name == b.name => Err(invalid("grid axes must differ")),
            _ => Ok(()),
        }
    }

    /// Serializes every setting as config text that parses back to `self`.
    pub fn to_config_text(&self) -> String {
        let mut s = String::new();
        let p = &self.params;
        let mut line = |k: &str, v: &dyn fmt::Display| {
            let _ = writeln!(s, "{k} = {v}");
        };
        line("command", &self.command.as_str());
        line("delta", &p.delta_detuning);
        line("epsilon", &p.epsilon_drive);
        line("gamma", &p.gamma_coupling);
        line("lambda", &p.lambda_cutoff);
        line("omega0", &p.omega_qubit);
        line("t_end", &self.t_end);
        if let Some(n) = self.samples {
            line("samples", &n);
        }
        line("rel_tol", &self.rel_tol);
        line("abs_tol", &self.abs_tol);
        if let Some(h) = self.max_step {
            line("max_step", &h);
        }
        if let Some(x) = self.max_step_scale {
            line("max_step_scale", &x);
        }
        line("basis", &self.basis.name());
        line("initial", &self.initial.as_str());
        line("format", &self.format.as_str());
        if let Some(out) = &self.out {
            line("out", &out.display());
        }
        if let Some(grid) = &self.grid {
            line("grid", &format_grid(grid));
        }
        if let Some(t) = self.t_eval {
            line("t_eval", &t);
        }
        line("threshold", &self.threshold);
        if let Some(w) = self.window {
            line("window", &w);
        }
        line("eps_fp", &self.eps_fp);
        line("eps_rec", &self.eps_rec);
        if let Some(t) = self.transient_cut {
            line("transient_cut", &t);
        }
        line("n_theta", &self.n_theta);
        line("n_phi", &self.n_phi);
        line(
            "execution",
            &match self.execution {
                Execution::Sequential => "sequential",
                Execution::Parallel => "parallel",
            },
        );
        s
    }
}

pub fn format_grid((a, b): &(Axis, Axis)) -> String {
    format!(
        "{}:{}:{}:{},{}:{}:{}:{}",
        a.name, a.min, a.max, a.n_points, b.name, b.min, b.max, b.n_points
    )
}

fn parse_axis(spec: &str) -> Result<Axis, String> {
    let parts: Vec<&str> = spec.split(':').map(str::trim).collect();
    let [name, min, max, n] = parts[..] else {
        return Err(format!("axis '{spec}' is not name:min:max:n"));
    };
    let name: AxisName = name.parse().map_err(|e: qsync_core::Error| e.to_string())?;
    let min = parse_f64(min)?;
    let max = parse_f64(max)?;
    let n: usize = n.parse().map_err(|_| format!("'{n}' is not a point count"))?;
    if n == 0 {
        return Err("axis needs at least one point".into());
    }
    Ok(Axis::new(name, min, max, n))
}

pub fn parse_grid(spec: &str) -> Result<(Axis, Axis), String> {
    let (a, b) = spec
        .split_once(',')
        .ok_or_else(|| format!("grid '{spec}' needs two comma-separated axes"))?;
    Ok((parse_axis(a)?, parse_axis(b)?))
}

fn parse_f64(v: &str) -> Result<f64, String> {
    let x: f64 = v.parse().map_err(|_| format!("'{v}' is not a number"))?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(format!("'{v}' is not finite"))
    }
}

fn parse_usize(v: &str) -> Result<usize, String> {
    v.parse().map_err(|_| format!("'{v}' is not a non-negative integer"))
}

fn parse_preset(v: &str) -> Result<Preset, String> {
    match v {
        "markov" => Ok(Preset::Markov),
        "nonmarkov" => Ok(Preset::NonMarkov),
        _ => Err(format!("unknown preset '{v}' (expected markov or nonmarkov)")),
    }
}

fn apply(config: &mut RunConfig, key: &str, value: &str) -> Result<(), String> {
    let p = &mut config.params;
    match key {
        "command" => config.command = value.parse()?,
        "preset" => {}
        "delta" => p.delta_detuning = parse_f64(value)?,
        "epsilon" => p.epsilon_drive = parse_f64(value)?,
        "gamma" => p.gamma_coupling = parse_f64(value)?,
        "lambda" => p.lambda_cutoff = parse_f64(value)?,
        "omega0" => p.omega_qubit = parse_f64(value)?,
        "t_end" => config.t_end = parse_f64(value)?,
        "samples" => config.samples = Some(parse_usize(value)?),
        "rel_tol" => config.rel_tol = parse_f64(value)?,
        "abs_tol" => config.abs_tol = parse_f64(value)?,
        "max_step" => config.max_step = Some(parse_f64(value)?),
        "max_step_scale" => config.max_step_scale = Some(parse_f64(value)?),
        "basis" => {
            config.basis = Convention::from_name(value)
                .ok_or_else(|| format!("unknown basis '{value}' (expected dressed or bare)"))?
        }
        "initial" => {
            config.initial = match value {
                "plus" => Initial::Plus,
                "excited" => Initial::Excited,
                "ground" => Initial::Ground,
                _ => return Err(format!("unknown initial state '{value}'")),
            }
        }
        "format" => {
            config.format = match value {
                "csv" => Format::Csv,
                "json" => Format::Json,
                _ => return Err(format!("unknown format '{value}' (expected csv or json)")),
            }
        }
        "out" => config.out = Some(PathBuf::from(value)),
        "grid" => config.grid = Some(parse_grid(value)?),
        "t_eval" => config.t_eval = Some(parse_f64(value)?),
        "threshold" => config.threshold = parse_f64(value)?,
        "window" => config.window = Some(parse_f64(value)?),
        "eps_fp" => config.eps_fp = parse_f64(value)?,
        "eps_rec" => config.eps_rec = parse_f64(value)?,
        "transient_cut" => config.transient_cut = Some(parse_f64(value)?),
        "n_theta" => config.n_theta = parse_usize(value)?,
        "n_phi" => config.n_phi = parse_usize(value)?,
        "execution" => {
            config.execution = match value {
                "parallel" => Execution::Parallel,
                "sequential" => Execution::Sequential,
                _ => return Err(format!("unknown execution '{value}'")),
            }
        }
        _ => return Err(format!("unknown key '{key}'")),
    }
    Ok(())
}

/// Splits config text into `(line number, key, value)` entries.
fn entries(text: &str) -> Result<Vec<(usize, String, String)>, ConfigError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| ConfigError::Parse {
            line: i + 1,
            message: format!("expected 'key = value', got '{line}'"),
        })?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(ConfigError::Parse {
                line: i + 1,
                message: "empty key".into(),
            });
        }
        out.push((i + 1, k.to_string(), v.to_string()));
    }
    Ok(out)
}

/// Parses config text, then applies `overrides` (flag key/value pairs).
/// `command` sets the command unless the text or overrides name one.
pub fn parse_config(
    text: &str,
    overrides: &[(String, String)],
    command: Option<Command>,
) -> Result<RunConfig, ConfigError> {
    let file = entries(text)?;
    let preset_of = |v: &str, line: usize| {
        parse_preset(v).map_err(|message| match line {
            0 => ConfigError::Validation(message),
            line => ConfigError::Parse { line, message },
        })
    };
    let mut preset = None;
    for (line, k, v) in &file {
        if k == "preset" {
            preset = Some(preset_of(v, *line)?);
        }
    }
    for (k, v) in overrides {
        if k == "preset" {
            preset = Some(preset_of(v, 0)?);
        }
    }

    let mut config = RunConfig::defaults(command.unwrap_or(Command::Evolve));
    if let Some(preset) = preset {
        config.params = preset.params();
        config.t_end = PRESET_T_END;
    }
    for (line, k, v) in &file {
        apply(&mut config, k, v).map_err(|message| ConfigError::Parse { line: *line, message })?;
    }
    for (k, v) in overrides {
        apply(&mut config, k, v).map_err(|message| invalid(format!("--{}: {message}", k.replace('_', "-"))))?;
    }
    if let Some(c) = command {
        config.command = c;
    }
    config.validate()?;
    Ok(config)
}
