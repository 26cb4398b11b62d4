use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use qsync_cli::config::{parse_config, Command, ConfigError};
use qsync_cli::run::{run, RunError};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Cmd {
    Evolve,
    Qfunc,
    Sweep,
    Trajectory,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Evolve => Command::Evolve,
            Cmd::Qfunc => Command::Qfunc,
            Cmd::Sweep => Command::Sweep,
            Cmd::Trajectory => Command::Trajectory,
        }
    }
}

/// Phase synchronization of a driven qubit in an Ohmic bath.
///
/// Settings come from an optional `key = value` config file; flags override
/// file values. Exit codes: 0 ok, 2 config error, 3 integration failure,
/// 4 I/O error.
#[derive(Parser, Debug)]
#[command(name = "qsync", version)]
struct Cli {
    command: Cmd,
    /// Config file with `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// markov (λ=5, γ=0.1) or nonmarkov (λ=0.01, γ=0.1).
    #[arg(long)]
    preset: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    delta: Option<String>,
    #[arg(long)]
    epsilon: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    gamma: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    lambda: Option<String>,
    #[arg(long)]
    omega0: Option<String>,
    #[arg(long)]
    t_end: Option<String>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<String>,
    /// csv or json.
    #[arg(long)]
    format: Option<String>,
    /// Sweep axes as name:min:max:n,name:min:max:n (names: delta, epsilon, gamma).
    #[arg(long, allow_hyphen_values = true)]
    grid: Option<String>,
    /// Evaluation time for qfunc and sweep.
    #[arg(long)]
    t_eval: Option<String>,
    /// S_m threshold for the sweep tongue mask.
    #[arg(long)]
    threshold: Option<String>,
    /// Basis for initial state and observables: dressed or bare.
    #[arg(long)]
    basis: Option<String>,
    /// Initial state: plus, excited or ground.
    #[arg(long)]
    initial: Option<String>,
    /// Number of sampling intervals.
    #[arg(long)]
    samples: Option<String>,
    #[arg(long)]
    rel_tol: Option<String>,
    #[arg(long)]
    abs_tol: Option<String>,
    #[arg(long)]
    max_step: Option<String>,
    /// Classification window for trajectory.
    #[arg(long)]
    window: Option<String>,
    #[arg(long)]
    eps_fp: Option<String>,
    #[arg(long)]
    eps_rec: Option<String>,
    /// parallel or sequential.
    #[arg(long)]
    execution: Option<String>,
}

impl Cli {
    fn overrides(&self) -> Vec<(String, String)> {
        let flags = [
            ("preset", &self.preset),
            ("delta", &self.delta),
            ("epsilon", &self.epsilon),
            ("gamma", &self.gamma),
            ("lambda", &self.lambda),
            ("omega0", &self.omega0),
            ("t_end", &self.t_end),
            ("out", &self.out),
            ("format", &self.format),
            ("grid", &self.grid),
            ("t_eval", &self.t_eval),
            ("threshold", &self.threshold),
            ("basis", &self.basis),
            ("initial", &self.initial),
            ("samples", &self.samples),
            ("rel_tol", &self.rel_tol),
            ("abs_tol", &self.abs_tol),
            ("max_step", &self.max_step),
            ("window", &self.window),
            ("eps_fp", &self.eps_fp),
            ("eps_rec", &self.eps_rec),
            ("execution", &self.execution),
        ];
        flags
            .into_iter()
            .filter_map(|(k, v)| v.as_ref().map(|v| (k.to_string(), v.clone())))
            .collect()
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = (|| {
        let text = match &cli.config {
            Some(path) => std::fs::read_to_string(path)?,
            None => String::new(),
        };
        let config = parse_config(&text, &cli.overrides(), Some(cli.command.into()))
            .map_err(|e: ConfigError| RunError::Config(e))?;
        run(&config)
    })();
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qsync: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
