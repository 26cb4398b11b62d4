//! Command dispatch.

use std::f64::consts::TAU;
use std::fs::File;
use std::io::{self, BufWriter, Write};

use qsync_core::limit_cycle::{classify_lab, lab_trajectory};
use qsync_core::model::DressedFrame;
use qsync_core::observables::{bloch_rotating, husimi_grid, s_max};
use qsync_core::propagator::{evolve, Trajectory};
use qsync_core::sweep::{run_sweep_with, tongue_mask, SweepSpec};
use qsync_core::Error as CoreError;
use thiserror::Error;

use crate::config::{Command, ConfigError, RunConfig};
use crate::output::{format_number, write_table, Table};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Core(#[from] CoreError),
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Core(e) => match e {
                CoreError::ToleranceFailure { .. } | CoreError::TraceDrift { .. } | CoreError::FrameMismatch { .. } => 3,
                _ => 2,
            },
            RunError::Io(_) => 4,
        }
    }
}

/// Everything needed to rerun: the full config (minus the output path and
/// execution mode, which do not affect results), derived frequencies and
/// the artifact version.
pub fn metadata(config: &RunConfig) -> Vec<(String, String)> {
    let mut out = vec![("version".to_string(), env!("CARGO_PKG_VERSION").to_string())];
    for line in config.to_config_text().lines() {
        if let Some((k, v)) = line.split_once(" = ") {
            if k != "out" && k != "execution" {
                out.push((k.to_string(), v.to_string()));
            }
        }
    }
    let p = &config.params;
    out.push(("omega_laser".into(), p.omega_laser().to_string()));
    out.push(("regime".into(), p.regime().to_string()));
    if let Ok(frame) = DressedFrame::new(p) {
        let evolution = config.evolution();
        out.push(("delta_rabi".into(), frame.delta_rabi.to_string()));
        out.push(("max_step_effective".into(), evolution.effective_max_step(p, &frame).to_string()));
    }
    out
}

fn trajectory_stats(traj: &Trajectory) -> Vec<(String, String)> {
    vec![
        ("accepted_steps".into(), traj.stats.accepted.to_string()),
        ("rejected_steps".into(), traj.stats.rejected.to_string()),
        ("positivity_warnings".into(), traj.positivity_warnings.len().to_string()),
    ]
}

fn run_evolve(config: &RunConfig) -> Result<Table, RunError> {
    let traj = evolve(&config.initial_state(), &config.params, &config.evolution())?;
    let rows = (0..traj.samples.len())
        .map(|k| {
            let s = traj.observed_at(k, config.basis);
            let m = s_max(&s);
            let v = bloch_rotating(&s)?;
            let g = traj.samples[k].coeffs.as_array();
            Ok(vec![
                s.time,
                s.rho11(),
                s.rho00(),
                s.rho10().re,
                s.rho10().im,
                s.rho10().norm(),
                m.value,
                m.phi,
                v.mx,
                v.my,
                v.mz,
                g[0].re,
                g[0].im,
                g[1].re,
                g[1].im,
                g[2].re,
                g[2].im,
            ])
        })
        .collect::<Result<Vec<_>, CoreError>>()?;
    Ok(Table {
        metadata: metadata(config),
        columns: vec![
            "t", "rho11", "rho00", "re_rho10", "im_rho10", "abs_rho10", "s_max", "phi_star", "mx", "my", "mz",
            "re_gamma1", "im_gamma1", "re_gamma2", "im_gamma2", "re_gamma3", "im_gamma3",
        ],
        rows,
        summary: trajectory_stats(&traj),
        diagnostics: vec![],
    })
}

fn run_qfunc(config: &RunConfig) -> Result<Table, RunError> {
    let traj = evolve(&config.initial_state(), &config.params, &config.evolution())?;
    let k = traj.index_of(config.t_eval()).expect("t_eval is sampled");
    let state = traj.observed_at(k, config.basis);
    let grid = husimi_grid(&state, config.n_theta, config.n_phi, config.execution)?;
    let mut rows = Vec::with_capacity(config.n_theta * config.n_phi);
    for (row, &theta) in grid.values.iter().zip(&grid.theta_axis) {
        for (&q, &phi) in row.iter().zip(&grid.phi_axis) {
            rows.push(vec![theta, phi, q, grid.time]);
        }
    }
    let (theta_max, phi_max, q_max) = grid.argmax();
    let m = s_max(&state);
    let mut summary = vec![
        ("sphere_integral".to_string(), format_number(grid.sphere_integral())),
        ("q_max".into(), format_number(q_max)),
        ("theta_at_max".into(), format_number(theta_max)),
        ("phi_at_max".into(), format_number(phi_max)),
        ("s_max".into(), format_number(m.value)),
        ("phi_star".into(), format_number(m.phi)),
    ];
    summary.extend(trajectory_stats(&traj));
    Ok(Table {
        metadata: metadata(config),
        columns: vec!["theta", "phi", "q", "time"],
        rows,
        summary,
        diagnostics: vec![],
    })
}

fn run_sweep(config: &RunConfig) -> Result<Table, RunError> {
    let (axis1, axis2) = config.grid.expect("validated sweep config has a grid");
    let spec = SweepSpec {
        axis1,
        axis2,
        fixed: config.params,
        t_eval: config.t_eval(),
        evolution: config.evolution(),
        convention: config.basis,
    };
    let grid = run_sweep_with(&spec, &config.initial_state(), config.execution)?;
    let mut rows = Vec::with_capacity(axis1.n_points * axis2.n_points);
    for (i, row) in grid.values.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            rows.push(vec![axis1.value(i), axis2.value(j), v]);
        }
    }
    let mask = tongue_mask(&grid, config.threshold);
    let masked = mask.cells.iter().flatten().filter(|&&c| c).count();
    let summary = vec![
        ("axis1".to_string(), axis1.name.to_string()),
        ("axis2".into(), axis2.name.to_string()),
        ("max_s_max".into(), format_number(grid.max_value())),
        ("masked_cells".into(), masked.to_string()),
        ("components".into(), mask.component_sizes.len().to_string()),
        (
            "largest_component".into(),
            mask.largest_component().map_or(0, |id| mask.component_sizes[id]).to_string(),
        ),
        ("failed_cells".into(), grid.failures.len().to_string()),
        ("positivity_flagged_cells".into(), grid.metadata.positivity_flags.to_string()),
    ];
    let diagnostics = grid
        .failures
        .iter()
        .map(|f| {
            format!(
                "{},{}: {}",
                format_number(axis1.value(f.i)),
                format_number(axis2.value(f.j)),
                f.message
            )
        })
        .collect();
    Ok(Table {
        metadata: metadata(config),
        columns: vec!["axis1", "axis2", "s_max"],
        rows,
        summary,
        diagnostics,
    })
}

fn run_trajectory(config: &RunConfig) -> Result<Table, RunError> {
    let traj = evolve(&config.initial_state(), &config.params, &config.evolution())?;
    let points = lab_trajectory(&traj, traj.samples.len(), config.basis)?;
    let window = config.window();
    let class = classify_lab(&points, window, &config.classify_options())?;
    let rows = points
        .iter()
        .map(|p| {
            vec![
                p.t,
                p.rotating.mx,
                p.rotating.my,
                p.rotating.mz,
                p.lab.mx,
                p.lab.my,
                p.lab.mz,
            ]
        })
        .collect();
    let mut summary = vec![
        ("verdict".to_string(), class.verdict.to_string()),
        ("recurrence_distance".into(), format_number(class.recurrence_distance)),
        (
            "period_estimate".into(),
            class.period_estimate.map_or("none".into(), format_number),
        ),
        ("lab_period".into(), format_number(TAU / config.params.omega_laser())),
        ("transient_cut".into(), format_number(class.transient_cut)),
        ("window".into(), format_number(window)),
    ];
    summary.extend(trajectory_stats(&traj));
    Ok(Table {
        metadata: metadata(config),
        columns: vec!["t", "mx", "my", "mz", "mxp", "myp", "mzp"],
        rows,
        summary,
        diagnostics: vec![],
    })
}

pub fn build_table(config: &RunConfig) -> Result<Table, RunError> {
    match config.command {
        Command::Evolve => run_evolve(config),
        Command::Qfunc => run_qfunc(config),
        Command::Sweep => run_sweep(config),
        Command::Trajectory => run_trajectory(config),
    }
}

/// Runs the command and writes its table to `config.out` or stdout.
pub fn run(config: &RunConfig) -> Result<(), RunError> {
    let table = build_table(config)?;
    match &config.out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            write_table(&table, config.format, &mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut w = BufWriter::new(stdout.lock());
            write_table(&table, config.format, &mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_by_error_class() {
        let code = |e: RunError| e.exit_code();
        assert_eq!(code(ConfigError::Validation("x".into()).into()), 2);
        assert_eq!(code(CoreError::InvalidParams("x".into()).into()), 2);
        assert_eq!(code(CoreError::Aliasing(1.0).into()), 2);
        assert_eq!(code(CoreError::ToleranceFailure { t: 1.0, h: 1e-15 }.into()), 3);
        assert_eq!(code(CoreError::TraceDrift { t: 1.0, drift: 1e-3 }.into()), 3);
        assert_eq!(code(io::Error::other("disk").into()), 4);
    }
}
