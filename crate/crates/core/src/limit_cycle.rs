//! Lab-frame Bloch trajectories and their classification as fixed points or
//! closed curves.
//!
//! The classifier works directly in Euclidean 3-space. A point of the final
//! window recurs if, walking backwards in time, the curve first leaves its
//! `ε_rec` neighbourhood and later comes back into it; the recurrence lag is
//! the time to the closest point of that return, refined by a parabola
//! through the squared distances.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::model::Convention;
use crate::observables::{bloch_lab, bloch_rotating, BlochVector};
use crate::propagator::Trajectory;

/// Largest admissible phase advance `ωL·Δt` between consecutive samples.
pub const ALIASING_LIMIT: f64 = PI / 8.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabPoint {
    pub t: f64,
    pub rotating: BlochVector,
    pub lab: BlochVector,
}

impl LabPoint {
    pub fn position(&self) -> [f64; 3] {
        self.lab.as_array()
    }
}

/// Picks `n_samples` trajectory samples evenly by index (first and last
/// included) and maps them to the lab frame.
pub fn lab_trajectory(
    traj: &Trajectory,
    n_samples: usize,
    convention: Convention,
) -> Result<Vec<LabPoint>> {
    let len = traj.samples.len();
    if n_samples < 2 || n_samples > len {
        return Err(Error::InsufficientData(format!(
            "need 2 <= n_samples <= {len}, got {n_samples}"
        )));
    }
    let omega_laser = traj.params.omega_laser();
    let indices: Vec<usize> = (0..n_samples)
        .map(|k| (k as f64 * (len - 1) as f64 / (n_samples - 1) as f64).round() as usize)
        .collect();
    for pair in indices.windows(2) {
        let dt = traj.samples[pair[1]].time() - traj.samples[pair[0]].time();
        if omega_laser * dt > ALIASING_LIMIT * (1.0 + 1e-12) {
            return Err(Error::Aliasing(omega_laser * dt));
        }
    }
    indices
        .into_iter()
        .map(|k| {
            let state = traj.observed_at(k, convention);
            let rotating = bloch_rotating(&state)?;
            Ok(LabPoint {
                t: state.time,
                rotating,
                lab: bloch_lab(&rotating, state.time, omega_laser)?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    FixedPoint,
    LimitCycle,
    Undecided,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::FixedPoint => "fixed_point",
            Verdict::LimitCycle => "limit_cycle",
            Verdict::Undecided => "undecided",
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifyOptions {
    pub eps_fixed_point: f64,
    pub eps_recurrence: f64,
    /// Largest accepted `(max − min) / median` of the recurrence lags.
    pub max_lag_spread: f64,
    /// Absolute time before which points are ignored; defaults to the middle
    /// of the span.
    pub transient_cut: Option<f64>,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions {
            eps_fixed_point: 1e-3,
            eps_recurrence: 1e-2,
            max_lag_spread: 0.1,
            transient_cut: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryClass {
    pub verdict: Verdict,
    /// Window diameter for a fixed point, otherwise the worst closest-return
    /// distance over the final window (infinite if some point never returns).
    pub recurrence_distance: f64,
    pub period_estimate: Option<f64>,
    pub transient_cut: f64,
}

fn dist2(a: [f64; 3], b: [f64; 3]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)
}

/// Closest return of point `k` among `pos[first..k]`: `(lag, distance)`.
///
/// Sampled positions can step over the `eps` ball, so returns are detected
/// as local minima of the distance, refined by a parabola in time.
fn closest_return(
    pos: &[[f64; 3]],
    t: &[f64],
    first: usize,
    k: usize,
    eps: f64,
) -> Option<(f64, f64)> {
    let eps2 = eps * eps;
    let p = pos[k];
    let d = |m: usize| dist2(pos[m], p);
    let mut m = k;
    // Leave the neighbourhood of p.
    loop {
        if m <= first + 1 {
            return None;
        }
        m -= 1;
        if d(m) > eps2 {
            break;
        }
    }
    while m > first + 1 {
        m -= 1;
        let (fm, f0, fp) = (d(m - 1), d(m), d(m + 1));
        if f0 > fp || f0 > fm {
            continue;
        }
        let curvature = fm - 2.0 * f0 + fp;
        let (x, d_min) = if curvature > 0.0 {
            let x = 0.5 * (fm - fp) / curvature;
            (x, (f0 - 0.125 * (fm - fp).powi(2) / curvature).max(0.0))
        } else {
            (0.0, f0)
        };
        if d_min <= eps2 {
            let t_min = t[m] + x * 0.5 * (t[m + 1] - t[m - 1]);
            return Some((t[k] - t_min, d_min.sqrt()));
        }
    }
    None
}

/// Classifies a lab-frame curve given as `(t, position)` pairs with
/// increasing `t`.
pub fn classify(
    points: &[(f64, [f64; 3])],
    window: f64,
    options: &ClassifyOptions,
) -> Result<TrajectoryClass> {
    if points.len() < 2 || !(window > 0.0) {
        return Err(Error::InsufficientData("need at least two points and window > 0".into()));
    }
    let t: Vec<f64> = points.iter().map(|p| p.0).collect();
    let pos: Vec<[f64; 3]> = points.iter().map(|p| p.1).collect();
    let (t0, t1) = (t[0], t[t.len() - 1]);
    let cut = options.transient_cut.unwrap_or(0.5 * (t0 + t1));
    if t1 - cut < 3.0 * window {
        return Err(Error::InsufficientData(format!(
            "post-transient span {} is shorter than 3 windows of {window}",
            t1 - cut
        )));
    }
    let first = t.partition_point(|&x| x < cut);
    let window_start = t.partition_point(|&x| x < t1 - window);

    let tail = &pos[window_start..];
    let mut diameter2: f64 = 0.0;
    for (a, &p) in tail.iter().enumerate() {
        for &q in &tail[a + 1..] {
            diameter2 = diameter2.max(dist2(p, q));
        }
    }
    let diameter = diameter2.sqrt();
    if diameter < options.eps_fixed_point {
        return Ok(TrajectoryClass {
            verdict: Verdict::FixedPoint,
            recurrence_distance: diameter,
            period_estimate: None,
            transient_cut: cut,
        });
    }

    let mut lags = Vec::with_capacity(tail.len());
    let mut worst: f64 = 0.0;
    for k in window_start..pos.len() {
        match closest_return(&pos, &t, first, k, options.eps_recurrence) {
            Some((lag, d)) => {
                lags.push(lag);
                worst = worst.max(d);
            }
            None => {
                worst = f64::INFINITY;
                break;
            }
        }
    }
    let undecided = TrajectoryClass {
        verdict: Verdict::Undecided,
        recurrence_distance: worst,
        period_estimate: None,
        transient_cut: cut,
    };
    if worst.is_infinite() || lags.is_empty() {
        return Ok(undecided);
    }
    lags.sort_by(f64::total_cmp);
    let n = lags.len();
    let median = if n % 2 == 1 {
        lags[n / 2]
    } else {
        0.5 * (lags[n / 2 - 1] + lags[n / 2])
    };
    let spread = (lags[n - 1] - lags[0]) / median;
    if median > 0.0 && spread < options.max_lag_spread {
        Ok(TrajectoryClass {
            verdict: Verdict::LimitCycle,
            recurrence_distance: worst,
            period_estimate: Some(median),
            transient_cut: cut,
        })
    } else {
        Ok(undecided)
    }
}

/// [`classify`] over the lab-frame positions of `points`.
pub fn classify_lab(points: &[LabPoint], window: f64, options: &ClassifyOptions) -> Result<TrajectoryClass> {
    let series: Vec<(f64, [f64; 3])> = points.iter().map(|p| (p.t, p.position())).collect();
    classify(&series, window, options)
}
