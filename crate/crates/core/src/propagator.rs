//! Time-local second-order master equation in the dressed basis, integrated
//! together with its three memory kernels.

use num_complex::Complex64;

use crate::bath::{memory_rhs, MemoryCoefficients};
use crate::error::{Error, Result};
use crate::integrator::{self, StepControl, Vector};
use crate::matrix::Mat2;
use crate::model::{Convention, DressedFrame, Frame, QubitState, SystemParams};

/// States with a Hermitian-part eigenvalue below this are reported.
pub const POSITIVITY_WARNING: f64 = -1e-6;
/// Trace drift that is still corrected by renormalisation.
pub const TRACE_RENORMALIZE_LIMIT: f64 = 1e-7;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// `dρ/dt` for a dressed-frame state with the given kernel values.
///
/// The nine operator sandwiches of the dissipator are written out
/// element-wise for `ρ = [[a, b], [c, d]]` in `(|1̄⟩, |0̄⟩)` order.
pub fn master_rhs(
    state: &QubitState,
    coeffs: &MemoryCoefficients,
    frame: &DressedFrame,
) -> Result<Mat2> {
    if state.frame != Frame::Dressed {
        return Err(Error::FrameMismatch {
            expected: Frame::Dressed,
            found: state.frame,
        });
    }
    Ok(dressed_rhs(&state.rho, &coeffs.as_array(), frame))
}

#[inline]
fn dressed_rhs(rho: &Mat2, gammas: &[Complex64; 3], frame: &DressedFrame) -> Mat2 {
    let [[a, b], [c, d]] = rho.0;
    let [g1, g2, g3] = *gammas;
    let (p0, pp, pm) = (frame.p0, frame.p_plus, frame.p_minus);

    // Γ1: σz sandwiches weighted by P0², P0P+, P0P−
    let w1 = g1 * (p0 * p0);
    let w2 = g1 * (p0 * pp);
    let w3 = g1 * (p0 * pm);
    // Γ2: σ+ sandwiches weighted by P−P0, P−P+, P−²
    let w4 = g2 * (pm * p0);
    let w5 = g2 * (pm * pp);
    let w6 = g2 * (pm * pm);
    // Γ3: σ− sandwiches weighted by P+P0, P+², P+P−
    let w7 = g3 * (pp * p0);
    let w8 = g3 * (pp * pp);
    let w9 = g3 * (pp * pm);

    let d00 = w2 * c + w3 * b + w6 * d - w8 * a;
    let d01 = -w1 * (2.0 * b) + w2 * (a + d) - w4 * (2.0 * d) + w5 * c - w8 * b;
    let d10 = -w1 * (2.0 * c) - w3 * (a + d) - w6 * c + w7 * (2.0 * a) + w9 * b;
    let d11 = -w2 * c - w3 * b - w6 * d + w8 * a;

    let delta = frame.delta_rabi;
    // −(iδ/2)[σz, ρ] plus D + D†
    Mat2([
        [d00 + d00.conj(), -I * delta * b + d01 + d10.conj()],
        [I * delta * c + d10 + d01.conj(), d11 + d11.conj()],
    ])
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionConfig {
    pub t_end: f64,
    pub sample_times: Vec<f64>,
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Step ceiling; `None` derives it from the fastest time scale.
    pub max_step: Option<f64>,
    /// Fraction of the fastest period used when `max_step` is `None`.
    pub max_step_scale: f64,
}

impl EvolutionConfig {
    pub const DEFAULT_REL_TOL: f64 = 1e-8;
    pub const DEFAULT_ABS_TOL: f64 = 1e-10;
    pub const DEFAULT_MAX_STEP_SCALE: f64 = 0.01;
    pub const MIN_REL_TOL: f64 = 100.0 * f64::EPSILON;

    /// `n_intervals + 1` evenly spaced samples on `[0, t_end]`.
    pub fn uniform(t_end: f64, n_intervals: usize) -> Self {
        let n = n_intervals.max(1);
        let sample_times = (0..=n)
            .map(|i| if i == n { t_end } else { t_end * i as f64 / n as f64 })
            .collect();
        EvolutionConfig {
            t_end,
            sample_times,
            rel_tol: Self::DEFAULT_REL_TOL,
            abs_tol: Self::DEFAULT_ABS_TOL,
            max_step: None,
            max_step_scale: Self::DEFAULT_MAX_STEP_SCALE,
        }
    }

    pub fn with_tolerances(self, rel_tol: f64, abs_tol: f64) -> Self {
        EvolutionConfig {
            rel_tol,
            abs_tol,
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return Err(Error::InvalidParams("t_end must be finite and > 0".into()));
        }
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(Error::InvalidParams("tolerances must be > 0".into()));
        }
        if self.rel_tol < Self::MIN_REL_TOL {
            return Err(Error::InvalidParams(format!(
                "rel_tol must be >= {:e} (below round-off)",
                Self::MIN_REL_TOL
            )));
        }
        if !(self.max_step_scale > 0.0 && self.max_step_scale.is_finite()) {
            return Err(Error::InvalidParams("max_step_scale must be > 0".into()));
        }
        if let Some(h) = self.max_step {
            if !(h > 0.0) {
                return Err(Error::InvalidParams("max_step must be > 0".into()));
            }
        }
        if self.sample_times.is_empty() {
            return Err(Error::InvalidParams("sample_times is empty".into()));
        }
        if self
            .sample_times
            .iter()
            .any(|&t| !(0.0..=self.t_end).contains(&t))
        {
            return Err(Error::InvalidParams(
                "sample_times must lie within [0, t_end]".into(),
            ));
        }
        if self.sample_times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParams(
                "sample_times must be strictly increasing".into(),
            ));
        }
        Ok(())
    }

    /// `scale · min(1/δ, 1/(ωL+δ), 1/λ)`, capped at `t_end/100`.
    pub fn effective_max_step(&self, params: &SystemParams, frame: &DressedFrame) -> f64 {
        self.max_step.unwrap_or_else(|| {
            let fastest = frame
                .delta_rabi
                .max(params.omega_laser() + frame.delta_rabi)
                .max(params.lambda_cutoff);
            (self.max_step_scale / fastest).min(self.t_end / 100.0)
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    /// Dressed-frame state.
    pub state: QubitState,
    pub coeffs: MemoryCoefficients,
}

impl Sample {
    pub fn time(&self) -> f64 {
        self.state.time
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositivityWarning {
    pub time: f64,
    pub min_eigenvalue: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub params: SystemParams,
    pub frame: DressedFrame,
    pub positivity_warnings: Vec<PositivityWarning>,
    pub stats: integrator::Stats,
}

impl Trajectory {
    /// Sample states rotated into the bare rotating frame.
    pub fn bare_states(&self) -> Vec<QubitState> {
        self.samples
            .iter()
            .map(|s| {
                s.state
                    .rotate_to_bare(&self.frame)
                    .expect("trajectory samples are dressed")
            })
            .collect()
    }

    /// Sample states in the basis selected by `convention`.
    pub fn observed_states(&self, convention: Convention) -> Vec<QubitState> {
        match convention {
            Convention::DressedBasis => self.samples.iter().map(|s| s.state).collect(),
            Convention::BareBasis => self.bare_states(),
        }
    }

    pub fn observed_at(&self, index: usize, convention: Convention) -> QubitState {
        let s = self.samples[index].state;
        match convention {
            Convention::DressedBasis => s,
            Convention::BareBasis => s
                .rotate_to_bare(&self.frame)
                .expect("trajectory samples are dressed"),
        }
    }

    pub fn last(&self) -> &Sample {
        self.samples.last().expect("trajectory is never empty")
    }

    /// Index of the sample taken at exactly `t`.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        self.samples.iter().position(|s| s.time() == t)
    }
}

fn pack(rho: &Mat2) -> Vector<7> {
    let z = Complex64::new(0.0, 0.0);
    [rho.0[0][0], rho.0[0][1], rho.0[1][0], rho.0[1][1], z, z, z]
}

fn unpack_rho(y: &Vector<7>) -> Mat2 {
    Mat2([[y[0], y[1]], [y[2], y[3]]])
}

/// Co-integrates the dressed-frame density matrix and the memory kernels.
///
/// A bare-rotating initial state is rotated into the dressed basis first; a
/// dressed initial state is used as is.
pub fn evolve(
    initial: &QubitState,
    params: &SystemParams,
    config: &EvolutionConfig,
) -> Result<Trajectory> {
    params.validate()?;
    config.validate()?;
    initial.validate()?;
    let frame = DressedFrame::new(params)?;
    let start = match initial.frame {
        Frame::BareRotating => initial.rotate_to_dressed(&frame)?,
        Frame::Dressed => *initial,
        Frame::Lab => {
            return Err(Error::FrameMismatch {
                expected: Frame::BareRotating,
                found: Frame::Lab,
            })
        }
    };

    let control = StepControl {
        rel_tol: config.rel_tol,
        abs_tol: config.abs_tol,
        max_step: config.effective_max_step(params, &frame),
    };

    let omega_l = params.omega_laser();
    let delta = frame.delta_rabi;
    let rhs = |t: f64, y: &Vector<7>| -> Vector<7> {
        let rho = unpack_rho(y);
        let dr = dressed_rhs(&rho, &[y[4], y[5], y[6]], &frame);
        let c = crate::bath::correlation(t, params);
        let laser = c * Complex64::cis(omega_l * t);
        let rabi = Complex64::cis(delta * t);
        [
            dr.0[0][0],
            dr.0[0][1],
            dr.0[1][0],
            dr.0[1][1],
            laser,
            laser / rabi,
            laser * rabi,
        ]
    };
    debug_assert!({
        let y = pack(&start.rho);
        let m = memory_rhs(0.3, params, &frame);
        let r = rhs(0.3, &y);
        (0..3).all(|k| (r[4 + k] - m[k]).norm() <= 1e-12 * (1.0 + m[k].norm()))
    });

    let project = |t: f64, y: &mut Vector<7>| -> Result<()> {
        let rho = unpack_rho(y).hermitian_part();
        let tr = rho.trace().re;
        let drift = (tr - 1.0).abs();
        if drift >= TRACE_RENORMALIZE_LIMIT {
            return Err(Error::TraceDrift { t, drift });
        }
        let rho = rho * (1.0 / tr);
        y[0] = rho.0[0][0];
        y[1] = rho.0[0][1];
        y[2] = rho.0[1][0];
        y[3] = rho.0[1][1];
        Ok(())
    };

    let (ys, stats) = integrator::integrate(
        rhs,
        0.0,
        pack(&start.rho),
        &config.sample_times,
        &control,
        project,
    )?;

    let mut positivity_warnings = Vec::new();
    let samples = config
        .sample_times
        .iter()
        .zip(ys)
        .map(|(&t, y)| {
            let state = QubitState::new(unpack_rho(&y), Frame::Dressed, t);
            let min_eigenvalue = state.min_eigenvalue();
            if min_eigenvalue < POSITIVITY_WARNING {
                positivity_warnings.push(PositivityWarning {
                    time: t,
                    min_eigenvalue,
                });
            }
            Sample {
                state,
                coeffs: MemoryCoefficients::from_array([y[4], y[5], y[6]], t),
            }
        })
        .collect();

    Ok(Trajectory {
        samples,
        params: *params,
        frame,
        positivity_warnings,
        stats,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceReport {
    pub rel_tol: f64,
    /// Largest elementwise |Δρ| over all samples between `rel_tol` and `rel_tol/10`.
    pub max_deviation: f64,
    pub max_deviation_time: f64,
}

/// Runs `evolve` at the configured tolerances and at a tenth of them.
pub fn halve_step_convergence(
    initial: &QubitState,
    params: &SystemParams,
    config: &EvolutionConfig,
) -> Result<ConvergenceReport> {
    let coarse = evolve(initial, params, config)?;
    let fine_config = config
        .clone()
        .with_tolerances(config.rel_tol / 10.0, config.abs_tol / 10.0);
    let fine = evolve(initial, params, &fine_config)?;
    let (mut max_deviation, mut max_deviation_time) = (0.0, 0.0);
    for (a, b) in coarse.samples.iter().zip(&fine.samples) {
        let dev = (a.state.rho - b.state.rho).max_abs();
        if dev > max_deviation {
            max_deviation = dev;
            max_deviation_time = a.time();
        }
    }
    Ok(ConvergenceReport {
        rel_tol: config.rel_tol,
        max_deviation,
        max_deviation_time,
    })
}
