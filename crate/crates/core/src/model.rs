//! Physical parameters of the driven qubit and its dressed-basis description.
//!
//! All frequencies and rates are dimensionless, measured in units of the
//! reference relaxation rate γ0; times are in units of 1/γ0.

use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matrix::Mat2;

/// Bare transition frequency used when none is given. Only the laser
/// frequency `ω0 − Δ` enters the dynamics, through the memory kernels, and
/// it sets the precession rate of lab-frame trajectories. Calibrated so that
/// the Markov preset relaxes to within 0.1 of the ground-state pole by
/// γ0t = 300.
pub const DEFAULT_OMEGA_QUBIT: f64 = 10.0;

/// Bath cutoff of the Markov preset.
pub const MARKOV_CUTOFF: f64 = 5.0;
/// Bath cutoff of the non-Markov preset.
pub const NON_MARKOV_CUTOFF: f64 = 0.01;
/// System-bath coupling shared by both presets.
pub const PRESET_COUPLING: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    /// Δ = ω0 − ωL
    pub delta_detuning: f64,
    /// ε, laser drive strength
    pub epsilon_drive: f64,
    /// ω0, bare transition frequency
    pub omega_qubit: f64,
    /// γ, system-bath coupling
    pub gamma_coupling: f64,
    /// λ, Ohmic cutoff
    pub lambda_cutoff: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Markov,
    NonMarkov,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Regime::Markov => f.write_str("markov"),
            Regime::NonMarkov => f.write_str("non-markov"),
        }
    }
}

impl SystemParams {
    pub fn new(
        delta_detuning: f64,
        epsilon_drive: f64,
        omega_qubit: f64,
        gamma_coupling: f64,
        lambda_cutoff: f64,
    ) -> Result<Self> {
        let p = SystemParams {
            delta_detuning,
            epsilon_drive,
            omega_qubit,
            gamma_coupling,
            lambda_cutoff,
        };
        p.validate()?;
        Ok(p)
    }

    /// λ = 5, γ = 0.1, Δ = ε = 1.
    pub fn markov() -> Self {
        SystemParams {
            delta_detuning: 1.0,
            epsilon_drive: 1.0,
            omega_qubit: DEFAULT_OMEGA_QUBIT,
            gamma_coupling: PRESET_COUPLING,
            lambda_cutoff: MARKOV_CUTOFF,
        }
    }

    /// λ = 0.01, γ = 0.1, Δ = ε = 1.
    pub fn non_markov() -> Self {
        SystemParams {
            lambda_cutoff: NON_MARKOV_CUTOFF,
            ..Self::markov()
        }
    }

    pub fn with_detuning(self, delta_detuning: f64) -> Self {
        SystemParams {
            delta_detuning,
            ..self
        }
    }

    pub fn with_drive(self, epsilon_drive: f64) -> Self {
        SystemParams {
            epsilon_drive,
            ..self
        }
    }

    pub fn with_coupling(self, gamma_coupling: f64) -> Self {
        SystemParams {
            gamma_coupling,
            ..self
        }
    }

    /// ωL = ω0 − Δ
    pub fn omega_laser(&self) -> f64 {
        self.omega_qubit - self.delta_detuning
    }

    pub fn regime(&self) -> Regime {
        if self.lambda_cutoff > 2.0 * self.gamma_coupling {
            Regime::Markov
        } else {
            Regime::NonMarkov
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.delta_detuning,
            self.epsilon_drive,
            self.omega_qubit,
            self.gamma_coupling,
            self.lambda_cutoff,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidParams("all parameters must be finite".into()));
        }
        if self.epsilon_drive < 0.0 {
            return Err(Error::InvalidParams("epsilon_drive must be >= 0".into()));
        }
        if self.gamma_coupling < 0.0 {
            return Err(Error::InvalidParams("gamma_coupling must be >= 0".into()));
        }
        if self.lambda_cutoff <= 0.0 {
            return Err(Error::InvalidParams("lambda_cutoff must be > 0".into()));
        }
        if self.omega_qubit <= 0.0 {
            return Err(Error::InvalidParams("omega_qubit must be > 0".into()));
        }
        if self.omega_laser() <= 0.0 {
            return Err(Error::InvalidParams(
                "omega_laser = omega_qubit - delta_detuning must be > 0".into(),
            ));
        }
        Ok(())
    }
}

/// Eigen-decomposition of the rotating-frame Hamiltonian `(Δσz + εσx)/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DressedFrame {
    /// δ = √(Δ² + ε²)
    pub delta_rabi: f64,
    /// Mixing angle θ ∈ [0, π] with tan θ = ε/Δ.
    pub theta_mix: f64,
    pub p0: f64,
    pub p_plus: f64,
    pub p_minus: f64,
}

impl DressedFrame {
    pub fn new(params: &SystemParams) -> Result<Self> {
        let delta = params.delta_detuning;
        let eps = params.epsilon_drive;
        let delta_rabi = delta.hypot(eps);
        if delta_rabi == 0.0 {
            return Err(Error::DegenerateFrame);
        }
        Ok(DressedFrame {
            delta_rabi,
            theta_mix: eps.atan2(delta),
            p0: eps / (2.0 * delta_rabi),
            p_plus: (delta + delta_rabi) / (2.0 * delta_rabi),
            p_minus: (delta - delta_rabi) / (2.0 * delta_rabi),
        })
    }

    /// Real rotation whose columns are the dressed states expressed in the
    /// bare basis: `|1̄⟩ = c|1⟩ + s|0⟩`, `|0̄⟩ = −s|1⟩ + c|0⟩`.
    pub fn rotation(&self) -> Mat2 {
        let (s, c) = (0.5 * self.theta_mix).sin_cos();
        Mat2::from_real([[c, -s], [s, c]])
    }
}

pub fn build_dressed_frame(params: &SystemParams) -> Result<DressedFrame> {
    DressedFrame::new(params)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Frame {
    Dressed,
    BareRotating,
    Lab,
}

impl fmt::Display for Frame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Frame::Dressed => f.write_str("dressed"),
            Frame::BareRotating => f.write_str("bare_rotating"),
            Frame::Lab => f.write_str("lab"),
        }
    }
}

/// Basis in which initial states are prepared and observables are read off.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Convention {
    /// The dressed eigenbasis in which the master equation is written.
    #[default]
    DressedBasis,
    /// The bare `{|1⟩, |0⟩}` basis of the frame rotating at ωL.
    BareBasis,
}

impl Convention {
    pub fn frame(self) -> Frame {
        match self {
            Convention::DressedBasis => Frame::Dressed,
            Convention::BareBasis => Frame::BareRotating,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Convention::DressedBasis => "dressed",
            Convention::BareBasis => "bare",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "dressed" => Some(Convention::DressedBasis),
            "bare" => Some(Convention::BareBasis),
            _ => None,
        }
    }
}

/// Trace tolerance for a valid density matrix.
pub const TRACE_TOL: f64 = 1e-9;
/// Eigenvalues below `-POSITIVITY_TOL` are flagged.
pub const POSITIVITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitState {
    pub rho: Mat2,
    pub frame: Frame,
    pub time: f64,
}

impl QubitState {
    pub fn new(rho: Mat2, frame: Frame, time: f64) -> Self {
        QubitState { rho, frame, time }
    }

    /// State with Bloch vector `(x, y, z)`, `ρ = (I + x σx + y σy + z σz)/2`.
    pub fn from_bloch(frame: Frame, [x, y, z]: [f64; 3]) -> Result<Self> {
        let r2 = x * x + y * y + z * z;
        if !(r2 <= 1.0 + 1e-12) {
            return Err(Error::Domain(format!(
                "Bloch vector length {} exceeds 1",
                r2.sqrt()
            )));
        }
        // ρ10 = (x - i y)/2 with σy = [[0, -i], [i, 0]] in (|1⟩, |0⟩) order.
        let rho = Mat2::new(
            Complex64::new(0.5 * (1.0 + z), 0.0),
            Complex64::new(0.5 * x, -0.5 * y),
            Complex64::new(0.5 * x, 0.5 * y),
            Complex64::new(0.5 * (1.0 - z), 0.0),
        );
        Ok(QubitState::new(rho, frame, 0.0))
    }

    /// `|+⟩ = (|0⟩ + |1⟩)/√2`
    pub fn plus(frame: Frame) -> Self {
        QubitState::new(Mat2::from_real([[0.5, 0.5], [0.5, 0.5]]), frame, 0.0)
    }

    pub fn excited(frame: Frame) -> Self {
        QubitState::new(Mat2::from_real([[1.0, 0.0], [0.0, 0.0]]), frame, 0.0)
    }

    pub fn ground(frame: Frame) -> Self {
        QubitState::new(Mat2::from_real([[0.0, 0.0], [0.0, 1.0]]), frame, 0.0)
    }

    pub fn maximally_mixed(frame: Frame) -> Self {
        QubitState::new(Mat2::from_real([[0.5, 0.0], [0.0, 0.5]]), frame, 0.0)
    }

    pub fn at_time(self, time: f64) -> Self {
        QubitState { time, ..self }
    }

    pub fn rho11(&self) -> f64 {
        self.rho.get(0, 0).re
    }

    pub fn rho00(&self) -> f64 {
        self.rho.get(1, 1).re
    }

    /// ρ10 = ⟨1|ρ|0⟩
    pub fn rho10(&self) -> Complex64 {
        self.rho.get(0, 1)
    }

    pub fn rho01(&self) -> Complex64 {
        self.rho.get(1, 0)
    }

    pub fn trace_defect(&self) -> f64 {
        (self.rho.trace() - 1.0).norm()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.rho.hermitian_eigenvalues()[0]
    }

    /// Checks Hermiticity, unit trace and positivity at the default tolerances.
    pub fn validate(&self) -> Result<()> {
        if self.rho.hermiticity_defect() > 1e-9 {
            return Err(Error::Domain("density matrix is not Hermitian".into()));
        }
        if self.trace_defect() > TRACE_TOL {
            return Err(Error::Domain(format!(
                "density matrix trace deviates from one by {:e}",
                self.trace_defect()
            )));
        }
        if self.min_eigenvalue() < -POSITIVITY_TOL {
            return Err(Error::Domain(format!(
                "density matrix has negative eigenvalue {:e}",
                self.min_eigenvalue()
            )));
        }
        Ok(())
    }

    fn expect_frame(&self, expected: Frame) -> Result<()> {
        if self.frame != expected {
            return Err(Error::FrameMismatch {
                expected,
                found: self.frame,
            });
        }
        Ok(())
    }

    /// `ρ̄ = R† ρ R`
    pub fn rotate_to_dressed(&self, frame: &DressedFrame) -> Result<Self> {
        self.expect_frame(Frame::BareRotating)?;
        let r = frame.rotation();
        Ok(QubitState {
            rho: r.transpose() * self.rho * r,
            frame: Frame::Dressed,
            time: self.time,
        })
    }

    /// `ρ = R ρ̄ R†`
    pub fn rotate_to_bare(&self, frame: &DressedFrame) -> Result<Self> {
        self.expect_frame(Frame::Dressed)?;
        let r = frame.rotation();
        Ok(QubitState {
            rho: r * self.rho * r.transpose(),
            frame: Frame::BareRotating,
            time: self.time,
        })
    }
}

pub fn rotate_to_dressed(state: &QubitState, frame: &DressedFrame) -> Result<QubitState> {
    state.rotate_to_dressed(frame)
}

pub fn rotate_to_bare(state: &QubitState, frame: &DressedFrame) -> Result<QubitState> {
    state.rotate_to_bare(frame)
}
