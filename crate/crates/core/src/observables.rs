//! Synchronization observables of a single qubit.
//!
//! Everything here is a closed-form function of the density-matrix elements
//! of a rotating-frame state (dressed or bare basis). The Husimi function
//! uses spin coherent states `|θ,φ⟩ = cos(θ/2)|1⟩ + sin(θ/2)e^{iφ}|0⟩`.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matrix::Mat2;
use crate::model::{Frame, QubitState};
use crate::parallel::{self, Execution};

/// Phase density of a state with no phase preference.
pub const UNIFORM_PHASE_DENSITY: f64 = 1.0 / TAU;

fn rotating(state: &QubitState) -> Result<()> {
    if state.frame == Frame::Lab {
        return Err(Error::FrameMismatch {
            expected: Frame::BareRotating,
            found: Frame::Lab,
        });
    }
    Ok(())
}

/// `Q(θ, φ) = ⟨θ,φ|ρ|θ,φ⟩ / 2π`
pub fn husimi_q(state: &QubitState, theta: f64, phi: f64) -> Result<f64> {
    rotating(state)?;
    if !(0.0..=PI).contains(&theta) {
        return Err(Error::Domain(format!("theta = {theta} outside [0, pi]")));
    }
    Ok(husimi_unchecked(&state.rho, theta, phi))
}

#[inline]
fn husimi_unchecked(rho: &Mat2, theta: f64, phi: f64) -> f64 {
    let (s, c) = (0.5 * theta).sin_cos();
    let e = Complex64::cis(phi);
    let q = c * c * rho.get(0, 0)
        + c * s * e * rho.get(0, 1)
        + c * s * e.conj() * rho.get(1, 0)
        + s * s * rho.get(1, 1);
    debug_assert!(q.im.abs() < 1e-12 * (1.0 + q.re.abs()));
    q.re / TAU
}

/// Husimi function sampled on a uniform `(θ, φ)` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct QGrid {
    /// `n_θ` points spanning `[0, π]`.
    pub theta_axis: Vec<f64>,
    /// `n_φ` points spanning `[−π, π)`.
    pub phi_axis: Vec<f64>,
    /// Row-major `n_θ × n_φ`.
    pub values: Vec<Vec<f64>>,
    pub time: f64,
}

impl QGrid {
    pub const DEFAULT_THETA_POINTS: usize = 181;
    pub const DEFAULT_PHI_POINTS: usize = 360;

    /// `∫ Q sinθ dθ dφ`: composite Simpson in θ (trapezoid when the number
    /// of θ intervals is odd), periodic rectangle rule in φ.
    pub fn sphere_integral(&self) -> f64 {
        let n_theta = self.theta_axis.len();
        if n_theta < 2 || self.phi_axis.is_empty() {
            return 0.0;
        }
        let last = n_theta - 1;
        let simpson = last % 2 == 0;
        let d_theta = PI / last as f64;
        let d_phi = TAU / self.phi_axis.len() as f64;
        let weight = |i: usize| match (simpson, i) {
            (_, 0) => if simpson { 1.0 / 3.0 } else { 0.5 },
            (true, i) if i == last => 1.0 / 3.0,
            (true, i) => if i % 2 == 1 { 4.0 / 3.0 } else { 2.0 / 3.0 },
            (false, i) if i == last => 0.5,
            (false, _) => 1.0,
        };
        self.values
            .iter()
            .zip(&self.theta_axis)
            .enumerate()
            .map(|(i, (row, theta))| weight(i) * theta.sin() * row.iter().sum::<f64>())
            .sum::<f64>()
            * d_theta
            * d_phi
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().flatten().copied().fold(f64::INFINITY, f64::min)
    }

    /// `(θ, φ, Q)` of the largest sample.
    pub fn argmax(&self) -> (f64, f64, f64) {
        let mut best = (0.0, 0.0, f64::NEG_INFINITY);
        for (row, &theta) in self.values.iter().zip(&self.theta_axis) {
            for (&q, &phi) in row.iter().zip(&self.phi_axis) {
                if q > best.2 {
                    best = (theta, phi, q);
                }
            }
        }
        best
    }
}

/// Evaluates `Q` on `n_theta × n_phi` points; columns are independent and
/// are distributed over threads when `execution` allows it.
pub fn husimi_grid(
    state: &QubitState,
    n_theta: usize,
    n_phi: usize,
    execution: Execution,
) -> Result<QGrid> {
    rotating(state)?;
    if n_theta < 2 || n_phi < 1 {
        return Err(Error::Domain("Q grid needs n_theta >= 2 and n_phi >= 1".into()));
    }
    let theta_axis: Vec<f64> = (0..n_theta)
        .map(|i| {
            if i == n_theta - 1 {
                PI
            } else {
                PI * i as f64 / (n_theta - 1) as f64
            }
        })
        .collect();
    let phi_axis: Vec<f64> = (0..n_phi)
        .map(|j| -PI + TAU * j as f64 / n_phi as f64)
        .collect();
    let rho = state.rho;
    let columns = parallel::map(&phi_axis, execution, |&phi| {
        theta_axis
            .iter()
            .map(|&theta| husimi_unchecked(&rho, theta, phi))
            .collect::<Vec<_>>()
    });
    let values = (0..n_theta)
        .map(|i| columns.iter().map(|col| col[i]).collect())
        .collect();
    Ok(QGrid {
        theta_axis,
        phi_axis,
        values,
        time: state.time,
    })
}

/// `P(φ) = ∫₀^π Q(θ,φ) sinθ dθ = 1/2π + (ρ10 e^{iφ} + ρ01 e^{−iφ})/8`
pub fn phase_distribution(state: &QubitState, phi: f64) -> f64 {
    UNIFORM_PHASE_DENSITY * state.rho.trace().re + shifted_phase(state, phi)
}

/// `S(φ) = P(φ) − 1/2π = |ρ10| cos(φ + arg ρ10) / 4`
pub fn shifted_phase(state: &QubitState, phi: f64) -> f64 {
    let e = Complex64::cis(phi);
    ((state.rho10() * e + state.rho01() * e.conj()) / 8.0).re
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseMaximum {
    /// `S_m = |ρ10| / 4`
    pub value: f64,
    /// `φ* = −arg ρ10`
    pub phi: f64,
}

pub fn s_max(state: &QubitState) -> PhaseMaximum {
    let rho10 = state.rho10();
    PhaseMaximum {
        value: 0.25 * rho10.norm(),
        phi: -rho10.arg(),
    }
}

/// Sum of the moduli of the off-diagonal elements.
pub fn l1_coherence(state: &QubitState) -> f64 {
    state.rho10().norm() + state.rho01().norm()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlochFrame {
    Rotating,
    Lab,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochVector {
    pub mx: f64,
    pub my: f64,
    pub mz: f64,
    pub frame: BlochFrame,
}

impl BlochVector {
    pub fn norm(&self) -> f64 {
        (self.mx * self.mx + self.my * self.my + self.mz * self.mz).sqrt()
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.mx, self.my, self.mz]
    }
}

/// `(Tr σx ρ, Tr σy ρ, Tr σz ρ)`
pub fn bloch_rotating(state: &QubitState) -> Result<BlochVector> {
    rotating(state)?;
    let rho = state.rho;
    let expect = |op: Mat2| (op * rho).trace().re;
    Ok(BlochVector {
        mx: expect(Mat2::SIGMA_X),
        my: expect(Mat2::SIGMA_Y),
        mz: expect(Mat2::SIGMA_Z),
        frame: BlochFrame::Rotating,
    })
}

/// Undoes the rotating frame: a rotation by `ωL t` about z.
pub fn bloch_lab(v: &BlochVector, t: f64, omega_laser: f64) -> Result<BlochVector> {
    if v.frame != BlochFrame::Rotating {
        return Err(Error::Domain("bloch_lab expects a rotating-frame vector".into()));
    }
    let (s, c) = (omega_laser * t).sin_cos();
    Ok(BlochVector {
        mx: v.mx * c - v.my * s,
        my: v.mx * s + v.my * c,
        mz: v.mz,
        frame: BlochFrame::Lab,
    })
}
