//! Ohmic bath: spectral density, correlation function and the memory
//! kernels that enter the time-local master equation.
//!
//! The kernels are double integrals over a past time and a bath frequency.
//! Substituting `s = t − τ` turns each one into a single time integral of the
//! correlation function times a phase, so their time derivatives are
//! available in closed form and they can be integrated alongside the state.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{DressedFrame, SystemParams};

/// `J(ω) = γ ω exp(−ω/λ)`
pub fn spectral_density(omega: f64, params: &SystemParams) -> Result<f64> {
    if !(omega >= 0.0) {
        return Err(Error::Domain(format!(
            "spectral density needs omega >= 0, got {omega}"
        )));
    }
    Ok(params.gamma_coupling * omega * (-omega / params.lambda_cutoff).exp())
}

/// `C(s) = ∫₀^∞ J(ω) e^{−iωs} dω = γλ² / (1 + iλs)²`
#[inline]
pub fn correlation(s: f64, params: &SystemParams) -> Complex64 {
    let lambda = params.lambda_cutoff;
    let denom = Complex64::new(1.0, lambda * s);
    params.gamma_coupling * lambda * lambda / (denom * denom)
}

/// Values of the three memory kernels at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MemoryCoefficients {
    /// Elastic kernel, resonant at ωL.
    pub gamma1: Complex64,
    /// Resonant at ωL − δ.
    pub gamma2: Complex64,
    /// Resonant at ωL + δ.
    pub gamma3: Complex64,
    pub time: f64,
}

impl MemoryCoefficients {
    pub fn zero() -> Self {
        let z = Complex64::new(0.0, 0.0);
        MemoryCoefficients {
            gamma1: z,
            gamma2: z,
            gamma3: z,
            time: 0.0,
        }
    }

    pub fn as_array(&self) -> [Complex64; 3] {
        [self.gamma1, self.gamma2, self.gamma3]
    }

    pub fn from_array([gamma1, gamma2, gamma3]: [Complex64; 3], time: f64) -> Self {
        MemoryCoefficients {
            gamma1,
            gamma2,
            gamma3,
            time,
        }
    }
}

/// Time derivatives `(dΓ1/dt, dΓ2/dt, dΓ3/dt)` at `t`:
/// `C(t)·e^{iωL t}`, `C(t)·e^{i(ωL−δ)t}`, `C(t)·e^{i(ωL+δ)t}`.
#[inline]
pub fn memory_rhs(t: f64, params: &SystemParams, frame: &DressedFrame) -> [Complex64; 3] {
    let c = correlation(t, params);
    let omega_l = params.omega_laser();
    let delta = frame.delta_rabi;
    [
        c * Complex64::cis(omega_l * t),
        c * Complex64::cis((omega_l - delta) * t),
        c * Complex64::cis((omega_l + delta) * t),
    ]
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;

    use super::*;

    fn params(gamma: f64, lambda: f64) -> SystemParams {
        SystemParams {
            gamma_coupling: gamma,
            lambda_cutoff: lambda,
            ..SystemParams::markov()
        }
    }

    #[test]
    fn spectral_density_values() {
        let p = params(0.1, 5.0);
        assert_eq!(spectral_density(0.0, &p).unwrap(), 0.0);
        assert_abs_diff_eq!(spectral_density(5.0, &p).unwrap(), 0.183940, epsilon = 1e-6);
        assert!(matches!(spectral_density(-1.0, &p), Err(Error::Domain(_))));
    }

    #[test]
    fn spectral_density_peaks_at_cutoff() {
        let p = params(0.1, 5.0);
        let peak = spectral_density(5.0, &p).unwrap();
        assert_abs_diff_eq!(peak, 0.1 * 5.0 / std::f64::consts::E, epsilon = 1e-15);
        for w in [4.9, 5.1, 1.0, 20.0] {
            assert!(spectral_density(w, &p).unwrap() < peak);
        }
    }

    #[test]
    fn correlation_values() {
        let p = params(0.1, 5.0);
        assert_abs_diff_eq!(correlation(0.0, &p).re, 2.5, epsilon = 1e-15);
        assert_eq!(correlation(0.0, &p).im, 0.0);
        let c1 = correlation(1.0, &p);
        assert_abs_diff_eq!(c1.re, -60.0 / 676.0, epsilon = 1e-15);
        assert_abs_diff_eq!(c1.im, -25.0 / 676.0, epsilon = 1e-15);
    }

    #[test]
    fn correlation_modulus_is_lorentzian_envelope() {
        let p = params(0.1, 5.0);
        let mut last = f64::INFINITY;
        for s in [0.0, 0.1, 0.5, 1.0, 10.0, 100.0] {
            let m = correlation(s, &p).norm();
            let envelope = 2.5 / (1.0 + 25.0 * s * s);
            assert_abs_diff_eq!(m, envelope, epsilon = 1e-14);
            assert!(m < last);
            last = m;
        }
    }

    #[test]
    fn memory_rhs_at_origin_is_real() {
        let p = params(0.1, 5.0);
        let f = DressedFrame::new(&p).unwrap();
        for d in memory_rhs(0.0, &p, &f) {
            assert_eq!(d, Complex64::new(2.5, 0.0));
        }
    }

    #[test]
    fn undriven_kernels_are_shifted_elastic_kernel() {
        // ε = 0 ⇒ δ = Δ; Γ2, Γ3 are Γ1 with ωL shifted by ∓δ.
        let p = params(0.1, 5.0).with_drive(0.0).with_detuning(0.7);
        let f = DressedFrame::new(&p).unwrap();
        let delta = f.delta_rabi;
        let lower = SystemParams {
            omega_qubit: p.omega_qubit - delta,
            ..p
        };
        let upper = SystemParams {
            omega_qubit: p.omega_qubit + delta,
            ..p
        };
        for t in [0.0, 0.3, 1.7, 12.0] {
            let [_, g2, g3] = memory_rhs(t, &p, &f);
            assert!((g2 - memory_rhs(t, &lower, &f)[0]).norm() < 1e-12);
            assert!((g3 - memory_rhs(t, &upper, &f)[0]).norm() < 1e-12);
        }
    }
}
