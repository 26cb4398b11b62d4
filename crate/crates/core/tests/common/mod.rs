//! Independent reference implementations used as test oracles.

#![allow(dead_code)]

use std::collections::BinaryHeap;
use std::cmp::Ordering;

use nalgebra::Matrix2;
use num_complex::Complex64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use qsync_core::bath::MemoryCoefficients;
use qsync_core::matrix::Mat2;
use qsync_core::model::{DressedFrame, Frame, QubitState};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Gauss–Kronrod 7/15 rule on `[a, b]`: `(estimate, |K15 − G7|)`.
fn gk15<F: FnMut(f64) -> Complex64>(f: &mut F, a: f64, b: f64) -> (Complex64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for i in 0..7 {
        let x = h * XGK[i];
        let pair = f(c - x) + f(c + x);
        kronrod += pair * WGK[i];
        if i % 2 == 1 {
            gauss += pair * WG[i / 2];
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).norm())
}

struct Piece {
    a: f64,
    b: f64,
    value: Complex64,
    error: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive Gauss–Kronrod quadrature of a complex integrand:
/// bisects the interval with the largest error estimate until the summed
/// estimate is below `max(abs_tol, rel_tol·|I|)`.
pub fn integrate<F: FnMut(f64) -> Complex64>(
    mut f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Complex64 {
    let mut heap = BinaryHeap::new();
    let (value, error) = gk15(&mut f, a, b);
    let (mut total, mut err) = (value, error);
    heap.push(Piece { a, b, value, error });
    for _ in 0..1_000_000 {
        if err <= abs_tol.max(rel_tol * total.norm()) {
            return heap.iter().map(|p| p.value).sum();
        }
        let worst = heap.pop().unwrap();
        total -= worst.value;
        err -= worst.error;
        let m = 0.5 * (worst.a + worst.b);
        for (lo, hi) in [(worst.a, m), (m, worst.b)] {
            let (value, error) = gk15(&mut f, lo, hi);
            total += value;
            err += error;
            heap.push(Piece { a: lo, b: hi, value, error });
        }
        err = err.max(0.0);
    }
    panic!("quadrature did not converge on [{a}, {b}]");
}

pub fn integrate_real<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> f64 {
    integrate(|x| Complex64::new(f(x), 0.0), a, b, abs_tol, rel_tol).re
}

/// `∫₀^{ω_max} J(ω) e^{−iωs} dω` with `J(ω) = γ ω e^{−ω/λ}` and
/// `ω_max = 40λ`.
pub fn correlation_by_quadrature(s: f64, gamma: f64, lambda: f64) -> Complex64 {
    integrate(
        |w| gamma * w * (-w / lambda).exp() * Complex64::cis(-w * s),
        0.0,
        40.0 * lambda,
        1e-14,
        1e-12,
    )
}

/// `Γ1(t) = ∫₀^t dτ ∫₀^{40λ} dω J(ω) e^{−i(ω−ωL)(t−τ)}` by nested
/// adaptive quadrature.
pub fn gamma1_by_double_quadrature(t: f64, gamma: f64, lambda: f64, omega_laser: f64) -> Complex64 {
    integrate(
        |tau| {
            integrate(
                |w| gamma * w * (-w / lambda).exp() * Complex64::cis(-(w - omega_laser) * (t - tau)),
                0.0,
                40.0 * lambda,
                1e-11,
                1e-11,
            )
        },
        0.0,
        t,
        1e-9,
        1e-10,
    )
}

type M = Matrix2<Complex64>;

fn to_na(m: &Mat2) -> M {
    M::new(m.0[0][0], m.0[0][1], m.0[1][0], m.0[1][1])
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Master-equation right-hand side from literal 2×2 operator products in
/// the `(|1̄⟩, |0̄⟩)` basis.
pub fn master_rhs_by_products(rho: &Mat2, g: [Complex64; 3], frame: &DressedFrame) -> Mat2 {
    let z = c(0.0, 0.0);
    let sz = M::new(c(1.0, 0.0), z, z, c(-1.0, 0.0));
    let sp = M::new(z, c(1.0, 0.0), z, z);
    let sm = M::new(z, z, c(1.0, 0.0), z);
    let r = to_na(rho);
    let (p0, pp, pm) = (frame.p0, frame.p_plus, frame.p_minus);
    let sandwich = |a: &M, b: &M| a * r * b - b * a * r;
    let d = (sandwich(&sz, &sz) * c(p0 * p0, 0.0)
        + sandwich(&sz, &sp) * c(p0 * pp, 0.0)
        + sandwich(&sz, &sm) * c(p0 * pm, 0.0))
        * g[0]
        + (sandwich(&sp, &sz) * c(pm * p0, 0.0)
            + sandwich(&sp, &sp) * c(pm * pp, 0.0)
            + sandwich(&sp, &sm) * c(pm * pm, 0.0))
            * g[1]
        + (sandwich(&sm, &sz) * c(pp * p0, 0.0)
            + sandwich(&sm, &sp) * c(pp * pp, 0.0)
            + sandwich(&sm, &sm) * c(pp * pm, 0.0))
            * g[2];
    let commutator = sz * r - r * sz;
    let out = commutator * c(0.0, -0.5 * frame.delta_rabi) + d + d.adjoint();
    Mat2([[out[(0, 0)], out[(0, 1)]], [out[(1, 0)], out[(1, 1)]]])
}

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

/// Uniformly random point in the Bloch ball as a state in `frame`.
pub fn random_state(rng: &mut StdRng, frame: Frame) -> QubitState {
    loop {
        let v: [f64; 3] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
        if v.iter().map(|x| x * x).sum::<f64>() <= 1.0 {
            return QubitState::from_bloch(frame, v).unwrap();
        }
    }
}

pub fn random_coeffs(rng: &mut StdRng) -> MemoryCoefficients {
    let g = std::array::from_fn(|_| c(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)));
    MemoryCoefficients::from_array(g, 0.0)
}

pub fn max_abs_diff(a: &Mat2, b: &Mat2) -> f64 {
    (*a - *b).max_abs()
}
