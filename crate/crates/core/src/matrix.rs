//! Minimal 2×2 complex matrix used for the qubit density matrix.
//!
//! Basis ordering is `(|1⟩, |0⟩)`: index 0 is the excited state, so
//! `σz = diag(1, -1)`, `σ+ = |1⟩⟨0|` has its entry at `[0][1]`, and the
//! coherence `ρ10 = ⟨1|ρ|0⟩` lives at `[0][1]`.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use num_complex::Complex64;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2(pub [[Complex64; 2]; 2]);

impl Mat2 {
    pub const ZERO: Mat2 = Mat2([[ZERO, ZERO], [ZERO, ZERO]]);
    pub const IDENTITY: Mat2 = Mat2([[ONE, ZERO], [ZERO, ONE]]);
    pub const SIGMA_Z: Mat2 = Mat2([[ONE, ZERO], [ZERO, Complex64::new(-1.0, 0.0)]]);
    pub const SIGMA_X: Mat2 = Mat2([[ZERO, ONE], [ONE, ZERO]]);
    pub const SIGMA_Y: Mat2 = Mat2([
        [ZERO, Complex64::new(0.0, -1.0)],
        [Complex64::new(0.0, 1.0), ZERO],
    ]);
    pub const SIGMA_PLUS: Mat2 = Mat2([[ZERO, ONE], [ZERO, ZERO]]);
    pub const SIGMA_MINUS: Mat2 = Mat2([[ZERO, ZERO], [ONE, ZERO]]);

    pub fn new(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Self {
        Mat2([[a, b], [c, d]])
    }

    pub fn from_real(m: [[f64; 2]; 2]) -> Self {
        Mat2([
            [m[0][0].into(), m[0][1].into()],
            [m[1][0].into(), m[1][1].into()],
        ])
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.0[i][j]
    }

    pub fn trace(&self) -> Complex64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn adjoint(&self) -> Self {
        let m = &self.0;
        Mat2([
            [m[0][0].conj(), m[1][0].conj()],
            [m[0][1].conj(), m[1][1].conj()],
        ])
    }

    pub fn transpose(&self) -> Self {
        let m = &self.0;
        Mat2([[m[0][0], m[1][0]], [m[0][1], m[1][1]]])
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let m = &self.0;
        Mat2([
            [m[0][0] * s, m[0][1] * s],
            [m[1][0] * s, m[1][1] * s],
        ])
    }

    /// `A B - B A`
    pub fn commutator(&self, other: &Mat2) -> Self {
        *self * *other - *other * *self
    }

    /// `(ρ + ρ†) / 2`
    pub fn hermitian_part(&self) -> Self {
        (*self + self.adjoint()).scale(Complex64::new(0.5, 0.0))
    }

    /// Largest elementwise modulus of `ρ - ρ†`.
    pub fn hermiticity_defect(&self) -> f64 {
        let d = *self - self.adjoint();
        d.max_abs()
    }

    pub fn max_abs(&self) -> f64 {
        self.0
            .iter()
            .flatten()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn hermitian_eigenvalues(&self) -> [f64; 2] {
        let h = self.hermitian_part();
        let a = h.0[0][0].re;
        let d = h.0[1][1].re;
        let b = h.0[0][1].norm();
        let mean = 0.5 * (a + d);
        let radius = (0.25 * (a - d) * (a - d) + b * b).sqrt();
        [mean - radius, mean + radius]
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, o: Mat2) -> Mat2 {
        let (a, b) = (&self.0, &o.0);
        Mat2([
            [a[0][0] + b[0][0], a[0][1] + b[0][1]],
            [a[1][0] + b[1][0], a[1][1] + b[1][1]],
        ])
    }
}

impl AddAssign for Mat2 {
    fn add_assign(&mut self, o: Mat2) {
        *self = *self + o;
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, o: Mat2) -> Mat2 {
        let (a, b) = (&self.0, &o.0);
        Mat2([
            [a[0][0] - b[0][0], a[0][1] - b[0][1]],
            [a[1][0] - b[1][0], a[1][1] - b[1][1]],
        ])
    }
}

impl Neg for Mat2 {
    type Output = Mat2;
    fn neg(self) -> Mat2 {
        self.scale(Complex64::new(-1.0, 0.0))
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, o: Mat2) -> Mat2 {
        let (a, b) = (&self.0, &o.0);
        Mat2([
            [
                a[0][0] * b[0][0] + a[0][1] * b[1][0],
                a[0][0] * b[0][1] + a[0][1] * b[1][1],
            ],
            [
                a[1][0] * b[0][0] + a[1][1] * b[1][0],
                a[1][0] * b[0][1] + a[1][1] * b[1][1],
            ],
        ])
    }
}

impl Mul<f64> for Mat2 {
    type Output = Mat2;
    fn mul(self, s: f64) -> Mat2 {
        self.scale(Complex64::new(s, 0.0))
    }
}

impl Mul<Complex64> for Mat2 {
    type Output = Mat2;
    fn mul(self, s: Complex64) -> Mat2 {
        self.scale(s)
    }
}
