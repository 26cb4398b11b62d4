//! Dormand–Prince 5(4) with step-size control and a fourth-order continuous
//! extension, specialised to small fixed-size complex state vectors.

use num_complex::Complex64;

use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 10.0;

pub type Vector<const N: usize> = [Complex64; N];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepControl {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

#[inline]
fn combine<const N: usize>(y: &Vector<N>, h: f64, terms: &[(f64, &Vector<N>)]) -> Vector<N> {
    let mut out = *y;
    for (coef, k) in terms {
        if *coef == 0.0 {
            continue;
        }
        let c = h * coef;
        for (o, ki) in out.iter_mut().zip(k.iter()) {
            *o += ki * c;
        }
    }
    out
}

/// Dense-output coefficients for one accepted step.
struct Interpolant<const N: usize> {
    t_old: f64,
    h: f64,
    cont: [Vector<N>; 5],
}

impl<const N: usize> Interpolant<N> {
    fn eval(&self, t: f64) -> Vector<N> {
        let s = (t - self.t_old) / self.h;
        let s1 = 1.0 - s;
        let [c0, c1, c2, c3, c4] = &self.cont;
        std::array::from_fn(|i| c0[i] + (c1[i] + (c2[i] + (c3[i] + c4[i] * s1) * s) * s1) * s)
    }
}

/// Integrates `y' = f(t, y)` from `t0` to the last entry of `sample_times`
/// and returns the interpolated state at every sample time.
///
/// `project` is applied to the state after every accepted step and may
/// return an error to abort the integration.
pub fn integrate<const N: usize, F, P>(
    mut f: F,
    t0: f64,
    y0: Vector<N>,
    sample_times: &[f64],
    control: &StepControl,
    mut project: P,
) -> Result<(Vec<Vector<N>>, Stats)>
where
    F: FnMut(f64, &Vector<N>) -> Vector<N>,
    P: FnMut(f64, &mut Vector<N>) -> Result<()>,
{
    let mut out = Vec::with_capacity(sample_times.len());
    let mut stats = Stats::default();
    let Some(&t_end) = sample_times.last() else {
        return Ok((out, stats));
    };

    let mut next = 0;
    while next < sample_times.len() && sample_times[next] <= t0 {
        out.push(y0);
        next += 1;
    }

    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y);
    stats.rhs_evals += 1;
    let mut h = control.max_step.min(1e-3 * (t_end - t0).abs().max(1e-3));
    let mut factor_prev: f64 = 1e-4;

    while next < sample_times.len() {
        let last = t + h >= t_end;
        if last {
            h = t_end - t;
        }

        let k2 = f(t + C2 * h, &combine(&y, h, &[(A21, &k1)]));
        let k3 = f(t + C3 * h, &combine(&y, h, &[(A31, &k1), (A32, &k2)]));
        let k4 = f(
            t + C4 * h,
            &combine(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]),
        );
        let k5 = f(
            t + C5 * h,
            &combine(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        );
        let k6 = f(
            t + h,
            &combine(
                &y,
                h,
                &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
            ),
        );
        let y_new = combine(
            &y,
            h,
            &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)],
        );
        let k7 = f(t + h, &y_new);
        stats.rhs_evals += 6;

        let mut err_sq = 0.0;
        for i in 0..N {
            let e = (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7)
                * h;
            let sc_re = control.abs_tol + control.rel_tol * y[i].re.abs().max(y_new[i].re.abs());
            let sc_im = control.abs_tol + control.rel_tol * y[i].im.abs().max(y_new[i].im.abs());
            err_sq += (e.re / sc_re).powi(2) + (e.im / sc_im).powi(2);
        }
        let err = (err_sq / (2 * N) as f64).sqrt();

        if err <= 1.0 {
            stats.accepted += 1;
            let ydiff: Vector<N> = std::array::from_fn(|i| y_new[i] - y[i]);
            let bspl: Vector<N> = std::array::from_fn(|i| k1[i] * h - ydiff[i]);
            let interp = Interpolant {
                t_old: t,
                h,
                cont: [
                    y,
                    ydiff,
                    bspl,
                    std::array::from_fn(|i| ydiff[i] - k7[i] * h - bspl[i]),
                    std::array::from_fn(|i| {
                        (k1[i] * D1
                            + k3[i] * D3
                            + k4[i] * D4
                            + k5[i] * D5
                            + k6[i] * D6
                            + k7[i] * D7)
                            * h
                    }),
                ],
            };

            let t_new = if last { t_end } else { t + h };
            let mut y_acc = y_new;
            project(t_new, &mut y_acc)?;

            while next < sample_times.len() && sample_times[next] <= t_new {
                let ts = sample_times[next];
                let ys = if ts == t_new {
                    y_acc
                } else {
                    let mut v = interp.eval(ts);
                    project(ts, &mut v)?;
                    v
                };
                out.push(ys);
                next += 1;
            }

            t = t_new;
            y = y_acc;
            k1 = k7;

            // Lund-stabilised PI controller (Hairer's choice of exponents).
            let err_c = err.max(1e-10);
            let fac = SAFETY * err_c.powf(-0.17) * factor_prev.powf(0.04);
            factor_prev = err_c;
            h *= fac.clamp(MIN_FACTOR, MAX_FACTOR);
            h = h.min(control.max_step);
        } else {
            stats.rejected += 1;
            let fac = if err.is_finite() {
                (SAFETY * err.powf(-0.2)).max(MIN_FACTOR)
            } else {
                MIN_FACTOR
            };
            h *= fac;
        }

        if h < 1e-14 * t.abs().max(1.0) {
            return Err(Error::ToleranceFailure { t, h });
        }
    }

    Ok((out, stats))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn control(tol: f64) -> StepControl {
        StepControl {
            rel_tol: tol,
            abs_tol: tol * 1e-2,
            max_step: 0.5,
        }
    }

    #[test]
    fn complex_exponential() {
        let omega = 3.0;
        let times: Vec<f64> = (0..=40).map(|i| i as f64 * 0.25).collect();
        let (ys, stats) = integrate(
            |_, y: &Vector<1>| [y[0] * Complex64::new(-0.1, omega)],
            0.0,
            [Complex64::new(1.0, 0.0)],
            &times,
            &control(1e-10),
            |_, _| Ok(()),
        )
        .unwrap();
        assert_eq!(ys.len(), times.len());
        for (t, y) in times.iter().zip(&ys) {
            let exact = Complex64::new(-0.1 * t, omega * t).exp();
            assert!((y[0] - exact).norm() < 1e-8, "t={t}: {} vs {exact}", y[0]);
        }
        assert!(stats.accepted > 0);
    }

    #[test]
    fn dense_output_between_steps() {
        // Large max_step forces interpolation for most samples.
        let times: Vec<f64> = (0..=100).map(|i| i as f64 * 0.013).collect();
        let (ys, _) = integrate(
            |t, _: &Vector<1>| [Complex64::new(t.cos(), 0.0)],
            0.0,
            [Complex64::new(0.0, 0.0)],
            &times,
            &control(1e-9),
            |_, _| Ok(()),
        )
        .unwrap();
        for (t, y) in times.iter().zip(&ys) {
            assert!((y[0].re - t.sin()).abs() < 1e-8);
        }
    }

    #[test]
    fn tighter_tolerance_is_more_accurate() {
        let times = [0.0, 5.0];
        let run = |tol| {
            let (ys, _) = integrate(
                |_, y: &Vector<1>| [y[0] * Complex64::new(0.0, 2.0)],
                0.0,
                [Complex64::new(1.0, 0.0)],
                &times,
                &control(tol),
                |_, _| Ok(()),
            )
            .unwrap();
            (ys[1][0] - Complex64::new(0.0, 10.0).exp()).norm()
        };
        assert!(run(1e-10) < run(1e-6));
    }

    #[test]
    fn projection_error_aborts() {
        let res = integrate(
            |_, y: &Vector<1>| [y[0]],
            0.0,
            [Complex64::new(1.0, 0.0)],
            &[0.0, 1.0],
            &control(1e-8),
            |t, _| {
                if t > 0.5 {
                    Err(Error::TraceDrift { t, drift: 1.0 })
                } else {
                    Ok(())
                }
            },
        );
        assert!(matches!(res, Err(Error::TraceDrift { .. })));
    }

    #[test]
    fn empty_schedule() {
        let (ys, _) = integrate(
            |_, y: &Vector<1>| *y,
            0.0,
            [Complex64::new(1.0, 0.0)],
            &[],
            &control(1e-8),
            |_, _| Ok(()),
        )
        .unwrap();
        assert!(ys.is_empty());
    }
}
