//! Dormand–Prince 5(4) with step control and exact landing on requested times.

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

// Difference between the fifth- and fourth-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 10.0;
const MAX_STEPS_PER_CALL: usize = 2_000_000;

#[derive(Debug, Clone, Copy)]
pub(crate) struct Tolerances {
    pub rel: f64,
    pub abs: f64,
    pub max_step: f64,
}

/// Adaptive stepper carrying its step-size suggestion from one call to the
/// next.
#[derive(Debug, Clone)]
pub(crate) struct Stepper {
    tol: Tolerances,
    h: Option<f64>,
}

#[inline]
fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (w, k) in terms {
            acc += w * k[i];
        }
        *o += h * acc;
    }
    out
}

impl Stepper {
    pub(crate) fn new(tol: Tolerances) -> Self {
        Stepper { tol, h: None }
    }

    fn initial_step<const N: usize, F>(
        &self,
        rhs: &mut F,
        t: f64,
        y: &[f64; N],
        k1: &[f64; N],
        span: f64,
    ) -> f64
    where
        F: FnMut(f64, &[f64; N]) -> [f64; N],
    {
        let scale = |i: usize| self.tol.abs + self.tol.rel * y[i].abs();
        let d0 = rms(|i| y[i] / scale(i), N);
        let d1 = rms(|i| k1[i] / scale(i), N);
        let h0 = if d0 < 1e-5 || d1 < 1e-5 {
            1e-6
        } else {
            0.01 * d0 / d1
        };
        let h0 = h0.min(span).min(self.tol.max_step);
        let y1 = axpy(y, h0, &[(1.0, k1)]);
        let k2 = rhs(t + h0, &y1);
        let d2 = rms(|i| (k2[i] - k1[i]) / scale(i), N) / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        (100.0 * h0).min(h1).min(span).min(self.tol.max_step)
    }

    /// Integrate from `(t, y)` with slope `k1 = rhs(t, y)` up to exactly
    /// `t_target`. Returns the state and the slope at `t_target`.
    pub(crate) fn advance<const N: usize, F>(
        &mut self,
        rhs: &mut F,
        mut t: f64,
        mut y: [f64; N],
        mut k1: [f64; N],
        t_target: f64,
    ) -> Result<([f64; N], [f64; N])>
    where
        F: FnMut(f64, &[f64; N]) -> [f64; N],
    {
        if t_target <= t {
            return Ok((y, k1));
        }
        let mut h = match self.h {
            Some(h) => h,
            None => self.initial_step(rhs, t, &y, &k1, t_target - t),
        };
        for _ in 0..MAX_STEPS_PER_CALL {
            h = h.min(self.tol.max_step);
            let remaining = t_target - t;
            let last = h >= remaining * (1.0 - 1e-12);
            let step = if last { remaining } else { h };
            if step < 1e-14 * t.abs().max(1.0) && !last {
                return Err(Error::StepSizeUnderflow { t });
            }

            let k2 = rhs(t + C2 * step, &axpy(&y, step, &[(A21, &k1)]));
            let k3 = rhs(t + C3 * step, &axpy(&y, step, &[(A31, &k1), (A32, &k2)]));
            let k4 = rhs(
                t + C4 * step,
                &axpy(&y, step, &[(A41, &k1), (A42, &k2), (A43, &k3)]),
            );
            let k5 = rhs(
                t + C5 * step,
                &axpy(&y, step, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
            );
            let k6 = rhs(
                t + step,
                &axpy(
                    &y,
                    step,
                    &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
                ),
            );
            let y_new = axpy(
                &y,
                step,
                &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)],
            );
            let t_new = if last { t_target } else { t + step };
            let k7 = rhs(t_new, &y_new);

            let err = rms(
                |i| {
                    let e = step
                        * (E1 * k1[i]
                            + E3 * k3[i]
                            + E4 * k4[i]
                            + E5 * k5[i]
                            + E6 * k6[i]
                            + E7 * k7[i]);
                    e / (self.tol.abs + self.tol.rel * y[i].abs().max(y_new[i].abs()))
                },
                N,
            );
            if !err.is_finite() {
                h = step * MIN_FACTOR;
                continue;
            }
            let factor = if err == 0.0 {
                MAX_FACTOR
            } else {
                (SAFETY * err.powf(-0.2)).clamp(MIN_FACTOR, MAX_FACTOR)
            };
            if err <= 1.0 {
                t = t_new;
                y = y_new;
                k1 = k7;
                // Keep the unclipped step as the suggestion so that a short
                // landing step does not throttle the next interval.
                let proposal = if last {
                    h.max(step * factor)
                } else {
                    step * factor
                };
                self.h = Some(proposal);
                h = proposal;
                if last {
                    return Ok((y, k1));
                }
            } else {
                h = step * factor.min(1.0);
            }
        }
        Err(Error::StepSizeUnderflow { t })
    }
}

fn rms(f: impl Fn(usize) -> f64, n: usize) -> f64 {
    let s: f64 = (0..n).map(|i| f(i).powi(2)).sum();
    (s / n as f64).sqrt()
}
