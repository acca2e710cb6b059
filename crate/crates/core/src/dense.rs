//! Sampled solutions with cubic Hermite interpolation between nodes.
//!
//! Nodes are split into smooth segments that share their end nodes. At a
//! shared node the derivative from each side is kept, so interpolation never
//! smooths over a kink.

use std::ops::RangeInclusive;

#[derive(Debug, Clone, PartialEq)]
pub struct DenseRecord<const N: usize> {
    pub(crate) t: Vec<f64>,
    pub(crate) y: Vec<[f64; N]>,
    pub(crate) dy_left: Vec<[f64; N]>,
    pub(crate) dy_right: Vec<[f64; N]>,
    /// Index ranges of the smooth segments; consecutive ranges share an end.
    pub(crate) segments: Vec<RangeInclusive<usize>>,
}

impl<const N: usize> DenseRecord<N> {
    pub(crate) fn start(&self) -> f64 {
        self.t[0]
    }

    pub(crate) fn end(&self) -> f64 {
        *self.t.last().expect("record is never empty")
    }

    /// Index `i` with `t[i] <= t <= t[i+1]`, clamped to the valid range.
    pub(crate) fn interval(&self, t: f64) -> usize {
        let n = self.t.len();
        let i = self.t.partition_point(|&x| x <= t);
        i.saturating_sub(1).min(n - 2)
    }

    /// Hermite interpolant at `t`; `None` outside the recorded interval.
    pub(crate) fn at(&self, t: f64) -> Option<[f64; N]> {
        let lo = self.start();
        let hi = self.end();
        let slack = 1e-12 * (hi - lo).abs().max(1.0);
        if !(t >= lo - slack && t <= hi + slack) {
            return None;
        }
        let t = t.clamp(lo, hi);
        let i = self.interval(t);
        let (t0, t1) = (self.t[i], self.t[i + 1]);
        let h = t1 - t0;
        if t == t0 {
            return Some(self.y[i]);
        }
        if t == t1 {
            return Some(self.y[i + 1]);
        }
        let s = (t - t0) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        let mut out = [0.0; N];
        for (k, o) in out.iter_mut().enumerate() {
            *o = h00 * self.y[i][k]
                + h * h10 * self.dy_right[i][k]
                + h01 * self.y[i + 1][k]
                + h * h11 * self.dy_left[i + 1][k];
        }
        Some(out)
    }

    /// Derivative of the Hermite interpolant at `t`.
    #[cfg(test)]
    pub(crate) fn slope_at(&self, t: f64) -> Option<[f64; N]> {
        let lo = self.start();
        let hi = self.end();
        if !(t >= lo && t <= hi) {
            return None;
        }
        let i = self.interval(t);
        let (t0, t1) = (self.t[i], self.t[i + 1]);
        let h = t1 - t0;
        let s = (t - t0) / h;
        let s2 = s * s;
        let d00 = (6.0 * s2 - 6.0 * s) / h;
        let d10 = 3.0 * s2 - 4.0 * s + 1.0;
        let d01 = (-6.0 * s2 + 6.0 * s) / h;
        let d11 = 3.0 * s2 - 2.0 * s;
        let mut out = [0.0; N];
        for (k, o) in out.iter_mut().enumerate() {
            *o = d00 * self.y[i][k]
                + d10 * self.dy_right[i][k]
                + d01 * self.y[i + 1][k]
                + d11 * self.dy_left[i + 1][k];
        }
        Some(out)
    }
}

/// Cubic Hermite interpolation of a scalar on `[t0, t1]`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn hermite(t0: f64, t1: f64, y0: f64, y1: f64, d0: f64, d1: f64, t: f64) -> f64 {
    let h = t1 - t0;
    let s = (t - t0) / h;
    let s2 = s * s;
    let s3 = s2 * s;
    (2.0 * s3 - 3.0 * s2 + 1.0) * y0
        + h * (s3 - 2.0 * s2 + s) * d0
        + (-2.0 * s3 + 3.0 * s2) * y1
        + h * (s3 - s2) * d1
}

/// Finite-difference weights for the first derivative at `x0` from the nodes
/// `xs` (Fornberg's recursion).
pub(crate) fn derivative_weights(x0: f64, xs: &[f64]) -> Vec<f64> {
    let n = xs.len();
    // c[j][m]: weight of node j for derivative order m (m = 0, 1).
    let mut c = vec![[0.0f64; 2]; n];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    for i in 1..n {
        let mn = i.min(1);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for m in (1..=mn).rev() {
                    c[i][m] = c1 * (m as f64 * c[i - 1][m - 1] - c5 * c[i - 1][m]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for m in (1..=mn).rev() {
                c[j][m] = (c4 * c[j][m] - m as f64 * c[j][m - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|w| w[1]).collect()
}

/// Composite Simpson rule over nodes `t[range]` that are uniformly spaced
/// with an even number of intervals. Falls back to the trapezoid rule for an
/// odd count.
pub(crate) fn simpson(t: &[f64], values: &[f64]) -> f64 {
    let n = t.len();
    if n < 2 {
        return 0.0;
    }
    let intervals = n - 1;
    if intervals % 2 == 1 {
        return trapezoid(t, values);
    }
    let h = (t[n - 1] - t[0]) / intervals as f64;
    let mut acc = values[0] + values[n - 1];
    for (i, v) in values.iter().enumerate().take(n - 1).skip(1) {
        acc += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    acc * h / 3.0
}

pub(crate) fn trapezoid(t: &[f64], values: &[f64]) -> f64 {
    t.windows(2)
        .zip(values.windows(2))
        .map(|(tw, vw)| 0.5 * (tw[1] - tw[0]) * (vw[0] + vw[1]))
        .sum()
}
