//! Ground-solution and brute-force integration of the phase equation.
//!
//! Every run is split at the bias jumps into smooth segments. Each segment
//! carries a uniform node grid whose interval count is a multiple of four, and the
//! adaptive stepper lands exactly on every node.

use std::ops::RangeInclusive;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bias::BiasSpec;
use crate::dense::{derivative_weights, hermite, DenseRecord};
use crate::error::{Error, Result};
use crate::moebius::FValue;
use crate::ode::{Stepper, Tolerances};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Largest step; `None` means `T/200`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_step: Option<f64>,
    /// Output nodes per period.
    pub dense_samples: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_step: None,
            dense_samples: 2048,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.rel_tol.is_finite()) {
            return Err(Error::InvalidSolver(format!(
                "rel_tol must be positive, got {}",
                self.rel_tol
            )));
        }
        if !(self.abs_tol > 0.0 && self.abs_tol.is_finite()) {
            return Err(Error::InvalidSolver(format!(
                "abs_tol must be positive, got {}",
                self.abs_tol
            )));
        }
        if let Some(h) = self.max_step {
            if !(h > 0.0 && h.is_finite()) {
                return Err(Error::InvalidSolver(format!(
                    "max_step must be positive, got {h}"
                )));
            }
        }
        if self.dense_samples < 2 {
            return Err(Error::InvalidSolver(
                "dense_samples must be at least 2".into(),
            ));
        }
        Ok(())
    }

    fn tolerances(&self, period: f64) -> Tolerances {
        Tolerances {
            rel: self.rel_tol,
            abs: self.abs_tol,
            max_step: self.max_step.unwrap_or(period / 200.0),
        }
    }
}

/// `φ₀`, `P₀`, `Q₀` at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundState {
    pub phi: f64,
    pub p: f64,
    pub q: f64,
}

impl GroundState {
    fn from_array(y: [f64; 3]) -> Self {
        GroundState {
            phi: y[0],
            p: y[1],
            q: y[2],
        }
    }

    /// `F = Q + i e^{-P}`.
    pub fn f_value(&self) -> FValue {
        FValue::new(self.q, (-self.p).exp())
    }
}

/// Largest residuals of the ground equations over the node grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GroundResiduals {
    pub phase: f64,
    pub p: f64,
    pub q: f64,
    pub f_equation: f64,
}

impl GroundResiduals {
    pub fn max(&self) -> f64 {
        self.phase.max(self.p).max(self.q).max(self.f_equation)
    }
}

/// Dense record of a phase solution together with its integrals
/// `P = ∫ cos φ` and `Q = ∫ e^{-P} sin φ`, both taken from the start time.
/// The ground solution starts at `t = 0` with all three values zero.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundSolution {
    bias: BiasSpec,
    record: DenseRecord<3>,
}

impl GroundSolution {
    pub fn bias(&self) -> &BiasSpec {
        &self.bias
    }

    pub fn period(&self) -> f64 {
        self.bias.period()
    }

    pub fn start(&self) -> f64 {
        self.record.start()
    }

    pub fn end(&self) -> f64 {
        self.record.end()
    }

    pub fn grid(&self) -> &[f64] {
        &self.record.t
    }

    pub fn len(&self) -> usize {
        self.record.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.record.t.is_empty()
    }

    pub fn state(&self, i: usize) -> GroundState {
        GroundState::from_array(self.record.y[i])
    }

    pub fn phi0(&self) -> Vec<f64> {
        self.record.y.iter().map(|y| y[0]).collect()
    }

    pub fn p0(&self) -> Vec<f64> {
        self.record.y.iter().map(|y| y[1]).collect()
    }

    pub fn q0(&self) -> Vec<f64> {
        self.record.y.iter().map(|y| y[2]).collect()
    }

    /// Values at the end of the record (`t = T` for the ground solution).
    pub fn boundary(&self) -> GroundState {
        GroundState::from_array(*self.record.y.last().expect("record is never empty"))
    }

    /// Node index ranges of the smooth pieces; neighbours share an end node.
    pub fn segments(&self) -> &[RangeInclusive<usize>] {
        &self.record.segments
    }

    /// Interpolated state at any `t` inside the record.
    pub fn state_at(&self, t: f64) -> Result<GroundState> {
        self.record
            .at(t)
            .map(GroundState::from_array)
            .ok_or(Error::OutOfRange {
                t,
                lo: self.start(),
                hi: self.end(),
            })
    }

    pub fn f_at(&self, t: f64) -> Result<FValue> {
        Ok(self.state_at(t)?.f_value())
    }

    /// Residuals of the ground equations, with derivatives taken by local
    /// seven-point differentiation of the node values inside each segment.
    pub fn residuals(&self) -> GroundResiduals {
        let mut res = GroundResiduals {
            phase: 0.0,
            p: 0.0,
            q: 0.0,
            f_equation: 0.0,
        };
        let r = &self.record;
        for seg in &r.segments {
            let (lo, hi) = (*seg.start(), *seg.end());
            let piece = self.bias.piece(r.t[lo], r.t[hi]);
            let ts = &r.t[lo..=hi];
            let ys = &r.y[lo..=hi];
            let im: Vec<f64> = ys.iter().map(|y| (-y[1]).exp()).collect();
            for i in 0..ts.len() {
                let (w0, w1) = stencil(i, ts.len(), 7);
                let weights = derivative_weights(ts[i], &ts[w0..w1]);
                let d = |k: usize| -> f64 {
                    weights.iter().zip(&ys[w0..w1]).map(|(w, y)| w * y[k]).sum()
                };
                let d_im: f64 = weights.iter().zip(&im[w0..w1]).map(|(w, v)| w * v).sum();
                let [phi, _, _] = ys[i];
                let f = piece.at(ts[i]);
                res.phase = res.phase.max((d(0) + phi.sin() - f).abs());
                res.p = res.p.max((d(1) - phi.cos()).abs());
                res.q = res.q.max((d(2) - im[i] * phi.sin()).abs());
                let f_dot = Complex64::new(d(2), d_im);
                let rhs = Complex64::i() * Complex64::from_polar(1.0, phi) * im[i];
                res.f_equation = res.f_equation.max((f_dot + rhs).norm());
            }
        }
        res
    }

    pub(crate) fn record(&self) -> &DenseRecord<3> {
        &self.record
    }
}

fn stencil(i: usize, n: usize, width: usize) -> (usize, usize) {
    let width = width.min(n);
    let lo = i.saturating_sub(width / 2).min(n - width);
    (lo, lo + width)
}

/// Lifted phase samples; `rate` holds `φ̇` for second-order runs.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub grid: Vec<f64>,
    pub phi: Vec<f64>,
    pub rate: Option<Vec<f64>>,
    slope_left: Vec<f64>,
    slope_right: Vec<f64>,
}

impl Trajectory {
    /// Build from samples alone; interpolation then uses finite-difference
    /// slopes.
    pub fn from_samples(grid: Vec<f64>, phi: Vec<f64>) -> Result<Self> {
        if grid.len() != phi.len() || grid.len() < 2 {
            return Err(Error::InvalidArgument(
                "trajectory needs at least two matching samples".into(),
            ));
        }
        if grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(
                "trajectory grid must be strictly increasing".into(),
            ));
        }
        let n = grid.len();
        let slopes: Vec<f64> = (0..n)
            .map(|i| {
                let (lo, hi) = stencil(i, n, 5);
                derivative_weights(grid[i], &grid[lo..hi])
                    .iter()
                    .zip(&phi[lo..hi])
                    .map(|(w, p)| w * p)
                    .sum()
            })
            .collect();
        Ok(Trajectory {
            grid,
            phi,
            rate: None,
            slope_left: slopes.clone(),
            slope_right: slopes,
        })
    }

    pub fn start(&self) -> f64 {
        self.grid[0]
    }

    pub fn end(&self) -> f64 {
        *self.grid.last().expect("trajectory is never empty")
    }

    /// Interpolated lifted phase.
    pub fn phi_at(&self, t: f64) -> Result<f64> {
        let (lo, hi) = (self.start(), self.end());
        let slack = 1e-12 * (hi - lo).max(1.0);
        if !(t >= lo - slack && t <= hi + slack) {
            return Err(Error::OutOfRange { t, lo, hi });
        }
        let t = t.clamp(lo, hi);
        let n = self.grid.len();
        let i = self
            .grid
            .partition_point(|&x| x <= t)
            .saturating_sub(1)
            .min(n - 2);
        if t == self.grid[i] {
            return Ok(self.phi[i]);
        }
        Ok(hermite(
            self.grid[i],
            self.grid[i + 1],
            self.phi[i],
            self.phi[i + 1],
            self.slope_right[i],
            self.slope_left[i + 1],
            t,
        ))
    }

    fn from_record<const N: usize>(record: DenseRecord<N>, with_rate: bool) -> Self {
        let phi = record.y.iter().map(|y| y[0]).collect();
        let (slope_left, slope_right, rate) = if with_rate {
            // For the second-order system the phase slope is the (continuous)
            // rate component.
            let rate: Vec<f64> = record.y.iter().map(|y| y[1]).collect();
            (rate.clone(), rate.clone(), Some(rate))
        } else {
            (
                record.dy_left.iter().map(|d| d[0]).collect(),
                record.dy_right.iter().map(|d| d[0]).collect(),
                None,
            )
        };
        Trajectory {
            grid: record.t,
            phi,
            rate,
            slope_left,
            slope_right,
        }
    }
}

/// Node times of the smooth pieces covering `[t_start, t_start + span]`.
pub(crate) fn segment_grids(
    bias: &BiasSpec,
    t_start: f64,
    span: f64,
    per_period: usize,
) -> Vec<Vec<f64>> {
    let t_end = t_start + span;
    let period = bias.period();
    let mut inner = bias.jumps_between(t_start, t_end);
    // Period boundaries are nodes too, so every period can be cut out exactly.
    let tol = 1e-12 * period.max(t_end.abs());
    let first = (t_start / period).floor() as i64 + 1;
    let mut n = first;
    while (n as f64) * period < t_end - tol {
        let x = n as f64 * period;
        if x > t_start + tol {
            inner.push(x);
        }
        n += 1;
    }
    inner.sort_by(f64::total_cmp);
    inner.dedup_by(|x, y| (*x - *y).abs() <= tol);
    let mut edges = vec![t_start];
    edges.extend(inner);
    edges.push(t_end);
    edges
        .windows(2)
        .map(|w| {
            let (lo, hi) = (w[0], w[1]);
            // A multiple of four lets Simpson's rule run on the full grid and
            // on every other node.
            let n = ((hi - lo) / period * per_period as f64).ceil().max(4.0) as usize;
            let n = n.div_ceil(4) * 4;
            let h = (hi - lo) / n as f64;
            let mut nodes: Vec<f64> = (0..n).map(|i| lo + i as f64 * h).collect();
            nodes.push(hi);
            nodes
        })
        .collect()
}

fn integrate_segments<const N: usize, R>(
    bias: &BiasSpec,
    grids: &[Vec<f64>],
    y0: [f64; N],
    tol: Tolerances,
    rhs: R,
) -> Result<DenseRecord<N>>
where
    R: Fn(f64, f64, &[f64; N]) -> [f64; N],
{
    let mut stepper = Stepper::new(tol);
    let mut record = DenseRecord {
        t: Vec::new(),
        y: Vec::new(),
        dy_left: Vec::new(),
        dy_right: Vec::new(),
        segments: Vec::new(),
    };
    let mut y = y0;
    for nodes in grids {
        let (lo, hi) = (nodes[0], *nodes.last().expect("segment has nodes"));
        let piece = bias.piece(lo, hi);
        let mut f = |t: f64, y: &[f64; N]| rhs(piece.at(t), t, y);
        let mut k = f(lo, &y);
        let first = if record.t.is_empty() {
            record.t.push(lo);
            record.y.push(y);
            record.dy_left.push(k);
            record.dy_right.push(k);
            0
        } else {
            let last = record.t.len() - 1;
            record.dy_right[last] = k;
            last
        };
        let mut t = lo;
        for &target in &nodes[1..] {
            let (y_new, k_new) = stepper.advance(&mut f, t, y, k, target)?;
            t = target;
            y = y_new;
            k = k_new;
            record.t.push(t);
            record.y.push(y);
            record.dy_left.push(k);
            record.dy_right.push(k);
        }
        record.segments.push(first..=record.t.len() - 1);
    }
    Ok(record)
}

fn ground_rhs(f: f64, _t: f64, y: &[f64; 3]) -> [f64; 3] {
    let (s, c) = y[0].sin_cos();
    [f - s, c, (-y[1]).exp() * s]
}

fn phase_rhs(f: f64, _t: f64, y: &[f64; 1]) -> [f64; 1] {
    [f - y[0].sin()]
}

fn check_span(span: f64) -> Result<()> {
    if span > 0.0 && span.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "integration span must be positive, got {span}"
        )))
    }
}

/// Ground solution on `[0, T]` from `φ₀ = P₀ = Q₀ = 0`.
pub fn integrate_ground(bias: &BiasSpec, cfg: &SolverConfig) -> Result<GroundSolution> {
    integrate_with_integrals(bias, 0.0, 0.0, bias.period(), cfg)
}

/// Phase solution through `φ(t_start) = phi_start` on `[t_start, t_start + span]`
/// with `P` and `Q` integrated from `t_start`.
pub fn integrate_with_integrals(
    bias: &BiasSpec,
    phi_start: f64,
    t_start: f64,
    span: f64,
    cfg: &SolverConfig,
) -> Result<GroundSolution> {
    cfg.validate()?;
    check_span(span)?;
    let grids = segment_grids(bias, t_start, span, cfg.dense_samples);
    let record = integrate_segments(
        bias,
        &grids,
        [phi_start, 0.0, 0.0],
        cfg.tolerances(bias.period()),
        ground_rhs,
    )?;
    Ok(GroundSolution {
        bias: bias.clone(),
        record,
    })
}

/// Lifted solution of `φ̇ = f - sin φ` from `φ(0) = phi_init` on `[0, horizon]`.
pub fn integrate_phase(
    bias: &BiasSpec,
    phi_init: f64,
    horizon: f64,
    cfg: &SolverConfig,
) -> Result<Trajectory> {
    cfg.validate()?;
    check_span(horizon)?;
    let grids = segment_grids(bias, 0.0, horizon, cfg.dense_samples);
    let record = integrate_segments(
        bias,
        &grids,
        [phi_init],
        cfg.tolerances(bias.period()),
        phase_rhs,
    )?;
    Ok(Trajectory::from_record(record, false))
}

/// `φ(jT)` for `j = 0..=periods` without recording a dense grid.
pub fn integrate_phase_periods(
    bias: &BiasSpec,
    phi_init: f64,
    periods: usize,
    cfg: &SolverConfig,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    let period = bias.period();
    let mut stepper = Stepper::new(cfg.tolerances(period));
    let mut out = Vec::with_capacity(periods + 1);
    let mut y = [phi_init];
    out.push(phi_init);
    for j in 0..periods {
        let lo = j as f64 * period;
        let hi = lo + period;
        let mut edges = vec![lo];
        edges.extend(bias.jumps_between(lo, hi));
        edges.push(hi);
        for w in edges.windows(2) {
            let piece = bias.piece(w[0], w[1]);
            let mut f = |t: f64, y: &[f64; 1]| phase_rhs(piece.at(t), t, y);
            let k = f(w[0], &y);
            y = stepper.advance(&mut f, w[0], y, k, w[1])?.0;
        }
        out.push(y[0]);
    }
    Ok(out)
}

/// Second-order equation `β φ̈ + φ̇ + sin φ = f` on `[0, horizon]`.
pub fn integrate_rsj(
    bias: &BiasSpec,
    beta: f64,
    phi_init: f64,
    dphi_init: f64,
    horizon: f64,
    cfg: &SolverConfig,
) -> Result<Trajectory> {
    cfg.validate()?;
    check_span(horizon)?;
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "beta must be positive, got {beta}"
        )));
    }
    let grids = segment_grids(bias, 0.0, horizon, cfg.dense_samples);
    let inv_beta = 1.0 / beta;
    let rhs = move |f: f64, _t: f64, y: &[f64; 2]| [y[1], (f - y[0].sin() - y[1]) * inv_beta];
    let record = integrate_segments(
        bias,
        &grids,
        [phi_init, dphi_init],
        cfg.tolerances(bias.period()),
        rhs,
    )?;
    Ok(Trajectory::from_record(record, true))
}
