//! Closed-form reconstruction of solutions over many periods.
//!
//! After `j` periods a solution labeled `C₀` carries the label `C_j`, the
//! projective image of `(C₀, 1)` under `Φ^j`. Powers of `Φ` come from its
//! eigen-decomposition (locked and quasiperiodic regimes) or from the
//! nilpotent part (weak regime), so `C_j` is available for any `j` without
//! iterating. The phase at `t = jT + t'` is the transport of the ground
//! solution at `t'` by `C_j`.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::integrator::{GroundSolution, Trajectory};
use crate::moebius::{transport_phase_lifted, FValue, ProjectiveC};
use crate::monodromy::{build, steady_constants, winding_quadrature, Monodromy, Regime};

/// Coefficients of `Φ^j C₀` for the active regime.
#[derive(Debug, Clone, PartialEq)]
pub enum PowerForm {
    /// `Φ^j C₀ ∝ c_max V_max + c_min e^{−2κj} V_min`.
    Locked {
        v_max: [f64; 2],
        v_min: [f64; 2],
        c_max: f64,
        c_min: f64,
        kappa: f64,
        /// `M± = L∓ C₀ + 2 sin½φ₀(T)`; absent when `C₀ = ∞`.
        m_plus: Option<f64>,
        m_minus: Option<f64>,
    },
    /// `Φ^j C₀ = 2 Re(c₊ e^{ijα} V₊)`.
    Quasiperiodic {
        v_plus: [Complex64; 2],
        c_plus: Complex64,
        alpha: f64,
        /// `U⁺, U⁻, n_R, n_I`; absent when `C₀ = ∞`.
        u: Option<UCoefficients>,
    },
    /// `Φ^j = λ^j (I + (j/λ) N)` with `N = Φ − λI` nilpotent.
    Weak {
        lambda: f64,
        nilpotent: [[f64; 2]; 2],
        g_plus: f64,
        g_minus: f64,
        h: f64,
        /// `C₀ + G₋/(2H)`; absent when `C₀ = ∞` or `H = 0`.
        delta_c: Option<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UCoefficients {
    pub u_plus: Complex64,
    pub u_minus: Complex64,
    pub n_r: f64,
    pub n_i: f64,
}

#[derive(Debug, Clone)]
pub struct PropagationPlan {
    ground: GroundSolution,
    monodromy: Monodromy,
    c0: ProjectiveC,
    form: PowerForm,
}

/// Solve `x = p V₁ + q V₂` for `(p, q)`.
fn decompose(v1: [Complex64; 2], v2: [Complex64; 2], x: [f64; 2]) -> (Complex64, Complex64) {
    let det = v1[0] * v2[1] - v2[0] * v1[1];
    let p = (x[0] * v2[1] - v2[0] * x[1]) / det;
    let q = (v1[0] * x[1] - x[0] * v1[1]) / det;
    (p, q)
}

fn real_vector(v: [Complex64; 2]) -> [f64; 2] {
    [v[0].re, v[1].re]
}

impl PropagationPlan {
    pub fn new(ground: &GroundSolution, c0: ProjectiveC) -> Self {
        let m = build(ground);
        let x = c0.as_vector();
        let (s, c, q, p) = (m.sin_half, m.cos_half, m.q_t, m.p_t);
        let em = (-p).exp();
        let form = match m.regime {
            Regime::Locked => {
                let (lmax, lmin) = m.lambda_max_min();
                let v_max = m.eigenvector(lmax);
                let v_min = m.eigenvector(lmin);
                let (c_max, c_min) = decompose(v_max, v_min, x);
                let (m_plus, m_minus) = if c0.is_infinite() {
                    (None, None)
                } else {
                    let c0v = c0.value();
                    (
                        Some(m.l_minus.re * c0v + 2.0 * s),
                        Some(m.l_plus.re * c0v + 2.0 * s),
                    )
                };
                PowerForm::Locked {
                    v_max: real_vector(v_max),
                    v_min: real_vector(v_min),
                    c_max: c_max.re,
                    c_min: c_min.re,
                    kappa: m.kappa.expect("locked monodromy has an exponent"),
                    m_plus,
                    m_minus,
                }
            }
            Regime::Quasiperiodic => {
                let v_plus = m.eigenvector(m.lambda_plus);
                let v_minus = [v_plus[0].conj(), v_plus[1].conj()];
                let (c_plus, _) = decompose(v_plus, v_minus, x);
                let u = (!c0.is_infinite()).then(|| {
                    let c0v = c0.value();
                    let root = (-m.delta).sqrt();
                    let n_r = c0v * (1.0 - em) * c + (c0v * q + 2.0) * s;
                    let n_i = (1.0 - em + 2.0 * c0v * q) * c + (2.0 * c0v * em + q) * s;
                    UCoefficients {
                        u_plus: Complex64::new(n_r + root, -(n_i + c0v * root)),
                        u_minus: Complex64::new(-n_r + root, n_i - c0v * root),
                        n_r,
                        n_i,
                    }
                });
                PowerForm::Quasiperiodic {
                    v_plus,
                    c_plus,
                    alpha: m.alpha.expect("angle"),
                    u,
                }
            }
            Regime::Weak => {
                let lambda = m.lambda_plus.re;
                let g_plus = (1.0 + em) * c - q * s;
                let g_minus = (1.0 - em) * c + q * s;
                let h = em * s + q * c;
                let delta_c =
                    (!c0.is_infinite() && h != 0.0).then(|| c0.value() + g_minus / (2.0 * h));
                PowerForm::Weak {
                    lambda,
                    nilpotent: [[m.a - lambda, m.b], [m.c, m.d - lambda]],
                    g_plus,
                    g_minus,
                    h,
                    delta_c,
                }
            }
        };
        PropagationPlan {
            ground: ground.clone(),
            monodromy: m,
            c0,
            form,
        }
    }

    pub fn ground(&self) -> &GroundSolution {
        &self.ground
    }

    pub fn monodromy(&self) -> &Monodromy {
        &self.monodromy
    }

    pub fn c0(&self) -> ProjectiveC {
        self.c0
    }

    pub fn form(&self) -> &PowerForm {
        &self.form
    }

    pub fn regime(&self) -> Regime {
        self.monodromy.regime
    }

    pub fn period(&self) -> f64 {
        self.ground.period()
    }

    /// A vector proportional to `Φ^j (C₀, 1)`.
    fn power_vector(&self, j: u64) -> [f64; 2] {
        match &self.form {
            PowerForm::Locked {
                v_max,
                v_min,
                c_max,
                c_min,
                kappa,
                ..
            } => {
                let r = (-2.0 * kappa * j as f64).exp();
                [
                    c_max * v_max[0] + c_min * r * v_min[0],
                    c_max * v_max[1] + c_min * r * v_min[1],
                ]
            }
            PowerForm::Quasiperiodic {
                v_plus,
                c_plus,
                alpha,
                ..
            } => {
                let turn = Complex64::from_polar(1.0, (j as f64 * alpha).rem_euclid(TAU));
                let w = c_plus * turn;
                [2.0 * (w * v_plus[0]).re, 2.0 * (w * v_plus[1]).re]
            }
            PowerForm::Weak {
                lambda,
                nilpotent: n,
                ..
            } => {
                let x = self.c0.as_vector();
                let s = j as f64 / lambda;
                [
                    x[0] + s * (n[0][0] * x[0] + n[0][1] * x[1]),
                    x[1] + s * (n[1][0] * x[0] + n[1][1] * x[1]),
                ]
            }
        }
    }

    /// `C_j` from the closed form.
    pub fn c_at(&self, j: u64) -> ProjectiveC {
        if j == 0 {
            return self.c0;
        }
        let v = self.power_vector(j);
        ProjectiveC::new(v[0], v[1]).unwrap_or(self.c0)
    }

    /// `e^{iφ(t)}`.
    pub fn phase_at(&self, t: f64) -> Result<Complex64> {
        let (j, tp) = self.split_time(t)?;
        let label = self.c_at(j);
        let s = self.ground.state_at(tp)?;
        crate::moebius::transport_phase(s.phi, &s.f_value(), &label, t)
    }

    /// Lifted `φ(jT)` for `j = 0..=j_max`, starting from the lifted value of
    /// the labeled solution at `t = 0`.
    ///
    /// Within one period `φ = φ₀ − 2 arg(b_j + a_j F₀)`, and `b_j + a_j F₀`
    /// never crosses the real axis, so each per-period increment is exact
    /// without sampling.
    pub fn lifted_period_values(&self, j_max: u64) -> Vec<f64> {
        let start = self.ground.state(0);
        let end = self.ground.boundary();
        let (f_start, f_end) = (start.f_value(), end.f_value());
        let mut out = Vec::with_capacity(j_max as usize + 1);
        let mut phi = transport_phase_lifted(start.phi, &f_start, &self.c0);
        out.push(phi);
        for j in 0..j_max {
            let label = self.c_at(j);
            phi += transport_phase_lifted(end.phi, &f_end, &label)
                - transport_phase_lifted(start.phi, &f_start, &label);
            out.push(phi);
        }
        out
    }

    /// Lifted trajectory on `[0, periods·T]` sampled at the ground nodes.
    pub fn lifted_trajectory(&self, periods: u64) -> Result<Trajectory> {
        let anchors = self.lifted_period_values(periods);
        let period = self.period();
        let nodes = self.ground.grid();
        let mut grid = Vec::with_capacity(periods as usize * nodes.len());
        let mut phi = Vec::with_capacity(grid.capacity());
        let f_start = self.ground.state(0).f_value();
        for j in 0..periods {
            let label = self.c_at(j);
            let origin = transport_phase_lifted(self.ground.state(0).phi, &f_start, &label);
            let skip = usize::from(j > 0);
            for (i, &tp) in nodes.iter().enumerate().skip(skip) {
                let s = self.ground.state(i);
                grid.push(j as f64 * period + tp);
                phi.push(
                    anchors[j as usize] + transport_phase_lifted(s.phi, &s.f_value(), &label)
                        - origin,
                );
            }
        }
        Trajectory::from_samples(grid, phi)
    }

    /// `e^{iφ(jT)}` from the `U±` coefficients of the quasiperiodic regime.
    pub fn phase_at_period_via_u(&self, j: u64) -> Result<Complex64> {
        match &self.form {
            PowerForm::Quasiperiodic {
                alpha, u: Some(u), ..
            } => {
                let turn = Complex64::from_polar(1.0, (j as f64 * alpha).rem_euclid(TAU));
                let num = turn * u.u_plus + turn.conj() * u.u_minus;
                let den = turn.conj() * u.u_plus.conj() + turn * u.u_minus.conj();
                Ok(num / den)
            }
            PowerForm::Quasiperiodic { u: None, .. } => Err(Error::InvalidArgument(
                "U coefficients need a finite initial constant".into(),
            )),
            _ => Err(Error::WrongRegime {
                expected: "quasiperiodic",
                found: self.regime(),
            }),
        }
    }

    /// Twice the argument of the `V₊` coefficient of `c`; advances by `2α`
    /// per period in the quasiperiodic regime.
    pub fn eigen_angle(&self, c: &ProjectiveC) -> Result<f64> {
        match &self.form {
            PowerForm::Quasiperiodic { v_plus, .. } => {
                let v_minus = [v_plus[0].conj(), v_plus[1].conj()];
                let (p, _) = decompose(*v_plus, v_minus, c.as_vector());
                Ok((2.0 * p.arg()).rem_euclid(TAU))
            }
            _ => Err(Error::WrongRegime {
                expected: "quasiperiodic",
                found: self.regime(),
            }),
        }
    }

    fn split_time(&self, t: f64) -> Result<(u64, f64)> {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "time must be non-negative, got {t}"
            )));
        }
        let period = self.period();
        let x = t / period;
        let mut j = x.floor();
        // A time a hair below a period boundary belongs to the next period.
        if (x - j - 1.0).abs() < 1e-12 {
            j += 1.0;
        }
        let tp = (t - j * period).clamp(0.0, period);
        Ok((j as u64, tp))
    }
}

/// Labels from iterating the recurrence and from the closed form.
#[derive(Debug, Clone, PartialEq)]
pub struct CSequence {
    pub iterated: Vec<ProjectiveC>,
    pub closed: Vec<ProjectiveC>,
}

impl CSequence {
    pub fn max_disagreement(&self) -> f64 {
        self.iterated
            .iter()
            .zip(&self.closed)
            .map(|(a, b)| a.distance(b))
            .fold(0.0, f64::max)
    }
}

pub fn c_sequence(plan: &PropagationPlan, j_max: u64) -> CSequence {
    let mut iterated = Vec::with_capacity(j_max as usize + 1);
    let mut c = plan.c0;
    iterated.push(c);
    for _ in 0..j_max {
        c = plan.monodromy.apply(&c);
        iterated.push(c);
    }
    let closed = (0..=j_max).map(|j| plan.c_at(j)).collect();
    CSequence { iterated, closed }
}

/// A periodic profile `φ(t)` on `[0, T]` sampled uniformly.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeriodicProfile {
    pub label: ProjectiveC,
    pub t: Vec<f64>,
    /// Lifted phase.
    pub phi: Vec<f64>,
    /// Revolutions over one period.
    pub k: i64,
}

impl PeriodicProfile {
    pub fn unit(&self, i: usize) -> Complex64 {
        Complex64::from_polar(1.0, self.phi[i])
    }

    /// `|e^{iφ(T)} − e^{iφ(0)}|`
    pub fn periodicity_defect(&self) -> f64 {
        (self.unit(self.phi.len() - 1) - self.unit(0)).norm()
    }

    /// `φ(T) − φ(0) − 2πk`
    pub fn winding_defect(&self) -> f64 {
        self.phi[self.phi.len() - 1] - self.phi[0] - TAU * self.k as f64
    }
}

fn profile(ground: &GroundSolution, label: ProjectiveC, samples: usize) -> Result<PeriodicProfile> {
    if samples < 2 {
        return Err(Error::InvalidArgument(
            "a profile needs at least two samples".into(),
        ));
    }
    let period = ground.period();
    let mut t = Vec::with_capacity(samples);
    let mut phi = Vec::with_capacity(samples);
    for i in 0..samples {
        let ti = if i + 1 == samples {
            period
        } else {
            period * i as f64 / (samples - 1) as f64
        };
        let s = ground.state_at(ti)?;
        t.push(ti);
        phi.push(transport_phase_lifted(s.phi, &s.f_value(), &label));
    }
    let k = winding_quadrature(ground, &label).k;
    Ok(PeriodicProfile { label, t, phi, k })
}

/// The attracting periodic solution.
pub fn steady_profile(plan: &PropagationPlan, samples: usize) -> Result<PeriodicProfile> {
    let steady = steady_constants(&plan.monodromy)?;
    profile(&plan.ground, steady.c_infinity, samples)
}

/// The repelling periodic solution of the locked regime.
pub fn unstable_profile(plan: &PropagationPlan, samples: usize) -> Result<PeriodicProfile> {
    if plan.regime() != Regime::Locked {
        return Err(Error::WrongRegime {
            expected: "locked",
            found: plan.regime(),
        });
    }
    let steady = steady_constants(&plan.monodromy)?;
    profile(
        &plan.ground,
        steady.c_bowtie.expect("locked regime has two constants"),
        samples,
    )
}

/// Envelope of the approach to the steady state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransientEnvelope {
    pub kappa: f64,
    /// `max_t |Z(t)|`
    pub max_z: f64,
    /// Smallest `j` with `max|Z| < e^{2κj}`.
    pub j_near_zone: u64,
}

fn dot_f(v: [f64; 2], f: &FValue) -> Complex64 {
    Complex64::new(v[1] + v[0] * f.q, v[0] * f.exp_neg_p)
}

fn locked_parts(plan: &PropagationPlan) -> Result<([f64; 2], [f64; 2], f64, f64, f64)> {
    match &plan.form {
        PowerForm::Locked {
            v_max,
            v_min,
            c_max,
            c_min,
            kappa,
            ..
        } => Ok((*v_max, *v_min, *c_max, *c_min, *kappa)),
        _ => Err(Error::WrongRegime {
            expected: "locked",
            found: plan.regime(),
        }),
    }
}

/// `Z(t) = −(c_min/c_max)(V_min·F₀)/(V_max·F₀)` at ground node `i`, where
/// `V·F = V_b + V_a F`.
fn transient_factor(plan: &PropagationPlan, i: usize) -> Result<Complex64> {
    let (v_max, v_min, c_max, c_min, _) = locked_parts(plan)?;
    let f = plan.ground.state(i).f_value();
    Ok(-(c_min / c_max) * dot_f(v_min, &f) / dot_f(v_max, &f))
}

pub fn transient_envelope(plan: &PropagationPlan) -> Result<TransientEnvelope> {
    let (_, _, c_max, _, kappa) = locked_parts(plan)?;
    if c_max == 0.0 {
        return Err(Error::InvalidArgument(
            "the initial constant is the unstable one".into(),
        ));
    }
    let mut max_z = 0.0f64;
    for i in 0..plan.ground.len() {
        max_z = max_z.max(transient_factor(plan, i)?.norm());
    }
    let j_near_zone = if max_z < 1.0 {
        0
    } else {
        (max_z.ln() / (2.0 * kappa)).floor() as u64 + 1
    };
    Ok(TransientEnvelope {
        kappa,
        max_z,
        j_near_zone,
    })
}

/// `sup_t' |e^{iφ(jT + t')} − e^{iφ∞(t')}|` over the ground nodes, evaluated
/// as `2|Im x|/|1 − x|` with `x = Z e^{−2κj}` so that it stays accurate far
/// below rounding of the phases themselves.
pub fn steady_deviation(plan: &PropagationPlan, j: u64) -> Result<f64> {
    let (_, _, _, _, kappa) = locked_parts(plan)?;
    let r = (-2.0 * kappa * j as f64).exp();
    let mut sup = 0.0f64;
    for i in 0..plan.ground.len() {
        let x = transient_factor(plan, i)? * r;
        sup = sup.max(2.0 * x.im.abs() / (1.0 - x).norm());
    }
    Ok(sup)
}

/// Ratio of the `V_max` and `V_min` coefficients of `C_j`, the distance from
/// the unstable constant in eigen-coordinates. Grows as `e^{2κj}`.
pub fn unstable_departure(plan: &PropagationPlan, j: u64) -> Result<f64> {
    let (_, _, c_max, c_min, kappa) = locked_parts(plan)?;
    Ok((c_max / c_min).abs() * (2.0 * kappa * j as f64).exp())
}

/// One period of a segmented trajectory in local time `t' ∈ [0, T]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Segment {
    pub t: Vec<f64>,
    pub phi: Vec<f64>,
}

impl Segment {
    fn value_at(&self, tp: f64) -> f64 {
        let n = self.t.len();
        let i = self
            .t
            .partition_point(|&x| x <= tp)
            .saturating_sub(1)
            .min(n - 2);
        let (t0, t1) = (self.t[i], self.t[i + 1]);
        let w = ((tp - t0) / (t1 - t0)).clamp(0.0, 1.0);
        self.phi[i] + w * (self.phi[i + 1] - self.phi[i])
    }
}

/// Per-period pieces with the `2π` multiples removed so that each starts in
/// `[0, 2π)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SegmentedTrajectory {
    pub segments: Vec<Segment>,
    pub increments: Vec<i64>,
}

impl SegmentedTrajectory {
    /// `sup_t' |φ_{j+1}(t') − φ_j(t')|`.
    pub fn gap(&self, j: usize) -> f64 {
        let (a, b) = (&self.segments[j], &self.segments[j + 1]);
        a.t.iter()
            .zip(&a.phi)
            .map(|(&tp, &p)| (b.value_at(tp) - p).abs())
            .fold(0.0, f64::max)
    }

    /// Largest `|φ_{j+1}(0) − φ_j(T)|` modulo `2π`.
    pub fn continuity_defect(&self) -> f64 {
        self.segments
            .windows(2)
            .map(|w| {
                let d = w[1].phi[0] - w[0].phi[w[0].phi.len() - 1];
                (d - TAU * (d / TAU).round()).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Cut a trajectory covering `[0, nT]` into `n` periods.
pub fn segment(traj: &Trajectory, period: f64) -> Result<SegmentedTrajectory> {
    if !(period > 0.0) {
        return Err(Error::InvalidArgument("period must be positive".into()));
    }
    let start = traj.start();
    let span = traj.end() - start;
    let n = (span / period + 1e-9).floor() as usize;
    let mut segments = Vec::with_capacity(n);
    let mut increments = Vec::with_capacity(n);
    for j in 0..n {
        let lo = start + j as f64 * period;
        let hi = lo + period;
        let tol = 1e-12 * period.max(hi.abs());
        let phi_lo = traj.phi_at(lo)?;
        // The 1e-12 guard keeps a value sitting on a multiple of 2π from
        // dropping a whole turn through rounding.
        let m = ((phi_lo / TAU) + 1e-12).floor() as i64;
        let shift = TAU * m as f64;
        let mut t = vec![0.0];
        let mut phi = vec![phi_lo - shift];
        for (&x, &p) in traj.grid.iter().zip(&traj.phi) {
            if x > lo + tol && x < hi - tol {
                t.push(x - lo);
                phi.push(p - shift);
            }
        }
        t.push(period);
        phi.push(traj.phi_at(hi)? - shift);
        segments.push(Segment { t, phi });
        increments.push(m);
    }
    Ok(SegmentedTrajectory {
        segments,
        increments,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bias::BiasSpec;
    use crate::integrator::{
        integrate_ground, integrate_phase, integrate_phase_periods, SolverConfig,
    };
    use crate::moebius::c_from_initials;
    use std::f64::consts::PI;

    fn pulse(iota_dc: f64) -> BiasSpec {
        BiasSpec::rect_pulse_train(TAU / 0.47, iota_dc, 3.5, 0.2).unwrap()
    }

    fn plan(bias: &BiasSpec, c0: f64) -> PropagationPlan {
        let g = integrate_ground(bias, &SolverConfig::default()).unwrap();
        PropagationPlan::new(&g, ProjectiveC::from_value(c0))
    }

    fn initial_phase(c0: f64) -> f64 {
        -2.0 * c0.atan()
    }

    #[test]
    fn first_period_is_plain_transport() {
        for iota in [1.25, 1.40] {
            let p = plan(&pulse(iota), 0.37);
            for &t in &[0.0, 2.0, 7.5, p.period() * 0.999] {
                let direct =
                    crate::moebius::apply_solution_transport(p.ground(), &p.c0(), t).unwrap();
                assert!((p.phase_at(t).unwrap() - direct).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn fixed_point_sequence_is_constant() {
        let g = integrate_ground(&pulse(1.25), &SolverConfig::default()).unwrap();
        let steady = steady_constants(&build(&g)).unwrap();
        let p = PropagationPlan::new(&g, steady.c_infinity);
        let seq = c_sequence(&p, 30);
        assert!(seq
            .closed
            .iter()
            .all(|c| c.distance(&steady.c_infinity) < 1e-9));
        assert!(seq.max_disagreement() < 1e-9);
    }

    #[test]
    fn closed_form_matches_iteration() {
        for iota in [1.25, 1.40, 1.46, 0.3] {
            let p = plan(&pulse(iota), 0.0);
            let seq = c_sequence(&p, 200);
            assert!(
                seq.max_disagreement() < 1e-8,
                "iota {iota}: {}",
                seq.max_disagreement()
            );
        }
    }

    #[test]
    fn locked_coefficients_match_matrix_action() {
        let p = plan(&pulse(1.25), 0.4);
        let m = p.monodromy();
        let PowerForm::Locked {
            m_plus: Some(mp),
            m_minus: Some(mm),
            ..
        } = *p.form()
        else {
            panic!("expected locked form")
        };
        // (C₀, 1) = (M₊ V₊ − M₋ V₋) / (2 s (L₊ − L₋))
        let (lp, lm, s) = (m.l_plus.re, m.l_minus.re, m.sin_half);
        let scale = 2.0 * s * (lp - lm);
        let vp = m.eigenvector_formula(true);
        let vm = m.eigenvector_formula(false);
        let x0 = (mp * vp[0].re - mm * vm[0].re) / scale;
        let x1 = (mp * vp[1].re - mm * vm[1].re) / scale;
        assert!((x0 - 0.4).abs() < 1e-9 && (x1 - 1.0).abs() < 1e-9);
        let y0 = (mp * m.lambda_plus.re * vp[0].re - mm * m.lambda_minus.re * vm[0].re) / scale;
        let y1 = (mp * m.lambda_plus.re * vp[1].re - mm * m.lambda_minus.re * vm[1].re) / scale;
        let direct = m.apply(&ProjectiveC::from_value(0.4));
        assert!(ProjectiveC::new(y0, y1).unwrap().distance(&direct) < 1e-9);
    }

    #[test]
    fn locked_sequence_converges_geometrically() {
        let p = plan(&pulse(1.25), 0.0);
        assert_eq!(p.regime(), Regime::Locked);
        let steady = steady_constants(p.monodromy()).unwrap().c_infinity;
        let seq = c_sequence(&p, 60);
        let d: Vec<f64> = seq.closed.iter().map(|c| c.distance(&steady)).collect();
        assert!(d[60] < 1e-3 * d[0].max(1e-3));
        let kappa = p.monodromy().kappa.unwrap();
        let env = transient_envelope(&p).unwrap();
        let j0 = env.j_near_zone as usize + 2;
        let mut checked = 0;
        for j in j0..59 {
            if d[j + 1] < 1e-10 {
                break;
            }
            checked += 1;
            let ratio = d[j + 1] / d[j];
            assert!(
                (ratio / (-2.0 * kappa).exp() - 1.0).abs() < 0.02,
                "j {j}: {ratio}"
            );
        }
        assert!(checked >= 2);
    }

    #[test]
    fn quasiperiodic_steps_rotate_by_twice_alpha() {
        let p = plan(&pulse(1.40), 0.0);
        assert_eq!(p.regime(), Regime::Quasiperiodic);
        let alpha = p.monodromy().alpha.unwrap();
        let seq = c_sequence(&p, 40);
        let steps: Vec<f64> = seq
            .closed
            .windows(2)
            .map(|w| {
                (p.eigen_angle(&w[1]).unwrap() - p.eigen_angle(&w[0]).unwrap()).rem_euclid(TAU)
            })
            .collect();
        for s in steps {
            assert!((s - (2.0 * alpha).rem_euclid(TAU)).abs() < 1e-6);
        }
        // No convergence: successive labels keep moving.
        let moves: Vec<f64> = seq
            .closed
            .windows(2)
            .map(|w| w[0].distance(&w[1]))
            .collect();
        assert!(moves[20..].iter().all(|&m| m > 1e-3));
    }

    #[test]
    fn u_route_agrees_and_is_unimodular() {
        let p = plan(&pulse(1.40), -0.8);
        for j in [0u64, 1, 2, 7, 50, 200] {
            let via_u = p.phase_at_period_via_u(j).unwrap();
            assert!((via_u.norm() - 1.0).abs() < 1e-10);
            let c = p.c_at(j);
            let direct = Complex64::new(c.b(), -c.a()) / Complex64::new(c.b(), c.a());
            assert!((via_u - direct).norm() < 1e-9, "j {j}");
        }
        let locked = plan(&pulse(1.25), 0.0);
        assert!(locked.phase_at_period_via_u(1).is_err());
    }

    #[test]
    fn phase_matches_brute_force_over_fifty_periods() {
        let cfg = SolverConfig::default();
        for (iota, c0) in [(1.25, 0.3), (1.40, -1.2), (0.7, 2.5)] {
            let bias = pulse(iota);
            let p = plan(&bias, c0);
            let ends = integrate_phase_periods(&bias, initial_phase(c0), 50, &cfg).unwrap();
            for (j, &phi) in ends.iter().enumerate() {
                let z = p.phase_at(j as f64 * bias.period()).unwrap();
                assert!(
                    (z - Complex64::from_polar(1.0, phi)).norm() < 1e-6,
                    "iota {iota} j {j}"
                );
            }
            let lifted = p.lifted_period_values(50);
            assert!(
                (lifted[50] - ends[50]).abs() < 1e-6,
                "lifted {} vs {}",
                lifted[50],
                ends[50]
            );
        }
    }

    #[test]
    fn constant_bias_quasiperiodic_long_horizon() {
        let bias = BiasSpec::constant(1.0, 2.0).unwrap();
        let p = plan(&bias, 0.0);
        assert_eq!(p.regime(), Regime::Quasiperiodic);
        let ends = integrate_phase_periods(&bias, 0.0, 200, &SolverConfig::default()).unwrap();
        let z = p.phase_at(200.0).unwrap();
        assert!((z - Complex64::from_polar(1.0, ends[200])).norm() < 1e-5);
        let via_u = p.phase_at_period_via_u(200).unwrap();
        assert!((via_u - z).norm() < 1e-9);
    }

    #[test]
    fn locked_order_one_increment_limit() {
        // Scan the pulse family for a locked window of order one.
        let cfg = SolverConfig::default();
        let mut found = false;
        for i in 0..60 {
            let iota = 0.5 + 0.02 * i as f64;
            let g = integrate_ground(&pulse(iota), &cfg).unwrap();
            let m = build(&g);
            if m.regime != Regime::Locked {
                continue;
            }
            let s = steady_constants(&m).unwrap();
            if winding_quadrature(&g, &s.c_infinity).k != 1 {
                continue;
            }
            let p = PropagationPlan::new(&g, ProjectiveC::zero());
            let lifted = p.lifted_period_values(80);
            let inc = lifted[80] - lifted[79];
            assert!((inc - TAU).abs() < 1e-6, "iota {iota}: {inc}");
            found = true;
            break;
        }
        assert!(found);
    }

    #[test]
    fn steady_profiles_of_simple_biases() {
        let zero = plan(&BiasSpec::constant(3.0, 0.0).unwrap(), 0.5);
        let prof = steady_profile(&zero, 50).unwrap();
        assert!(prof.phi.iter().all(|p| p.abs() < 1e-12));
        let un = unstable_profile(&zero, 50).unwrap();
        assert!(un
            .phi
            .iter()
            .all(|p| (p.rem_euclid(TAU) - PI).abs() < 1e-12));

        let half = plan(&BiasSpec::constant(10.0, 0.5).unwrap(), 0.5);
        let prof = steady_profile(&half, 100).unwrap();
        let target = 0.5f64.asin();
        assert!(prof
            .phi
            .iter()
            .all(|p| (p.rem_euclid(TAU) - target).abs() < 1e-8));
        assert_eq!(prof.k, 0);
    }

    #[test]
    fn steady_profile_is_large_j_limit() {
        let bias = pulse(1.25);
        let p = plan(&bias, 0.0);
        let prof = steady_profile(&p, 200).unwrap();
        assert!(prof.periodicity_defect() < 1e-9);
        assert!(prof.winding_defect().abs() < 1e-9);
        let m = build(p.ground());
        let k = winding_quadrature(p.ground(), &steady_constants(&m).unwrap().c_infinity).k;
        assert_eq!(prof.k, k);
        for (i, &tp) in prof.t.iter().enumerate() {
            let z = p
                .phase_at(100.0 * bias.period() + tp.min(bias.period() * (1.0 - 1e-9)))
                .unwrap();
            assert!((z - prof.unit(i)).norm() < 1e-6);
        }
        assert!(steady_profile(&plan(&pulse(1.40), 0.0), 10).is_err());
    }

    #[test]
    fn unstable_profile_round_trip() {
        let bias = pulse(1.25);
        let cfg = SolverConfig::default();
        let p = plan(&bias, 0.0);
        let un = unstable_profile(&p, 64).unwrap();
        let c_bow = steady_constants(p.monodromy()).unwrap().c_bowtie.unwrap();
        let traj = integrate_phase(&bias, un.phi[0], bias.period(), &cfg).unwrap();
        let prof = crate::moebius::c_profile(&traj, p.ground()).unwrap();
        assert!((prof.mean - c_bow.value()).abs() < 1e-7 * (1.0 + c_bow.value().abs()));
    }

    #[test]
    fn transient_envelope_bounds_deviation() {
        let bias = pulse(1.25);
        let p = plan(&bias, 0.0);
        let env = transient_envelope(&p).unwrap();
        let prof = steady_profile(&p, 2).unwrap();
        let label = prof.label;
        for j in env.j_near_zone + 1..env.j_near_zone + 6 {
            let bound = 2.0 * env.max_z * (-2.0 * env.kappa * j as f64).exp();
            let mut sup = 0.0f64;
            for (i, &tp) in p.ground().grid().iter().enumerate().step_by(8) {
                if tp >= bias.period() {
                    continue;
                }
                let s = p.ground().state(i);
                let steady =
                    crate::moebius::transport_phase(s.phi, &s.f_value(), &label, tp).unwrap();
                let z = p.phase_at(j as f64 * bias.period() + tp).unwrap();
                sup = sup.max((z - steady).norm());
            }
            assert!(sup < bound, "j {j}: {sup} vs {bound}");
            assert!(steady_deviation(&p, j).unwrap() <= bound);
        }
        let at_steady = PropagationPlan::new(p.ground(), label);
        let env = transient_envelope(&at_steady).unwrap();
        assert!(env.max_z < 1e-9);
    }

    #[test]
    fn weak_regime_closed_form_on_exact_parabolic_matrix() {
        // With a hand-built boundary giving D = 1 exactly, the nilpotent power
        // must agree with plain iteration.
        let phi_t: f64 = 1.0;
        let p_t: f64 = 0.8;
        let (s, c) = (0.5 * phi_t).sin_cos();
        let e = (0.5 * p_t).exp();
        let q_t = 2.0 * ((0.5 * p_t).cosh() * c - 1.0) / (e * s);
        let m = Monodromy::from_boundary(phi_t, p_t, q_t);
        assert_eq!(m.regime, Regime::Weak);
        let n = [[m.a - 1.0, m.b], [m.c, m.d - 1.0]];
        let x = [0.3, 1.0];
        let mut it = ProjectiveC::new(x[0], x[1]).unwrap();
        for j in 1..=200u64 {
            it = m.apply(&it);
            let s = j as f64;
            let closed = ProjectiveC::new(
                x[0] + s * (n[0][0] * x[0] + n[0][1] * x[1]),
                x[1] + s * (n[1][0] * x[0] + n[1][1] * x[1]),
            )
            .unwrap();
            assert!(closed.distance(&it) < 1e-8, "j {j}");
            // The c ≠ 0 representation with (a − d)/(2c).
            let (a, b, cc, d) = (m.a, m.b, m.c, m.d);
            let _ = b;
            let lead = x[1] / (2.0 * cc);
            let rest = x[0] - (a - d) * x[1] / (2.0 * cc);
            let v = [
                lead * (a - d) + rest * (1.0 + s / (a + d) * (a - d)),
                lead * 2.0 * cc + rest * (s / (a + d) * 2.0 * cc),
            ];
            assert!(ProjectiveC::new(v[0], v[1]).unwrap().distance(&it) < 1e-8);
        }
        let limit = ProjectiveC::from_value((m.a - m.d) / (2.0 * m.c));
        assert!(it.distance(&limit) < 0.05);
    }

    #[test]
    fn weak_triangular_powers() {
        // φ₀(T) = 0 and P₀(T) = 0 give Φ = [[1, 0], [Q, 1]].
        let m = Monodromy::from_boundary(0.0, 0.0, 0.7);
        assert_eq!(m.regime, Regime::Weak);
        assert!(m.b == 0.0 && (m.c - 0.7).abs() < 1e-15);
        let mut it = ProjectiveC::from_value(2.0);
        for j in 1..=50u64 {
            it = m.apply(&it);
            // Lower-triangular power: C_j = C₀ / (1 + j Q C₀).
            let expected = ProjectiveC::new(2.0, 1.0 + j as f64 * 0.7 * 2.0).unwrap();
            assert!(it.distance(&expected) < 1e-12);
        }
    }

    #[test]
    fn segment_examples() {
        let period = 2.0;
        let grid: Vec<f64> = (0..=400).map(|i| i as f64 * 0.025).collect();
        let phi: Vec<f64> = grid.iter().map(|t| TAU * t / period).collect();
        let traj = Trajectory::from_samples(grid, phi).unwrap();
        let seg = segment(&traj, period).unwrap();
        assert_eq!(seg.increments, vec![0, 1, 2, 3, 4]);
        for s in &seg.segments {
            for (&tp, &p) in s.t.iter().zip(&s.phi) {
                assert!((p - TAU * tp / period).abs() < 1e-9);
            }
        }
        assert!(seg.continuity_defect() < 1e-9);
    }

    #[test]
    fn segments_converge_when_locked_and_not_otherwise() {
        let cfg = SolverConfig::default();
        let locked = pulse(0.3);
        let g = integrate_ground(&locked, &cfg).unwrap();
        assert_eq!(build(&g).regime, Regime::Locked);
        let traj = integrate_phase(&locked, 1.0, 12.0 * locked.period(), &cfg).unwrap();
        let seg = segment(&traj, locked.period()).unwrap();
        assert!(seg.continuity_defect() < 1e-9);
        assert!(seg.gap(10) < 1e-6);

        let free = pulse(1.40);
        let traj = integrate_phase(&free, 1.0, 51.0 * free.period(), &cfg).unwrap();
        let seg = segment(&traj, free.period()).unwrap();
        let min_gap = (0..50).map(|j| seg.gap(j)).fold(f64::INFINITY, f64::min);
        assert!(min_gap > 1e-2, "{min_gap}");
    }

    #[test]
    fn lifted_trajectory_is_continuous() {
        let p = plan(&pulse(1.40), 0.5);
        let tr = p.lifted_trajectory(5).unwrap();
        let jumps = tr
            .phi
            .windows(2)
            .map(|w| (w[1] - w[0]).abs())
            .fold(0.0, f64::max);
        assert!(jumps < 0.1);
        let c = c_from_initials(tr.phi[0], 0.0);
        assert!(c.distance(&p.c0()) < 1e-12);
    }
}
