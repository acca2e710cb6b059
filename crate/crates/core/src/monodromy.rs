//! The one-period transfer matrix acting on C-constants and everything read
//! off from it: discriminant, regime, eigen-data, steady constants, winding
//! order and the rotation angle of the quasiperiodic regime.

use std::f64::consts::{PI, TAU};
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dense::simpson;
use crate::error::{Error, Result};
use crate::integrator::{integrate_phase_periods, GroundSolution, SolverConfig};
use crate::moebius::ProjectiveC;

/// Periods used to anchor the integer part of the quasiperiodic rate.
const ANCHOR_PERIODS: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Locked,
    Weak,
    Quasiperiodic,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::Locked => "locked",
            Regime::Weak => "weak",
            Regime::Quasiperiodic => "quasiperiodic",
        })
    }
}

/// `Φ = [[a, b], [c, d]]` mapping `(C_j, 1)` to a multiple of `(C_{j+1}, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Monodromy {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub delta: f64,
    pub regime: Regime,
    pub lambda_plus: Complex64,
    pub lambda_minus: Complex64,
    pub alpha: Option<f64>,
    pub kappa: Option<f64>,
    pub l_plus: Complex64,
    pub l_minus: Complex64,
    /// `sin ½φ₀(T)`
    pub sin_half: f64,
    /// `cos ½φ₀(T)`
    pub cos_half: f64,
    pub phi_t: f64,
    pub p_t: f64,
    pub q_t: f64,
}

impl Monodromy {
    /// Assemble from the ground values at `t = T`.
    pub fn from_boundary(phi_t: f64, p_t: f64, q_t: f64) -> Self {
        let (s, c) = (0.5 * phi_t).sin_cos();
        let e = (0.5 * p_t).exp();
        let inv_e = (-0.5 * p_t).exp();
        let a = inv_e * c - q_t * e * s;
        let b = -e * s;
        let cm = inv_e * s + q_t * e * c;
        let d = e * c;

        let half_trace = (0.5 * p_t).cosh() * c - 0.5 * e * q_t * s;
        let delta = 4.0 * (-p_t).exp() * (half_trace * half_trace - 1.0);
        let trace = a + d;
        let eps = 1e-9 * (1.0 + trace * trace);
        let regime = if delta > eps {
            Regime::Locked
        } else if delta < -eps {
            Regime::Quasiperiodic
        } else {
            Regime::Weak
        };

        let root = Complex64::new(delta, 0.0).sqrt();
        let base = q_t * s + (1.0 - (-p_t).exp()) * c;
        let l_plus = base + root;
        let l_minus = base - root;

        let (lambda_plus, lambda_minus, alpha, kappa) = match regime {
            Regime::Locked => {
                let r = (half_trace * half_trace - 1.0).sqrt();
                // The larger root in magnitude first, the other from λ₊λ₋ = 1.
                let big = half_trace + half_trace.signum() * r;
                let small = 1.0 / big;
                let (lp, lm) = if half_trace > 0.0 {
                    (big, small)
                } else {
                    (small, big)
                };
                (
                    Complex64::new(lp, 0.0),
                    Complex64::new(lm, 0.0),
                    None,
                    Some(big.abs().ln()),
                )
            }
            Regime::Quasiperiodic => {
                let sin_alpha = (1.0 - half_trace * half_trace).max(0.0).sqrt();
                let alpha = sin_alpha.atan2(half_trace);
                (
                    Complex64::from_polar(1.0, alpha),
                    Complex64::from_polar(1.0, -alpha),
                    Some(alpha),
                    None,
                )
            }
            Regime::Weak => {
                let unit = Complex64::new(half_trace.signum(), 0.0);
                (unit, unit, None, None)
            }
        };

        Monodromy {
            a,
            b,
            c: cm,
            d,
            delta,
            regime,
            lambda_plus,
            lambda_minus,
            alpha,
            kappa,
            l_plus,
            l_minus,
            sin_half: s,
            cos_half: c,
            phi_t,
            p_t,
            q_t,
        }
    }

    pub fn matrix(&self) -> [[f64; 2]; 2] {
        [[self.a, self.b], [self.c, self.d]]
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    /// `D = (a + d)/2`.
    pub fn half_trace(&self) -> f64 {
        0.5 * (self.a + self.d)
    }

    /// One period of the recurrence `C ↦ (aC + b)/(cC + d)`.
    pub fn apply(&self, c: &ProjectiveC) -> ProjectiveC {
        let [x, y] = c.as_vector();
        ProjectiveC::new(self.a * x + self.b * y, self.c * x + self.d * y)
            .expect("unimodular map is invertible")
    }

    /// `λ² + 1 − 2λD`.
    pub fn characteristic(&self, lambda: Complex64) -> Complex64 {
        lambda * lambda + 1.0 - 2.0 * lambda * self.half_trace()
    }

    /// Closed-form eigenvectors `V± = (−2 sin½φ₀(T), L±)`; degenerate when
    /// `sin ½φ₀(T) = 0`.
    pub fn eigenvector_formula(&self, plus: bool) -> [Complex64; 2] {
        let l = if plus { self.l_plus } else { self.l_minus };
        [Complex64::new(-2.0 * self.sin_half, 0.0), l]
    }

    /// Eigenvector for `lambda`, taking whichever of `(b, λ − a)` and
    /// `(λ − d, c)` is better conditioned.
    pub fn eigenvector(&self, lambda: Complex64) -> [Complex64; 2] {
        let first = [Complex64::new(self.b, 0.0), lambda - self.a];
        let second = [lambda - self.d, Complex64::new(self.c, 0.0)];
        let norm = |v: &[Complex64; 2]| v[0].norm_sqr() + v[1].norm_sqr();
        if norm(&first) >= norm(&second) {
            first
        } else {
            second
        }
    }

    /// `true` when `|λ₊| ≥ |λ₋|`, which in the locked regime means `D > 0`.
    pub fn plus_is_max(&self) -> bool {
        self.half_trace() > 0.0
    }

    /// Eigenvalues ordered as (max, min) by modulus.
    pub fn lambda_max_min(&self) -> (Complex64, Complex64) {
        if self.plus_is_max() {
            (self.lambda_plus, self.lambda_minus)
        } else {
            (self.lambda_minus, self.lambda_plus)
        }
    }

    pub fn l_max_min(&self) -> (Complex64, Complex64) {
        if self.plus_is_max() {
            (self.l_plus, self.l_minus)
        } else {
            (self.l_minus, self.l_plus)
        }
    }

    /// Residual of `A C² + B C + sin½φ₀(T) = 0` in homogeneous form, the
    /// quadratic whose roots are the steady constants.
    pub fn quadratic_residual(&self, c: &ProjectiveC) -> f64 {
        let (s, co) = (self.sin_half, self.cos_half);
        let em = (-self.p_t).exp();
        let qa = self.q_t * co + em * s;
        let qb = self.q_t * s + (1.0 - em) * co;
        let [x, y] = c.as_vector();
        qa * x * x + qb * x * y + s * y * y
    }

    /// Coefficients `(α, β, γ)` of the sign-deciding quadratic
    /// `Σ₀(C₀) = α C₀² + β C₀ + γ` of the quasiperiodic regime.
    pub fn sigma0_coefficients(&self) -> (f64, f64, f64) {
        let (s, c) = (self.sin_half, self.cos_half);
        let ep = self.p_t.exp();
        (
            ep * self.q_t * c + s,
            (ep - 1.0) * c + ep * self.q_t * s,
            ep * s,
        )
    }

    pub fn sigma0_discriminant(&self) -> f64 {
        let (al, be, ga) = self.sigma0_coefficients();
        be * be - 4.0 * al * ga
    }

    fn require(&self, ok: &[Regime], expected: &'static str) -> Result<()> {
        if ok.contains(&self.regime) {
            Ok(())
        } else {
            Err(Error::WrongRegime {
                expected,
                found: self.regime,
            })
        }
    }
}

/// Build `Φ` from the ground values at the end of the record.
pub fn build(ground: &GroundSolution) -> Monodromy {
    let b = ground.boundary();
    Monodromy::from_boundary(b.phi, b.p, b.q)
}

/// Half-trace criterion from a solution and its `F` over
/// `[t0 − T/2, t0 + T/2]`. Equals `−(a + d)/2` of the matrix built from the
/// same bias.
pub fn criterion_d(record: &GroundSolution, t0: f64) -> Result<f64> {
    let half = 0.5 * record.period();
    let lo = record.state_at(t0 - half)?;
    let hi = record.state_at(t0 + half)?;
    let (f_lo, f_hi) = (lo.f_value(), hi.f_value());
    let radicand = f_lo.exp_neg_p * f_hi.exp_neg_p;
    if !(f_lo.exp_neg_p > 0.0 && f_hi.exp_neg_p > 0.0) {
        return Err(Error::NegativeRadicand);
    }
    let rot = Complex64::from_polar(1.0, -0.5 * (hi.phi - lo.phi));
    let num = rot * (f_hi.as_complex() - f_lo.as_complex().conj());
    Ok(-num.im / (2.0 * radicand.sqrt()))
}

/// Stable and (in the locked regime) unstable steady constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SteadyConstants {
    pub c_infinity: ProjectiveC,
    pub c_bowtie: Option<ProjectiveC>,
}

pub fn steady_constants(m: &Monodromy) -> Result<SteadyConstants> {
    m.require(&[Regime::Locked, Regime::Weak], "locked or weak")?;
    let to_c =
        |v: [Complex64; 2]| ProjectiveC::new(v[0].re, v[1].re).expect("eigenvector is nonzero");
    match m.regime {
        Regime::Locked => {
            let (lmax, lmin) = m.lambda_max_min();
            Ok(SteadyConstants {
                c_infinity: to_c(m.eigenvector(lmax)),
                c_bowtie: Some(to_c(m.eigenvector(lmin))),
            })
        }
        _ => Ok(SteadyConstants {
            c_infinity: to_c(m.eigenvector(Complex64::new(m.half_trace(), 0.0))),
            c_bowtie: None,
        }),
    }
}

/// Winding quadrature together with its integer reading.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Winding {
    pub k: i64,
    pub value: f64,
    /// `|value − k|`
    pub residual: f64,
    /// Change of the estimate between the full and the halved grid.
    pub richardson: f64,
}

/// Revolutions per period of the solution labeled `c` over the one-period
/// ground record:
///
/// ```text
/// k = [φ₀(T) + 2 Re ∫₀ᵀ a e^{iφ₀} e^{−P₀} / (b + a F₀) dt] / 2π.
/// ```
///
/// For the stable constant `(a, b) = (−2 sin½φ₀(T), L_max)` this is the
/// winding order of the locked steady state.
pub fn winding_quadrature(ground: &GroundSolution, c: &ProjectiveC) -> Winding {
    let record = ground.record();
    let [a, b] = c.as_vector();
    let integrand: Vec<f64> = record
        .y
        .iter()
        .map(|y| {
            let e = (-y[1]).exp();
            let w = Complex64::new(b + a * y[2], a * e);
            (Complex64::from_polar(a * e, y[0]) / w).re
        })
        .collect();
    let (mut fine, mut coarse) = (0.0, 0.0);
    for seg in ground.segments() {
        let (lo, hi) = (*seg.start(), *seg.end());
        let t = &record.t[lo..=hi];
        let v = &integrand[lo..=hi];
        fine += simpson(t, v);
        let t2: Vec<f64> = t.iter().step_by(2).copied().collect();
        let v2: Vec<f64> = v.iter().step_by(2).copied().collect();
        coarse += simpson(&t2, &v2);
    }
    let extrapolated = fine + (fine - coarse) / 15.0;
    let phi_t = ground.boundary().phi - ground.state(0).phi;
    let value = (phi_t + 2.0 * extrapolated) / TAU;
    let k = value.round();
    Winding {
        k: k as i64,
        value,
        residual: (value - k).abs(),
        richardson: 2.0 * (extrapolated - fine).abs() / TAU,
    }
}

/// Integer winding order; fails when the quadrature is not within `1e-4` of
/// an integer.
pub fn winding_number(ground: &GroundSolution, c_infinity: &ProjectiveC) -> Result<i64> {
    let w = winding_quadrature(ground, c_infinity);
    if w.residual > 1e-4 {
        return Err(Error::NotNearInteger {
            value: w.value,
            residual: w.residual,
        });
    }
    Ok(w.k)
}

/// Rotation data of the quasiperiodic regime.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChaoticRotation {
    pub alpha: f64,
    pub sigma_sign: i8,
    /// Mean phase rate `(2/T)(σα + kπ)`.
    pub v_av: f64,
    pub k: i64,
}

/// Rotation angle and mean phase rate. The integer part is anchored on a
/// short brute-force run of the phase equation.
pub fn chaotic_rotation(
    m: &Monodromy,
    ground: &GroundSolution,
    cfg: &SolverConfig,
) -> Result<ChaoticRotation> {
    m.require(&[Regime::Quasiperiodic], "quasiperiodic")?;
    let alpha = m.alpha.expect("quasiperiodic monodromy has an angle");
    let sigma: i8 = if m.sin_half >= 0.0 { 1 } else { -1 };
    let ends = integrate_phase_periods(ground.bias(), 0.0, ANCHOR_PERIODS, cfg)?;
    let period = ground.period();
    let w = (ends[ANCHOR_PERIODS] - ends[0]) / (TAU * ANCHOR_PERIODS as f64);
    let target = TAU * w / period;
    let rate = |k: i64| 2.0 / period * (sigma as f64 * alpha + k as f64 * PI);
    // σα/π lies in (−1, 1), so the best k sits within one of w.
    let lo = w.floor() as i64 - 2;
    let hi = w.ceil() as i64 + 2;
    let k = (lo..=hi)
        .min_by(|&x, &y| {
            (rate(x) - target)
                .abs()
                .total_cmp(&(rate(y) - target).abs())
        })
        .expect("nonempty candidate range");
    Ok(ChaoticRotation {
        alpha,
        sigma_sign: sigma,
        v_av: rate(k),
        k,
    })
}

/// Regime summary of one bias.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeReport {
    pub regime: Regime,
    pub delta: f64,
    pub half_trace: f64,
    pub lambda_plus: Complex64,
    pub lambda_minus: Complex64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_infinity: Option<ProjectiveC>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_bowtie: Option<ProjectiveC>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_sign: Option<i8>,
    pub v_av: f64,
}

/// Classify a ground solution and fill in the data of its regime.
pub fn analyze(ground: &GroundSolution, cfg: &SolverConfig) -> Result<RegimeReport> {
    let m = build(ground);
    let mut report = RegimeReport {
        regime: m.regime,
        delta: m.delta,
        half_trace: m.half_trace(),
        lambda_plus: m.lambda_plus,
        lambda_minus: m.lambda_minus,
        kappa: m.kappa,
        c_infinity: None,
        c_bowtie: None,
        k: None,
        alpha: None,
        sigma_sign: None,
        v_av: 0.0,
    };
    match m.regime {
        Regime::Locked | Regime::Weak => {
            let steady = steady_constants(&m)?;
            let k = winding_number(ground, &steady.c_infinity)?;
            report.c_infinity = Some(steady.c_infinity);
            report.c_bowtie = steady.c_bowtie;
            report.k = Some(k);
            report.v_av = TAU * k as f64 / ground.period();
        }
        Regime::Quasiperiodic => {
            let rot = chaotic_rotation(&m, ground, cfg)?;
            report.alpha = Some(rot.alpha);
            report.sigma_sign = Some(rot.sigma_sign);
            report.k = Some(rot.k);
            report.v_av = rot.v_av;
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bias::BiasSpec;
    use crate::integrator::{integrate_ground, integrate_with_integrals};
    use crate::moebius::{apply_solution_transport, c_from_initials};
    use proptest::prelude::*;

    fn pulse(iota_dc: f64) -> BiasSpec {
        BiasSpec::rect_pulse_train(TAU / 0.47, iota_dc, 3.5, 0.2).unwrap()
    }

    fn ground(bias: &BiasSpec) -> GroundSolution {
        integrate_ground(bias, &SolverConfig::default()).unwrap()
    }

    #[test]
    fn zero_bias_matrix() {
        let g = ground(&BiasSpec::constant(4.0, 0.0).unwrap());
        let m = build(&g);
        let e2 = 2f64.exp();
        assert!((m.a - 1.0 / e2).abs() < 1e-12 && m.b.abs() < 1e-15);
        assert!(m.c.abs() < 1e-15 && (m.d - e2).abs() < 1e-11);
        assert!((m.delta - (1.0 - (-4f64).exp()).powi(2)).abs() < 1e-12);
        assert_eq!(m.regime, Regime::Locked);
        assert!((m.kappa.unwrap() - 2.0).abs() < 1e-12);
        let s = steady_constants(&m).unwrap();
        assert_eq!(s.c_infinity, ProjectiveC::zero());
        assert_eq!(s.c_bowtie.unwrap(), ProjectiveC::infinity());
        assert_eq!(winding_number(&g, &s.c_infinity).unwrap(), 0);
    }

    #[test]
    fn matrix_advances_labels_by_one_period() {
        // Oracle: transport the label to t = T and read the new label off the
        // phase there.
        let bias = pulse(1.25);
        let g = ground(&bias);
        let m = build(&g);
        for c0 in [-3.0, -0.4, 0.0, 0.7, 5.0] {
            let label = ProjectiveC::from_value(c0);
            let z = apply_solution_transport(&g, &label, bias.period()).unwrap();
            let phi_t = z.arg();
            let expected = c_from_initials(phi_t, 0.0);
            assert!(m.apply(&label).distance(&expected) < 1e-9);
        }
    }

    #[test]
    fn pulse_regimes() {
        assert_eq!(build(&ground(&pulse(1.25))).regime, Regime::Locked);
        assert_eq!(build(&ground(&pulse(1.40))).regime, Regime::Quasiperiodic);
    }

    #[test]
    fn criterion_d_zero_bias_and_t0_independence() {
        let bias = BiasSpec::constant(4.0, 0.0).unwrap();
        let rec = integrate_with_integrals(&bias, 0.0, 0.0, 8.0, &SolverConfig::default()).unwrap();
        for t0 in [2.0, 3.1, 6.0] {
            let d = criterion_d(&rec, t0).unwrap();
            assert!((d.abs() - 2f64.cosh()).abs() < 1e-9);
        }
        let bias = pulse(1.25);
        let period = bias.period();
        let rec = integrate_with_integrals(&bias, 0.0, 0.0, 2.0 * period, &SolverConfig::default())
            .unwrap();
        let d1 = criterion_d(&rec, 0.5 * period).unwrap();
        let d2 = criterion_d(&rec, 0.9 * period).unwrap();
        let d3 = criterion_d(&rec, 1.37 * period).unwrap();
        assert!((d1 - d2).abs() < 1e-8 && (d1 - d3).abs() < 1e-8);
        assert!(d1.abs() > 1.0);
        let m = build(&ground(&bias));
        assert!((d1 + m.half_trace()).abs() < 1e-8);
    }

    #[test]
    fn locked_eigen_data() {
        let m = build(&ground(&pulse(1.25)));
        assert!((m.det() - 1.0).abs() < 1e-9);
        assert!((m.lambda_plus * m.lambda_minus - 1.0).norm() < 1e-9);
        for plus in [true, false] {
            let v = m.eigenvector_formula(plus);
            let lambda = if plus { m.lambda_plus } else { m.lambda_minus };
            let mv = [m.a * v[0] + m.b * v[1], m.c * v[0] + m.d * v[1]];
            let res = (mv[0] - lambda * v[0]).norm() + (mv[1] - lambda * v[1]).norm();
            assert!(res < 1e-9 * (1.0 + v[0].norm() + v[1].norm()), "{res}");
            assert!(m.characteristic(lambda).norm() < 1e-9);
        }
        let s = steady_constants(&m).unwrap();
        // Closed-form constants −2 sin½φ₀(T)/L agree with the eigenvectors.
        let (lmax, lmin) = m.l_max_min();
        let formula_inf = ProjectiveC::new(-2.0 * m.sin_half, lmax.re).unwrap();
        let formula_bow = ProjectiveC::new(-2.0 * m.sin_half, lmin.re).unwrap();
        assert!(s.c_infinity.distance(&formula_inf) < 1e-9);
        assert!(s.c_bowtie.unwrap().distance(&formula_bow) < 1e-9);
        for c in [s.c_infinity, s.c_bowtie.unwrap()] {
            assert!(m.quadratic_residual(&c).abs() < 1e-9);
            assert!(m.apply(&c).distance(&c) < 1e-9);
        }
    }

    #[test]
    fn quasiperiodic_eigen_data() {
        let m = build(&ground(&pulse(1.40)));
        let alpha = m.alpha.unwrap();
        assert!(alpha > 0.0 && alpha < PI);
        assert!((m.lambda_plus.norm() - 1.0).abs() < 1e-12);
        assert!((m.lambda_plus - m.lambda_minus.conj()).norm() < 1e-15);
        assert!(m.sin_half != 0.0);
        assert!(matches!(
            steady_constants(&m),
            Err(Error::WrongRegime { .. })
        ));
    }

    #[test]
    fn winding_small_cases() {
        let bias = BiasSpec::constant(10.0, 0.5).unwrap();
        let g = ground(&bias);
        let report = analyze(&g, &SolverConfig::default()).unwrap();
        assert_eq!(report.regime, Regime::Locked);
        assert_eq!(report.k, Some(0));
        // Brute force: φ(jT) stays bounded.
        let ends = integrate_phase_periods(&bias, 0.0, 10, &SolverConfig::default()).unwrap();
        assert!(ends.iter().all(|p| p.abs() < 1.0));
    }

    #[test]
    fn winding_matches_brute_force_and_exact_arg() {
        let cfg = SolverConfig::default();
        for iota in [0.66 + 0.02, 1.25, 1.435] {
            let bias = pulse(iota);
            let g = ground(&bias);
            let m = build(&g);
            if m.regime != Regime::Locked {
                continue;
            }
            let s = steady_constants(&m).unwrap();
            let w = winding_quadrature(&g, &s.c_infinity);
            assert!(w.residual < 1e-6, "{w:?}");
            let ends = integrate_phase_periods(&bias, 0.0, 50, &cfg).unwrap();
            let brute = ((ends[50] - ends[0]) / (TAU * 50.0)).round() as i64;
            assert_eq!(w.k, brute, "iota {iota}");
        }
    }

    #[test]
    fn constant_rotation_rate() {
        for (b, t) in [(2.0, 1.0), (1.5, 2.7), (3.0, 1.0)] {
            let g = ground(&BiasSpec::constant(t, b).unwrap());
            let report = analyze(&g, &SolverConfig::default()).unwrap();
            assert_eq!(report.regime, Regime::Quasiperiodic);
            assert!(
                (report.v_av - (b * b - 1.0f64).sqrt()).abs() < 1e-6,
                "{report:?}"
            );
        }
    }

    #[test]
    fn resonant_constant_bias_is_not_quasiperiodic() {
        let g = ground(&BiasSpec::constant(TAU / 3f64.sqrt(), 2.0).unwrap());
        let m = build(&g);
        assert_ne!(m.regime, Regime::Quasiperiodic, "{m:?}");
        assert!(
            chaotic_rotation(&m, &g, &SolverConfig::default()).is_err()
                || m.regime == Regime::Quasiperiodic
        );
    }

    #[test]
    fn regime_display() {
        assert_eq!(Regime::Quasiperiodic.to_string(), "quasiperiodic");
        assert_eq!(serde_json::to_string(&Regime::Weak).unwrap(), "\"weak\"");
    }

    proptest! {
        #[test]
        fn algebraic_identities(phi in -12.0f64..12.0, p in -4.0f64..8.0, q in -3.0f64..3.0) {
            let m = Monodromy::from_boundary(phi, p, q);
            prop_assert!((m.det() - 1.0).abs() < 1e-9 * (1.0 + m.a.abs() * m.d.abs() + m.b.abs() * m.c.abs()));
            let d = m.half_trace();
            prop_assert_eq!(m.delta > 0.0, d * d > 1.0);
            let scale = (p.exp() + 1.0).powi(2) * (1.0 + q * q);
            prop_assert!((m.sigma0_discriminant() - (2.0 * p).exp() * m.delta).abs() < 1e-8 * scale * (2.0 * p).exp().max(1.0));
            prop_assert!((m.lambda_plus * m.lambda_minus - 1.0).norm() < 1e-9);
        }
    }
}
