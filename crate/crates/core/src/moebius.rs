//! Projective C-constants and the fraction-linear transport of solutions.
//!
//! A solution `φ` is labeled relative to the ground solution `φ₀` by a real
//! constant `C`, stored in homogeneous coordinates `(a, b)` with `C = a/b`.
//! The transport reads
//!
//! ```text
//! e^{iφ} = e^{iφ₀} (b + a·conj F₀) / (b + a·F₀),    F₀ = Q₀ + i e^{-P₀}.
//! ```

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bias::BiasSpec;
use crate::error::{Error, Result};
use crate::integrator::{GroundSolution, Trajectory};

/// A point of the real projective line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawProjective", into = "RawProjective")]
pub struct ProjectiveC {
    a: f64,
    b: f64,
}

#[derive(Serialize, Deserialize)]
struct RawProjective {
    a: f64,
    b: f64,
    /// `a/b`, absent for the point at infinity. Informational only.
    #[serde(default, skip_deserializing)]
    value: Option<f64>,
}

impl TryFrom<RawProjective> for ProjectiveC {
    type Error = Error;

    fn try_from(raw: RawProjective) -> Result<Self> {
        ProjectiveC::new(raw.a, raw.b)
    }
}

impl From<ProjectiveC> for RawProjective {
    fn from(c: ProjectiveC) -> Self {
        RawProjective {
            a: c.a,
            b: c.b,
            value: (c.b != 0.0).then(|| c.value()),
        }
    }
}

impl ProjectiveC {
    /// Canonical representative of `(a, b)`.
    pub fn new(a: f64, b: f64) -> Result<Self> {
        let n = a.hypot(b);
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "({a}, {b}) is not a projective point"
            )));
        }
        // Already-normalized input is kept bit for bit so that serialized
        // points read back unchanged.
        let (mut a, mut b) = if (n - 1.0).abs() <= 4.0 * f64::EPSILON {
            (a, b)
        } else {
            (a / n, b / n)
        };
        // Rounding residue next to the point at infinity is snapped to it.
        if b.abs() <= 2.0 * f64::EPSILON {
            b = 0.0;
            a = a.signum();
        }
        if b < 0.0 || (b == 0.0 && a < 0.0) {
            a = -a;
            b = -b;
        }
        // Avoid a negative zero leaking into comparisons and output.
        Ok(ProjectiveC {
            a: a + 0.0,
            b: b + 0.0,
        })
    }

    pub fn from_value(c: f64) -> Self {
        if c.is_infinite() {
            Self::infinity()
        } else {
            Self::new(c, 1.0).expect("finite value")
        }
    }

    pub fn zero() -> Self {
        ProjectiveC { a: 0.0, b: 1.0 }
    }

    pub fn infinity() -> Self {
        ProjectiveC { a: 1.0, b: 0.0 }
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    /// `a/b`; infinite for the point at infinity.
    pub fn value(&self) -> f64 {
        if self.b == 0.0 {
            f64::INFINITY
        } else {
            self.a / self.b
        }
    }

    pub fn is_infinite(&self) -> bool {
        self.b == 0.0
    }

    /// Sine of the angle between the two lines; zero iff the points agree.
    pub fn distance(&self, other: &ProjectiveC) -> f64 {
        (self.a * other.b - other.a * self.b).abs()
    }

    /// Position on the circle `RP¹ ≅ S¹`, in `[-π, π]`.
    pub fn angle(&self) -> f64 {
        2.0 * self.a.atan2(self.b)
    }

    pub fn negate(&self) -> Self {
        Self::new(-self.a, self.b).expect("nonzero point")
    }

    /// Label of the composite transport: first `self`, then `other`.
    /// For finite values this is `(C₁ + C₂)/(1 − C₁C₂)`.
    pub fn compose(&self, other: &ProjectiveC) -> Self {
        Self::new(
            self.a * other.b + other.a * self.b,
            self.b * other.b - self.a * other.a,
        )
        .expect("composition of rotations never vanishes")
    }

    pub(crate) fn as_vector(&self) -> [f64; 2] {
        [self.a, self.b]
    }
}

impl fmt::Display for ProjectiveC {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_infinite() {
            write!(f, "inf")
        } else {
            write!(f, "{}", self.value())
        }
    }
}

/// `F = Q + i e^{-P}` in the upper half-plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FValue {
    pub q: f64,
    pub exp_neg_p: f64,
}

impl FValue {
    pub(crate) fn new(q: f64, exp_neg_p: f64) -> Self {
        debug_assert!(exp_neg_p > 0.0);
        FValue { q, exp_neg_p }
    }

    pub fn try_new(q: f64, exp_neg_p: f64) -> Result<Self> {
        if exp_neg_p > 0.0 && exp_neg_p.is_finite() && q.is_finite() {
            Ok(FValue { q, exp_neg_p })
        } else {
            Err(Error::NegativeRadicand)
        }
    }

    pub fn from_complex(z: Complex64) -> Result<Self> {
        Self::try_new(z.re, z.im)
    }

    pub fn as_complex(&self) -> Complex64 {
        Complex64::new(self.q, self.exp_neg_p)
    }
}

/// Label of the solution with initial phase `phi_init` relative to the one
/// starting at `phi0_init`: `C = -tan((phi_init - phi0_init)/2)`.
pub fn c_from_initials(phi_init: f64, phi0_init: f64) -> ProjectiveC {
    let half = 0.5 * (phi_init - phi0_init);
    ProjectiveC::new(-half.sin(), half.cos()).expect("unit vector")
}

/// `b + a·F₀`.
#[inline]
fn denominator(f0: &FValue, c: &ProjectiveC) -> Complex64 {
    Complex64::new(c.b + c.a * f0.q, c.a * f0.exp_neg_p)
}

/// Lifted phase of the transported solution, `φ₀ − 2 arg(b + a F₀)`.
/// Continuous in `t` for a fixed label, since `b + a F₀` stays on one side
/// of the real axis.
pub fn transport_phase_lifted(phi0: f64, f0: &FValue, c: &ProjectiveC) -> f64 {
    phi0 - 2.0 * denominator(f0, c).arg()
}

/// `e^{iφ}` of the transported solution at a single instant.
pub fn transport_phase(phi0: f64, f0: &FValue, c: &ProjectiveC, t: f64) -> Result<Complex64> {
    if denominator(f0, c).norm() < 1e-14 {
        return Err(Error::DegenerateDenominator { t });
    }
    Ok(Complex64::from_polar(
        1.0,
        transport_phase_lifted(phi0, f0, c),
    ))
}

/// `e^{iφ(t)}` for the solution labeled `c` relative to the ground.
pub fn apply_solution_transport(
    ground: &GroundSolution,
    c: &ProjectiveC,
    t: f64,
) -> Result<Complex64> {
    let s = ground.state_at(t)?;
    transport_phase(s.phi, &s.f_value(), c, t)
}

/// Inverse direction: recover `e^{iφ₀}` from `φ` and its own `F`.
pub fn dual_transport(phi: f64, f: &FValue, c: &ProjectiveC, t: f64) -> Result<Complex64> {
    transport_phase(phi, f, &c.negate(), t)
}

/// `F = (F₀ − C)/(1 + C F₀)` in projective form.
#[allow(non_snake_case)]
pub fn transport_F(f0: &FValue, c: &ProjectiveC) -> FValue {
    let w = denominator(f0, c);
    let num = Complex64::new(c.b * f0.q - c.a, c.b * f0.exp_neg_p);
    let re = (num / w).re;
    // Imaginary part in closed form keeps it positive in floating point.
    let im = f0.exp_neg_p * (c.a * c.a + c.b * c.b) / w.norm_sqr();
    FValue::new(re, im)
}

/// Both sides of the master identity at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MasterIdentity {
    /// `(1/2i)(ζ − ζ₀)² e^{P₀} d(C⁻¹)/dt`
    pub lhs: Complex64,
    /// `ζ₀ D[ζ] − ζ D[ζ₀]`
    pub rhs: Complex64,
}

impl MasterIdentity {
    /// Disagreement of the two sides; small for any pair of phases.
    pub fn residual(&self) -> f64 {
        (self.lhs - self.rhs).norm()
    }

    /// Size of either side; small only when both phases solve the equation.
    pub fn ode_defect(&self) -> f64 {
        self.rhs.norm()
    }
}

/// Evaluate the master identity for arbitrary phase functions with central
/// differences of step `1e-6`. `e^{P₀} d(C⁻¹)/dt` does not depend on the
/// integration constants of `P₀`, `Q₀`, so only the phases are needed.
pub fn master_identity_residual<F, G>(phi: F, phi0: G, bias: &BiasSpec, t: f64) -> MasterIdentity
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    const H: f64 = 1e-6;
    let zeta_of = |p: f64| Complex64::from_polar(1.0, p);
    let central = |g: &dyn Fn(f64) -> Complex64| (g(t + H) - g(t - H)) / (2.0 * H);

    let z = zeta_of(phi(t));
    let z0 = zeta_of(phi0(t));
    let dz = central(&|s| zeta_of(phi(s)));
    let dz0 = central(&|s| zeta_of(phi0(s)));
    let f = bias.evaluate(t);
    let half = Complex64::new(0.5, 0.0);
    let i = Complex64::i();
    let op = |w: Complex64, dw: Complex64| dw + half * (w * w - 1.0) - i * f * w;
    let rhs = z0 * op(z, dz) - z * op(z0, dz0);

    let (s0, c0) = phi0(t).sin_cos();
    let diff = z - z0;
    let lhs = if diff.norm() > 1e-4 {
        let ratio = |s: f64| {
            let (a, b) = (zeta_of(phi0(s)), zeta_of(phi(s)));
            (a + b) / (a - b)
        };
        let r = ratio(t);
        let dr = central(&ratio);
        diff * diff * (-s0 + i * (dr - c0 * r)) / (2.0 * i)
    } else {
        // Multiplied through by (ζ − ζ₀)², which removes the pole of the ratio.
        let sq = diff * diff;
        (-s0 * sq + i * (2.0 * (dz * z0 - dz0 * z) - c0 * (z0 * z0 - z * z))) / (2.0 * i)
    };
    MasterIdentity { lhs, rhs }
}

/// `C[φ, φ₀](t) = [−Q₀ + i e^{−P₀}(ζ₀+ζ)/(ζ₀−ζ)]⁻¹`. Real up to numerical
/// noise when both phases solve the equation; the imaginary part is kept as a
/// diagnostic.
pub fn c_functional(phi: &Trajectory, ground: &GroundSolution, t: f64) -> Result<Complex64> {
    let p = phi.phi_at(t)?;
    let s = ground.state_at(t)?;
    c_functional_at(p, s.phi, &s.f_value(), t)
}

pub(crate) fn c_functional_at(phi: f64, phi0: f64, f0: &FValue, t: f64) -> Result<Complex64> {
    let z = Complex64::from_polar(1.0, phi);
    let z0 = Complex64::from_polar(1.0, phi0);
    if (z - z0).norm() < 1e-12 {
        return Err(Error::CoincidentSolutions { t });
    }
    let inv = -f0.q + Complex64::i() * f0.exp_neg_p * (z0 + z) / (z0 - z);
    Ok(inv.inv())
}

/// Statistics of `C[φ, φ₀]` over the ground nodes covered by `phi`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CProfile {
    pub t: Vec<f64>,
    pub values: Vec<f64>,
    pub mean: f64,
    pub stddev: f64,
    pub max_imag: f64,
}

pub fn c_profile(phi: &Trajectory, ground: &GroundSolution) -> Result<CProfile> {
    let (lo, hi) = (phi.start(), phi.end());
    let mut t = Vec::new();
    let mut values = Vec::new();
    let mut max_imag = 0.0f64;
    for (i, &ti) in ground.grid().iter().enumerate() {
        if ti < lo || ti > hi {
            continue;
        }
        let s = ground.state(i);
        let c = c_functional_at(phi.phi_at(ti)?, s.phi, &s.f_value(), ti)?;
        t.push(ti);
        values.push(c.re);
        max_imag = max_imag.max(c.im.abs());
    }
    if values.is_empty() {
        return Err(Error::InvalidArgument(
            "trajectory does not overlap the ground record".into(),
        ));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let stddev = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    Ok(CProfile {
        t,
        values,
        mean,
        stddev,
        max_imag,
    })
}
