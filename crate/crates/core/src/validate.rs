//! Seeded invariant checks over random biases and labels.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bias::BiasSpec;
use crate::error::{Error, Result};
use crate::integrator::{
    integrate_ground, integrate_phase, integrate_phase_periods, integrate_with_integrals,
    SolverConfig,
};
use crate::moebius::{c_profile, master_identity_residual, transport_F, FValue, ProjectiveC};
use crate::monodromy::{build, Monodromy, Regime};
use crate::propagation::PropagationPlan;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckName {
    DetPhi,
    MasterIdentity,
    GroupLaw,
    CAntisymmetry,
    Sigma0Discriminant,
    UpperHalfPlane,
    CConstancy,
    OracleEquivalence,
}

impl CheckName {
    pub const ALL: [CheckName; 8] = [
        CheckName::DetPhi,
        CheckName::MasterIdentity,
        CheckName::GroupLaw,
        CheckName::CAntisymmetry,
        CheckName::Sigma0Discriminant,
        CheckName::UpperHalfPlane,
        CheckName::CConstancy,
        CheckName::OracleEquivalence,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CheckName::DetPhi => "det_phi",
            CheckName::MasterIdentity => "master_identity",
            CheckName::GroupLaw => "group_law",
            CheckName::CAntisymmetry => "c_antisymmetry",
            CheckName::Sigma0Discriminant => "sigma0_discriminant",
            CheckName::UpperHalfPlane => "upper_half_plane",
            CheckName::CConstancy => "c_constancy",
            CheckName::OracleEquivalence => "oracle_equivalence",
        }
    }

    fn index(self) -> u64 {
        CheckName::ALL
            .iter()
            .position(|&c| c == self)
            .expect("listed") as u64
    }
}

impl fmt::Display for CheckName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CheckName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CheckName::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown check `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub name: CheckName,
    pub passed: bool,
    /// Largest observed error, in the units of `tolerance`.
    pub worst: f64,
    pub tolerance: f64,
    pub samples: usize,
    pub detail: String,
}

/// A bias drawn from all four waveform kinds, with parameters wide enough to
/// reach locked and quasiperiodic behavior.
pub fn random_bias<R: Rng>(rng: &mut R) -> BiasSpec {
    match rng.gen_range(0..4) {
        0 => BiasSpec::constant(rng.gen_range(0.5..6.0), rng.gen_range(-1.5..2.5)),
        1 => BiasSpec::sinusoidal(
            rng.gen_range(1.0..10.0),
            rng.gen_range(-0.5..2.0),
            rng.gen_range(0.0..2.0),
            rng.gen_range(0.0..1.0),
        ),
        2 => BiasSpec::rect_pulse_train(
            rng.gen_range(2.0..15.0),
            rng.gen_range(-0.5..2.0),
            rng.gen_range(0.0..4.0),
            rng.gen_range(0.1..0.5),
        ),
        _ => {
            let period = rng.gen_range(2.0..10.0);
            let n = rng.gen_range(2..6);
            let mut breakpoints: Vec<f64> = (0..n)
                .map(|i| period * (i as f64 + rng.gen_range(0.1..0.9)) / n as f64)
                .collect();
            breakpoints[0] = 0.0;
            let values = (0..n).map(|_| rng.gen_range(-1.0..2.5)).collect();
            BiasSpec::piecewise_table(period, breakpoints, values)
        }
    }
    .expect("generated parameters are valid")
}

/// A label spread evenly over the projective line.
pub fn random_label<R: Rng>(rng: &mut R) -> ProjectiveC {
    let theta: f64 = rng.gen_range(0.0..std::f64::consts::PI);
    ProjectiveC::new(theta.sin(), theta.cos()).expect("unit vector")
}

fn outcome(
    name: CheckName,
    tolerance: f64,
    worst: f64,
    samples: usize,
    detail: String,
) -> CheckOutcome {
    CheckOutcome {
        name,
        passed: worst.is_finite() && worst < tolerance,
        worst,
        tolerance,
        samples,
        detail,
    }
}

fn failed(name: CheckName, tolerance: f64, err: Error) -> CheckOutcome {
    CheckOutcome {
        name,
        passed: false,
        worst: f64::INFINITY,
        tolerance,
        samples: 0,
        detail: err.to_string(),
    }
}

/// Run the selected checks. Each check draws from its own stream derived
/// from `seed`, so results do not depend on which other checks run.
pub fn run_checks(selection: &[CheckName], seed: u64, cfg: &SolverConfig) -> Vec<CheckOutcome> {
    selection
        .iter()
        .map(|&name| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(name.index());
            run_one(name, &mut rng, cfg)
        })
        .collect()
}

fn run_one(name: CheckName, rng: &mut ChaCha8Rng, cfg: &SolverConfig) -> CheckOutcome {
    match name {
        CheckName::DetPhi => det_phi(rng, cfg),
        CheckName::MasterIdentity => master_identity(rng, cfg),
        CheckName::GroupLaw => group_law(rng),
        CheckName::CAntisymmetry => c_antisymmetry(rng, cfg),
        CheckName::Sigma0Discriminant => sigma0_discriminant(rng, cfg),
        CheckName::UpperHalfPlane => upper_half_plane(rng, cfg),
        CheckName::CConstancy => c_constancy(rng, cfg),
        CheckName::OracleEquivalence => oracle_equivalence(rng, cfg, 20, 5, 50),
    }
    .unwrap_or_else(|(tol, e)| failed(name, tol, e))
}

type CheckResult = std::result::Result<CheckOutcome, (f64, Error)>;

fn det_phi(rng: &mut ChaCha8Rng, cfg: &SolverConfig) -> CheckResult {
    const TOL: f64 = 1e-9;
    let mut worst = 0.0f64;
    let n = 20;
    for _ in 0..n {
        let g = integrate_ground(&random_bias(rng), cfg).map_err(|e| (TOL, e))?;
        let m = build(&g);
        let scale = 1.0 + (m.a * m.d).abs() + (m.b * m.c).abs();
        worst = worst.max((m.det() - 1.0).abs() / scale);
    }
    Ok(outcome(
        CheckName::DetPhi,
        TOL,
        worst,
        n,
        "relative to 1 + |ad| + |bc|".into(),
    ))
}

fn master_identity(rng: &mut ChaCha8Rng, cfg: &SolverConfig) -> CheckResult {
    const TOL: f64 = 1e-6;
    let mut worst = 0.0f64;
    // Arbitrary smooth phases: the identity holds for any pair.
    for _ in 0..10 {
        let bias = BiasSpec::sinusoidal(
            rng.gen_range(2.0..8.0),
            rng.gen_range(-1.0..2.0),
            rng.gen_range(0.0..2.0),
            0.0,
        )
        .expect("valid");
        let (a0, a1, w1) = (
            rng.gen_range(-3.0..3.0),
            rng.gen_range(-2.0..2.0),
            rng.gen_range(0.2..2.0),
        );
        let (b0, b1, w2) = (
            rng.gen_range(-3.0..3.0),
            rng.gen_range(-2.0..2.0),
            rng.gen_range(0.2..2.0),
        );
        let t = rng.gen_range(0.0..bias.period());
        let r = master_identity_residual(
            |s| a0 + a1 * (w1 * s).sin(),
            |s| b0 + b1 * (w2 * s).cos() + 0.3 * s,
            &bias,
            t,
        );
        worst = worst.max(r.residual());
    }
    // Pairs of actual solutions, where both sides also vanish.
    for _ in 0..10 {
        let bias = BiasSpec::sinusoidal(
            rng.gen_range(2.0..8.0),
            rng.gen_range(-1.0..2.0),
            rng.gen_range(0.0..2.0),
            0.0,
        )
        .expect("valid");
        let horizon = bias.period();
        let a =
            integrate_phase(&bias, rng.gen_range(-3.0..3.0), horizon, cfg).map_err(|e| (TOL, e))?;
        let b =
            integrate_phase(&bias, rng.gen_range(-3.0..3.0), horizon, cfg).map_err(|e| (TOL, e))?;
        let t = rng.gen_range(0.05..0.95) * horizon;
        let r = master_identity_residual(
            |s| a.phi_at(s).unwrap_or(f64::NAN),
            |s| b.phi_at(s).unwrap_or(f64::NAN),
            &bias,
            t,
        );
        worst = worst.max(r.residual()).max(r.ode_defect());
    }
    Ok(outcome(
        CheckName::MasterIdentity,
        TOL,
        worst,
        20,
        "10 smooth pairs, 10 solution pairs".into(),
    ))
}

fn group_law(rng: &mut ChaCha8Rng) -> CheckResult {
    const TOL: f64 = 1e-9;
    let mut worst = 0.0f64;
    let mut n = 0;
    while n < 100 {
        let (c1, c2): (f64, f64) = (rng.gen_range(-20.0..20.0), rng.gen_range(-20.0..20.0));
        if (1.0 - c1 * c2).abs() < 0.01 {
            continue;
        }
        n += 1;
        let f = FValue::new(rng.gen_range(-5.0..5.0), rng.gen_range(0.01..5.0));
        let (p1, p2) = (ProjectiveC::from_value(c1), ProjectiveC::from_value(c2));
        let sum = ProjectiveC::from_value((c1 + c2) / (1.0 - c1 * c2));
        let twice = transport_F(&transport_F(&f, &p1), &p2).as_complex();
        let once = transport_F(&f, &sum).as_complex();
        worst = worst.max((twice - once).norm() / (1.0 + once.norm()));
        worst = worst.max(p1.compose(&p2).distance(&sum));
    }
    Ok(outcome(
        CheckName::GroupLaw,
        TOL,
        worst,
        n,
        "pairs of labels".into(),
    ))
}

fn c_antisymmetry(rng: &mut ChaCha8Rng, cfg: &SolverConfig) -> CheckResult {
    const TOL: f64 = 1e-8;
    let mut worst = 0.0f64;
    let n = 10;
    for _ in 0..n {
        let bias = random_bias(rng);
        let period = bias.period();
        let (phi_a, phi_b): (f64, f64) = (rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
        if (phi_a - phi_b).abs() < 0.1 {
            continue;
        }
        let a = integrate_with_integrals(&bias, phi_a, 0.0, period, cfg).map_err(|e| (TOL, e))?;
        let b = integrate_with_integrals(&bias, phi_b, 0.0, period, cfg).map_err(|e| (TOL, e))?;
        for _ in 0..4 {
            let t = rng.gen_range(0.0..period);
            let (sa, sb) = (
                a.state_at(t).map_err(|e| (TOL, e))?,
                b.state_at(t).map_err(|e| (TOL, e))?,
            );
            let ab = crate::moebius::c_functional_at(sa.phi, sb.phi, &sb.f_value(), t)
                .map_err(|e| (TOL, e))?;
            let ba = crate::moebius::c_functional_at(sb.phi, sa.phi, &sa.f_value(), t)
                .map_err(|e| (TOL, e))?;
            // Both are real up to noise; compare their sum to the scale of either.
            worst = worst.max((ab.re + ba.re).abs() / (1.0 + ab.re.abs()));
        }
    }
    Ok(outcome(
        CheckName::CAntisymmetry,
        TOL,
        worst,
        4 * n,
        "C[φ, ψ] + C[ψ, φ]".into(),
    ))
}

fn sigma0_discriminant(rng: &mut ChaCha8Rng, cfg: &SolverConfig) -> CheckResult {
    const TOL: f64 = 1e-8;
    let relative = |m: &Monodromy| {
        let target = (2.0 * m.p_t).exp() * m.delta;
        let scale =
            (m.p_t.exp() + 1.0).powi(2) * (1.0 + m.q_t * m.q_t) * (2.0 * m.p_t).exp().max(1.0);
        (m.sigma0_discriminant() - target).abs() / scale
    };
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let m = Monodromy::from_boundary(
            rng.gen_range(-12.0..12.0),
            rng.gen_range(-4.0..8.0),
            rng.gen_range(-3.0..3.0),
        );
        worst = worst.max(relative(&m));
    }
    for _ in 0..10 {
        let g = integrate_ground(&random_bias(rng), cfg).map_err(|e| (TOL, e))?;
        worst = worst.max(relative(&build(&g)));
    }
    Ok(outcome(
        CheckName::Sigma0Discriminant,
        TOL,
        worst,
        210,
        "relative to the size of the terms".into(),
    ))
}

fn upper_half_plane(rng: &mut ChaCha8Rng, cfg: &SolverConfig) -> CheckResult {
    let mut violations = 0usize;
    let mut n = 0;
    for _ in 0..1000 {
        let f = FValue::new(rng.gen_range(-50.0..50.0), rng.gen_range(1e-8..50.0));
        n += 1;
        if !(transport_F(&f, &random_label(rng)).exp_neg_p > 0.0) {
            violations += 1;
        }
    }
    for _ in 0..5 {
        let g = integrate_ground(&random_bias(rng), cfg).map_err(|e| (1.0, e))?;
        let label = random_label(rng);
        for i in 0..g.len() {
            n += 1;
            if !(transport_F(&g.state(i).f_value(), &label).exp_neg_p > 0.0) {
                violations += 1;
            }
        }
    }
    Ok(outcome(
        CheckName::UpperHalfPlane,
        1.0,
        violations as f64,
        n,
        format!("{violations} violations"),
    ))
}

/// Constancy of the label along a solution: over one period against the
/// dense ground record, and at 20 period ends reached with free adaptive
/// steps against the closed-form label sequence.
fn c_constancy(rng: &mut ChaCha8Rng, cfg: &SolverConfig) -> CheckResult {
    const TOL: f64 = 1e-6;
    const PERIODS: usize = 20;
    let mut worst = 0.0f64;
    let n = 10;
    for _ in 0..n {
        let bias = random_bias(rng);
        let g = integrate_ground(&bias, cfg).map_err(|e| (TOL, e))?;
        let value: f64 = rng.gen_range(-3.0..3.0);
        let phi_init = -2.0 * value.atan();
        let traj = integrate_phase(&bias, phi_init, bias.period(), cfg).map_err(|e| (TOL, e))?;
        let prof = c_profile(&traj, &g).map_err(|e| (TOL, e))?;
        let scale = 1.0 + value.abs();
        worst = worst
            .max((prof.mean - value).abs() / scale)
            .max(prof.stddev / scale);

        let plan = PropagationPlan::new(&g, ProjectiveC::from_value(value));
        let ends = integrate_phase_periods(&bias, phi_init, PERIODS, cfg).map_err(|e| (TOL, e))?;
        for (j, &phi) in ends.iter().enumerate() {
            let z = plan
                .phase_at(j as f64 * bias.period())
                .map_err(|e| (TOL, e))?;
            worst = worst.max((z - Complex64::from_polar(1.0, phi)).norm());
        }
    }
    Ok(outcome(
        CheckName::CConstancy,
        TOL,
        worst,
        n,
        "one dense period and 20 free-stepping periods".into(),
    ))
}

/// Closed-form propagation against direct integration over `periods`
/// periods for `biases × labels` random pairs.
pub fn oracle_equivalence(
    rng: &mut ChaCha8Rng,
    cfg: &SolverConfig,
    biases: usize,
    labels: usize,
    periods: u64,
) -> CheckResult {
    const TOL: f64 = 1e-5;
    let cases: Vec<(BiasSpec, Vec<ProjectiveC>)> = (0..biases)
        .map(|_| {
            (
                random_bias(rng),
                (0..labels).map(|_| random_label(rng)).collect(),
            )
        })
        .collect();
    let results: Vec<Result<(Regime, f64)>> = cases
        .par_iter()
        .map(|(bias, labels)| {
            let g = integrate_ground(bias, cfg)?;
            let mut worst = 0.0f64;
            let mut regime = Regime::Locked;
            for &c0 in labels {
                let plan = PropagationPlan::new(&g, c0);
                regime = plan.regime();
                let phi_init =
                    crate::moebius::transport_phase_lifted(0.0, &FValue::new(0.0, 1.0), &c0);
                let horizon = periods as f64 * bias.period();
                let traj = integrate_phase(bias, phi_init, horizon, cfg)?;
                for (&t, &phi) in traj.grid.iter().zip(&traj.phi) {
                    let z = plan.phase_at(t)?;
                    worst = worst.max((z - Complex64::from_polar(1.0, phi)).norm());
                }
            }
            Ok((regime, worst))
        })
        .collect();
    let mut worst = 0.0f64;
    let mut counts = [0usize; 3];
    for r in results {
        let (regime, w) = r.map_err(|e| (TOL, e))?;
        counts[regime as usize] += 1;
        worst = worst.max(w);
    }
    Ok(outcome(
        CheckName::OracleEquivalence,
        TOL,
        worst,
        biases * labels,
        format!(
            "biases: {} locked, {} weak, {} quasiperiodic",
            counts[0], counts[1], counts[2]
        ),
    ))
}
