use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use phaselock::export::{write_columns_csv, write_ground_csv, write_segments_csv, write_sweep_csv};
use phaselock::integrator::{integrate_ground, integrate_phase, integrate_rsj, Trajectory};
use phaselock::moebius::c_from_initials;
use phaselock::monodromy::{analyze, RegimeReport};
use phaselock::propagation::{segment, PropagationPlan, SegmentedTrajectory};
use phaselock::sweep::{
    delta_minima, detect_steps, iv_curve, uniform_grid, DeltaMinimum, StepInterval,
};
use phaselock::validate::{run_checks, CheckName, CheckOutcome};
use phaselock::{BiasSpec, Regime};
use serde::Serialize;

use crate::config::{Format, RunConfig};
use crate::error::CliError;

/// Output directory plus table format.
pub struct Sink {
    dir: PathBuf,
    format: Format,
}

impl Sink {
    pub fn new(dir: PathBuf, format: Format) -> Result<Self, CliError> {
        std::fs::create_dir_all(&dir)
            .map_err(|e| CliError::Output(format!("{}: {e}", dir.display())))?;
        Ok(Sink { dir, format })
    }

    fn create(&self, name: &str) -> Result<BufWriter<File>, CliError> {
        let path = self.dir.join(name);
        File::create(&path)
            .map(BufWriter::new)
            .map_err(|e| CliError::Output(format!("{}: {e}", path.display())))
    }

    pub fn text(&self, name: &str, body: &str) -> Result<PathBuf, CliError> {
        let mut w = self.create(name)?;
        w.write_all(body.as_bytes())
            .and_then(|_| w.flush())
            .map_err(|e| CliError::Output(e.to_string()))?;
        Ok(self.dir.join(name))
    }

    pub fn json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf, CliError> {
        let mut w = self.create(name)?;
        serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::Output(e.to_string()))?;
        writeln!(w)
            .and_then(|_| w.flush())
            .map_err(|e| CliError::Output(e.to_string()))?;
        Ok(self.dir.join(name))
    }

    /// Write a table as `stem.csv` through `csv`, or as `stem.json` from
    /// `value`.
    fn table<T, F>(&self, stem: &str, value: &T, csv: F) -> Result<PathBuf, CliError>
    where
        T: Serialize,
        F: FnOnce(&mut BufWriter<File>) -> phaselock::Result<()>,
    {
        match self.format {
            Format::Json => self.json(&format!("{stem}.json"), value),
            Format::Csv => {
                let name = format!("{stem}.csv");
                let mut w = self.create(&name)?;
                csv(&mut w).map_err(|e| CliError::Output(e.to_string()))?;
                Ok(self.dir.join(name))
            }
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }
}

#[derive(Serialize)]
struct AnalyzeOutput<'a> {
    bias: &'a BiasSpec,
    period: f64,
    #[serde(flatten)]
    report: &'a RegimeReport,
}

#[derive(Serialize)]
struct GroundColumns {
    t: Vec<f64>,
    phi0: Vec<f64>,
    p0: Vec<f64>,
    q0: Vec<f64>,
}

pub fn cmd_analyze(cfg: &RunConfig, sink: &Sink) -> Result<RegimeReport, CliError> {
    let bias = cfg.bias()?;
    let ground = integrate_ground(&bias, &cfg.solver)?;
    let report = analyze(&ground, &cfg.solver)?;
    sink.json(
        "analyze.json",
        &AnalyzeOutput {
            bias: &bias,
            period: bias.period(),
            report: &report,
        },
    )?;
    let columns = GroundColumns {
        t: ground.grid().to_vec(),
        phi0: ground.phi0(),
        p0: ground.p0(),
        q0: ground.q0(),
    };
    sink.table("ground", &columns, |w| {
        write_ground_csv(&ground, report.c_infinity, report.c_bowtie, w)
    })?;
    println!(
        "regime {}  delta {:.6e}  v_av {:.9}",
        report.regime, report.delta, report.v_av
    );
    if let Some(k) = report.k {
        println!("k {k}");
    }
    Ok(report)
}

#[derive(Serialize)]
pub struct SweepSummary {
    pub rows: usize,
    pub failed_rows: usize,
    pub steps: Vec<StepInterval>,
    pub delta_minima: Vec<DeltaMinimum>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step_error: Option<String>,
}

pub fn cmd_sweep(cfg: &RunConfig, sink: &Sink) -> Result<SweepSummary, CliError> {
    let family = cfg.bias()?;
    let s = &cfg.sweep;
    let grid = uniform_grid(s.lo, s.hi, s.step).map_err(|e| CliError::Config(e.to_string()))?;
    let rows = iv_curve(&family, &grid, s.workers, &cfg.solver)?;
    sink.table("sweep", &rows, |w| write_sweep_csv(&rows, w))?;
    let steps = detect_steps(&rows, &family, s.refine_tol, &cfg.solver);
    let summary = SweepSummary {
        rows: rows.len(),
        failed_rows: rows.iter().filter(|r| r.error.is_some()).count(),
        steps: steps.as_ref().map(|v| v.clone()).unwrap_or_default(),
        delta_minima: delta_minima(&rows),
        step_error: steps.as_ref().err().map(|e| e.to_string()),
    };
    sink.json("sweep_summary.json", &summary)?;
    println!(
        "{} rows, {} failed, {} steps",
        summary.rows,
        summary.failed_rows,
        summary.steps.len()
    );
    for st in &summary.steps {
        println!("  k {:>3}  [{:.8}, {:.8}]", st.k, st.lo, st.hi);
    }
    steps?;
    Ok(summary)
}

#[derive(Serialize)]
pub struct EvolveSummary {
    pub regime: Regime,
    pub periods: u64,
    /// `sup |φ_{j+1} − φ_j|` between consecutive closed-form segments.
    pub closed_gaps: Vec<f64>,
    pub closed_increments: Vec<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ode_gaps: Option<Vec<f64>>,
    /// `sup |e^{iφ_closed} − e^{iφ_ode}|` over the direct run.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ode_deviation: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rsj_gaps: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rsj_max_difference: Option<f64>,
}

fn gaps(seg: &SegmentedTrajectory) -> Vec<f64> {
    (0..seg.segments.len().saturating_sub(1))
        .map(|j| seg.gap(j))
        .collect()
}

pub fn cmd_evolve(cfg: &RunConfig, sink: &Sink) -> Result<EvolveSummary, CliError> {
    let bias = cfg.bias()?;
    let e = &cfg.evolve;
    let period = bias.period();
    let horizon = e.periods as f64 * period;
    let ground = integrate_ground(&bias, &cfg.solver)?;
    let plan = PropagationPlan::new(&ground, c_from_initials(e.phi_init, 0.0));
    let closed = segment(&plan.lifted_trajectory(e.periods)?, period)?;
    sink.table("closed_segments", &closed, |w| {
        write_segments_csv(&closed, w)
    })?;
    let mut summary = EvolveSummary {
        regime: plan.regime(),
        periods: e.periods,
        closed_gaps: gaps(&closed),
        closed_increments: closed.increments.clone(),
        ode_gaps: None,
        ode_deviation: None,
        rsj_gaps: None,
        rsj_max_difference: None,
    };

    let mut overdamped: Option<Trajectory> = None;
    if e.brute_force || e.beta.is_some() {
        overdamped = Some(integrate_phase(&bias, e.phi_init, horizon, &cfg.solver)?);
    }
    if let (true, Some(traj)) = (e.brute_force, &overdamped) {
        let seg = segment(traj, period)?;
        sink.table("ode_segments", &seg, |w| write_segments_csv(&seg, w))?;
        let mut dev = 0.0f64;
        for (&t, &phi) in traj.grid.iter().zip(&traj.phi) {
            let z = plan.phase_at(t)?;
            dev = dev.max((z - num_complex_polar(phi)).norm());
        }
        summary.ode_gaps = Some(gaps(&seg));
        summary.ode_deviation = Some(dev);
    }
    if let (Some(beta), Some(base)) = (e.beta, &overdamped) {
        let rsj = integrate_rsj(&bias, beta, e.phi_init, e.dphi_init, horizon, &cfg.solver)?;
        let seg = segment(&rsj, period)?;
        sink.table("rsj_segments", &seg, |w| write_segments_csv(&seg, w))?;
        let reference: Vec<f64> = rsj
            .grid
            .iter()
            .map(|&t| base.phi_at(t))
            .collect::<phaselock::Result<_>>()?;
        let diff: Vec<f64> = rsj.phi.iter().zip(&reference).map(|(a, b)| a - b).collect();
        summary.rsj_max_difference = Some(diff.iter().fold(0.0f64, |m, d| m.max(d.abs())));
        summary.rsj_gaps = Some(gaps(&seg));
        #[derive(Serialize)]
        struct Overlay<'a> {
            t: &'a [f64],
            phi_overdamped: &'a [f64],
            phi_rsj: &'a [f64],
            difference: &'a [f64],
        }
        let overlay = Overlay {
            t: &rsj.grid,
            phi_overdamped: &reference,
            phi_rsj: &rsj.phi,
            difference: &diff,
        };
        sink.table("rsj_overlay", &overlay, |w| {
            write_columns_csv(
                &rsj.grid,
                &[
                    ("phi_overdamped", &reference),
                    ("phi_rsj", &rsj.phi),
                    ("difference", &diff),
                ],
                w,
            )
        })?;
    }
    sink.json("evolve_summary.json", &summary)?;
    println!("regime {}  periods {}", summary.regime, summary.periods);
    if let Some(g) = summary.closed_gaps.last() {
        println!("last closed-form segment gap {g:.3e}");
    }
    if let Some(d) = summary.ode_deviation {
        println!("closed form vs direct integration {d:.3e}");
    }
    Ok(summary)
}

fn num_complex_polar(phi: f64) -> num_complex::Complex64 {
    num_complex::Complex64::from_polar(1.0, phi)
}

pub fn cmd_validate(
    cfg: &RunConfig,
    seed: u64,
    sink: &Sink,
) -> Result<Vec<CheckOutcome>, CliError> {
    let selection: Vec<CheckName> = cfg
        .validate
        .checks
        .clone()
        .unwrap_or_else(|| CheckName::ALL.to_vec());
    let outcomes = run_checks(&selection, seed, &cfg.solver);
    println!(
        "{:<22} {:<6} {:>12} {:>10} {:>8}",
        "check", "result", "worst", "tolerance", "samples"
    );
    for o in &outcomes {
        println!(
            "{:<22} {:<6} {:>12.3e} {:>10.1e} {:>8}  {}",
            o.name.as_str(),
            if o.passed { "PASS" } else { "FAIL" },
            o.worst,
            o.tolerance,
            o.samples,
            o.detail
        );
    }
    #[derive(Serialize)]
    struct Report<'a> {
        seed: u64,
        checks: &'a [CheckOutcome],
    }
    sink.json(
        "validate.json",
        &Report {
            seed,
            checks: &outcomes,
        },
    )?;
    let failures = outcomes.iter().filter(|o| !o.passed).count();
    if failures > 0 {
        return Err(CliError::Validation(failures));
    }
    Ok(outcomes)
}
