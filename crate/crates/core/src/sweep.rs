//! Parallel sweeps over the DC level of a bias family.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bias::BiasSpec;
use crate::error::{Error, Result};
use crate::integrator::{integrate_ground, SolverConfig};
use crate::monodromy::{analyze, build, Regime};

/// Analysis of one grid point. A failed point keeps its error text and
/// leaves the numeric fields empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub iota_dc: f64,
    pub delta: Option<f64>,
    pub regime: Option<Regime>,
    pub k: Option<i64>,
    pub alpha: Option<f64>,
    pub v_av: Option<f64>,
    pub error: Option<String>,
}

impl SweepRow {
    /// Locked or weakly locked.
    pub fn is_locked(&self) -> bool {
        matches!(self.regime, Some(Regime::Locked | Regime::Weak))
    }
}

/// Maximal run of locked grid points with a single winding order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepInterval {
    pub k: i64,
    pub lo: f64,
    pub hi: f64,
    /// False when the edge is the end of the grid rather than a refined zero
    /// of the discriminant.
    pub lo_refined: bool,
    pub hi_refined: bool,
}

impl StepInterval {
    pub fn contains(&self, iota_dc: f64) -> bool {
        self.lo <= iota_dc && iota_dc <= self.hi
    }
}

/// Discriminant of one member of the family.
pub fn delta_at(family: &BiasSpec, iota_dc: f64, cfg: &SolverConfig) -> Result<f64> {
    let ground = integrate_ground(&family.with_dc(iota_dc), cfg)?;
    Ok(build(&ground).delta)
}

fn evaluate(family: &BiasSpec, iota_dc: f64, cfg: &SolverConfig) -> SweepRow {
    let mut row = SweepRow {
        iota_dc,
        delta: None,
        regime: None,
        k: None,
        alpha: None,
        v_av: None,
        error: None,
    };
    let ground = match integrate_ground(&family.with_dc(iota_dc), cfg) {
        Ok(g) => g,
        Err(e) => {
            row.error = Some(e.to_string());
            return row;
        }
    };
    row.delta = Some(build(&ground).delta);
    match analyze(&ground, cfg) {
        Ok(r) => {
            row.regime = Some(r.regime);
            row.k = r.k;
            row.alpha = r.alpha;
            row.v_av = Some(r.v_av);
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    row
}

/// Analyze every point of `grid` on a pool of `workers` threads. Rows come
/// back in grid order and do not depend on the worker count.
pub fn iv_curve(
    family: &BiasSpec,
    grid: &[f64],
    workers: usize,
    cfg: &SolverConfig,
) -> Result<Vec<SweepRow>> {
    if workers == 0 {
        return Err(Error::InvalidArgument(
            "worker count must be at least 1".into(),
        ));
    }
    if grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidArgument(
            "sweep grid must be strictly increasing".into(),
        ));
    }
    cfg.validate()?;
    if grid.is_empty() {
        return Ok(Vec::new());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    Ok(pool.install(|| grid.par_iter().map(|&x| evaluate(family, x, cfg)).collect()))
}

/// Points `lo, lo + step, …` up to `hi`.
pub fn uniform_grid(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(hi >= lo) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "bad grid [{lo}, {hi}] step {step}"
        )));
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| lo + i as f64 * step).collect())
}

/// Bisect on the sign of the discriminant between `inside` (locked) and
/// `outside`.
fn refine_edge(
    family: &BiasSpec,
    mut inside: f64,
    mut outside: f64,
    tol: f64,
    cfg: &SolverConfig,
) -> Result<f64> {
    while (inside - outside).abs() > tol {
        let mid = 0.5 * (inside + outside);
        if delta_at(family, mid, cfg)? >= 0.0 {
            inside = mid;
        } else {
            outside = mid;
        }
    }
    Ok(inside)
}

/// Merge contiguous locked rows into steps and refine each interior edge by
/// bisection on the discriminant to `refine_tol`.
pub fn detect_steps(
    rows: &[SweepRow],
    family: &BiasSpec,
    refine_tol: f64,
    cfg: &SolverConfig,
) -> Result<Vec<StepInterval>> {
    if !(refine_tol > 0.0) {
        return Err(Error::InvalidArgument("refine_tol must be positive".into()));
    }
    let mut steps = Vec::new();
    let mut i = 0;
    while i < rows.len() {
        if !rows[i].is_locked() {
            i += 1;
            continue;
        }
        let first = i;
        while i + 1 < rows.len() && rows[i + 1].is_locked() {
            i += 1;
        }
        let last = i;
        i += 1;
        let run = &rows[first..=last];
        let mut orders: Vec<i64> = run.iter().filter_map(|r| r.k).collect();
        orders.dedup();
        if orders.len() != 1 {
            return Err(Error::InconsistentOrder {
                lo: run[0].iota_dc,
                hi: run[run.len() - 1].iota_dc,
                orders,
            });
        }
        // A neighbor that failed carries no discriminant sign to bisect on.
        let bracket = |j: Option<usize>| j.filter(|&j| rows[j].delta.is_some_and(|d| d < 0.0));
        let (lo, lo_refined) = match bracket(first.checked_sub(1)) {
            Some(j) => (
                refine_edge(
                    family,
                    rows[first].iota_dc,
                    rows[j].iota_dc,
                    refine_tol,
                    cfg,
                )?,
                true,
            ),
            None => (rows[first].iota_dc, false),
        };
        let (hi, hi_refined) = match bracket((last + 1 < rows.len()).then_some(last + 1)) {
            Some(j) => (
                refine_edge(family, rows[last].iota_dc, rows[j].iota_dc, refine_tol, cfg)?,
                true,
            ),
            None => (rows[last].iota_dc, false),
        };
        steps.push(StepInterval {
            k: orders[0],
            lo,
            hi,
            lo_refined,
            hi_refined,
        });
    }
    Ok(steps)
}

/// Deepest point of a run of negative discriminant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeltaMinimum {
    pub iota_dc: f64,
    pub delta: f64,
    /// Positive discriminant on both sides of the run within the grid.
    pub bracketed: bool,
}

pub fn delta_minima(rows: &[SweepRow]) -> Vec<DeltaMinimum> {
    let mut out = Vec::new();
    let mut i = 0;
    let negative = |r: &SweepRow| r.delta.is_some_and(|d| d < 0.0);
    while i < rows.len() {
        if !negative(&rows[i]) {
            i += 1;
            continue;
        }
        let first = i;
        while i + 1 < rows.len() && negative(&rows[i + 1]) {
            i += 1;
        }
        let last = i;
        i += 1;
        let deepest = rows[first..=last]
            .iter()
            .min_by(|a, b| a.delta.unwrap().total_cmp(&b.delta.unwrap()))
            .expect("run is nonempty");
        let positive = |j: usize| rows[j].delta.is_some_and(|d| d > 0.0);
        out.push(DeltaMinimum {
            iota_dc: deepest.iota_dc,
            delta: deepest.delta.unwrap(),
            bracketed: first > 0
                && last + 1 < rows.len()
                && positive(first - 1)
                && positive(last + 1),
        });
    }
    out
}
