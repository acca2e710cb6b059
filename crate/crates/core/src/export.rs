//! CSV output for sweeps, ground records and trajectories.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::integrator::GroundSolution;
use crate::moebius::{transport_phase_lifted, ProjectiveC};
use crate::propagation::SegmentedTrajectory;
use crate::sweep::SweepRow;

fn csv_error(e: impl std::fmt::Display) -> Error {
    Error::Output(e.to_string())
}

#[derive(Serialize)]
struct SweepRecord<'a> {
    iota_dc: f64,
    delta: Option<f64>,
    regime: Option<String>,
    k: Option<i64>,
    alpha: Option<f64>,
    v_av: Option<f64>,
    error: Option<&'a str>,
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(SweepRecord {
            iota_dc: r.iota_dc,
            delta: r.delta,
            regime: r.regime.map(|g| g.to_string()),
            k: r.k,
            alpha: r.alpha,
            v_av: r.v_av,
            error: r.error.as_deref(),
        })
        .map_err(csv_error)?;
    }
    if rows.is_empty() {
        w.write_record(["iota_dc", "delta", "regime", "k", "alpha", "v_av", "error"])
            .map_err(csv_error)?;
    }
    w.flush().map_err(csv_error)
}

#[derive(Serialize)]
struct GroundRecord {
    t: f64,
    phi0: f64,
    p0: f64,
    q0: f64,
    phi_inf: Option<f64>,
    phi_bowtie: Option<f64>,
}

/// Ground record with the steady profiles of the given labels alongside.
pub fn write_ground_csv<W: Write>(
    ground: &GroundSolution,
    c_infinity: Option<ProjectiveC>,
    c_bowtie: Option<ProjectiveC>,
    out: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for i in 0..ground.len() {
        let s = ground.state(i);
        let f = s.f_value();
        w.serialize(GroundRecord {
            t: ground.grid()[i],
            phi0: s.phi,
            p0: s.p,
            q0: s.q,
            phi_inf: c_infinity.map(|c| transport_phase_lifted(s.phi, &f, &c)),
            phi_bowtie: c_bowtie.map(|c| transport_phase_lifted(s.phi, &f, &c)),
        })
        .map_err(csv_error)?;
    }
    w.flush().map_err(csv_error)
}

/// Columns `t, phi, segment_index`, with `t` local to each period.
pub fn write_segments_csv<W: Write>(seg: &SegmentedTrajectory, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "phi", "segment_index"])
        .map_err(csv_error)?;
    for (j, s) in seg.segments.iter().enumerate() {
        for (t, phi) in s.t.iter().zip(&s.phi) {
            w.write_record([t.to_string(), phi.to_string(), j.to_string()])
                .map_err(csv_error)?;
        }
    }
    w.flush().map_err(csv_error)
}

/// A shared time column followed by named value columns of equal length.
pub fn write_columns_csv<W: Write>(t: &[f64], columns: &[(&str, &[f64])], out: W) -> Result<()> {
    if columns.iter().any(|(_, c)| c.len() != t.len()) {
        return Err(Error::InvalidArgument(
            "columns must match the time column".into(),
        ));
    }
    let mut w = csv::Writer::from_writer(out);
    let header: Vec<&str> = std::iter::once("t")
        .chain(columns.iter().map(|(n, _)| *n))
        .collect();
    w.write_record(&header).map_err(csv_error)?;
    for (i, ti) in t.iter().enumerate() {
        let row: Vec<String> = std::iter::once(ti.to_string())
            .chain(columns.iter().map(|(_, c)| c[i].to_string()))
            .collect();
        w.write_record(&row).map_err(csv_error)?;
    }
    w.flush().map_err(csv_error)
}
