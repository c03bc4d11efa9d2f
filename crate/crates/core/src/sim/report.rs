use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::config::ControllerKind;
use crate::error::{Error, Result};
use crate::flat::{vc_contains, FlatInput};
use crate::runtime::{State3, TrackingReference};

use super::{ClosedLoop, Scenario, TraceRow};

/// Start of the window used for the steady tracking error.
pub const TRANSIENT_S: f64 = 5.0;

const TOL: f64 = 1e-9;

/// Number of recorded steps breaking each constraint family.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Violations {
    /// Feedback input outside the controller's own input set.
    pub input_set: usize,
    /// Physical input outside the thrust/tilt limits.
    pub physical_input: usize,
    /// Flat input outside the exact flat-space input set.
    pub flat_set: usize,
    /// Tracking-error state outside the state box.
    pub state_box: usize,
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub controller: ControllerKind,
    /// Sum over axes of the per-axis position RMS error.
    pub rms_m: f64,
    /// Root of the mean squared Euclidean position error.
    pub rms_euclidean_m: f64,
    pub rms_axes_m: [f64; 3],
    pub max_eval_us: f64,
    pub mean_eval_us: f64,
    pub regions: Vec<usize>,
    pub violations: Violations,
    /// Steps whose flat input lies outside the polytopic inner
    /// approximation (informational: the box controllers may use inputs
    /// outside it while staying inside the exact set).
    pub outside_vc_poly: usize,
    pub max_abs_v: [f64; 3],
    pub max_abs_dv: [f64; 3],
    /// Largest Euclidean position error after the transient window.
    pub max_error_after_transient_m: f64,
    /// Euclidean norm of the final six-dimensional tracking error.
    pub final_error_norm: f64,
    pub rows: usize,
    pub feasible: bool,
}

fn err_state(row: &TraceRow, reference: &TrackingReference, k: usize) -> State3 {
    let (xi_ref, _) = reference.at(k);
    [0, 1, 2].map(|i| [row.state[i][0] - xi_ref[i][0], row.state[i][1] - xi_ref[i][1]])
}

/// Metrics of one recorded run against the reference it tracked.
pub fn summarize(sc: &Scenario, ctrl: &ClosedLoop, reference: &TrackingReference, rows: &[TraceRow]) -> Summary {
    let n = rows.len().max(1) as f64;
    let mut sq = [0.0; 3];
    let mut sq_e = 0.0;
    let mut max_after: f64 = 0.0;
    let mut times = Vec::with_capacity(rows.len());
    let mut viol = Violations::default();
    let mut outside_poly = 0;
    let mut max_v = [0.0f64; 3];
    let mut max_dv = [0.0f64; 3];
    let kind = ctrl.kind();
    for (k, row) in rows.iter().enumerate() {
        let p = row.position();
        let mut e2 = 0.0;
        for i in 0..3 {
            let e = p[i] - row.reference[i];
            sq[i] += e * e;
            e2 += e * e;
        }
        sq_e += e2;
        if row.t >= TRANSIENT_S - 1e-9 {
            max_after = max_after.max(e2.sqrt());
        }
        let err = err_state(row, reference, k);
        let in_x = (0..3).all(|i| err[i][0].abs() <= sc.cfg.pbar[i] + TOL && err[i][1].abs() <= sc.cfg.velbar[i] + TOL);
        let mut bad = false;
        if !in_x {
            viol.state_box += 1;
            bad = true;
        }
        let Some(d) = row.decision else {
            viol.total += bad as usize;
            continue;
        };
        times.push(d.eval_time.as_secs_f64() * 1e6);
        for i in 0..3 {
            max_v[i] = max_v[i].max(d.v.0[i].abs());
            max_dv[i] = max_dv[i].max(d.dv[i].abs());
        }
        let in_input = match kind {
            ControllerKind::ImplicitCoupled => sc.input_poly.contains(&d.dv, TOL),
            _ => (0..3).all(|i| d.dv[i].abs() <= sc.input_box.vbar[i] + TOL),
        };
        if !in_input {
            viol.input_set += 1;
            bad = true;
        }
        if !d.u.in_u(&sc.cfg.vc, TOL) {
            viol.physical_input += 1;
            bad = true;
        }
        if !vc_contains(&d.v, &sc.cfg.vc) {
            viol.flat_set += 1;
            bad = true;
        }
        if !sc.vc_poly.contains(&d.v.0, TOL) {
            outside_poly += 1;
        }
        viol.total += bad as usize;
    }
    let final_error_norm = rows.last().map_or(0.0, |row| {
        let e = err_state(row, reference, rows.len() - 1);
        e.iter().flatten().map(|x| x * x).sum::<f64>().sqrt()
    });
    let rms_axes_m = sq.map(|s| (s / n).sqrt());
    let mean = if times.is_empty() { 0.0 } else { times.iter().sum::<f64>() / times.len() as f64 };
    Summary {
        controller: kind,
        rms_m: rms_axes_m.iter().sum(),
        rms_euclidean_m: (sq_e / n).sqrt(),
        rms_axes_m,
        max_eval_us: times.iter().cloned().fold(0.0, f64::max),
        mean_eval_us: mean,
        regions: ctrl.region_counts(),
        violations: viol,
        outside_vc_poly: outside_poly,
        max_abs_v: max_v,
        max_abs_dv: max_dv,
        max_error_after_transient_m: max_after,
        final_error_norm,
        rows: rows.len(),
        feasible: rows.last().is_some_and(|r| r.feasible()),
    }
}

const HEADER: [&str; 18] = [
    "t", "x", "y", "z", "vx", "vy", "vz", "v1", "v2", "v3", "T", "phi", "theta", "reg1", "reg2", "reg3",
    "eval_time_us", "feasible",
];

/// Writes the trace as CSV. Control columns are empty on an infeasible row;
/// a missing region index (implicit controllers) is written as -1.
pub fn write_trace_csv<W: Write>(rows: &[TraceRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(HEADER).map_err(csv_err)?;
    for row in rows {
        let mut rec: Vec<String> = Vec::with_capacity(HEADER.len());
        rec.push(row.t.to_string());
        rec.extend(row.state.iter().map(|s| s[0].to_string()));
        rec.extend(row.state.iter().map(|s| s[1].to_string()));
        match &row.decision {
            Some(d) => {
                let FlatInput(v) = d.v;
                rec.extend(v.iter().map(f64::to_string));
                rec.extend([d.u.thrust, d.u.phi, d.u.theta].iter().map(f64::to_string));
                rec.extend(d.regions.iter().map(|r| r.map_or("-1".to_string(), |i| i.to_string())));
                rec.push((d.eval_time.as_secs_f64() * 1e6).to_string());
                rec.push("1".into());
            }
            None => {
                rec.extend(std::iter::repeat_n(String::new(), 6));
                rec.extend(std::iter::repeat_n("-1".to_string(), 3));
                rec.push(String::new());
                rec.push("0".into());
            }
        }
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_summary(summary: &Summary, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(summary).map_err(|e| Error::Io(std::io::Error::other(e)))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}
