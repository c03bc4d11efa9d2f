//! File-driven commands behind the `flatmpc` binary.
//!
//! Exit codes: 0 success, 1 unexpected I/O failure, 2 configuration error,
//! 3 synthesis failure or unreadable controller file, 4 controller/config or
//! reference inconsistency, 5 closed loop left the feasible set, 6 a
//! comparison sub-run failed.

use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::config::{ControllerKind, ScenarioConfig};
use crate::error::{Error, Result};
use crate::sim::{benchmark, run_fleet, write_summary, write_trace_csv, BenchReport, ClosedLoop, Scenario, Summary};
use crate::synth::{ControllerSet, SCHEMA_VERSION};

pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SYNTH: i32 = 3;
pub const EXIT_INCONSISTENT: i32 = 4;
pub const EXIT_INFEASIBLE: i32 = 5;
pub const EXIT_COMPARE: i32 = 6;

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) => EXIT_CONFIG,
        Error::Io(_) => EXIT_IO,
        Error::ControllerMismatch(_)
        | Error::ReferenceInconsistent(_)
        | Error::TrackingBoxEmpty
        | Error::Dimension(_) => EXIT_INCONSISTENT,
        Error::InfeasibleState { .. } | Error::OutsideFlatDomain { .. } => EXIT_INFEASIBLE,
        _ => EXIT_SYNTH,
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value)
        .map(|s| s + "\n")
        .map_err(|e| Error::Io(std::io::Error::other(e)))
}

fn ensure_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => Ok(std::fs::create_dir_all(dir)?),
        _ => Ok(()),
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    ensure_parent(path)?;
    Ok(std::fs::write(path, text)?)
}

fn load_scenario(config: &Path) -> Result<Scenario> {
    Scenario::new(&ScenarioConfig::load(config)?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SynthReport {
    pub schema_version: u32,
    pub np: usize,
    pub region_counts: Vec<usize>,
    pub offline_time_s: f64,
    pub controller_bytes: usize,
    pub checksum: String,
    pub controller: PathBuf,
    /// Wall-clock creation time; not part of the controller file.
    pub created_unix_s: u64,
}

/// Synthesises the three axis controllers, writes the controller file to
/// `out` (default: the configured path, else `controller.json`) and the
/// report next to it.
pub fn cmd_synth(config: &Path, out: Option<&Path>) -> Result<SynthReport> {
    let sc = load_scenario(config)?;
    let out = out
        .map(Path::to_path_buf)
        .or_else(|| sc.cfg.outputs.controller.clone())
        .unwrap_or_else(|| PathBuf::from("controller.json"));
    let start = Instant::now();
    let set = sc.synthesize()?;
    let offline_time_s = start.elapsed().as_secs_f64();
    ensure_parent(&out)?;
    let controller_bytes = set.save(&out)?;
    let report = SynthReport {
        schema_version: SCHEMA_VERSION,
        np: set.meta.np,
        region_counts: set.region_counts(),
        offline_time_s,
        controller_bytes,
        checksum: set.checksum()?,
        controller: out.clone(),
        created_unix_s: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
    };
    let report_path = sc.cfg.outputs.report.clone().unwrap_or_else(|| out.with_extension("report.json"));
    write_text(&report_path, &to_json(&report)?)?;
    Ok(report)
}

fn explicit_set(sc: &Scenario, controller: Option<&Path>) -> Result<ControllerSet> {
    // a configured path that does not exist yet just means "not synthesised"
    let path = controller
        .map(Path::to_path_buf)
        .or_else(|| sc.cfg.outputs.controller.clone().filter(|p| p.exists()));
    match path {
        Some(p) => {
            let set = ControllerSet::load(&p)?;
            sc.check_controller(&set)?;
            Ok(set)
        }
        None => sc.synthesize(),
    }
}

fn closed_loop(sc: &Scenario, controller: Option<&Path>) -> Result<ClosedLoop> {
    match sc.cfg.controller {
        ControllerKind::ExplicitDecoupled => Ok(ClosedLoop::Explicit(explicit_set(sc, controller)?)),
        kind => sc.build(kind),
    }
}

fn drone_path(base: &Path, drone: usize) -> PathBuf {
    if drone == 0 {
        return base.to_path_buf();
    }
    let stem = base.file_stem().map_or("trace".into(), |s| s.to_string_lossy().into_owned());
    let ext = base.extension().map_or("csv".into(), |s| s.to_string_lossy().into_owned());
    base.with_file_name(format!("{stem}.drone{drone}.{ext}"))
}

#[derive(Debug, Clone)]
pub struct SimulateOutcome {
    pub summaries: Vec<Summary>,
    pub trace: PathBuf,
    pub summary: PathBuf,
}

impl SimulateOutcome {
    pub fn feasible(&self) -> bool {
        self.summaries.iter().all(|s| s.feasible)
    }
}

/// Closes the loop for every configured drone and writes one trace CSV per
/// drone (`trace.csv`, `trace.drone1.csv`, ...) plus the summary JSON (an
/// object for one drone, `{"drones": [...]}` for a fleet). Explicit runs use
/// `controller` (or the configured file if it exists), synthesising in
/// memory otherwise.
pub fn cmd_simulate(config: &Path, controller: Option<&Path>, out: Option<&Path>) -> Result<SimulateOutcome> {
    let sc = load_scenario(config)?;
    let ctrl = closed_loop(&sc, controller)?;
    let trace = out
        .map(Path::to_path_buf)
        .or_else(|| sc.cfg.outputs.trace.clone())
        .unwrap_or_else(|| PathBuf::from("trace.csv"));
    let summary = sc.cfg.outputs.summary.clone().unwrap_or_else(|| trace.with_extension("summary.json"));
    let traces = run_fleet(&sc, &ctrl)?;
    ensure_parent(&trace)?;
    ensure_parent(&summary)?;
    for t in &traces {
        write_trace_csv(&t.rows, std::fs::File::create(drone_path(&trace, t.drone))?)?;
    }
    let summaries: Vec<Summary> = traces.into_iter().map(|t| t.summary).collect();
    if summaries.len() == 1 {
        write_summary(&summaries[0], &summary)?;
    } else {
        #[derive(Serialize)]
        struct Fleet<'a> {
            drones: &'a [Summary],
        }
        write_text(&summary, &to_json(&Fleet { drones: &summaries })?)?;
    }
    Ok(SimulateOutcome {
        summaries,
        trace,
        summary,
    })
}

/// Paired explicit/implicit comparison; the report goes to `out` (default:
/// the configured report path, else `compare.json`).
pub fn cmd_compare(config: &Path, controller: Option<&Path>, out: Option<&Path>) -> Result<BenchReport> {
    let sc = load_scenario(config)?;
    let set = explicit_set(&sc, controller)?;
    let report = benchmark(&sc, &set)?;
    let out = out
        .map(Path::to_path_buf)
        .or_else(|| sc.cfg.outputs.report.clone())
        .unwrap_or_else(|| PathBuf::from("compare.json"));
    write_text(&out, &to_json(&report)?)?;
    Ok(report)
}

/// Human-readable description of a controller file.
pub fn cmd_inspect(controller: &Path) -> Result<String> {
    let set = ControllerSet::load(controller)?;
    let bytes = std::fs::metadata(controller)?.len();
    let mut s = String::new();
    s += &format!("controller   {}\n", controller.display());
    s += &format!("schema       {SCHEMA_VERSION}\n");
    s += &format!("checksum     {}\n", set.checksum()?);
    s += &format!("size         {bytes} bytes\n");
    s += &format!("ts           {} s\n", set.meta.ts);
    s += &format!("horizon      {}\n", set.meta.np);
    s += &format!(
        "limits       thrust {} m/s^2, tilt {} rad, g {} m/s^2\n",
        set.meta.vc.t_max, set.meta.vc.eps_max, set.meta.vc.g
    );
    for (i, ax) in set.axes.iter().enumerate() {
        s += &format!(
            "axis {}       {} regions, |v| <= {}, |p| <= {}, |dp| <= {}\n",
            i + 1,
            ax.n_regions(),
            ax.spec.vbar,
            ax.spec.pbar,
            ax.spec.velbar
        );
    }
    Ok(s)
}
