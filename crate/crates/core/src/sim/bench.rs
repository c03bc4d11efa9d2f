//! Paired explicit/implicit runs on one scenario, plus the sequential
//! multi-drone timing sweep.

use serde::Serialize;

use crate::config::ControllerKind;
use crate::error::Result;
use crate::synth::ControllerSet;

use super::{run, run_with, ClosedLoop, PlantModel, Scenario, SimTrace};

/// Fleet sizes of the sequential-evaluation sweep.
pub const FLEET_SIZES: [usize; 4] = [1, 2, 4, 8];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunStats {
    pub controller: ControllerKind,
    pub rms_m: f64,
    pub rms_euclidean_m: f64,
    pub mean_eval_us: f64,
    pub max_eval_us: f64,
    pub violations: usize,
    pub rows: usize,
    pub completed: bool,
}

impl RunStats {
    fn of(trace: &SimTrace) -> Self {
        let s = &trace.summary;
        Self {
            controller: s.controller,
            rms_m: s.rms_m,
            rms_euclidean_m: s.rms_euclidean_m,
            mean_eval_us: s.mean_eval_us,
            max_eval_us: s.max_eval_us,
            violations: s.violations.total,
            rows: s.rows,
            completed: trace.completed(),
        }
    }
}

/// Explicit controllers evaluated sequentially for `n_drones` drones:
/// per-step time is the sum over drones.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FleetPoint {
    pub n_drones: usize,
    pub mean_step_us: f64,
    pub max_step_us: f64,
    pub completed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchChecks {
    /// Explicit and implicit decoupled controls agree within 1e-6 along
    /// the explicit trajectory.
    pub controls_agree: bool,
    /// Explicit evaluation at least five times faster than the coupled
    /// solve.
    pub explicit_5x_faster: bool,
    /// Four drones evaluated explicitly cost less per step than one
    /// coupled solve.
    pub fleet4_below_coupled: bool,
    /// The coupled controller, with its larger input set, tracks at least
    /// as tightly.
    pub coupled_rms_not_worse: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub explicit: RunStats,
    pub implicit_decoupled: RunStats,
    pub implicit_coupled: RunStats,
    pub regions: Vec<usize>,
    pub controller_bytes: usize,
    pub max_control_gap: f64,
    /// Mean coupled solve time over mean explicit evaluation time.
    pub timing_ratio: f64,
    pub fleet: Vec<FleetPoint>,
    pub checks: BenchChecks,
    pub all_completed: bool,
    pub pass: bool,
}

/// Runs the three controller kinds on the scenario's first drone, compares
/// the explicit law with the online QP along the explicit trajectory and
/// sweeps the fleet size. Runs are sequential so timings do not interfere.
pub fn benchmark(sc: &Scenario, explicit: &ControllerSet) -> Result<BenchReport> {
    sc.check_controller(explicit)?;
    let explicit_bytes = explicit.to_bytes()?.len();
    let ex = ClosedLoop::Explicit(explicit.clone());
    let imd = sc.implicit_decoupled()?;
    let imc = sc.implicit_coupled()?;
    let t_ex = run(sc, &ex)?;
    let t_imd = run(sc, &imd)?;
    let t_imc = run(sc, &imc)?;

    let mut gap: f64 = 0.0;
    for (k, row) in t_ex.rows.iter().enumerate() {
        let Some(d) = row.decision else { break };
        match imd.decide(&row.state, sc.cfg.psi, sc.cfg.vc.g, &sc.references[0], k)? {
            Some(q) => (0..3).for_each(|i| gap = gap.max((q.dv[i] - d.dv[i]).abs())),
            None => gap = f64::INFINITY,
        }
    }

    let mut fleet = Vec::with_capacity(FLEET_SIZES.len());
    for &n in &FLEET_SIZES {
        let fsc = sc.with_drones(n)?;
        let traces = run_with(&fsc, &ex, PlantModel::Nonlinear, n)?;
        let steps = traces.iter().map(|t| t.rows.len()).min().unwrap_or(0);
        let mut per_step = vec![0.0; steps];
        for t in &traces {
            for (k, row) in t.rows.iter().take(steps).enumerate() {
                if let Some(d) = row.decision {
                    per_step[k] += d.eval_time.as_secs_f64() * 1e6;
                }
            }
        }
        fleet.push(FleetPoint {
            n_drones: n,
            mean_step_us: per_step.iter().sum::<f64>() / steps.max(1) as f64,
            max_step_us: per_step.iter().cloned().fold(0.0, f64::max),
            completed: traces.iter().all(SimTrace::completed),
        });
    }

    let explicit = RunStats::of(&t_ex);
    let implicit_decoupled = RunStats::of(&t_imd);
    let implicit_coupled = RunStats::of(&t_imc);
    let timing_ratio = implicit_coupled.mean_eval_us / explicit.mean_eval_us;
    let fleet4 = fleet.iter().find(|f| f.n_drones == 4).map_or(f64::INFINITY, |f| f.mean_step_us);
    let checks = BenchChecks {
        controls_agree: gap <= 1e-6,
        explicit_5x_faster: timing_ratio >= 5.0,
        fleet4_below_coupled: fleet4 < implicit_coupled.mean_eval_us,
        coupled_rms_not_worse: implicit_coupled.rms_m <= explicit.rms_m + 1e-12,
    };
    let all_completed = explicit.completed
        && implicit_decoupled.completed
        && implicit_coupled.completed
        && fleet.iter().all(|f| f.completed);
    let pass = all_completed
        && checks.controls_agree
        && checks.explicit_5x_faster
        && checks.fleet4_below_coupled
        && checks.coupled_rms_not_worse;
    Ok(BenchReport {
        regions: ex.region_counts(),
        controller_bytes: explicit_bytes,
        explicit,
        implicit_decoupled,
        implicit_coupled,
        max_control_gap: gap,
        timing_ratio,
        fleet,
        checks,
        all_completed,
        pass,
    })
}

