//! Deterministic closed-loop simulation of the translational dynamics under
//! explicit or implicit MPC, with trace recording and metrics.
//!
//! The plant is the discrete double integrator per axis driven by the
//! accelerations the physical input actually produces, so any error in the
//! flat inversion shows up in the state.

mod bench;
mod reference;
mod report;

pub use bench::{benchmark, BenchReport, FleetPoint, RunStats};
pub use reference::make_reference;
pub use report::{summarize, write_summary, write_trace_csv, Summary, Violations, TRANSIENT_S};

use std::time::Duration;

use crate::config::{ControllerKind, ReferenceSpec, ScenarioConfig};
use crate::error::{Error, Result};
use crate::flat::{
    build_vc_polytope, flat_to_physical, max_inscribed_box, plant_accel, scaled_tracking_box, FlatInput,
    InscribedBox, PhysicalInput,
};
use crate::implicit::{AxisImpc, CoupledImpc, CoupledSpec};
use crate::kernel::LinearSystem2D;
use crate::polytope::{HPolytope, VPolytope};
use crate::runtime::{control_step, State3, TrackingReference};
use crate::synth::{synthesize_axis, AxisSpec, ControllerSet, EnumerationOptions, SynthMeta};

/// One sampling period of the translational dynamics under `u`.
pub fn step_plant(state: &State3, u: &PhysicalInput, psi: f64, g: f64, ts: f64) -> State3 {
    let acc = plant_accel(u, psi, g);
    let sys = LinearSystem2D::double_integrator(ts);
    [0, 1, 2].map(|i| sys.step(state[i], acc[i]))
}

/// The linearised plant: three double integrators driven by `v` directly.
pub fn step_linear(state: &State3, v: &FlatInput, ts: f64) -> State3 {
    let sys = LinearSystem2D::double_integrator(ts);
    [0, 1, 2].map(|i| sys.step(state[i], v.0[i]))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlantModel {
    Nonlinear,
    DoubleIntegrator,
}

/// Everything derived from a configuration before any controller exists.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub cfg: ScenarioConfig,
    /// Largest box in the exact input set (or the configured one).
    pub nominal_box: InscribedBox,
    /// Polytopic inner approximation of the flat input set.
    pub vc_poly: HPolytope,
    /// Input box of the decoupled controllers: the nominal box when
    /// regulating, shrunk to fit the feedforward margin when tracking.
    pub input_box: InscribedBox,
    /// Input set of the coupled controller (acting on the feedback part).
    pub input_poly: HPolytope,
    /// Box used for the coupled terminal set; lies inside `input_poly`.
    pub terminal_box: InscribedBox,
    pub axes: [AxisSpec; 3],
    /// One reference and initial state per drone.
    pub references: Vec<TrackingReference>,
    pub initial_states: Vec<State3>,
}

fn rotate(state: &State3, angle: f64) -> State3 {
    let (s, c) = angle.sin_cos();
    let mut out = *state;
    for j in 0..2 {
        out[0][j] = c * state[0][j] - s * state[1][j];
        out[1][j] = s * state[0][j] + c * state[1][j];
    }
    out
}

/// Per-drone references and initial states. Circle drones are spread
/// evenly in phase and their initial states rotated accordingly.
fn fleet(cfg: &ScenarioConfig, n: usize) -> Result<(Vec<TrackingReference>, Vec<State3>)> {
    let mut references = Vec::with_capacity(n);
    let mut initial_states = Vec::with_capacity(n);
    for d in 0..n {
        let phase = match cfg.reference {
            ReferenceSpec::Circle { .. } => 2.0 * std::f64::consts::PI * d as f64 / n as f64,
            _ => 0.0,
        };
        references.push(make_reference(&cfg.reference, cfg.duration, cfg.ts, phase)?);
        initial_states.push(rotate(&cfg.xi0, phase));
    }
    Ok((references, initial_states))
}

/// Polytope enclosing the feedforward inputs of `r` rotated by any angle
/// about the vertical axis: a regular polygon circumscribing the largest
/// horizontal sample, extruded over the vertical range.
fn feedforward_bound(r: &TrackingReference) -> VPolytope {
    const SIDES: usize = 16;
    let mut radius: f64 = 0.0;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in &r.v_ref {
        radius = radius.max(v[0].hypot(v[1]));
        lo = lo.min(v[2]);
        hi = hi.max(v[2]);
    }
    let rc = radius / (std::f64::consts::PI / SIDES as f64).cos();
    let mut pts = Vec::with_capacity(2 * SIDES);
    for j in 0..SIDES {
        let a = 2.0 * std::f64::consts::PI * j as f64 / SIDES as f64;
        for z in [lo, hi] {
            pts.push(vec![rc * a.cos(), rc * a.sin(), z]);
        }
    }
    VPolytope::new(pts)
}

impl Scenario {
    pub fn new(cfg: &ScenarioConfig) -> Result<Self> {
        cfg.validate()?;
        let nominal_box = match cfg.vbar {
            Some(v) => InscribedBox { vbar: v },
            None => max_inscribed_box(&cfg.vc),
        };
        let vc_poly = build_vc_polytope(&cfg.vc, cfg.l1, cfg.l2)?;
        let (references, initial_states) = fleet(cfg, cfg.n_drones)?;

        let (input_box, input_poly) = if cfg.is_tracking() {
            let delta = vc_poly.pontryagin_diff(&feedforward_bound(&references[0]));
            let b = scaled_tracking_box(&delta, &nominal_box).map_err(|_| {
                Error::ReferenceInconsistent("reference inputs leave no margin inside the input set".into())
            })?;
            (b, delta)
        } else {
            (nominal_box, vc_poly.clone())
        };
        let terminal_box = scaled_tracking_box(&input_poly, &input_box)?;

        let mk = |i: usize| {
            AxisSpec::with_terminal(
                cfg.ts,
                cfg.q,
                cfg.r,
                cfg.np,
                input_box.vbar[i],
                cfg.pbar[i],
                cfg.velbar[i],
            )
            .map_err(|e| Error::Synthesis {
                axis: i + 1,
                source: Box::new(e),
            })
        };
        let axes = [mk(0)?, mk(1)?, mk(2)?];
        Ok(Self {
            cfg: cfg.clone(),
            nominal_box,
            vc_poly,
            input_box,
            input_poly,
            terminal_box,
            axes,
            references,
            initial_states,
        })
    }

    /// The same scenario flown by `n` drones; input sets and controllers
    /// are unchanged.
    pub fn with_drones(&self, n: usize) -> Result<Self> {
        let mut cfg = self.cfg.clone();
        cfg.n_drones = n.max(1);
        let (references, initial_states) = fleet(&cfg, cfg.n_drones)?;
        Ok(Self {
            cfg,
            references,
            initial_states,
            ..self.clone()
        })
    }

    pub fn enumeration_options(&self) -> EnumerationOptions {
        EnumerationOptions {
            gap_fill_grid: self.cfg.gap_fill_grid,
            region_budget: self.cfg.region_budget,
            ..EnumerationOptions::default()
        }
    }

    /// Explicit controllers for the three axes, synthesised in parallel.
    /// Errors name the failing axis.
    pub fn synthesize(&self) -> Result<ControllerSet> {
        let opts = self.enumeration_options();
        let results: Vec<Result<_>> = std::thread::scope(|s| {
            let handles: Vec<_> = self
                .axes
                .iter()
                .map(|spec| s.spawn(move || synthesize_axis(spec, &opts)))
                .collect();
            handles.into_iter().map(|h| h.join().expect("synthesis thread")).collect()
        });
        let mut axes = Vec::with_capacity(3);
        for (i, r) in results.into_iter().enumerate() {
            axes.push(r.map_err(|e| Error::Synthesis {
                axis: i + 1,
                source: Box::new(e),
            })?);
        }
        Ok(ControllerSet {
            meta: SynthMeta::new(self.cfg.ts, self.cfg.np, self.cfg.vc, &opts),
            axes,
        })
    }

    /// Confirms that stored controllers solve this scenario's problems.
    pub fn check_controller(&self, set: &ControllerSet) -> Result<()> {
        if set.axes.len() != 3 {
            return Err(Error::ControllerMismatch(format!("{} axes stored", set.axes.len())));
        }
        if set.meta.ts != self.cfg.ts || set.meta.np != self.cfg.np || set.meta.vc != self.cfg.vc {
            return Err(Error::ControllerMismatch("sampling time, horizon or input limits differ".into()));
        }
        for (i, (stored, wanted)) in set.axes.iter().zip(&self.axes).enumerate() {
            if !stored.spec.same_problem(wanted) {
                return Err(Error::ControllerMismatch(format!("axis {} problem data differ", i + 1)));
            }
        }
        Ok(())
    }

    pub fn implicit_decoupled(&self) -> Result<ClosedLoop> {
        let impc: Result<Vec<AxisImpc>> = self.axes.iter().map(AxisImpc::new).collect();
        Ok(ClosedLoop::ImplicitDecoupled(impc?))
    }

    pub fn coupled_spec(&self) -> Result<CoupledSpec> {
        CoupledSpec::new(&self.axes, &self.input_poly, self.terminal_box.vbar)
    }

    pub fn implicit_coupled(&self) -> Result<ClosedLoop> {
        Ok(ClosedLoop::ImplicitCoupled(Box::new(CoupledImpc::new(&self.coupled_spec()?)?)))
    }

    /// Controller of the configured kind (synthesising when explicit).
    pub fn build(&self, kind: ControllerKind) -> Result<ClosedLoop> {
        match kind {
            ControllerKind::ExplicitDecoupled => Ok(ClosedLoop::Explicit(self.synthesize()?)),
            ControllerKind::ImplicitDecoupled => self.implicit_decoupled(),
            ControllerKind::ImplicitCoupled => self.implicit_coupled(),
        }
    }
}

/// A controller the simulator can close the loop with.
#[derive(Debug, Clone)]
pub enum ClosedLoop {
    Explicit(ControllerSet),
    ImplicitDecoupled(Vec<AxisImpc>),
    ImplicitCoupled(Box<CoupledImpc>),
}

/// Control decision at one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decision {
    pub v: FlatInput,
    pub dv: [f64; 3],
    pub u: PhysicalInput,
    pub regions: [Option<usize>; 3],
    pub eval_time: Duration,
}

impl ClosedLoop {
    pub fn kind(&self) -> ControllerKind {
        match self {
            ClosedLoop::Explicit(_) => ControllerKind::ExplicitDecoupled,
            ClosedLoop::ImplicitDecoupled(_) => ControllerKind::ImplicitDecoupled,
            ClosedLoop::ImplicitCoupled(_) => ControllerKind::ImplicitCoupled,
        }
    }

    pub fn region_counts(&self) -> Vec<usize> {
        match self {
            ClosedLoop::Explicit(set) => set.region_counts(),
            _ => vec![],
        }
    }

    /// Control at step `k`; `None` when the state is outside the
    /// controller's feasible set.
    pub fn decide(
        &self,
        state: &State3,
        psi: f64,
        g: f64,
        reference: &TrackingReference,
        k: usize,
    ) -> Result<Option<Decision>> {
        let (xi_ref, v_ref) = reference.at(k);
        let err: State3 = [0, 1, 2].map(|i| [state[i][0] - xi_ref[i][0], state[i][1] - xi_ref[i][1]]);
        let (dv, regions, eval_time) = match self {
            ClosedLoop::Explicit(set) => match control_step(&set.axes, state, psi, g, Some(reference), k) {
                Ok(out) => {
                    return Ok(Some(Decision {
                        v: out.v,
                        dv: out.dv,
                        u: out.u,
                        regions: out.regions.map(Some),
                        eval_time: out.eval_time,
                    }))
                }
                Err(Error::InfeasibleState { .. }) => return Ok(None),
                Err(e) => return Err(e),
            },
            ClosedLoop::ImplicitDecoupled(axes) => {
                let mut dv = [0.0; 3];
                let mut t = Duration::ZERO;
                for i in 0..3 {
                    let r = axes[i].solve(&err[i])?;
                    t += r.solve_time;
                    if !r.is_feasible() {
                        return Ok(None);
                    }
                    dv[i] = r.v[0];
                }
                (dv, [None; 3], t)
            }
            ClosedLoop::ImplicitCoupled(c) => {
                let zeta = [err[0][0], err[0][1], err[1][0], err[1][1], err[2][0], err[2][1]];
                let r = c.solve(&zeta)?;
                if !r.is_feasible() {
                    return Ok(None);
                }
                (r.v, [None; 3], r.solve_time)
            }
        };
        let v = FlatInput::new(dv[0] + v_ref[0], dv[1] + v_ref[1], dv[2] + v_ref[2]);
        let u = flat_to_physical(&v, psi, g)?.input;
        Ok(Some(Decision {
            v,
            dv,
            u,
            regions,
            eval_time,
        }))
    }
}

/// One recorded sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub t: f64,
    pub state: State3,
    pub reference: [f64; 3],
    /// `None` on the (final) infeasible row.
    pub decision: Option<Decision>,
}

impl TraceRow {
    pub fn feasible(&self) -> bool {
        self.decision.is_some()
    }

    pub fn position(&self) -> [f64; 3] {
        [self.state[0][0], self.state[1][0], self.state[2][0]]
    }
}

/// Closed-loop record of one drone.
#[derive(Debug, Clone)]
pub struct SimTrace {
    pub drone: usize,
    pub rows: Vec<TraceRow>,
    pub summary: Summary,
}

impl SimTrace {
    /// Whether the run finished without hitting an infeasible state.
    pub fn completed(&self) -> bool {
        self.rows.last().is_some_and(|r| r.feasible())
    }
}

/// Runs every drone of the scenario in lockstep on the nonlinear plant.
pub fn run_fleet(sc: &Scenario, ctrl: &ClosedLoop) -> Result<Vec<SimTrace>> {
    run_with(sc, ctrl, PlantModel::Nonlinear, sc.cfg.n_drones)
}

/// Runs the first drone only.
pub fn run(sc: &Scenario, ctrl: &ClosedLoop) -> Result<SimTrace> {
    Ok(run_with(sc, ctrl, PlantModel::Nonlinear, 1)?.remove(0))
}

/// Runs `n_drones` drones in lockstep: at every step each drone's control
/// is computed in turn, then all plants advance. A drone whose state
/// leaves the feasible set gets a final flagged row and stops.
pub fn run_with(sc: &Scenario, ctrl: &ClosedLoop, plant: PlantModel, n_drones: usize) -> Result<Vec<SimTrace>> {
    let cfg = &sc.cfg;
    let g = cfg.vc.g;
    let steps = cfg.steps();
    let n = n_drones.min(sc.references.len()).max(1);
    let mut states: Vec<State3> = sc.initial_states[..n].to_vec();
    let mut rows: Vec<Vec<TraceRow>> = vec![Vec::with_capacity(steps + 1); n];
    let mut alive = vec![true; n];

    // warm-up evaluation, not recorded
    ctrl.decide(&states[0], cfg.psi, g, &sc.references[0], 0)?;

    for k in 0..=steps {
        let t = k as f64 * cfg.ts;
        for d in 0..n {
            if !alive[d] {
                continue;
            }
            let decision = ctrl.decide(&states[d], cfg.psi, g, &sc.references[d], k)?;
            rows[d].push(TraceRow {
                t,
                state: states[d],
                reference: sc.references[d].position(k),
                decision,
            });
            match decision {
                None => alive[d] = false,
                Some(dec) if k < steps => {
                    states[d] = match plant {
                        PlantModel::Nonlinear => step_plant(&states[d], &dec.u, cfg.psi, g, cfg.ts),
                        PlantModel::DoubleIntegrator => step_linear(&states[d], &dec.v, cfg.ts),
                    };
                }
                Some(_) => {}
            }
        }
    }
    Ok(rows
        .into_iter()
        .enumerate()
        .map(|(d, rows)| {
            let summary = summarize(sc, ctrl, &sc.references[d], &rows);
            SimTrace { drone: d, rows, summary }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    const G: f64 = 9.81;

    #[test]
    fn hover_keeps_state() {
        let s = [[0.3, 0.0], [-0.2, 0.0], [1.0, 0.0]];
        assert_eq!(step_plant(&s, &PhysicalInput::new(G, 0.0, 0.0), 0.7, G, 0.1), s);
    }

    #[test]
    fn free_fall_step() {
        let s = step_plant(&[[0.0; 2]; 3], &PhysicalInput::new(0.0, 0.0, 0.0), 0.0, G, 0.1);
        assert!((s[2][0] + 0.04905).abs() < 1e-15);
        assert!((s[2][1] + 0.981).abs() < 1e-15);
        assert_eq!(s[0], [0.0, 0.0]);
    }

    #[test]
    fn inverted_input_reproduces_linear_step() {
        let s = [[0.3, -0.1], [0.2, 0.4], [1.0, 0.0]];
        for psi in [0.0, 1.3, -2.0] {
            let v = FlatInput::new(0.4, -0.7, 2.1);
            let u = flat_to_physical(&v, psi, G).unwrap().input;
            let a = step_plant(&s, &u, psi, G, 0.1);
            let b = step_linear(&s, &v, 0.1);
            for i in 0..3 {
                for j in 0..2 {
                    assert!((a[i][j] - b[i][j]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn regulation_from_origin_stays_put() {
        let cfg = ScenarioConfig {
            np: 5,
            xi0: [[0.0; 2]; 3],
            duration: 2.0,
            ..ScenarioConfig::default()
        };
        let sc = Scenario::new(&cfg).unwrap();
        let ctrl = sc.build(ControllerKind::ExplicitDecoupled).unwrap();
        let tr = run(&sc, &ctrl).unwrap();
        assert_eq!(tr.rows.len(), 21);
        assert!(tr.completed());
        assert_eq!(tr.summary.rms_m, 0.0);
        assert!(tr.rows.iter().all(|r| r.decision.unwrap().v.0.iter().all(|v| v.abs() < 1e-12)));
    }

    #[test]
    fn infeasible_start_truncates_trace() {
        let cfg = ScenarioConfig {
            np: 5,
            xi0: [[1.5, 1.0], [0.0; 2], [0.0; 2]],
            duration: 1.0,
            ..ScenarioConfig::default()
        };
        let sc = Scenario::new(&cfg).unwrap();
        let ctrl = sc.implicit_decoupled().unwrap();
        let tr = run(&sc, &ctrl).unwrap();
        assert_eq!(tr.rows.len(), 1);
        assert!(!tr.completed());
        assert!(!tr.summary.feasible);
    }

    #[test]
    fn fleet_circle_drones_are_phase_shifted() {
        let cfg = ScenarioConfig {
            np: 10,
            duration: 1.0,
            n_drones: 4,
            xi0: [[0.5, 0.0], [0.0, 0.25], [1.0, 0.0]],
            reference: ReferenceSpec::Circle {
                radius: 0.5,
                angular_rate: 0.5,
                altitude: 1.0,
            },
            controller: ControllerKind::ImplicitDecoupled,
            ..ScenarioConfig::default()
        };
        let sc = Scenario::new(&cfg).unwrap();
        assert!(sc.input_box.vbar[0] < sc.nominal_box.vbar[0]);
        let traces = run_fleet(&sc, &sc.implicit_decoupled().unwrap()).unwrap();
        assert_eq!(traces.len(), 4);
        let p1 = traces[1].rows[0].position();
        assert!(p1[0].abs() < 1e-12 && (p1[1] - 0.5).abs() < 1e-12);
        for t in &traces {
            assert!(t.completed());
            assert!(t.summary.rms_euclidean_m < 1e-9);
        }
    }
}
