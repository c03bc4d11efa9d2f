//! Closed-loop properties: heading invariance, trace shape, fleets,
//! waypoint squares and explicit/implicit agreement along a trajectory.

use std::sync::OnceLock;

use flatmpc::config::{ControllerKind, ReferenceSpec, ScenarioConfig};
use flatmpc::sim::{benchmark, run, run_fleet, write_trace_csv, ClosedLoop, Scenario};
use flatmpc::synth::ControllerSet;

fn regulation() -> &'static (Scenario, ControllerSet) {
    static S: OnceLock<(Scenario, ControllerSet)> = OnceLock::new();
    S.get_or_init(|| {
        let sc = Scenario::new(&ScenarioConfig::default()).unwrap();
        let set = sc.synthesize().unwrap();
        (sc, set)
    })
}

fn circle(n_drones: usize) -> ScenarioConfig {
    ScenarioConfig {
        xi0: [[0.5, 0.0], [0.0, 0.25], [1.0, 0.0]],
        reference: ReferenceSpec::Circle {
            radius: 0.5,
            angular_rate: 0.5,
            altitude: 1.0,
        },
        n_drones,
        ..ScenarioConfig::default()
    }
}

#[test]
fn heading_does_not_change_positions() {
    let (sc0, set) = regulation();
    let ctrl = ClosedLoop::Explicit(set.clone());
    let a = run(sc0, &ctrl).unwrap();
    let sc1 = Scenario::new(&ScenarioConfig {
        psi: 1.3,
        ..ScenarioConfig::default()
    })
    .unwrap();
    let b = run(&sc1, &ctrl).unwrap();
    assert_eq!(a.rows.len(), b.rows.len());
    let mut attitude_differs = false;
    for (ra, rb) in a.rows.iter().zip(&b.rows) {
        for (pa, pb) in ra.position().iter().zip(rb.position()) {
            assert!((pa - pb).abs() <= 1e-10);
        }
        let (ua, ub) = (ra.decision.unwrap().u, rb.decision.unwrap().u);
        attitude_differs |= (ua.phi - ub.phi).abs() > 1e-6;
    }
    assert!(attitude_differs);
}

#[test]
fn regulation_trace_shape_and_constraints() {
    let (sc, set) = regulation();
    let t = run(sc, &ClosedLoop::Explicit(set.clone())).unwrap();
    assert_eq!(t.rows.len(), sc.cfg.steps() + 1);
    assert!(t.completed());
    assert_eq!(t.summary.violations.total, 0);
    assert!(t.summary.final_error_norm <= 1e-3);
    for r in &t.rows {
        let d = r.decision.unwrap();
        assert!(d.regions.iter().all(Option::is_some));
        for i in 0..3 {
            assert!(d.v.0[i].abs() <= sc.input_box.vbar[i] + 1e-9);
        }
    }

    let mut buf = Vec::new();
    write_trace_csv(&t.rows, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "t,x,y,z,vx,vy,vz,v1,v2,v3,T,phi,theta,reg1,reg2,reg3,eval_time_us,feasible"
    );
    let first: Vec<f64> = lines.next().unwrap().split(',').map(|s| s.parse().unwrap()).collect();
    assert_eq!(first.len(), 18);
    assert_eq!(&first[1..4], &[1.25, 0.0, 0.5]);
    assert_eq!(first[17], 1.0);
    assert_eq!(text.lines().count(), sc.cfg.steps() + 2);
}

#[test]
fn fleet_follows_phase_shifted_circles() {
    let sc = Scenario::new(&circle(4)).unwrap();
    let ctrl = sc.build(ControllerKind::ExplicitDecoupled).unwrap();
    let traces = run_fleet(&sc, &ctrl).unwrap();
    assert_eq!(traces.len(), 4);
    for t in &traces {
        assert!(t.completed());
        assert_eq!(t.summary.violations.total, 0);
        assert!(t.summary.max_error_after_transient_m < 0.05, "{}", t.summary.max_error_after_transient_m);
    }
    // drone 1 is a quarter turn ahead of drone 0
    let (p0, p1) = (traces[0].rows[0].reference, traces[1].rows[0].reference);
    assert!((p0[0] - 0.5).abs() < 1e-12 && p0[1].abs() < 1e-12);
    assert!(p1[0].abs() < 1e-12 && (p1[1] - 0.5).abs() < 1e-12);
}

#[test]
fn square_visits_every_corner() {
    let cfg = ScenarioConfig {
        xi0: [[0.5, 0.0], [0.5, 0.0], [0.5, 0.0]],
        reference: ReferenceSpec::WaypointSquare {
            side: 1.0,
            period: 10.0,
            altitude: 0.5,
        },
        duration: 40.0,
        ..ScenarioConfig::default()
    };
    let sc = Scenario::new(&cfg).unwrap();
    let t = run(&sc, &sc.build(ControllerKind::ExplicitDecoupled).unwrap()).unwrap();
    assert!(t.completed());
    assert_eq!(t.summary.violations.total, 0);
    // at the end of every dwell the drone sits on its corner
    for corner in 1..=4 {
        let k = (corner * 100).min(t.rows.len() - 1) - 1;
        let r = &t.rows[k];
        let err: f64 = r
            .position()
            .iter()
            .zip(r.reference)
            .map(|(p, q)| (p - q).powi(2))
            .sum::<f64>()
            .sqrt();
        assert!(err < 0.02, "corner {corner}: {err}");
    }
    let corners: Vec<[f64; 3]> = [1, 101, 201, 301].iter().map(|&k| t.rows[k].reference).collect();
    assert_eq!(corners[0], [0.5, 0.5, 0.5]);
    assert_eq!(corners[1], [-0.5, 0.5, 0.5]);
    assert_eq!(corners[2], [-0.5, -0.5, 0.5]);
    assert_eq!(corners[3], [0.5, -0.5, 0.5]);
}

#[test]
fn regulation_at_rest_is_trivial() {
    let cfg = ScenarioConfig {
        xi0: [[0.0; 2]; 3],
        duration: 5.0,
        ..ScenarioConfig::default()
    };
    let sc = Scenario::new(&cfg).unwrap();
    let t = run(&sc, &ClosedLoop::Explicit(regulation().1.clone())).unwrap();
    assert_eq!(t.summary.rms_m, 0.0);
    assert!(t.rows.iter().all(|r| r.decision.unwrap().v.0 == [0.0; 3]));
}

#[test]
fn benchmark_runs_agree() {
    let set = &regulation().1;
    let short = Scenario::new(&ScenarioConfig {
        duration: 10.0,
        ..ScenarioConfig::default()
    })
    .unwrap();
    let report = benchmark(&short, set).unwrap();
    assert!(report.all_completed);
    assert!(report.max_control_gap <= 1e-6, "{}", report.max_control_gap);
    assert!(report.checks.controls_agree);
    assert_eq!(report.regions, vec![103, 103, 11]);
    assert!((report.explicit.rms_m - report.implicit_decoupled.rms_m).abs() < 1e-6);
    assert_eq!(report.fleet.iter().map(|f| f.n_drones).collect::<Vec<_>>(), vec![1, 2, 4, 8]);
    assert!(report.fleet.iter().all(|f| f.completed));
}
