//! Acceptance criteria, one line each. Runs without the libtest harness so
//! every verdict is printed; exits non-zero if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use flatmpc::config::{ControllerKind, ReferenceSpec, ScenarioConfig};
use flatmpc::flat::{build_vc_polytope, max_inscribed_box, VcParams};
use flatmpc::implicit::AxisImpc;
use flatmpc::kernel::{solve_dare, LinearSystem2D};
use flatmpc::polytope::{HPolytope, VPolytope};
use flatmpc::runtime::evaluate;
use flatmpc::sim::{benchmark, run, run_with, ClosedLoop, PlantModel, Scenario};
use flatmpc::synth::ControllerSet;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Verdict = Result<String, String>;

fn check(ok: bool, detail: String) -> Verdict {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within(elapsed: Duration, limit_s: f64, v: Verdict) -> Verdict {
    let t = elapsed.as_secs_f64();
    let note = format!("{t:.2} s (limit {limit_s} s)");
    match v {
        Ok(d) if t < limit_s => Ok(format!("{d}; {note}")),
        Ok(d) => Err(format!("{d}; too slow: {note}")),
        Err(d) => Err(format!("{d}; {note}")),
    }
}

fn scenario(cfg: ScenarioConfig) -> Scenario {
    Scenario::new(&cfg).expect("scenario")
}

/// Regulation scenario and its explicit controllers (Np = 30).
fn scenario1() -> &'static (Scenario, ControllerSet) {
    static S: OnceLock<(Scenario, ControllerSet)> = OnceLock::new();
    S.get_or_init(|| {
        let sc = scenario(ScenarioConfig::default());
        let set = sc.synthesize().expect("synthesis");
        (sc, set)
    })
}

/// Membership in the exact flat input set, written out directly.
fn in_vc(v: &[f64], p: &VcParams, tol: f64) -> bool {
    let lift = v[2] + p.g;
    let horiz = v[0] * v[0] + v[1] * v[1];
    horiz + lift * lift <= p.t_max * p.t_max + tol
        && horiz <= lift * lift * p.eps_max.tan().powi(2) + tol
        && lift >= -tol
}

fn c1_riccati() -> Verdict {
    let start = Instant::now();
    let sys = LinearSystem2D::double_integrator(0.1);
    let q = DMatrix::from_diagonal(&DVector::from_row_slice(&[50.0, 5.0]));
    let r = DMatrix::from_element(1, 1, 10.0);
    let p = solve_dare(&sys.a(), &sys.b(), &q, &r).map_err(|e| e.to_string())?;
    let want = [[524.37, 223.75], [223.75, 225.97]];
    let worst = (0..4)
        .map(|i| ((p[(i / 2, i % 2)] - want[i / 2][i % 2]) / want[i / 2][i % 2]).abs())
        .fold(0.0, f64::max);
    let v = check(
        worst <= 0.005,
        format!(
            "P = [[{:.2}, {:.2}], [{:.2}, {:.2}]], worst relative error {:.2e}",
            p[(0, 0)],
            p[(0, 1)],
            p[(1, 0)],
            p[(1, 1)],
            worst
        ),
    );
    within(start.elapsed(), 1.0, v)
}

/// Largest `v1·v2·v3` over a 1e-3 grid of boxes whose eight corners lie in
/// the exact set.
fn grid_search_volume(p: &VcParams) -> f64 {
    let h = 1e-3;
    let tan2 = p.eps_max.tan().powi(2);
    let fits = |v1: f64, v2: f64, v3: f64| {
        [-1.0, 1.0].iter().all(|s3: &f64| in_vc(&[v1, v2, s3 * v3], p, 1e-12))
    };
    let mut best: f64 = 0.0;
    let mut v3 = h;
    while v3 < p.g {
        // horizontal radius² allowed at both the low and the high face
        let r2 = ((p.g - v3).powi(2) * tan2).min(p.t_max * p.t_max - (p.g + v3).powi(2));
        let mut v1 = h;
        while v1 * v1 < r2 {
            let v2 = ((r2 - v1 * v1).sqrt() / h).floor() * h;
            if v2 > 0.0 && fits(v1, v2, v3) {
                best = best.max(v1 * v2 * v3);
            }
            v1 += h;
        }
        v3 += h;
    }
    best
}

fn c2_inscribed_box() -> Verdict {
    let start = Instant::now();
    let p = VcParams::default();
    let b = max_inscribed_box(&p);
    let err = b
        .vbar
        .iter()
        .zip([0.8154, 0.8154, 3.27])
        .map(|(g, w)| (g - w).abs())
        .fold(0.0, f64::max);
    let analytic: f64 = b.vbar.iter().product();
    let grid = grid_search_volume(&p);
    let v = check(
        err <= 1e-3 && grid <= 1.005 * analytic,
        format!(
            "vbar = ({:.4}, {:.4}, {:.4}), max error {err:.1e}; grid best volume {grid:.4} vs analytic {analytic:.4}",
            b.vbar[0], b.vbar[1], b.vbar[2]
        ),
    );
    within(start.elapsed(), 30.0, v)
}

fn c3_region_counts() -> Verdict {
    let start = Instant::now();
    let mut rows = Vec::new();
    let mut identical_axes = true;
    for np in [5, 30, 80, 100] {
        let set = if np == 30 {
            scenario1().1.clone()
        } else {
            scenario(ScenarioConfig {
                np,
                ..ScenarioConfig::default()
            })
            .synthesize()
            .map_err(|e| e.to_string())?
        };
        identical_axes &= set.axes[0] == set.axes[1];
        rows.push((np, set.region_counts()));
    }
    let np5 = &rows[0].1;
    let np5_ok = (np5[0] as i64 - 99).abs() <= 10 && (np5[2] as i64 - 11).abs() <= 2;
    let long_ok = rows[1..].iter().all(|(_, c)| c == &rows[1].1);
    let table: Vec<String> = rows.iter().map(|(np, c)| format!("Np={np}: {c:?}")).collect();
    let v = check(
        np5_ok && long_ok && identical_axes,
        format!(
            "{}; Np=5 within (99±10, 11±2): {np5_ok}; Np>=30 identical: {long_ok}; axes 1-2 identical: {identical_axes}",
            table.join(", ")
        ),
    );
    within(start.elapsed(), 300.0, v)
}

fn c4_explicit_matches_qp() -> Verdict {
    let (sc, set) = scenario1();
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    let mut worst: f64 = 0.0;
    let mut missing = 0;
    for (axis, ctrl) in set.axes.iter().enumerate() {
        let impc = AxisImpc::new(&sc.axes[axis]).map_err(|e| e.to_string())?;
        let (p, v) = (ctrl.spec.pbar, ctrl.spec.velbar);
        let mut n = 0;
        while n < 10_000 {
            let x = [rng.gen_range(-p..=p), rng.gen_range(-v..=v)];
            let qp = impc.solve(&x).map_err(|e| e.to_string())?;
            if !qp.is_feasible() {
                continue;
            }
            n += 1;
            match evaluate(ctrl, &x, axis) {
                Ok((u, _)) => worst = worst.max((u - qp.v[0]).abs()),
                Err(_) => missing += 1,
            }
        }
    }
    check(
        worst <= 1e-6 && missing == 0,
        format!("3 x 10^4 feasible states: max |PWA - QP| = {worst:.2e}, states outside every region: {missing}"),
    )
}

fn c5_closed_loop() -> Verdict {
    let start = Instant::now();
    let (sc, set) = scenario1();
    let explicit = run(sc, &ClosedLoop::Explicit(set.clone())).map_err(|e| e.to_string())?;
    let s1 = &explicit.summary;
    let sc3 = scenario(ScenarioConfig {
        controller: ControllerKind::ImplicitCoupled,
        ..ScenarioConfig::default()
    });
    let coupled = run(&sc3, &sc3.implicit_coupled().map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let s3 = &coupled.summary;
    let rms_cm = 100.0 * s1.rms_m;
    let v = check(
        explicit.completed()
            && s1.final_error_norm <= 1e-3
            && s1.violations.input_set == 0
            && s1.violations.physical_input == 0
            && (rms_cm - 18.906).abs() <= 0.15 * 18.906
            && coupled.completed()
            && s3.rms_m < s1.rms_m,
        format!(
            "scenario 1: final |xi| {:.1e}, v outside B {}, u outside U {}, RMS {rms_cm:.4} cm (18.906 ± 15%); \
             scenario 3: RMS {:.4} cm (strictly smaller: {}; reference value 11.319 cm)",
            s1.final_error_norm,
            s1.violations.input_set,
            s1.violations.physical_input,
            100.0 * s3.rms_m,
            s3.rms_m < s1.rms_m
        ),
    );
    within(start.elapsed(), 60.0, v)
}

fn c6_exact_linearization() -> Verdict {
    let set = &scenario1().1;
    let ctrl = ClosedLoop::Explicit(set.clone());
    let mut worst: f64 = 0.0;
    let mut rows = 0;
    for psi in [0.0, 1.3] {
        let sc = scenario(ScenarioConfig {
            psi,
            ..ScenarioConfig::default()
        });
        let a = run_with(&sc, &ctrl, PlantModel::Nonlinear, 1).map_err(|e| e.to_string())?.remove(0);
        let b = run_with(&sc, &ctrl, PlantModel::DoubleIntegrator, 1).map_err(|e| e.to_string())?.remove(0);
        if a.rows.len() != sc.cfg.steps() + 1 || b.rows.len() != a.rows.len() {
            return Err(format!("psi = {psi}: trace lengths {} and {}", a.rows.len(), b.rows.len()));
        }
        for (ra, rb) in a.rows.iter().zip(&b.rows) {
            for i in 0..3 {
                for j in 0..2 {
                    worst = worst.max((ra.state[i][j] - rb.state[i][j]).abs());
                }
            }
        }
        rows += a.rows.len();
    }
    check(
        worst <= 1e-10,
        format!("psi in {{0, 1.3}}, {rows} rows: max state difference {worst:.2e}"),
    )
}

fn c7_lyapunov() -> Verdict {
    let (sc, set) = scenario1();
    let trace = run(sc, &ClosedLoop::Explicit(set.clone())).map_err(|e| e.to_string())?;
    let mut worst = f64::NEG_INFINITY;
    for (axis, spec) in sc.axes.iter().enumerate() {
        let impc = AxisImpc::new(spec).map_err(|e| e.to_string())?;
        let cost = |x: &[f64; 2]| -> Result<f64, String> {
            let sol = impc.solve(x).map_err(|e| e.to_string())?;
            if !sol.is_feasible() {
                return Err(format!("axis {}: state {x:?} infeasible for the online QP", axis + 1));
            }
            Ok(impc.qp().horizon_cost(&DVector::from_row_slice(x), &sol.z))
        };
        let mut j_now = cost(&trace.rows[0].state[axis])?;
        for pair in trace.rows.windows(2) {
            let x = pair[0].state[axis];
            let v = pair[0].decision.expect("feasible row").v.0[axis];
            let j_next = cost(&pair[1].state[axis])?;
            worst = worst.max(j_next - j_now + spec.stage_cost(&x, v));
            j_now = j_next;
        }
    }
    check(
        worst <= 1e-6,
        format!("3 axes x {} steps: max J*(k+1) - J*(k) + stage cost = {worst:.2e}", trace.rows.len() - 1),
    )
}

fn c8_timing() -> Verdict {
    let (sc, set) = scenario1();
    let report = benchmark(sc, set).map_err(|e| e.to_string())?;
    let explicit = report.explicit.mean_eval_us;
    let coupled = report.implicit_coupled.mean_eval_us;
    let fleet4 = report
        .fleet
        .iter()
        .find(|f| f.n_drones == 4)
        .map(|f| f.mean_step_us)
        .ok_or("no 4-drone point")?;
    check(
        report.all_completed && coupled >= 5.0 * explicit && fleet4 < coupled,
        format!(
            "mean explicit {explicit:.2} us, implicit coupled {coupled:.1} us (ratio {:.0}); 4 drones explicit {fleet4:.2} us per step",
            coupled / explicit
        ),
    )
}

fn c9_geometry() -> Verdict {
    let p = VcParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut notes = Vec::new();

    let mut bad_vertices = 0;
    for (l1, l2) in [(16, 4), (64, 8)] {
        let poly = build_vc_polytope(&p, l1, l2).map_err(|e| e.to_string())?;
        let verts = poly.vertices().map_err(|e| e.to_string())?;
        bad_vertices += verts.vertices.iter().filter(|v| !in_vc(v, &p, 1e-9)).count();
    }
    notes.push(format!("vertices outside V_c: {bad_vertices}"));

    let poly = build_vc_polytope(&p, 64, 8).map_err(|e| e.to_string())?;
    let r = p.t_max * p.eps_max.sin();
    let (mut exact, mut inner) = (0usize, 0usize);
    for _ in 0..1_000_000 {
        let v = [rng.gen_range(-r..r), rng.gen_range(-r..r), rng.gen_range(-p.g..p.t_max - p.g)];
        exact += in_vc(&v, &p, 0.0) as usize;
        inner += poly.contains(&v, 0.0) as usize;
    }
    let ratio = inner as f64 / exact as f64;
    notes.push(format!("volume ratio (64, 8) = {ratio:.4}"));

    // P ⊖ Q against its definition on 10⁴ samples each way
    let p16 = build_vc_polytope(&p, 16, 4).map_err(|e| e.to_string())?;
    let q: Vec<Vec<f64>> = (0..8)
        .map(|i| (0..3).map(|j| if i >> j & 1 == 1 { 0.2 } else { -0.2 }).collect())
        .collect();
    let diff = p16.pontryagin_diff(&VPolytope::new(q.clone()));
    let (lo, hi) = p16.bounding_box().map_err(|e| e.to_string())?;
    let (mut inside, mut outside, mut pd_errors) = (0, 0, 0);
    while inside < 10_000 || outside < 10_000 {
        let x: Vec<f64> = (0..3).map(|i| rng.gen_range(lo[i]..hi[i])).collect();
        if !p16.contains(&x, 0.0) {
            continue;
        }
        let all_shifts_in = q.iter().all(|d| {
            let y: Vec<f64> = x.iter().zip(d).map(|(a, b)| a + b).collect();
            p16.contains(&y, 1e-9)
        });
        if diff.contains(&x, 0.0) {
            inside += 1;
            pd_errors += !all_shifts_in as usize;
        } else if !diff.contains(&x, 1e-9) {
            outside += 1;
            pd_errors += (all_shifts_in && q.iter().all(|d| {
                let y: Vec<f64> = x.iter().zip(d).map(|(a, b)| a + b).collect();
                p16.contains(&y, -1e-9)
            })) as usize;
        }
    }
    notes.push(format!("Pontryagin audit errors: {pd_errors}"));

    // invariance of the terminal sets
    let mut mpi_errors = 0;
    for spec in &scenario1().0.axes {
        let k = spec.lqr().map_err(|e| e.to_string())?;
        let sys = spec.sys();
        let a_cl = sys.a() - sys.b() * &k;
        mpi_errors += !spec.xf.is_subset_of(&spec.state_box(), 1e-9) as usize;
        let (lo, hi) = spec.xf.bounding_box().map_err(|e| e.to_string())?;
        let mut n = 0;
        while n < 10_000 {
            let x = [rng.gen_range(lo[0]..=hi[0]), rng.gen_range(lo[1]..=hi[1])];
            if !spec.xf.contains(&x, 0.0) {
                continue;
            }
            n += 1;
            let next = &a_cl * DVector::from_row_slice(&x);
            let u = (&k * DVector::from_row_slice(&x))[0];
            mpi_errors += (!spec.xf.contains(next.as_slice(), 1e-9) || u.abs() > spec.vbar + 1e-9) as usize;
        }
    }
    notes.push(format!("invariance audit errors: {mpi_errors}"));

    check(
        bad_vertices == 0 && ratio >= 0.9 && pd_errors == 0 && mpi_errors == 0,
        notes.join(", "),
    )
}

fn c10_tracking() -> Verdict {
    // starts from the regulation initial state, well off the circle
    let sc = scenario(ScenarioConfig {
        reference: ReferenceSpec::Circle {
            radius: 0.5,
            angular_rate: 0.5,
            altitude: 1.0,
        },
        ..ScenarioConfig::default()
    });
    let ctrl = sc.build(ControllerKind::ExplicitDecoupled).map_err(|e| e.to_string())?;
    let t = run(&sc, &ctrl).map_err(|e| e.to_string())?;
    let s = &t.summary;
    // Δv against the scaled tracking box, v against the polytopic set
    let mut dv_out = 0;
    let mut v_out = 0;
    for row in &t.rows {
        let d = row.decision.ok_or("infeasible row")?;
        dv_out += (0..3).any(|i| d.dv[i].abs() > sc.input_box.vbar[i] + 1e-9) as usize;
        v_out += !sc.vc_poly.contains(&d.v.0, 1e-9) as usize;
    }
    let box_ok = HPolytope::symmetric_box(&sc.input_box.vbar).is_subset_of(&sc.input_poly, 1e-9);
    check(
        t.completed() && dv_out == 0 && v_out == 0 && box_ok && s.max_error_after_transient_m < 0.05,
        format!(
            "steps with dv outside the scaled box: {dv_out}, v outside the polytopic set: {v_out}, \
             max error after 5 s {:.2e} m (< 0.05)",
            s.max_error_after_transient_m
        ),
    )
}

type Criterion = (&'static str, fn() -> Verdict);

fn main() {
    let criteria: [Criterion; 10] = [
        ("Riccati terminal weight", c1_riccati),
        ("inscribed input box", c2_inscribed_box),
        ("region counts", c3_region_counts),
        ("explicit law equals online QP", c4_explicit_matches_qp),
        ("closed-loop regulation", c5_closed_loop),
        ("exact linearisation", c6_exact_linearization),
        ("value function decrease", c7_lyapunov),
        ("evaluation time", c8_timing),
        ("geometry audits", c9_geometry),
        ("circle tracking", c10_tracking),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let verdict = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match verdict {
            Ok(d) => println!("criterion {:>2} PASS  {name}: {d}", i + 1),
            Err(d) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {d}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
