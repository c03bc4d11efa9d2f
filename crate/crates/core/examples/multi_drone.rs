//! Several drones on phase-shifted circles, controlled one after another
//! from the same explicit controllers.

use flatmpc::config::{ReferenceSpec, ScenarioConfig};
use flatmpc::sim::{run_fleet, ClosedLoop, Scenario};

fn main() -> flatmpc::Result<()> {
    let base = Scenario::new(&ScenarioConfig {
        reference: ReferenceSpec::Circle {
            radius: 0.5,
            angular_rate: 0.5,
            altitude: 1.0,
        },
        ..ScenarioConfig::default()
    })?;
    let ctrl = ClosedLoop::Explicit(base.synthesize()?);
    for n in [1, 2, 4, 8] {
        let sc = base.with_drones(n)?;
        let traces = run_fleet(&sc, &ctrl)?;
        let steps = traces[0].rows.len() as f64;
        let per_step_us: f64 = traces
            .iter()
            .flat_map(|t| &t.rows)
            .filter_map(|r| r.decision)
            .map(|d| d.eval_time.as_secs_f64() * 1e6)
            .sum::<f64>()
            / steps;
        let worst = traces.iter().map(|t| t.summary.max_error_after_transient_m).fold(0.0, f64::max);
        println!("{n} drones: {per_step_us:>6.2} us of control per step, worst steady error {worst:.2e} m");
    }
    Ok(())
}
