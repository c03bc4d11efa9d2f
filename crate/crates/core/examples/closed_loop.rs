//! Regulation from the reference initial state: explicit decoupled control
//! against the coupled implicit controller on the polytopic input set.

use flatmpc::config::{ControllerKind, ScenarioConfig};
use flatmpc::sim::{run, Scenario};

fn main() -> flatmpc::Result<()> {
    let cfg = ScenarioConfig::default();
    let sc = Scenario::new(&cfg)?;
    println!(
        "input box ({:.4}, {:.4}, {:.4}), initial state {:?}",
        sc.input_box.vbar[0], sc.input_box.vbar[1], sc.input_box.vbar[2], cfg.xi0
    );
    for kind in [ControllerKind::ExplicitDecoupled, ControllerKind::ImplicitCoupled] {
        let ctrl = sc.build(kind)?;
        let trace = run(&sc, &ctrl)?;
        let s = &trace.summary;
        println!(
            "{kind:?}: rms {:.4} cm (euclidean {:.2} cm), final |xi| {:.1e}, violations {}, mean eval {:.1} us",
            100.0 * s.rms_m,
            100.0 * s.rms_euclidean_m,
            s.final_error_norm,
            s.violations.total,
            s.mean_eval_us
        );
    }
    Ok(())
}
