//! Critical-region partitions of one horizontal axis for several horizons,
//! and the law evaluated at the reference initial state.

use std::time::Instant;

use flatmpc::runtime::evaluate;
use flatmpc::synth::{synthesize_axis, AxisSpec, EnumerationOptions};

fn main() -> flatmpc::Result<()> {
    let x0 = [1.25, -0.8];
    for np in [5, 10, 30, 100] {
        let spec = AxisSpec::with_terminal(0.1, [[50.0, 0.0], [0.0, 5.0]], 10.0, np, 0.8154, 1.5, 1.0)?;
        let start = Instant::now();
        let ctrl = synthesize_axis(&spec, &EnumerationOptions::default())?;
        let elapsed = start.elapsed();
        let law = match evaluate(&ctrl, &x0, 0) {
            Ok((v, region)) => format!("v = {v:+.4} (region {region})"),
            Err(e) => format!("{e}"),
        };
        println!("Np {np:>3}: {:>3} regions in {:>7.1} ms; at {x0:?}: {law}", ctrl.n_regions(), elapsed.as_secs_f64() * 1e3);
    }
    Ok(())
}
