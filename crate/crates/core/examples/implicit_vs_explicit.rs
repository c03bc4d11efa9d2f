//! Same regulation problem solved online and by table look-up: the inputs
//! agree, the look-up is much cheaper.

use flatmpc::config::ScenarioConfig;
use flatmpc::sim::{benchmark, Scenario};

fn main() -> flatmpc::Result<()> {
    let sc = Scenario::new(&ScenarioConfig::default())?;
    let set = sc.synthesize()?;
    let r = benchmark(&sc, &set)?;
    for s in [&r.explicit, &r.implicit_decoupled, &r.implicit_coupled] {
        println!(
            "{:<20} rms {:.4} cm, mean {:>8.2} us, max {:>8.2} us",
            format!("{:?}", s.controller),
            100.0 * s.rms_m,
            s.mean_eval_us,
            s.max_eval_us
        );
    }
    println!("largest explicit/online input gap {:.1e}", r.max_control_gap);
    println!("online coupled / explicit time ratio {:.0}", r.timing_ratio);
    println!("regions {:?}, controller file {} bytes", r.regions, r.controller_bytes);
    Ok(())
}
