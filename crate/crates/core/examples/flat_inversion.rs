//! Flat input to thrust and attitude and back, at two headings.

use flatmpc::flat::{flat_to_physical, plant_accel, vc_contains, FlatInput, VcParams};

fn main() -> flatmpc::Result<()> {
    let p = VcParams::default();
    let v = FlatInput::new(0.6, -0.4, 1.2);
    println!("v = {:?}, inside the flat input set: {}", v.0, vc_contains(&v, &p));
    for psi in [0.0, 1.3] {
        let u = flat_to_physical(&v, psi, p.g)?.input;
        let back = plant_accel(&u, psi, p.g);
        println!(
            "psi {psi:.1}: T {:.4} m/s^2, phi {:+.4} rad, theta {:+.4} rad -> accel ({:.6}, {:.6}, {:.6}), within limits: {}",
            u.thrust,
            u.phi,
            u.theta,
            back[0],
            back[1],
            back[2],
            u.in_u(&p, 1e-12)
        );
    }
    Ok(())
}
