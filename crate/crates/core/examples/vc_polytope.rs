//! Polytopic inner approximations of the flat input set and the largest
//! box inside the exact set. The box touches the curved boundary, so only
//! a scaled copy fits inside each inner approximation.

use flatmpc::flat::{build_vc_polytope, max_inscribed_box, scaled_tracking_box, VcParams};

fn main() -> flatmpc::Result<()> {
    let p = VcParams::default();
    let b = max_inscribed_box(&p);
    println!("inscribed box half-widths ({:.4}, {:.4}, {:.4})", b.vbar[0], b.vbar[1], b.vbar[2]);
    for (l1, l2) in [(5, 2), (16, 4), (64, 8)] {
        let poly = build_vc_polytope(&p, l1, l2)?;
        let fitted = scaled_tracking_box(&poly, &b)?;
        println!(
            "l1 {l1:>2}, l2 {l2}: {:>4} facets, {:>4} vertices, volume {:.3}, box scale that fits {:.4}",
            poly.n_rows(),
            poly.vertices()?.vertices.len(),
            poly.volume()?,
            fitted.vbar[0] / b.vbar[0]
        );
    }
    Ok(())
}
