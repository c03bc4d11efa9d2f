//! Terminal weight and LQR gain of one double-integrator axis.

use flatmpc::kernel::{lqr_gain, solve_dare, spectral_radius, LinearSystem2D};
use nalgebra::{DMatrix, DVector};

fn main() -> flatmpc::Result<()> {
    let sys = LinearSystem2D::double_integrator(0.1);
    let (a, b) = (sys.a(), sys.b());
    let q = DMatrix::from_diagonal(&DVector::from_row_slice(&[50.0, 5.0]));
    let r = DMatrix::from_element(1, 1, 10.0);
    let p = solve_dare(&a, &b, &q, &r)?;
    let k = lqr_gain(&a, &b, &q, &r, &p)?;
    println!("P = {p:.2}");
    println!("K = {k:.4}");
    println!("closed-loop spectral radius {:.4}", spectral_radius(&(&a - &b * &k)));
    Ok(())
}
