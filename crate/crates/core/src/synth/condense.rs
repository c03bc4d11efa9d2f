use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::kernel::block_diag;
use crate::polytope::HPolytope;

/// Condensed MPC problem in the stacked inputs `z`, parameterised by the
/// current state `x`:
///
/// ```text
/// min  1/2 z'Hz + (F x)'z     s.t.  G z <= w + S x
/// ```
///
/// The full horizon cost equals `2 (1/2 z'Hz + x'F'z) + x'Yx`.
#[derive(Debug, Clone)]
pub struct ParametricQp {
    pub h: DMatrix<f64>,
    pub ftheta: DMatrix<f64>,
    pub g: DMatrix<f64>,
    pub w: DVector<f64>,
    pub s: DMatrix<f64>,
    pub y: DMatrix<f64>,
    pub n_input_rows: usize,
    pub n_state_rows: usize,
    pub n_terminal_rows: usize,
    /// Inputs per stage.
    pub nu: usize,
}

impl ParametricQp {
    pub fn n_params(&self) -> usize {
        self.ftheta.ncols()
    }

    pub fn n_vars(&self) -> usize {
        self.h.nrows()
    }

    pub fn linear_term(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.ftheta * x
    }

    pub fn rhs(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.w + &self.s * x
    }

    /// Stage-plus-terminal cost of the input sequence `z` from state `x`.
    pub fn horizon_cost(&self, x: &DVector<f64>, z: &DVector<f64>) -> f64 {
        z.dot(&(&self.h * z)) + 2.0 * x.dot(&(self.ftheta.transpose() * z)) + x.dot(&(&self.y * x))
    }
}

/// Condenses `x+ = A x + B u` over `np` steps with stage weights `(Q, R)`,
/// terminal weight `P`, per-stage input set, state set imposed on steps
/// `1..np-1`, and terminal set on step `np`. The state set at step 0 only
/// involves the parameter and is left to the caller.
#[allow(clippy::too_many_arguments)]
pub fn condense_system(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
    p: &DMatrix<f64>,
    np: usize,
    input_set: &HPolytope,
    state_set: &HPolytope,
    terminal_set: &HPolytope,
) -> Result<ParametricQp> {
    let nx = a.nrows();
    let nu = b.ncols();
    if np == 0 {
        return Err(Error::Config("prediction horizon must be at least 1".into()));
    }
    if input_set.dim() != nu || state_set.dim() != nx || terminal_set.dim() != nx {
        return Err(Error::Dimension("constraint sets vs system size".into()));
    }
    let nz = nu * np;

    // powers[j] = A^j
    let mut powers = vec![DMatrix::identity(nx, nx)];
    for j in 1..=np {
        powers.push(a * &powers[j - 1]);
    }
    // x_j = phi_j x + gamma_j z  for j = 1..np
    let mut phi = Vec::with_capacity(np);
    let mut gamma = Vec::with_capacity(np);
    for j in 1..=np {
        phi.push(powers[j].clone());
        let mut gj = DMatrix::zeros(nx, nz);
        for i in 0..j {
            gj.view_mut((0, i * nu), (nx, nu))
                .copy_from(&(&powers[j - 1 - i] * b));
        }
        gamma.push(gj);
    }

    let mut h = block_diag(&vec![r; np]);
    let mut ftheta = DMatrix::zeros(nz, nx);
    let mut y = q.clone();
    for j in 0..np {
        let wj = if j + 1 == np { p } else { q };
        let gw = gamma[j].transpose() * wj;
        h += &gw * &gamma[j];
        ftheta += &gw * &phi[j];
        y += phi[j].transpose() * wj * &phi[j];
    }
    let h = (&h + h.transpose()) * 0.5;

    let (hu, ku) = (input_set.a(), input_set.b());
    let (hx, kx) = (state_set.a(), state_set.b());
    let (hf, kf) = (terminal_set.a(), terminal_set.b());
    let n_input_rows = hu.nrows() * np;
    let n_state_rows = hx.nrows() * (np - 1);
    let n_terminal_rows = hf.nrows();
    let m = n_input_rows + n_state_rows + n_terminal_rows;
    let mut g = DMatrix::zeros(m, nz);
    let mut w = DVector::zeros(m);
    let mut s = DMatrix::zeros(m, nx);

    let mut row = 0;
    for j in 0..np {
        g.view_mut((row, j * nu), (hu.nrows(), nu)).copy_from(hu);
        w.rows_mut(row, hu.nrows()).copy_from(ku);
        row += hu.nrows();
    }
    for j in 1..np {
        let k = hx.nrows();
        g.view_mut((row, 0), (k, nz)).copy_from(&(hx * &gamma[j - 1]));
        w.rows_mut(row, k).copy_from(kx);
        s.view_mut((row, 0), (k, nx)).copy_from(&(-(hx * &phi[j - 1])));
        row += k;
    }
    g.view_mut((row, 0), (n_terminal_rows, nz))
        .copy_from(&(hf * &gamma[np - 1]));
    w.rows_mut(row, n_terminal_rows).copy_from(kf);
    s.view_mut((row, 0), (n_terminal_rows, nx))
        .copy_from(&(-(hf * &phi[np - 1])));

    Ok(ParametricQp {
        h,
        ftheta,
        g,
        w,
        s,
        y,
        n_input_rows,
        n_state_rows,
        n_terminal_rows,
        nu,
    })
}
