//! Dense small-scale solvers: Riccati/LQR, linear programs and strictly
//! convex inequality-constrained quadratic programs.

mod lp;
mod qp;
mod riccati;

pub use lp::{solve_lp, LpSolution, LpStatus};
pub use qp::{solve_qp, QpProblem, QpSolution, QpSolver, QpStatus, WEAK_MULTIPLIER};
pub use riccati::{lqr_gain, solve_dare, spectral_radius};

use nalgebra::{DMatrix, DVector};

/// Zero-order-hold double integrator `xi+ = A xi + B v` on one axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearSystem2D {
    pub ts: f64,
}

impl LinearSystem2D {
    pub fn double_integrator(ts: f64) -> Self {
        assert!(ts > 0.0, "sampling time must be positive");
        Self { ts }
    }

    pub fn a(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[1.0, self.ts, 0.0, 1.0])
    }

    pub fn b(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 1, &[0.5 * self.ts * self.ts, self.ts])
    }

    /// One step of the axis dynamics.
    pub fn step(&self, xi: [f64; 2], v: f64) -> [f64; 2] {
        let ts = self.ts;
        [xi[0] + ts * xi[1] + 0.5 * ts * ts * v, xi[1] + ts * v]
    }

    pub fn is_controllable(&self) -> bool {
        let a = self.a();
        let b = self.b();
        let ab = &a * &b;
        let c = DMatrix::from_columns(&[b.column(0).into_owned(), ab.column(0).into_owned()]);
        c.rank(1e-12) == 2
    }
}

/// Block-diagonal matrix from square or rectangular blocks.
pub fn block_diag(blocks: &[&DMatrix<f64>]) -> DMatrix<f64> {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let (mut r, mut c) = (0, 0);
    for b in blocks {
        out.view_mut((r, c), (b.nrows(), b.ncols())).copy_from(b);
        r += b.nrows();
        c += b.ncols();
    }
    out
}

pub(crate) fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

pub(crate) fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    symmetrize(m)
        .symmetric_eigenvalues()
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

pub(crate) fn inf_norm(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}
