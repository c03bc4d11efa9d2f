//! Online-QP baselines: the per-axis problem solved at every step, and the
//! coupled three-axis problem whose input set is the polytopic inner
//! approximation of the flat-space constraints rather than a box.

use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::kernel::{block_diag, lqr_gain, QpSolution, QpSolver, QpStatus};
use crate::polytope::{mpi_set, HPolytope};
use crate::synth::{condense, condense_system, AxisSpec, ParametricQp};

/// Outcome of one online solve.
#[derive(Debug, Clone)]
pub struct ImpcResult<const N: usize> {
    pub v: [f64; N],
    /// Whole optimal input sequence (empty when infeasible).
    pub z: DVector<f64>,
    pub solve_time: Duration,
    pub status: QpStatus,
}

impl<const N: usize> ImpcResult<N> {
    pub fn is_feasible(&self) -> bool {
        self.status != QpStatus::Infeasible
    }
}

fn finish<const N: usize>(sol: QpSolution, started: Instant) -> ImpcResult<N> {
    let solve_time = started.elapsed();
    if !sol.is_optimal() {
        return ImpcResult {
            v: [0.0; N],
            z: DVector::zeros(0),
            solve_time,
            status: QpStatus::Infeasible,
        };
    }
    let mut v = [0.0; N];
    for (i, vi) in v.iter_mut().enumerate() {
        *vi = sol.z[i];
    }
    ImpcResult {
        v,
        z: sol.z,
        solve_time,
        status: sol.status,
    }
}

/// Per-axis implicit MPC with the condensed problem and factorisation
/// prepared once.
#[derive(Debug, Clone)]
pub struct AxisImpc {
    pub spec: AxisSpec,
    pqp: ParametricQp,
    solver: QpSolver,
}

impl AxisImpc {
    pub fn new(spec: &AxisSpec) -> Result<Self> {
        let pqp = condense(spec)?;
        let solver = QpSolver::new(&pqp.h, &pqp.g)?;
        Ok(Self {
            spec: spec.clone(),
            pqp,
            solver,
        })
    }

    pub fn qp(&self) -> &ParametricQp {
        &self.pqp
    }

    /// Solves from `xi`; states outside the box are reported infeasible.
    pub fn solve(&self, xi: &[f64; 2]) -> Result<ImpcResult<1>> {
        let started = Instant::now();
        if !self.spec.state_box().contains(xi, 0.0) {
            return Ok(finish(infeasible(self.pqp.n_vars(), self.pqp.g.nrows()), started));
        }
        let x = DVector::from_row_slice(xi);
        let sol = self.solver.solve(&self.pqp.linear_term(&x), &self.pqp.rhs(&x))?;
        Ok(finish(sol, started))
    }
}

fn infeasible(n: usize, m: usize) -> QpSolution {
    QpSolution {
        z: DVector::zeros(n),
        lambda: DVector::zeros(m),
        active_set: vec![],
        status: QpStatus::Infeasible,
        iterations: 0,
    }
}

/// One-shot per-axis solve (condenses on every call).
pub fn solve_axis_impc(spec: &AxisSpec, xi: &[f64; 2]) -> Result<ImpcResult<1>> {
    AxisImpc::new(spec)?.solve(xi)
}

/// Stacked three-axis problem with state `(p1, v1, p2, v2, p3, v3)`.
#[derive(Debug, Clone)]
pub struct CoupledSpec {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub q: DMatrix<f64>,
    pub r: DMatrix<f64>,
    pub p: DMatrix<f64>,
    pub np: usize,
    pub vc_poly: HPolytope,
    pub x: HPolytope,
    pub xf: HPolytope,
}

impl CoupledSpec {
    /// Stacks three axis specs (sharing `ts` and `np`) with input set
    /// `vc_poly`. The terminal set is the invariant set of the block LQR
    /// loop under the input box `|v_i| <= terminal_box[i]`, which must lie
    /// inside `vc_poly`; with separable constraints it is the product of
    /// the per-axis invariant sets.
    pub fn new(axes: &[AxisSpec; 3], vc_poly: &HPolytope, terminal_box: [f64; 3]) -> Result<Self> {
        let np = axes[0].np;
        let ts = axes[0].ts;
        if axes.iter().any(|s| s.np != np || s.ts != ts) {
            return Err(Error::Config("axes must share ts and Np".into()));
        }
        if vc_poly.dim() != 3 {
            return Err(Error::Dimension("input polytope must be 3-D".into()));
        }
        let sys = axes[0].sys();
        let (a2, b2) = (sys.a(), sys.b());
        let qs: Vec<DMatrix<f64>> = axes.iter().map(|s| s.q_mat()).collect();
        let ps: Vec<DMatrix<f64>> = axes.iter().map(|s| s.p_mat()).collect();
        let rs: Vec<DMatrix<f64>> = axes.iter().map(|s| DMatrix::from_element(1, 1, s.r)).collect();
        let a = block_diag(&[&a2, &a2, &a2]);
        let b = block_diag(&[&b2, &b2, &b2]);
        let q = block_diag(&[&qs[0], &qs[1], &qs[2]]);
        let p = block_diag(&[&ps[0], &ps[1], &ps[2]]);
        let r = block_diag(&[&rs[0], &rs[1], &rs[2]]);

        let mut lo = Vec::with_capacity(6);
        let mut hi = Vec::with_capacity(6);
        for s in axes {
            lo.extend([-s.pbar, -s.velbar]);
            hi.extend([s.pbar, s.velbar]);
        }
        let x = HPolytope::from_box(&lo, &hi);

        let mut rows: Vec<Vec<f64>> = Vec::new();
        let mut rhs: Vec<f64> = Vec::new();
        for (i, s) in axes.iter().enumerate() {
            let k = lqr_gain(&a2, &b2, &qs[i], &rs[i], &ps[i])?;
            let omega = mpi_set(
                &(&a2 - &b2 * &k),
                &s.state_box(),
                &k,
                Some(&HPolytope::symmetric_box(&[terminal_box[i]])),
            )?;
            for j in 0..omega.n_rows() {
                let mut row = vec![0.0; 6];
                row[2 * i] = omega.a()[(j, 0)];
                row[2 * i + 1] = omega.a()[(j, 1)];
                rows.push(row);
                rhs.push(omega.b()[j]);
            }
        }
        let xf = HPolytope::from_rows(&rows, &rhs);
        Ok(Self {
            a,
            b,
            q,
            r,
            p,
            np,
            vc_poly: vc_poly.clone(),
            x,
            xf,
        })
    }

    /// Stacked LQR gain (block diagonal).
    pub fn lqr(&self) -> Result<DMatrix<f64>> {
        lqr_gain(&self.a, &self.b, &self.q, &self.r, &self.p)
    }

    pub fn condense(&self) -> Result<ParametricQp> {
        condense_system(
            &self.a,
            &self.b,
            &self.q,
            &self.r,
            &self.p,
            self.np,
            &self.vc_poly,
            &self.x,
            &self.xf,
        )
    }
}

/// Coupled implicit MPC, factorised once and cold-started every solve.
#[derive(Debug, Clone)]
pub struct CoupledImpc {
    pub spec: CoupledSpec,
    pqp: ParametricQp,
    solver: QpSolver,
}

impl CoupledImpc {
    pub fn new(spec: &CoupledSpec) -> Result<Self> {
        let pqp = spec.condense()?;
        let solver = QpSolver::new(&pqp.h, &pqp.g)?;
        Ok(Self {
            spec: spec.clone(),
            pqp,
            solver,
        })
    }

    pub fn qp(&self) -> &ParametricQp {
        &self.pqp
    }

    pub fn solve(&self, zeta: &[f64; 6]) -> Result<ImpcResult<3>> {
        let started = Instant::now();
        if !self.spec.x.contains(zeta, 0.0) {
            return Ok(finish(infeasible(self.pqp.n_vars(), self.pqp.g.nrows()), started));
        }
        let x = DVector::from_row_slice(zeta);
        let sol = self.solver.solve(&self.pqp.linear_term(&x), &self.pqp.rhs(&x))?;
        Ok(finish(sol, started))
    }
}

/// One-shot coupled solve (condenses and factorises on every call).
pub fn solve_coupled_impc(spec: &CoupledSpec, zeta: &[f64; 6]) -> Result<ImpcResult<3>> {
    CoupledImpc::new(spec)?.solve(zeta)
}
