//! Strictly convex QP `min 1/2 z'Hz + f'z  s.t.  G z <= w`.
//!
//! Dual active-set method (Goldfarb-Idnani): start from the unconstrained
//! minimiser and add the most violated constraint until primal feasibility,
//! dropping constraints whose multiplier would turn negative. The Cholesky
//! factor of `H` and the transformed constraint normals `L^-1 G'` are
//! computed once per problem and reused, so repeated solves with the same
//! `H` and `G` (parametric or receding-horizon use) only pay for the
//! active-set iterations.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::inf_norm;
use crate::error::{Error, Result};

/// Multipliers at or below this are weakly active.
pub const WEAK_MULTIPLIER: f64 = 1e-9;
const VIOLATION_TOL: f64 = 1e-10;
const DEPENDENCE_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct QpProblem {
    pub h: DMatrix<f64>,
    pub f: DVector<f64>,
    pub g: DMatrix<f64>,
    pub w: DVector<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QpStatus {
    Optimal,
    Infeasible,
    /// Optimal, but some working-set multiplier is weakly active.
    Degenerate,
}

#[derive(Debug, Clone)]
pub struct QpSolution {
    pub z: DVector<f64>,
    /// One multiplier per constraint row; zero outside the active set.
    pub lambda: DVector<f64>,
    /// Sorted indices of the final working set.
    pub active_set: Vec<usize>,
    pub status: QpStatus,
    pub iterations: usize,
}

impl QpSolution {
    pub fn is_optimal(&self) -> bool {
        matches!(self.status, QpStatus::Optimal | QpStatus::Degenerate)
    }

    pub fn objective(&self, h: &DMatrix<f64>, f: &DVector<f64>) -> f64 {
        0.5 * self.z.dot(&(h * &self.z)) + f.dot(&self.z)
    }
}

/// Factorised `H` and `G`; solves for any `(f, w)`.
#[derive(Debug, Clone)]
pub struct QpSolver {
    chol: Cholesky<f64, Dyn>,
    /// `L^-1 G'`, one column per constraint row.
    gt: DMatrix<f64>,
    g: DMatrix<f64>,
    h: DMatrix<f64>,
}

impl QpSolver {
    pub fn new(h: &DMatrix<f64>, g: &DMatrix<f64>) -> Result<Self> {
        let n = h.nrows();
        if h.ncols() != n || g.ncols() != n {
            return Err(Error::Dimension("QP Hessian / constraint shapes".into()));
        }
        let hs = (h + h.transpose()) * 0.5;
        let chol = Cholesky::new(hs.clone())
            .ok_or_else(|| Error::Dimension("QP Hessian is not positive definite".into()))?;
        let l = chol.l();
        let mut gt = g.transpose();
        if g.nrows() > 0 {
            l.solve_lower_triangular_mut(&mut gt);
        }
        Ok(Self {
            chol,
            gt,
            g: g.clone(),
            h: hs,
        })
    }

    pub fn n(&self) -> usize {
        self.h.nrows()
    }

    pub fn m(&self) -> usize {
        self.g.nrows()
    }

    pub fn hessian(&self) -> &DMatrix<f64> {
        &self.h
    }

    pub fn constraints(&self) -> &DMatrix<f64> {
        &self.g
    }

    fn l_solve(&self, v: &DVector<f64>) -> DVector<f64> {
        self.chol.l().solve_lower_triangular(v).expect("triangular factor")
    }

    fn lt_solve(&self, v: &DVector<f64>) -> DVector<f64> {
        self.chol
            .l()
            .tr_solve_lower_triangular(v)
            .expect("triangular factor")
    }

    fn working_matrix(&self, active: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(self.n(), active.len(), |i, j| self.gt[(i, active[j])])
    }

    /// Least-squares coefficients of `u` on the columns of `basis`.
    fn project(basis: &DMatrix<f64>, u: &DVector<f64>) -> DVector<f64> {
        if basis.ncols() == 0 {
            return DVector::zeros(0);
        }
        let qr = basis.clone().qr();
        let qtu = qr.q().transpose() * u;
        qr.r()
            .solve_upper_triangular(&qtu)
            .unwrap_or_else(|| DVector::zeros(basis.ncols()))
    }

    /// Equality-constrained solution for a fixed working set.
    fn polish(&self, f: &DVector<f64>, w: &DVector<f64>, active: &[usize]) -> (DVector<f64>, DVector<f64>) {
        let fhat = self.l_solve(f);
        if active.is_empty() {
            return (-self.lt_solve(&fhat), DVector::zeros(0));
        }
        let u = self.working_matrix(active);
        let m = u.transpose() * &u;
        let rhs = -(DVector::from_fn(active.len(), |i, _| w[active[i]]) + u.transpose() * &fhat);
        let lam = match m.clone().cholesky() {
            Some(c) => c.solve(&rhs),
            None => m.lu().solve(&rhs).unwrap_or_else(|| DVector::zeros(active.len())),
        };
        let z = -self.lt_solve(&(fhat + &u * &lam));
        (z, lam)
    }

    pub fn solve(&self, f: &DVector<f64>, w: &DVector<f64>) -> Result<QpSolution> {
        let n = self.n();
        let m = self.m();
        if f.len() != n || w.len() != m {
            return Err(Error::Dimension("QP linear term / bound lengths".into()));
        }
        let mut z = -self.chol.solve(f);
        let mut active: Vec<usize> = Vec::new();
        let mut lam: Vec<f64> = Vec::new();
        let mut in_active = vec![false; m];
        let cap = 20 * (n + m) + 100;
        let mut iterations = 0usize;

        loop {
            // most violated constraint, lowest index on ties
            let slack = &self.g * &z - w;
            let mut pick = None;
            let mut worst = 0.0;
            for i in 0..m {
                if in_active[i] {
                    continue;
                }
                let viol = slack[i];
                if viol > VIOLATION_TOL * (1.0 + w[i].abs()) && viol > worst {
                    worst = viol;
                    pick = Some(i);
                }
            }
            let Some(p) = pick else { break };
            let up = self.gt.column(p).into_owned();
            let mut lam_p = 0.0;

            loop {
                iterations += 1;
                if iterations > cap {
                    return Err(Error::QpCycling(cap));
                }
                let basis = self.working_matrix(&active);
                let r = Self::project(&basis, &up);
                let d = if active.is_empty() { up.clone() } else { &up - &basis * &r };
                let dd = d.norm_squared();
                let dependent = dd <= (DEPENDENCE_TOL * up.norm()).powi(2);

                let mut t1 = f64::INFINITY;
                let mut block = None;
                for (j, &rj) in r.iter().enumerate() {
                    if rj > 1e-12 {
                        let ratio = lam[j] / rj;
                        let better = match block {
                            None => true,
                            Some(b) => {
                                ratio < t1 - 1e-15 || (ratio <= t1 + 1e-15 && active[j] < active[b])
                            }
                        };
                        if better {
                            t1 = ratio;
                            block = Some(j);
                        }
                    }
                }
                let viol = self.g.row(p).dot(&z.transpose()) - w[p];
                let t2 = if dependent { f64::INFINITY } else { viol / dd };

                if t1.is_infinite() && t2.is_infinite() {
                    return Ok(QpSolution {
                        z,
                        lambda: DVector::zeros(m),
                        active_set: Vec::new(),
                        status: QpStatus::Infeasible,
                        iterations,
                    });
                }
                let t = t1.min(t2);
                for (j, l) in lam.iter_mut().enumerate() {
                    *l -= t * r[j];
                }
                lam_p += t;
                if !dependent {
                    z -= self.lt_solve(&(d * t));
                }
                if t2 <= t1 {
                    active.push(p);
                    lam.push(lam_p);
                    in_active[p] = true;
                    break;
                }
                let k = block.expect("finite partial step has a blocking index");
                in_active[active[k]] = false;
                active.remove(k);
                lam.remove(k);
            }
        }

        // refine z and multipliers on the final working set
        let mut order: Vec<usize> = (0..active.len()).collect();
        order.sort_by_key(|&i| active[i]);
        let active: Vec<usize> = order.iter().map(|&i| active[i]).collect();
        let (zp, lp) = self.polish(f, w, &active);
        let slack_ok = (&self.g * &zp - w).iter().all(|s| *s <= 1e-9);
        let mut lambda = DVector::zeros(m);
        if slack_ok && lp.iter().all(|x| x.is_finite()) {
            z = zp;
            for (j, &i) in active.iter().enumerate() {
                lambda[i] = lp[j].max(0.0);
            }
        } else {
            let sorted_lam: Vec<f64> = order.iter().map(|&i| lam[i]).collect();
            for (j, &i) in active.iter().enumerate() {
                lambda[i] = sorted_lam[j].max(0.0);
            }
        }
        let degenerate = active.iter().any(|&i| lambda[i] <= WEAK_MULTIPLIER);
        Ok(QpSolution {
            z,
            lambda,
            active_set: active,
            status: if degenerate { QpStatus::Degenerate } else { QpStatus::Optimal },
            iterations,
        })
    }

    /// `max(|Hz + f + G'lambda|)`.
    pub fn stationarity(&self, f: &DVector<f64>, sol: &QpSolution) -> f64 {
        let r = &self.h * &sol.z + f + self.g.transpose() * &sol.lambda;
        inf_norm(&r)
    }
}

/// One-shot solve of `p`.
pub fn solve_qp(p: &QpProblem) -> Result<QpSolution> {
    QpSolver::new(&p.h, &p.g)?.solve(&p.f, &p.w)
}
