//! Linear programs `min c'z  s.t.  G z <= w` with free `z`.
//!
//! The solver works on the dual standard form
//! `min w'y  s.t.  G'y = -c, y >= 0`, whose tableau has one row per primal
//! variable. The region and polytope code calls this with a handful of
//! variables and hundreds of rows, where the dual tableau stays tiny.

use nalgebra::{DMatrix, DVector};

const PIVOT_TOL: f64 = 1e-11;
const COST_TOL: f64 = 1e-10;
const PHASE1_TOL: f64 = 1e-9;
const BLAND_AFTER: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Optimal value `c'z` (NaN unless optimal).
    pub value: f64,
    pub z: DVector<f64>,
}

struct Tableau {
    /// rows: constraints, last row: objective; last column: rhs.
    t: DMatrix<f64>,
    basis: Vec<usize>,
    rows: usize,
    cols: usize,
}

enum PivotOutcome {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let width = self.cols + 1;
        let p = self.t[(r, c)];
        for j in 0..width {
            self.t[(r, j)] /= p;
        }
        for i in 0..=self.rows {
            if i == r {
                continue;
            }
            let f = self.t[(i, c)];
            if f != 0.0 {
                for j in 0..width {
                    let v = self.t[(r, j)];
                    if v != 0.0 {
                        self.t[(i, j)] -= f * v;
                    }
                }
            }
        }
        self.basis[r] = c;
    }

    /// Primal simplex on the current objective row over the allowed columns.
    fn run(&mut self, allowed: usize, active_rows: &[bool]) -> PivotOutcome {
        let obj = self.rows;
        let mut degenerate_streak = 0usize;
        let cap = 50 * (self.rows + self.cols) + 1000;
        for _ in 0..cap {
            let bland = degenerate_streak > BLAND_AFTER;
            let mut enter = None;
            let mut best = -COST_TOL;
            for j in 0..allowed {
                let rc = self.t[(obj, j)];
                if rc < best {
                    enter = Some(j);
                    if bland {
                        break;
                    }
                    best = rc;
                }
            }
            let Some(c) = enter else {
                return PivotOutcome::Optimal;
            };
            let mut leave: Option<usize> = None;
            let mut best_ratio = f64::INFINITY;
            for i in 0..self.rows {
                if !active_rows[i] {
                    continue;
                }
                let a = self.t[(i, c)];
                if a > PIVOT_TOL {
                    let ratio = self.t[(i, self.cols)] / a;
                    let better = match leave {
                        None => true,
                        Some(l) => {
                            ratio < best_ratio - 1e-12
                                || (ratio <= best_ratio + 1e-12 && self.basis[i] < self.basis[l])
                        }
                    };
                    if better {
                        best_ratio = ratio;
                        leave = Some(i);
                    }
                }
            }
            let Some(r) = leave else {
                return PivotOutcome::Unbounded;
            };
            if best_ratio.abs() < 1e-12 {
                degenerate_streak += 1;
            } else {
                degenerate_streak = 0;
            }
            self.pivot(r, c);
        }
        // Iteration cap reached: Bland's rule cannot cycle, so this only
        // happens on severely ill-conditioned data. Report what we have.
        PivotOutcome::Optimal
    }
}

fn solve_dual(c: &DVector<f64>, g: &DMatrix<f64>, w: &DVector<f64>) -> (LpStatus, Option<Vec<usize>>) {
    let n = g.ncols();
    let m = g.nrows();
    // columns: y (m), artificials (n), rhs
    let cols = m + n;
    let mut t = DMatrix::zeros(n + 1, cols + 1);
    for i in 0..n {
        let rhs = -c[i];
        let sign = if rhs < 0.0 { -1.0 } else { 1.0 };
        for j in 0..m {
            t[(i, j)] = sign * g[(j, i)];
        }
        t[(i, m + i)] = 1.0;
        t[(i, cols)] = sign * rhs;
    }
    // phase-one objective: minimise sum of artificials, expressed in
    // non-basic terms
    for j in 0..=cols {
        if (m..m + n).contains(&j) {
            continue;
        }
        let s: f64 = (0..n).map(|i| t[(i, j)]).sum();
        t[(n, j)] = -s;
    }
    let mut tab = Tableau {
        t,
        basis: (m..m + n).collect(),
        rows: n,
        cols,
    };
    let mut active_rows = vec![true; n];
    tab.run(m, &active_rows);
    let infeas = -tab.t[(n, cols)];
    let scale = 1.0 + c.iter().fold(0.0_f64, |a, x| a.max(x.abs()));
    if infeas > PHASE1_TOL * scale {
        return (LpStatus::Unbounded, None); // dual infeasible, resolved by caller
    }
    // drive artificials out of the basis; drop redundant equality rows
    for i in 0..n {
        if tab.basis[i] >= m {
            let mut pivot_col = None;
            let mut best = 1e-9;
            for j in 0..m {
                let a = tab.t[(i, j)].abs();
                if a > best {
                    best = a;
                    pivot_col = Some(j);
                }
            }
            match pivot_col {
                Some(j) => tab.pivot(i, j),
                None => active_rows[i] = false,
            }
        }
    }
    // phase two objective: w'y
    for j in 0..=cols {
        tab.t[(n, j)] = if j < m { w[j] } else { 0.0 };
    }
    for i in 0..n {
        if !active_rows[i] {
            continue;
        }
        let bcol = tab.basis[i];
        let cost = tab.t[(n, bcol)];
        if cost != 0.0 {
            for j in 0..=cols {
                let v = tab.t[(i, j)];
                tab.t[(n, j)] -= cost * v;
            }
        }
    }
    match tab.run(m, &active_rows) {
        PivotOutcome::Unbounded => (LpStatus::Infeasible, None),
        PivotOutcome::Optimal => {
            let basis = (0..n)
                .filter(|&i| active_rows[i])
                .map(|i| tab.basis[i])
                .filter(|&b| b < m)
                .collect();
            (LpStatus::Optimal, Some(basis))
        }
    }
}

/// Minimises `c'z` over `G z <= w`.
pub fn solve_lp(c: &DVector<f64>, g: &DMatrix<f64>, w: &DVector<f64>) -> LpSolution {
    let n = g.ncols().max(c.len());
    let fail = |status| LpSolution {
        status,
        value: f64::NAN,
        z: DVector::zeros(n),
    };
    let (status, basis) = solve_dual(c, g, w);
    match status {
        LpStatus::Infeasible => return fail(LpStatus::Infeasible),
        LpStatus::Unbounded => {
            // dual infeasible: primal is infeasible or unbounded
            let zero = DVector::zeros(c.len());
            let (feas, _) = solve_dual(&zero, g, w);
            return if feas == LpStatus::Optimal {
                fail(LpStatus::Unbounded)
            } else {
                fail(LpStatus::Infeasible)
            };
        }
        LpStatus::Optimal => {}
    }
    let basis = basis.unwrap_or_default();
    let z = if basis.is_empty() {
        DVector::zeros(n)
    } else {
        let gb = DMatrix::from_fn(basis.len(), n, |i, j| g[(basis[i], j)]);
        let wb = DVector::from_fn(basis.len(), |i, _| w[basis[i]]);
        let solved = if basis.len() == n {
            gb.clone().lu().solve(&wb)
        } else {
            None
        };
        match solved {
            Some(z) => z,
            None => gb
                .svd(true, true)
                .solve(&wb, 1e-12)
                .unwrap_or_else(|_| DVector::zeros(n)),
        }
    };
    LpSolution {
        status: LpStatus::Optimal,
        value: c.dot(&z),
        z,
    }
}
