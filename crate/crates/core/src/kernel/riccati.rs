use nalgebra::{Complex, DMatrix};

use super::{min_eigenvalue, symmetrize};
use crate::error::{Error, Result};

const DARE_TOL: f64 = 1e-12;
const DARE_MAX_ITER: usize = 1_000_000;

/// Largest eigenvalue modulus.
pub fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    m.complex_eigenvalues()
        .iter()
        .map(|l| l.norm())
        .fold(0.0, f64::max)
}

/// PBH test restricted to eigenvalues on or outside the unit circle.
fn is_stabilizable(a: &DMatrix<f64>, b: &DMatrix<f64>) -> bool {
    let n = a.nrows();
    for lambda in a.complex_eigenvalues().iter() {
        if lambda.norm() < 1.0 - 1e-12 {
            continue;
        }
        let mut pbh = DMatrix::<Complex<f64>>::zeros(n, n + b.ncols());
        for i in 0..n {
            for j in 0..n {
                let diag = if i == j { *lambda } else { Complex::new(0.0, 0.0) };
                pbh[(i, j)] = Complex::new(a[(i, j)], 0.0) - diag;
            }
            for j in 0..b.ncols() {
                pbh[(i, n + j)] = Complex::new(b[(i, j)], 0.0);
            }
        }
        let sv = pbh.singular_values();
        let smax = sv.iter().cloned().fold(0.0, f64::max);
        let rank = sv.iter().filter(|s| **s > 1e-10 * smax.max(1.0)).count();
        if rank < n {
            return false;
        }
    }
    true
}

fn dare_residual(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
    p: &DMatrix<f64>,
) -> Option<f64> {
    let btp = b.transpose() * p;
    let s = r + &btp * b;
    let s_inv = s.try_inverse()?;
    let rhs = a.transpose() * p * a - a.transpose() * p * b * s_inv * &btp * a + q;
    Some((p - rhs).norm())
}

/// Riccati recursion `P <- A'PA - A'PB (R + B'PB)^-1 B'PA + Q`, used when
/// `R` is singular and the doubling iteration is not applicable.
fn value_iteration(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let mut p = q.clone();
    for _ in 0..DARE_MAX_ITER {
        let btp = b.transpose() * &p;
        let s = r + &btp * b;
        let s_inv = s.try_inverse().ok_or(Error::DareDiverged(0))?;
        let next = symmetrize(&(a.transpose() * &p * a - a.transpose() * &p * b * s_inv * &btp * a + q));
        let delta = (&next - &p).norm();
        p = next;
        if !p.iter().all(|x| x.is_finite()) {
            return Err(Error::DareDiverged(0));
        }
        if delta <= DARE_TOL * p.norm().max(1.0) {
            return Ok(p);
        }
    }
    Err(Error::DareDiverged(DARE_MAX_ITER))
}

/// Solves the discrete algebraic Riccati equation
/// `P = A'PA - A'PB (R + B'PB)^-1 B'PA + Q` by structure-preserving doubling.
pub fn solve_dare(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if a.ncols() != n || b.nrows() != n || q.shape() != (n, n) || r.shape() != (b.ncols(), b.ncols())
    {
        return Err(Error::Dimension("solve_dare operand shapes".into()));
    }
    if !is_stabilizable(a, b) {
        return Err(Error::DareUnstabilizable);
    }

    let p = match r.clone().try_inverse() {
        Some(r_inv) if min_eigenvalue(r) > 0.0 => {
            let eye = DMatrix::<f64>::identity(n, n);
            let mut ak = a.clone();
            let mut gk = b * r_inv * b.transpose();
            let mut hk = q.clone();
            let mut converged = None;
            for it in 0..DARE_MAX_ITER {
                let w = &eye + &gk * &hk;
                let w_inv = w.try_inverse().ok_or(Error::DareDiverged(it))?;
                let aw = &ak * &w_inv;
                let a_next = &aw * &ak;
                let g_next = symmetrize(&(&gk + &aw * &gk * ak.transpose()));
                let h_next = symmetrize(&(&hk + ak.transpose() * &hk * &w_inv * &ak));
                let delta = (&h_next - &hk).norm();
                ak = a_next;
                gk = g_next;
                hk = h_next;
                if !hk.iter().all(|x| x.is_finite()) {
                    return Err(Error::DareDiverged(it));
                }
                if delta <= DARE_TOL * hk.norm().max(1.0) {
                    converged = Some(hk.clone());
                    break;
                }
            }
            converged.ok_or(Error::DareDiverged(DARE_MAX_ITER))?
        }
        _ => value_iteration(a, b, q, r)?,
    };

    let res = dare_residual(a, b, q, r, &p).ok_or(Error::DareDiverged(0))?;
    if res > 1e-8 * p.norm().max(1.0) || min_eigenvalue(&p) <= 0.0 {
        return Err(Error::DareDiverged(0));
    }
    Ok(p)
}

/// LQR gain `K = (R + B'PB)^-1 B'PA`; the closed loop is `A - BK`.
pub fn lqr_gain(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    _q: &DMatrix<f64>,
    r: &DMatrix<f64>,
    p: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let btp = b.transpose() * p;
    let s = r + &btp * b;
    let k = s
        .try_inverse()
        .ok_or_else(|| Error::Dimension("R + B'PB is singular".into()))?
        * btp
        * a;
    let rho = spectral_radius(&(a - b * &k));
    if rho >= 1.0 {
        return Err(Error::LqrUnstable(rho));
    }
    Ok(k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::LinearSystem2D;

    #[test]
    fn scalar_zero_dynamics_gives_q() {
        let z = DMatrix::from_element(1, 1, 0.0);
        let one = DMatrix::from_element(1, 1, 1.0);
        let p = solve_dare(&z, &one, &one, &one).unwrap();
        assert!((p[(0, 0)] - 1.0).abs() < 1e-14);
        let k = lqr_gain(&z, &one, &one, &one, &p).unwrap();
        assert_eq!(k[(0, 0)], 0.0);
    }

    #[test]
    fn reproduces_reported_terminal_weight() {
        let sys = LinearSystem2D::double_integrator(0.1);
        let q = DMatrix::from_diagonal(&nalgebra::dvector![50.0, 5.0]);
        let r = DMatrix::from_element(1, 1, 10.0);
        let p = solve_dare(&sys.a(), &sys.b(), &q, &r).unwrap();
        let expected = [[524.37, 223.75], [223.75, 225.97]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((p[(i, j)] - expected[i][j]).abs() / expected[i][j] < 5e-3);
            }
        }
        assert!(min_eigenvalue(&(&p - &q)) >= -1e-9);
    }

    #[test]
    fn unstabilizable_pair_is_rejected() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.5]);
        let b = DMatrix::from_row_slice(2, 1, &[0.0, 1.0]);
        let q = DMatrix::identity(2, 2);
        let r = DMatrix::identity(1, 1);
        assert!(matches!(solve_dare(&a, &b, &q, &r), Err(Error::DareUnstabilizable)));
    }

    #[test]
    fn singular_input_weight_falls_back_to_recursion() {
        let sys = LinearSystem2D::double_integrator(0.1);
        let q = DMatrix::identity(2, 2);
        let r = DMatrix::zeros(1, 1);
        let p = solve_dare(&sys.a(), &sys.b(), &q, &r).unwrap();
        assert!(dare_residual(&sys.a(), &sys.b(), &q, &r, &p).unwrap() < 1e-8 * p.norm());
    }

    #[test]
    fn lqr_rejects_inconsistent_riccati_matrix() {
        let sys = LinearSystem2D::double_integrator(0.1);
        let q = DMatrix::identity(2, 2);
        let r = DMatrix::identity(1, 1);
        let bogus = DMatrix::zeros(2, 2);
        assert!(matches!(
            lqr_gain(&sys.a(), &sys.b(), &q, &r, &bogus),
            Err(Error::LqrUnstable(_))
        ));
    }
}
