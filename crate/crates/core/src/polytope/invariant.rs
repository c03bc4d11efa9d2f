use nalgebra::DMatrix;

use super::HPolytope;
use crate::error::{Error, Result};

const MPI_MAX_ITER: usize = 500;
const SET_EQ_TOL: f64 = 1e-9;

/// Maximal positive invariant set of `x+ = A_cl x` inside
/// `X ∩ {x : -K x ∈ V}`.
///
/// Pre-set iteration `Ω_{j+1} = Ω_j ∩ {x : A_cl x ∈ Ω_j}` until two
/// successive iterates are mutually redundant.
pub fn mpi_set(
    a_cl: &DMatrix<f64>,
    x: &HPolytope,
    k: &DMatrix<f64>,
    v_bound: Option<&HPolytope>,
) -> Result<HPolytope> {
    let d = x.dim();
    if a_cl.shape() != (d, d) || k.ncols() != d {
        return Err(Error::Dimension("mpi_set operand shapes".into()));
    }
    let mut omega = match v_bound {
        Some(v) => {
            if v.dim() != k.nrows() {
                return Err(Error::Dimension("input bound vs gain".into()));
            }
            x.intersect(&v.preimage(&(-k)))
        }
        None => x.clone(),
    }
    .remove_redundant()?;

    for _ in 0..MPI_MAX_ITER {
        let next = omega.intersect(&omega.preimage(a_cl)).remove_redundant()?;
        if omega.is_subset_of(&next, SET_EQ_TOL) {
            return Ok(next);
        }
        omega = next;
    }
    Err(Error::MpiNotConverged(MPI_MAX_ITER))
}
