//! Offline synthesis of per-axis explicit MPC laws.
//!
//! Each flat axis is a double integrator with input `|v| <= vbar`, a state
//! box `|p| <= pbar, |dp| <= velbar`, LQR terminal weight and a maximal
//! positive invariant terminal set. The condensed problem is solved
//! parametrically; the result is a list of polyhedral regions, each carrying
//! an affine map from the state to the whole optimal input sequence.

mod condense;
mod regions;
mod store;

pub use condense::{condense_system, ParametricQp};
pub use regions::{enumerate_regions, EnumerationOptions};
pub use store::{ControllerSet, SynthMeta, SCHEMA_VERSION};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{lqr_gain, solve_dare, LinearSystem2D};
use crate::polytope::{mpi_set, HPolytope};

/// Problem data of one axis. `p` and `xf` are normally produced by
/// [`terminal_ingredients`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSpec {
    pub ts: f64,
    pub q: [[f64; 2]; 2],
    pub r: f64,
    pub p: [[f64; 2]; 2],
    pub np: usize,
    pub vbar: f64,
    pub pbar: f64,
    pub velbar: f64,
    pub xf: HPolytope,
}

fn to_mat(m: &[[f64; 2]; 2]) -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[m[0][0], m[0][1], m[1][0], m[1][1]])
}

fn to_arr(m: &DMatrix<f64>) -> [[f64; 2]; 2] {
    [[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]]
}

/// Terminal weight, LQR gain and terminal set of one axis.
#[derive(Debug, Clone)]
pub struct TerminalIngredients {
    pub p: DMatrix<f64>,
    pub k: DMatrix<f64>,
    pub xf: HPolytope,
}

/// `P` from the Riccati equation, `K` the matching LQR gain, and the largest
/// set inside the state box that `A - BK` keeps invariant without breaking
/// `|Kx| <= vbar`.
pub fn terminal_ingredients(
    sys: &LinearSystem2D,
    q: &DMatrix<f64>,
    r: f64,
    state_box: &HPolytope,
    vbar: f64,
) -> Result<TerminalIngredients> {
    let (a, b) = (sys.a(), sys.b());
    let rm = DMatrix::from_element(1, 1, r);
    let p = solve_dare(&a, &b, q, &rm)?;
    let k = lqr_gain(&a, &b, q, &rm, &p)?;
    let vset = if vbar.is_finite() {
        Some(HPolytope::symmetric_box(&[vbar]))
    } else {
        None
    };
    let xf = mpi_set(&(&a - &b * &k), state_box, &k, vset.as_ref())?;
    Ok(TerminalIngredients { p, k, xf })
}

impl AxisSpec {
    /// Builds a spec with LQR terminal ingredients.
    #[allow(clippy::too_many_arguments)]
    pub fn with_terminal(
        ts: f64,
        q: [[f64; 2]; 2],
        r: f64,
        np: usize,
        vbar: f64,
        pbar: f64,
        velbar: f64,
    ) -> Result<Self> {
        let ok = ts > 0.0 && r > 0.0 && np >= 1 && vbar > 0.0 && pbar > 0.0 && velbar > 0.0;
        if !ok {
            return Err(Error::Config("axis parameters must be positive and Np >= 1".into()));
        }
        let sys = LinearSystem2D::double_integrator(ts);
        let state_box = HPolytope::symmetric_box(&[pbar, velbar]);
        let ti = terminal_ingredients(&sys, &to_mat(&q), r, &state_box, vbar)?;
        Ok(Self {
            ts,
            q,
            r,
            p: to_arr(&ti.p),
            np,
            vbar,
            pbar,
            velbar,
            xf: ti.xf,
        })
    }

    pub fn sys(&self) -> LinearSystem2D {
        LinearSystem2D::double_integrator(self.ts)
    }

    pub fn q_mat(&self) -> DMatrix<f64> {
        to_mat(&self.q)
    }

    pub fn p_mat(&self) -> DMatrix<f64> {
        to_mat(&self.p)
    }

    pub fn state_box(&self) -> HPolytope {
        HPolytope::symmetric_box(&[self.pbar, self.velbar])
    }

    /// LQR gain for the stored weights (`v = -K x`).
    pub fn lqr(&self) -> Result<DMatrix<f64>> {
        let sys = self.sys();
        let rm = DMatrix::from_element(1, 1, self.r);
        lqr_gain(&sys.a(), &sys.b(), &self.q_mat(), &rm, &self.p_mat())
    }

    /// Stage cost `x'Qx + R v²`.
    pub fn stage_cost(&self, x: &[f64; 2], v: f64) -> f64 {
        let q = &self.q;
        x[0] * (q[0][0] * x[0] + q[0][1] * x[1]) + x[1] * (q[1][0] * x[0] + q[1][1] * x[1]) + self.r * v * v
    }

    /// Same problem apart from the terminal ingredients.
    pub fn same_problem(&self, other: &AxisSpec) -> bool {
        self.ts == other.ts
            && self.q == other.q
            && self.r == other.r
            && self.np == other.np
            && self.vbar == other.vbar
            && self.pbar == other.pbar
            && self.velbar == other.velbar
    }
}

/// Condensed QP of one axis.
pub fn condense(spec: &AxisSpec) -> Result<ParametricQp> {
    let sys = spec.sys();
    condense_system(
        &sys.a(),
        &sys.b(),
        &spec.q_mat(),
        &DMatrix::from_element(1, 1, spec.r),
        &spec.p_mat(),
        spec.np,
        &HPolytope::symmetric_box(&[spec.vbar]),
        &spec.state_box(),
        &spec.xf,
    )
}

/// One polyhedral piece of the explicit law: on `region` the optimal input
/// sequence is `F x + mu`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "RegionData", try_from = "RegionData")]
pub struct CriticalRegion {
    pub region: HPolytope,
    pub f: DMatrix<f64>,
    pub mu: DVector<f64>,
    pub active_set: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RegionData {
    #[serde(rename = "H")]
    hmat: Vec<[f64; 2]>,
    h: Vec<f64>,
    #[serde(rename = "F")]
    f: Vec<[f64; 2]>,
    mu: Vec<f64>,
    active_set: Vec<usize>,
}

impl From<CriticalRegion> for RegionData {
    fn from(c: CriticalRegion) -> Self {
        let rows = |m: &DMatrix<f64>| (0..m.nrows()).map(|i| [m[(i, 0)], m[(i, 1)]]).collect();
        Self {
            hmat: rows(c.region.a()),
            h: c.region.b().iter().cloned().collect(),
            f: rows(&c.f),
            mu: c.mu.iter().cloned().collect(),
            active_set: c.active_set,
        }
    }
}

impl TryFrom<RegionData> for CriticalRegion {
    type Error = Error;

    fn try_from(d: RegionData) -> Result<Self> {
        if d.hmat.len() != d.h.len() || d.f.len() != d.mu.len() || d.mu.is_empty() {
            return Err(Error::ControllerCorrupt("region field lengths disagree".into()));
        }
        let flat = |rows: &[[f64; 2]]| rows.iter().flat_map(|r| r.iter().cloned()).collect::<Vec<_>>();
        let data = crate::polytope::HPolytopeData {
            a: d.hmat.iter().map(|r| r.to_vec()).collect(),
            h: d.h,
        };
        Ok(Self {
            region: HPolytope::from_data(&data, 2)?,
            f: DMatrix::from_row_slice(d.f.len(), 2, &flat(&d.f)),
            mu: DVector::from_vec(d.mu),
            active_set: d.active_set,
        })
    }
}

impl CriticalRegion {
    /// Whole optimal sequence at `x`.
    pub fn sequence(&self, x: &[f64; 2]) -> DVector<f64> {
        &self.f * DVector::from_row_slice(x) + &self.mu
    }

    /// First element of the optimal sequence.
    pub fn first_input(&self, x: &[f64; 2]) -> f64 {
        self.f[(0, 0)] * x[0] + self.f[(0, 1)] * x[1] + self.mu[0]
    }
}

/// Explicit law of one axis: regions in point-location order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisController {
    pub spec: AxisSpec,
    pub regions: Vec<CriticalRegion>,
}

impl AxisController {
    pub fn n_regions(&self) -> usize {
        self.regions.len()
    }
}

/// Condenses and enumerates one axis.
pub fn synthesize_axis(spec: &AxisSpec, opts: &EnumerationOptions) -> Result<AxisController> {
    let pqp = condense(spec)?;
    let regions = enumerate_regions(&pqp, &spec.state_box(), opts)?;
    Ok(AxisController {
        spec: spec.clone(),
        regions,
    })
}
