//! Polyhedral sets in half-space and vertex form.
//!
//! Tolerance ladder shared by every operation here: facet equality `1e-9`,
//! redundancy LP margin `1e-9`, row normalisation `1e-12`.

mod hull;
mod invariant;

pub use invariant::mpi_set;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{solve_lp, LpStatus};

pub const FACET_TOL: f64 = 1e-9;
pub const REDUNDANCY_TOL: f64 = 1e-9;
const NORMALIZE_TOL: f64 = 1e-12;
const RADIUS_CAP: f64 = 1e9;

/// `{x : A x <= b}` with unit-norm rows. Serialises as `{H, h}`; the
/// dimension is recovered from the row length, so at least one row is
/// required to deserialise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "HPolytopeData", try_from = "HPolytopeData")]
pub struct HPolytope {
    a: DMatrix<f64>,
    b: DVector<f64>,
}

/// Finite generator list; the set is their convex hull.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VPolytope {
    pub vertices: Vec<Vec<f64>>,
}

impl VPolytope {
    pub fn new(vertices: Vec<Vec<f64>>) -> Self {
        Self { vertices }
    }

    pub fn singleton(point: &[f64]) -> Self {
        Self {
            vertices: vec![point.to_vec()],
        }
    }

    pub fn dim(&self) -> usize {
        self.vertices.first().map_or(0, |v| v.len())
    }

    /// `max_v dir . v`.
    pub fn support(&self, dir: &[f64]) -> f64 {
        self.vertices
            .iter()
            .map(|v| v.iter().zip(dir).map(|(a, b)| a * b).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Serialised row-major form used in controller files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HPolytopeData {
    #[serde(rename = "H")]
    pub a: Vec<Vec<f64>>,
    pub h: Vec<f64>,
}

impl From<HPolytope> for HPolytopeData {
    fn from(p: HPolytope) -> Self {
        p.to_data()
    }
}

impl TryFrom<HPolytopeData> for HPolytope {
    type Error = Error;

    fn try_from(data: HPolytopeData) -> Result<Self> {
        let d = data
            .a
            .first()
            .map(|r| r.len())
            .ok_or_else(|| Error::Dimension("polytope without rows".into()))?;
        HPolytope::from_data(&data, d)
    }
}

impl HPolytope {
    /// Normalises rows; drops all-zero rows that hold for every `x`.
    pub fn new(a: DMatrix<f64>, b: DVector<f64>) -> Self {
        assert_eq!(a.nrows(), b.len(), "row count mismatch");
        let d = a.ncols();
        let mut rows: Vec<f64> = Vec::with_capacity(a.len());
        let mut rhs = Vec::with_capacity(b.len());
        for i in 0..a.nrows() {
            let norm = a.row(i).norm();
            if norm > NORMALIZE_TOL {
                rows.extend(a.row(i).iter().map(|x| x / norm));
                rhs.push(b[i] / norm);
            } else if b[i] < -FACET_TOL {
                rows.extend(std::iter::repeat_n(0.0, d));
                rhs.push(b[i]);
            }
        }
        let m = rhs.len();
        Self {
            a: DMatrix::from_row_slice(m, d, &rows),
            b: DVector::from_vec(rhs),
        }
    }

    /// Row-major constructor.
    pub fn from_rows(rows: &[Vec<f64>], b: &[f64]) -> Self {
        let d = rows.first().map_or(0, |r| r.len());
        let flat: Vec<f64> = rows.iter().flat_map(|r| r.iter().cloned()).collect();
        Self::new(
            DMatrix::from_row_slice(rows.len(), d, &flat),
            DVector::from_row_slice(b),
        )
    }

    /// Axis-aligned box `lo <= x <= hi`.
    pub fn from_box(lo: &[f64], hi: &[f64]) -> Self {
        let d = lo.len();
        let mut a = DMatrix::zeros(2 * d, d);
        let mut b = DVector::zeros(2 * d);
        for i in 0..d {
            a[(2 * i, i)] = 1.0;
            b[2 * i] = hi[i];
            a[(2 * i + 1, i)] = -1.0;
            b[2 * i + 1] = -lo[i];
        }
        Self::new(a, b)
    }

    /// Origin-centred box `|x_i| <= half[i]`.
    pub fn symmetric_box(half: &[f64]) -> Self {
        let lo: Vec<f64> = half.iter().map(|h| -h).collect();
        Self::from_box(&lo, half)
    }

    /// The whole space in dimension `d` (no rows).
    pub fn universe(d: usize) -> Self {
        Self::new(DMatrix::zeros(0, d), DVector::zeros(0))
    }

    pub fn dim(&self) -> usize {
        self.a.ncols()
    }

    pub fn n_rows(&self) -> usize {
        self.a.nrows()
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn to_data(&self) -> HPolytopeData {
        HPolytopeData {
            a: (0..self.n_rows())
                .map(|i| self.a.row(i).iter().cloned().collect())
                .collect(),
            h: self.b.iter().cloned().collect(),
        }
    }

    /// Restores a polytope without renormalising, so stored rows round-trip
    /// bit for bit.
    pub fn from_data(data: &HPolytopeData, dim: usize) -> Result<Self> {
        if data.a.len() != data.h.len() || data.a.iter().any(|r| r.len() != dim) {
            return Err(Error::Dimension("polytope rows".into()));
        }
        let flat: Vec<f64> = data.a.iter().flat_map(|r| r.iter().cloned()).collect();
        Ok(Self {
            a: DMatrix::from_row_slice(data.h.len(), dim, &flat),
            b: DVector::from_row_slice(&data.h),
        })
    }

    /// Max violation `max_i (A_i x - b_i)`; negative inside.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst = f64::NEG_INFINITY;
        for i in 0..self.n_rows() {
            let mut s = -self.b[i];
            for (j, xj) in x.iter().enumerate() {
                s += self.a[(i, j)] * xj;
            }
            worst = worst.max(s);
        }
        worst
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        debug_assert_eq!(x.len(), self.dim());
        for i in 0..self.n_rows() {
            let mut s = -self.b[i];
            for (j, xj) in x.iter().enumerate() {
                s += self.a[(i, j)] * xj;
            }
            if s > tol {
                return false;
            }
        }
        true
    }

    pub fn intersect(&self, other: &HPolytope) -> HPolytope {
        assert_eq!(self.dim(), other.dim());
        let mut a = DMatrix::zeros(self.n_rows() + other.n_rows(), self.dim());
        a.view_mut((0, 0), (self.n_rows(), self.dim())).copy_from(&self.a);
        a.view_mut((self.n_rows(), 0), (other.n_rows(), self.dim()))
            .copy_from(&other.a);
        let b = DVector::from_iterator(
            self.n_rows() + other.n_rows(),
            self.b.iter().chain(other.b.iter()).cloned(),
        );
        HPolytope::new(a, b)
    }

    /// `{x : M x in self}`.
    pub fn preimage(&self, m: &DMatrix<f64>) -> HPolytope {
        HPolytope::new(&self.a * m, self.b.clone())
    }

    /// `{x : x - shift in self}`.
    pub fn translate(&self, shift: &[f64]) -> HPolytope {
        let s = DVector::from_row_slice(shift);
        HPolytope {
            a: self.a.clone(),
            b: &self.b + &self.a * s,
        }
    }

    /// `max_{x in self} dir . x`; `None` when empty, `+inf` when unbounded.
    pub fn support(&self, dir: &[f64]) -> Option<f64> {
        let c = -DVector::from_row_slice(dir);
        let s = solve_lp(&c, &self.a, &self.b);
        match s.status {
            LpStatus::Optimal => Some(-s.value),
            LpStatus::Unbounded => Some(f64::INFINITY),
            LpStatus::Infeasible => None,
        }
    }

    pub fn is_empty(&self) -> bool {
        let c = DVector::zeros(self.dim());
        solve_lp(&c, &self.a, &self.b).status == LpStatus::Infeasible
    }

    /// Largest inscribed ball `(center, radius)`; `None` when empty. The
    /// radius is capped at `1e9` for unbounded sets.
    pub fn chebyshev_ball(&self) -> Option<(DVector<f64>, f64)> {
        let d = self.dim();
        let m = self.n_rows();
        let mut g = DMatrix::zeros(m + 2, d + 1);
        let mut w = DVector::zeros(m + 2);
        for i in 0..m {
            for j in 0..d {
                g[(i, j)] = self.a[(i, j)];
            }
            g[(i, d)] = self.a.row(i).norm();
            w[i] = self.b[i];
        }
        g[(m, d)] = -1.0;
        w[m] = 0.0;
        g[(m + 1, d)] = 1.0;
        w[m + 1] = RADIUS_CAP;
        let mut c = DVector::zeros(d + 1);
        c[d] = -1.0;
        let s = solve_lp(&c, &g, &w);
        if s.status != LpStatus::Optimal {
            return None;
        }
        let center = s.z.rows(0, d).into_owned();
        Some((center, s.z[d]))
    }

    /// Drops every row implied by the remaining ones.
    pub fn remove_redundant(&self) -> Result<HPolytope> {
        if self.is_empty() {
            return Err(Error::EmptyPolytope);
        }
        let d = self.dim();
        let mut keep = vec![true; self.n_rows()];
        for i in 0..self.n_rows() {
            let others: Vec<usize> = (0..self.n_rows()).filter(|&k| k != i && keep[k]).collect();
            let g = DMatrix::from_fn(others.len(), d, |r, c| self.a[(others[r], c)]);
            let w = DVector::from_fn(others.len(), |r, _| self.b[others[r]]);
            let c = -self.a.row(i).transpose();
            let s = solve_lp(&c, &g, &w);
            let redundant = match s.status {
                LpStatus::Optimal => -s.value <= self.b[i] + REDUNDANCY_TOL,
                _ => false,
            };
            if redundant {
                keep[i] = false;
            }
        }
        Ok(self.select_rows(&keep))
    }

    fn select_rows(&self, keep: &[bool]) -> HPolytope {
        let idx: Vec<usize> = (0..self.n_rows()).filter(|&i| keep[i]).collect();
        HPolytope {
            a: DMatrix::from_fn(idx.len(), self.dim(), |r, c| self.a[(idx[r], c)]),
            b: DVector::from_fn(idx.len(), |r, _| self.b[idx[r]]),
        }
    }

    /// `self ⊆ other` up to `tol`, decided by one support LP per row of
    /// `other`.
    pub fn is_subset_of(&self, other: &HPolytope, tol: f64) -> bool {
        (0..other.n_rows()).all(|i| {
            let dir: Vec<f64> = other.a.row(i).iter().cloned().collect();
            match self.support(&dir) {
                None => true,
                Some(s) => s <= other.b[i] + tol,
            }
        })
    }

    pub fn set_eq(&self, other: &HPolytope, tol: f64) -> bool {
        self.is_subset_of(other, tol) && other.is_subset_of(self, tol)
    }

    /// Pontryagin difference `self ⊖ q`: rows shifted by the support of `q`.
    /// May be empty.
    pub fn pontryagin_diff(&self, q: &VPolytope) -> HPolytope {
        let mut b = self.b.clone();
        for i in 0..self.n_rows() {
            let dir: Vec<f64> = self.a.row(i).iter().cloned().collect();
            b[i] -= q.support(&dir);
        }
        HPolytope {
            a: self.a.clone(),
            b,
        }
    }

    /// Exact vertex set for bounded, full-dimensional polytopes in 2-D or
    /// 3-D, via the polar dual about the Chebyshev centre.
    pub fn vertices(&self) -> Result<VPolytope> {
        let d = self.dim();
        if !(2..=3).contains(&d) {
            return Err(Error::Dimension(format!("vertex enumeration in {d}-D")));
        }
        let (center, radius) = self.chebyshev_ball().ok_or(Error::EmptyPolytope)?;
        if radius >= RADIUS_CAP * 0.5 {
            return Err(Error::UnboundedPolytope);
        }
        if radius <= 1e-12 {
            return Err(Error::HullDegenerate);
        }
        let slack: Vec<f64> = (0..self.n_rows())
            .map(|i| self.b[i] - self.a.row(i).dot(&center.transpose()))
            .collect();
        let dual: Vec<Vec<f64>> = (0..self.n_rows())
            .map(|i| self.a.row(i).iter().map(|x| x / slack[i]).collect())
            .collect();

        // each polar facet {y : n.y = e} is the vertex center + n / e
        let facets: Vec<(Vec<f64>, f64)> = match d {
            2 => {
                let pts: Vec<[f64; 2]> = dual.iter().map(|p| [p[0], p[1]]).collect();
                let (_, planes) = hull::hull2_planes(&pts).map_err(|_| Error::UnboundedPolytope)?;
                planes.iter().map(|p| (p.normal.to_vec(), p.offset)).collect()
            }
            _ => {
                let pts: Vec<[f64; 3]> = dual.iter().map(|p| [p[0], p[1], p[2]]).collect();
                let h = hull::hull3(&pts).map_err(|_| Error::UnboundedPolytope)?;
                h.planes.iter().map(|p| (p.normal.to_vec(), p.offset)).collect()
            }
        };
        let mut verts = Vec::with_capacity(facets.len());
        for (normal, offset) in facets {
            if offset <= 1e-12 {
                return Err(Error::UnboundedPolytope);
            }
            let rough: Vec<f64> = (0..d).map(|j| center[j] + normal[j] / offset).collect();
            verts.push(self.polish_vertex(&rough));
        }
        Ok(VPolytope::new(verts))
    }

    /// Re-solves a vertex from the facets that are tight at it.
    fn polish_vertex(&self, x: &[f64]) -> Vec<f64> {
        let d = self.dim();
        let scale = 1.0 + x.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        let tight: Vec<usize> = (0..self.n_rows())
            .filter(|&i| {
                let s: f64 = (0..d).map(|j| self.a[(i, j)] * x[j]).sum::<f64>() - self.b[i];
                s.abs() <= 1e-7 * scale
            })
            .collect();
        if tight.len() < d {
            return x.to_vec();
        }
        let g = DMatrix::from_fn(tight.len(), d, |r, c| self.a[(tight[r], c)]);
        let w = DVector::from_fn(tight.len(), |r, _| self.b[tight[r]]);
        match g.svd(true, true).solve(&w, 1e-12) {
            Ok(sol) if (0..d).all(|j| (sol[j] - x[j]).abs() <= 1e-6 * scale) => sol.iter().cloned().collect(),
            _ => x.to_vec(),
        }
    }

    /// Area (2-D) or volume (3-D).
    pub fn volume(&self) -> Result<f64> {
        let v = self.vertices()?;
        match self.dim() {
            2 => {
                let pts: Vec<[f64; 2]> = v.vertices.iter().map(|p| [p[0], p[1]]).collect();
                let ring = hull::hull2(&pts)?;
                let k = ring.len();
                Ok(0.5
                    * (0..k)
                        .map(|i| {
                            let (a, b) = (ring[i], ring[(i + 1) % k]);
                            a[0] * b[1] - a[1] * b[0]
                        })
                        .sum::<f64>()
                        .abs())
            }
            _ => {
                let pts: Vec<[f64; 3]> = v.vertices.iter().map(|p| [p[0], p[1], p[2]]).collect();
                Ok(hull::hull3(&pts)?.volume())
            }
        }
    }

    /// Axis-aligned bounding box `(lo, hi)` by support LPs.
    pub fn bounding_box(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        let d = self.dim();
        let mut lo = vec![0.0; d];
        let mut hi = vec![0.0; d];
        for j in 0..d {
            let mut e = vec![0.0; d];
            e[j] = 1.0;
            hi[j] = self.support(&e).ok_or(Error::EmptyPolytope)?;
            e[j] = -1.0;
            lo[j] = -self.support(&e).ok_or(Error::EmptyPolytope)?;
            if !hi[j].is_finite() || !lo[j].is_finite() {
                return Err(Error::UnboundedPolytope);
            }
        }
        Ok((lo, hi))
    }
}

/// Convex hull of points in 2-D or 3-D as a minimal H-representation.
pub fn hull(points: &[Vec<f64>]) -> Result<HPolytope> {
    let d = points.first().map_or(0, |p| p.len());
    let rows: Vec<(Vec<f64>, f64)> = match d {
        2 => {
            let pts: Vec<[f64; 2]> = points.iter().map(|p| [p[0], p[1]]).collect();
            let (_, planes) = hull::hull2_planes(&pts)?;
            planes.iter().map(|p| (p.normal.to_vec(), p.offset)).collect()
        }
        3 => {
            let pts: Vec<[f64; 3]> = points.iter().map(|p| [p[0], p[1], p[2]]).collect();
            let h = hull::hull3(&pts)?;
            h.planes.iter().map(|p| (p.normal.to_vec(), p.offset)).collect()
        }
        _ => return Err(Error::Dimension(format!("hull in {d}-D"))),
    };
    let a: Vec<Vec<f64>> = rows.iter().map(|r| r.0.clone()).collect();
    let b: Vec<f64> = rows.iter().map(|r| r.1).collect();
    Ok(HPolytope::from_rows(&a, &b))
}

/// Extreme points of a finite point set in 2-D or 3-D.
pub fn extreme_points(points: &[Vec<f64>]) -> Result<VPolytope> {
    hull(points)?.vertices()
}
