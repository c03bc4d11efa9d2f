//! Critical-region exploration for a parametric QP with a 2-D parameter.
//!
//! Each region is the set of states for which one active set stays optimal.
//! Starting from a seed, neighbouring regions are discovered by stepping a
//! small distance across every facet of each region found; a grid sweep then
//! picks up anything the facet walk missed.

use std::collections::{HashSet, VecDeque};

use nalgebra::{DMatrix, DVector};

use super::condense::ParametricQp;
use super::CriticalRegion;
use crate::error::{Error, Result};
use crate::kernel::{QpSolver, WEAK_MULTIPLIER};
use crate::polytope::{HPolytope, FACET_TOL};

const MIN_RADIUS: f64 = 1e-8;
const RETRY_STEPS: [f64; 2] = [1e-5, 1e-4];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnumerationOptions {
    /// Distance stepped beyond a facet midpoint.
    pub facet_step: f64,
    pub region_budget: usize,
    /// Grid resolution per dimension of the gap-filling sweep; 0 disables.
    pub gap_fill_grid: usize,
}

impl Default for EnumerationOptions {
    fn default() -> Self {
        Self {
            facet_step: 1e-6,
            region_budget: 100_000,
            gap_fill_grid: 60,
        }
    }
}

/// Affine optimiser and region for one active set, or `None` when the
/// active constraints are linearly dependent.
fn region_for(
    pqp: &ParametricQp,
    hinv: &DMatrix<f64>,
    domain: &HPolytope,
    active: &[usize],
) -> Option<CriticalRegion> {
    let nz = pqp.n_vars();
    let nx = pqp.n_params();
    let m = pqp.g.nrows();
    let hinv_f = hinv * &pqp.ftheta;

    let (fz, mu, dual_a, dual_b) = if active.is_empty() {
        (-&hinv_f, DVector::zeros(nz), DMatrix::zeros(0, nx), DVector::zeros(0))
    } else {
        let ga = DMatrix::from_fn(active.len(), nz, |i, j| pqp.g[(active[i], j)]);
        let wa = DVector::from_fn(active.len(), |i, _| pqp.w[active[i]]);
        let sa = DMatrix::from_fn(active.len(), nx, |i, j| pqp.s[(active[i], j)]);
        let hg = hinv * ga.transpose();
        let mmat = &ga * &hg;
        let mlu = mmat.lu();
        if !mlu.is_invertible() {
            return None;
        }
        let t = &sa + &ga * &hinv_f;
        let minv_t = mlu.solve(&t)?;
        let minv_w = mlu.solve(&wa)?;
        if !minv_t.iter().chain(minv_w.iter()).all(|x| x.is_finite()) {
            return None;
        }
        // lambda(x) = -M^-1 (w_A + T x) >= 0
        let fz = -&hinv_f + &hg * &minv_t;
        let mu = &hg * &minv_w;
        (fz, mu, minv_t, -minv_w)
    };

    let inactive: Vec<usize> = (0..m).filter(|i| active.binary_search(i).is_err()).collect();
    let rows = inactive.len() + dual_a.nrows() + domain.n_rows();
    let mut ra = DMatrix::zeros(rows, nx);
    let mut rb = DVector::zeros(rows);
    let gf = &pqp.g * &fz - &pqp.s;
    let gmu = &pqp.g * &mu;
    for (r, &i) in inactive.iter().enumerate() {
        ra.row_mut(r).copy_from(&gf.row(i));
        rb[r] = pqp.w[i] - gmu[i];
    }
    let off = inactive.len();
    for r in 0..dual_a.nrows() {
        ra.row_mut(off + r).copy_from(&dual_a.row(r));
        rb[off + r] = dual_b[r];
    }
    let off = off + dual_a.nrows();
    ra.view_mut((off, 0), (domain.n_rows(), nx)).copy_from(domain.a());
    rb.rows_mut(off, domain.n_rows()).copy_from(domain.b());

    let poly = prefilter(HPolytope::new(ra, rb), domain);
    let (_, radius) = poly.chebyshev_ball()?;
    if radius <= MIN_RADIUS {
        return None;
    }
    let region = poly.remove_redundant().ok()?;
    Some(CriticalRegion {
        region,
        f: fz,
        mu,
        active_set: active.to_vec(),
    })
}

/// Drops rows that no point of the (box-shaped) domain can violate; this is
/// exact and saves most of the redundancy LPs on long horizons.
fn prefilter(p: HPolytope, domain: &HPolytope) -> HPolytope {
    let Ok((lo, hi)) = domain.bounding_box() else {
        return p;
    };
    let d = p.dim();
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for i in 0..p.n_rows() {
        let reach: f64 = (0..d)
            .map(|j| {
                let a = p.a()[(i, j)];
                if a > 0.0 {
                    a * hi[j]
                } else {
                    a * lo[j]
                }
            })
            .sum();
        if reach > p.b()[i] - FACET_TOL {
            rows.push(p.a().row(i).iter().cloned().collect::<Vec<_>>());
            rhs.push(p.b()[i]);
        }
    }
    if rows.is_empty() {
        return domain.clone();
    }
    HPolytope::from_rows(&rows, &rhs)
}

/// Midpoint and outward normal of every facet of a 2-D region.
fn facets(region: &HPolytope) -> Vec<(DVector<f64>, DVector<f64>)> {
    let Ok(verts) = region.vertices() else {
        return vec![];
    };
    let mut out = Vec::new();
    for i in 0..region.n_rows() {
        let a = region.a().row(i).transpose();
        let b = region.b()[i];
        let on: Vec<&Vec<f64>> = verts
            .vertices
            .iter()
            .filter(|v| (a[0] * v[0] + a[1] * v[1] - b).abs() <= 1e-7 * (1.0 + b.abs()))
            .collect();
        if on.len() < 2 {
            continue;
        }
        // extreme pair along the facet direction
        let dir = [-a[1], a[0]];
        let proj = |v: &Vec<f64>| v[0] * dir[0] + v[1] * dir[1];
        let lo = on.iter().min_by(|x, y| proj(x).total_cmp(&proj(y))).unwrap();
        let hi = on.iter().max_by(|x, y| proj(x).total_cmp(&proj(y))).unwrap();
        let mid = DVector::from_vec(vec![0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])]);
        out.push((mid, a));
    }
    out
}

struct Explorer<'a> {
    pqp: &'a ParametricQp,
    domain: &'a HPolytope,
    solver: QpSolver,
    hinv: DMatrix<f64>,
    regions: Vec<CriticalRegion>,
    seen: HashSet<Vec<usize>>,
    budget: usize,
}

enum Probe {
    /// Point is outside the domain, already covered, or QP-infeasible.
    Nothing,
    /// A region with this active set already exists.
    Known,
    /// The active set gives no full-dimensional region.
    Degenerate,
    Added(usize),
}

impl<'a> Explorer<'a> {
    fn covered(&self, x: &DVector<f64>) -> bool {
        self.regions.iter().any(|r| r.region.contains(x.as_slice(), 0.0))
    }

    fn probe(&mut self, x: &DVector<f64>) -> Result<Probe> {
        if !self.domain.contains(x.as_slice(), 0.0) || self.covered(x) {
            return Ok(Probe::Nothing);
        }
        let sol = self
            .solver
            .solve(&self.pqp.linear_term(x), &self.pqp.rhs(x))?;
        if !sol.is_optimal() {
            return Ok(Probe::Nothing);
        }
        let active: Vec<usize> = sol
            .active_set
            .iter()
            .cloned()
            .filter(|&i| sol.lambda[i] > WEAK_MULTIPLIER)
            .collect();
        if self.seen.contains(&active) {
            return Ok(Probe::Known);
        }
        match region_for(self.pqp, &self.hinv, self.domain, &active) {
            Some(cr) => {
                if self.regions.len() >= self.budget {
                    return Err(Error::RegionBudgetExceeded(self.budget));
                }
                self.seen.insert(active);
                self.regions.push(cr);
                Ok(Probe::Added(self.regions.len() - 1))
            }
            None => Ok(Probe::Degenerate),
        }
    }

    fn walk(&mut self, start: usize, step: f64) -> Result<()> {
        let mut queue: VecDeque<usize> = VecDeque::from([start]);
        while let Some(idx) = queue.pop_front() {
            for (mid, normal) in facets(&self.regions[idx].region) {
                for s in std::iter::once(step).chain(RETRY_STEPS) {
                    let x = &mid + &normal * s;
                    match self.probe(&x)? {
                        Probe::Added(k) => {
                            queue.push_back(k);
                            break;
                        }
                        Probe::Degenerate => continue,
                        Probe::Nothing | Probe::Known => break,
                    }
                }
            }
        }
        Ok(())
    }
}

/// Explores all full-dimensional critical regions of `pqp` inside `domain`
/// (a bounded 2-D set; the state constraint at step 0). Regions come back
/// sorted by decreasing Chebyshev radius.
pub fn enumerate_regions(
    pqp: &ParametricQp,
    domain: &HPolytope,
    opts: &EnumerationOptions,
) -> Result<Vec<CriticalRegion>> {
    if pqp.n_params() != 2 || domain.dim() != 2 {
        return Err(Error::Dimension("region enumeration needs a 2-D parameter".into()));
    }
    let solver = QpSolver::new(&pqp.h, &pqp.g)?;
    let hinv = pqp
        .h
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Dimension("condensed Hessian is not positive definite".into()))?
        .inverse();
    let mut ex = Explorer {
        pqp,
        domain,
        solver,
        hinv,
        regions: Vec::new(),
        seen: HashSet::new(),
        budget: opts.region_budget,
    };

    let (lo, hi) = domain.bounding_box()?;
    let mut seeds = vec![DVector::zeros(2)];
    let n = opts.gap_fill_grid;
    if n > 0 {
        for i in 0..n {
            for j in 0..n {
                let t = |k: usize, d: usize| lo[d] + (hi[d] - lo[d]) * (k as f64 + 0.5) / n as f64;
                seeds.push(DVector::from_vec(vec![t(i, 0), t(j, 1)]));
            }
        }
    }
    for seed in &seeds {
        if let Probe::Added(k) = ex.probe(seed)? {
            ex.walk(k, opts.facet_step)?;
        }
    }
    if ex.regions.is_empty() {
        return Err(Error::EmptyFeasibleSet);
    }

    let mut regions = ex.regions;
    let mut keyed: Vec<(f64, CriticalRegion)> = regions
        .drain(..)
        .map(|r| (r.region.chebyshev_ball().map_or(0.0, |(_, rad)| rad), r))
        .collect();
    keyed.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.active_set.cmp(&b.1.active_set)));
    Ok(keyed.into_iter().map(|(_, r)| r).collect())
}
