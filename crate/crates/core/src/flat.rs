//! Flatness layer: the translational accelerations produced by
//! thrust/roll/pitch, their exact inverse, and the flat-space input set.
//!
//! With yaw `psi` measured, a flat input `v` (desired acceleration in the
//! inertial frame) maps to `u = (T, phi, theta)` such that the plant
//! accelerations equal `v` exactly. The admissible flat inputs form
//!
//! ```text
//! Vc = { v : v1² + v2² + (v3 + g)² <= T_max²,
//!            v1² + v2² <= (v3 + g)² tan²(eps_max),
//!            v3 >= -g }
//! ```
//!
//! which is approximated from inside by a polytope and by an origin-centred
//! box.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polytope::{hull, HPolytope};

const VC_TOL: f64 = 1e-9;

/// Normalised thrust (m/s²), roll and pitch (rad).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalInput {
    pub thrust: f64,
    pub phi: f64,
    pub theta: f64,
}

impl PhysicalInput {
    pub fn new(thrust: f64, phi: f64, theta: f64) -> Self {
        Self { thrust, phi, theta }
    }

    /// Largest violation of `0 <= T <= T_max, |phi|, |theta| <= eps_max`.
    pub fn violation(&self, p: &VcParams) -> f64 {
        [
            -self.thrust,
            self.thrust - p.t_max,
            self.phi.abs() - p.eps_max,
            self.theta.abs() - p.eps_max,
        ]
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn in_u(&self, p: &VcParams, tol: f64) -> bool {
        self.violation(p) <= tol
    }
}

/// Flat-space acceleration command (m/s²).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlatInput(pub [f64; 3]);

impl FlatInput {
    pub fn new(v1: f64, v2: f64, v3: f64) -> Self {
        Self([v1, v2, v3])
    }

    pub fn in_linearizing_domain(&self, g: f64) -> bool {
        self.0[2] >= -g
    }
}

/// Physical limits feeding the flat-space constraint set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VcParams {
    pub t_max: f64,
    pub eps_max: f64,
    pub g: f64,
}

impl Default for VcParams {
    fn default() -> Self {
        let g = 9.81;
        Self {
            t_max: 1.45 * g,
            eps_max: 0.1745,
            g,
        }
    }
}

impl VcParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.t_max > 0.0
            && self.eps_max > 0.0
            && self.eps_max < std::f64::consts::FRAC_PI_2
            && self.g > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid input-set parameters {self:?}")))
        }
    }

    /// Radius of the sphere/cone intersection ring.
    pub fn ring_radius(&self) -> f64 {
        self.t_max * self.eps_max.sin()
    }

    /// Height of the sphere/cone intersection ring.
    pub fn ring_height(&self) -> f64 {
        self.t_max * self.eps_max.cos() - self.g
    }
}

/// Result of inverting a flat input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Inversion {
    pub input: PhysicalInput,
    /// Zero thrust: attitude is undefined and reported as zero.
    pub singular_hover: bool,
}

/// Translational accelerations `(h1, h2, h3)` produced by `u` at yaw `psi`.
pub fn plant_accel(u: &PhysicalInput, psi: f64, g: f64) -> [f64; 3] {
    let (sphi, cphi) = u.phi.sin_cos();
    let (sth, cth) = u.theta.sin_cos();
    let (spsi, cpsi) = psi.sin_cos();
    [
        u.thrust * (cphi * sth * cpsi + sphi * spsi),
        u.thrust * (cphi * sth * spsi - sphi * cpsi),
        -g + u.thrust * cphi * cth,
    ]
}

/// Thrust, roll and pitch realising the flat input `v` at yaw `psi`.
pub fn flat_to_physical(v: &FlatInput, psi: f64, g: f64) -> Result<Inversion> {
    let [v1, v2, v3] = v.0;
    if v3 < -g {
        return Err(Error::OutsideFlatDomain { v3, neg_g: -g });
    }
    let lift = v3 + g;
    let thrust = (v1 * v1 + v2 * v2 + lift * lift).sqrt();
    if thrust == 0.0 {
        return Ok(Inversion {
            input: PhysicalInput::new(0.0, 0.0, 0.0),
            singular_hover: true,
        });
    }
    let (spsi, cpsi) = psi.sin_cos();
    let phi = ((v1 * spsi - v2 * cpsi) / thrust).clamp(-1.0, 1.0).asin();
    // atan2 keeps the v3 = -g edge (lift = 0) finite; for lift > 0 it equals
    // arctan of the ratio
    let theta = (v1 * cpsi + v2 * spsi).atan2(lift);
    Ok(Inversion {
        input: PhysicalInput::new(thrust, phi, theta),
        singular_hover: false,
    })
}

/// Membership in the exact flat-space input set (tolerance `1e-9`).
pub fn vc_contains(v: &FlatInput, p: &VcParams) -> bool {
    vc_violation(v, p) <= VC_TOL
}

/// Largest violation among the three defining inequalities, each in its
/// natural squared units for the first two.
pub fn vc_violation(v: &FlatInput, p: &VcParams) -> f64 {
    let [v1, v2, v3] = v.0;
    let lift = v3 + p.g;
    let horiz = v1 * v1 + v2 * v2;
    let tan2 = p.eps_max.tan().powi(2);
    let sphere = horiz + lift * lift - p.t_max * p.t_max;
    let cone = horiz - lift * lift * tan2;
    let floor = -lift;
    sphere.max(cone).max(floor)
}

/// `n` evenly spaced values over `[a, b]`, endpoints included.
pub fn linspace(n: usize, a: f64, b: f64) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![a],
        _ => (0..n)
            .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// Generator points of the polytopic inner approximation: the cone apex,
/// `l1` ring points and `l2` circles on the spherical cap. Coincident points
/// are not yet merged.
pub fn vc_generators(p: &VcParams, l1: usize, l2: usize) -> Vec<Vec<f64>> {
    let ring_r = p.ring_radius();
    let ring_z = p.ring_height();
    let mut pts = vec![vec![0.0, 0.0, -p.g]];
    let angles = linspace(l1, 0.0, 2.0 * std::f64::consts::PI);
    for &a in &angles {
        pts.push(vec![ring_r * a.cos(), ring_r * a.sin(), ring_z]);
    }
    for r in linspace(l2, 0.0, ring_r) {
        let z = (p.t_max * p.t_max - r * r).max(0.0).sqrt() - p.g;
        for &a in &angles {
            pts.push(vec![r * a.cos(), r * a.sin(), z]);
        }
    }
    pts
}

/// Polytopic inner approximation of `Vc` from `l1` angles and `l2` cap radii.
pub fn build_vc_polytope(p: &VcParams, l1: usize, l2: usize) -> Result<HPolytope> {
    p.validate()?;
    if l1 < 3 || l2 < 1 {
        return Err(Error::Config(format!("need l1 >= 3 and l2 >= 1, got ({l1}, {l2})")));
    }
    // the hull deduplicates at 1e-12 before triangulating
    hull(&vc_generators(p, l1, l2))
}

/// Half-widths of an origin-centred box `|v_i| <= vbar_i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InscribedBox {
    pub vbar: [f64; 3],
}

impl InscribedBox {
    pub fn corners(&self) -> Vec<FlatInput> {
        let mut out = Vec::with_capacity(8);
        for s1 in [-1.0, 1.0] {
            for s2 in [-1.0, 1.0] {
                for s3 in [-1.0, 1.0] {
                    out.push(FlatInput::new(s1 * self.vbar[0], s2 * self.vbar[1], s3 * self.vbar[2]));
                }
            }
        }
        out
    }

    pub fn volume(&self) -> f64 {
        8.0 * self.vbar.iter().product::<f64>()
    }

    pub fn scaled(&self, beta: f64) -> Self {
        Self {
            vbar: self.vbar.map(|x| x * beta),
        }
    }

    pub fn contains(&self, v: &FlatInput, tol: f64) -> bool {
        v.0.iter().zip(self.vbar.iter()).all(|(x, b)| x.abs() <= b + tol)
    }

    pub fn as_polytope(&self) -> HPolytope {
        HPolytope::symmetric_box(&self.vbar)
    }
}

/// Closed-form maximum-volume origin-centred box inside `Vc`.
///
/// Either the thrust sphere binds at the top corners (cone slack) or the
/// tilt cone binds at the bottom corners, in which case the vertical
/// half-width is `g/3` regardless of `T_max`. For very wide tilt limits
/// neither alone is admissible and both bind.
pub fn max_inscribed_box(p: &VcParams) -> InscribedBox {
    let g = p.g;
    let c = (-2.0 * g + (g * g + 3.0 * p.t_max * p.t_max).sqrt()) / 3.0;
    let tan2 = p.eps_max.tan().powi(2);
    let branch = 2.0 * c * (g + c) - tan2 * (c - g).powi(2);
    if branch < 0.0 {
        let h = (c * (c + g)).sqrt();
        InscribedBox { vbar: [h, h, c] }
    } else {
        let v3 = g / 3.0;
        let h = p.eps_max.tan() * (v3 * (g - v3)).sqrt();
        if 2.0 * h * h + (g + v3).powi(2) <= p.t_max * p.t_max {
            return InscribedBox { vbar: [h, h, v3] };
        }
        // wide tilt limits: both surfaces bind, at the height where the cone
        // (bottom corners) and the sphere (top corners) admit the same width
        let a = 1.0 + tan2;
        let b = 2.0 * g * (1.0 - tan2);
        let cc = a * g * g - p.t_max * p.t_max;
        let disc = (b * b - 4.0 * a * cc).max(0.0).sqrt();
        let best = [(-b + disc) / (2.0 * a), (-b - disc) / (2.0 * a)]
            .into_iter()
            .filter(|c| *c > 0.0 && *c < g)
            .map(|c| (c, (0.5 * tan2 * (g - c).powi(2)).sqrt()))
            .max_by(|x, y| (x.0 * x.1 * x.1).total_cmp(&(y.0 * y.1 * y.1)))
            .unwrap_or((v3, h));
        InscribedBox { vbar: [best.1, best.1, best.0] }
    }
}

/// Largest `beta in (0, 1]` with `beta * nominal` inside `delta_vc`.
pub fn scaled_tracking_box(delta_vc: &HPolytope, nominal: &InscribedBox) -> Result<InscribedBox> {
    let a = delta_vc.a();
    let b = delta_vc.b();
    let mut beta: f64 = 1.0;
    for i in 0..delta_vc.n_rows() {
        if b[i] <= 0.0 {
            return Err(Error::TrackingBoxEmpty);
        }
        let reach: f64 = (0..3).map(|j| a[(i, j)].abs() * nominal.vbar[j]).sum();
        if reach > 0.0 {
            beta = beta.min(b[i] / reach);
        }
    }
    Ok(nominal.scaled(beta))
}
