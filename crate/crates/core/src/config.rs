//! Scenario configuration file. Every field is optional; omitted fields take
//! the reference values (sampling 0.1 s, 60 s runs, `Q = diag(50, 5)`,
//! `R = 10`, position bound 1.5 m, velocity bounds 1/1/1.5 m/s, thrust limit
//! 1.45 g, tilt limit 0.1745 rad). Unknown keys are rejected.
//!
//! Units: m, m/s, m/s², rad, s.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flat::VcParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControllerKind {
    ExplicitDecoupled,
    ImplicitDecoupled,
    ImplicitCoupled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ReferenceSpec {
    /// Regulation to a fixed position.
    Setpoint { x: f64, y: f64, z: f64 },
    /// Counter-clockwise circle about the vertical axis, starting at
    /// `(radius, 0, altitude)`.
    Circle {
        radius: f64,
        angular_rate: f64,
        altitude: f64,
    },
    /// Square of corners `(±side/2, ±side/2, altitude)`, each held for
    /// `period` seconds, visited counter-clockwise from `(+, +)`.
    WaypointSquare { side: f64, period: f64, altitude: f64 },
}

impl Default for ReferenceSpec {
    fn default() -> Self {
        ReferenceSpec::Setpoint { x: 0.0, y: 0.0, z: 0.0 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputPaths {
    pub controller: Option<PathBuf>,
    pub trace: Option<PathBuf>,
    pub summary: Option<PathBuf>,
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub ts: f64,
    pub vc: VcParams,
    pub q: [[f64; 2]; 2],
    pub r: f64,
    pub np: usize,
    pub pbar: [f64; 3],
    pub velbar: [f64; 3],
    /// Input half-widths; defaults to the largest box inside the exact
    /// flat-space input set.
    pub vbar: Option<[f64; 3]>,
    pub xi0: [[f64; 2]; 3],
    pub duration: f64,
    pub controller: ControllerKind,
    pub reference: ReferenceSpec,
    pub psi: f64,
    pub n_drones: usize,
    pub seed: u64,
    /// Resolution of the polytopic input set (angles, cap radii).
    pub l1: usize,
    pub l2: usize,
    pub gap_fill_grid: usize,
    pub region_budget: usize,
    pub outputs: OutputPaths,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            ts: 0.1,
            vc: VcParams::default(),
            q: [[50.0, 0.0], [0.0, 5.0]],
            r: 10.0,
            np: 30,
            pbar: [1.5; 3],
            velbar: [1.0, 1.0, 1.5],
            vbar: None,
            xi0: [[1.25, -0.8], [0.0, 0.2], [0.5, 0.2]],
            duration: 60.0,
            controller: ControllerKind::ExplicitDecoupled,
            reference: ReferenceSpec::default(),
            psi: 0.0,
            n_drones: 1,
            seed: 0,
            l1: 16,
            l2: 4,
            gap_fill_grid: 60,
            region_budget: 100_000,
            outputs: OutputPaths::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Number of control steps; the trace has one more row.
    pub fn steps(&self) -> usize {
        (self.duration / self.ts).round() as usize
    }

    // negated comparisons so that NaN fails every check
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(msg.to_string()));
        self.vc.validate()?;
        if !(self.ts > 0.0) || !(self.duration >= 0.0) {
            return bad("ts must be positive and duration non-negative");
        }
        let ratio = self.duration / self.ts;
        if (ratio - ratio.round()).abs() > 1e-9 * ratio.max(1.0) {
            return bad("duration must be an integer multiple of ts");
        }
        if self.np == 0 || !(self.r > 0.0) {
            return bad("np must be >= 1 and r positive");
        }
        let q = self.q;
        if q[0][1] != q[1][0] || !(q[0][0] > 0.0) || !(q[0][0] * q[1][1] - q[0][1] * q[1][0] > 0.0) {
            return bad("q must be symmetric positive definite");
        }
        let positive = |v: &[f64; 3]| v.iter().all(|x| *x > 0.0 && x.is_finite());
        if !positive(&self.pbar) || !positive(&self.velbar) {
            return bad("state bounds must be positive");
        }
        if let Some(v) = &self.vbar {
            if !positive(v) {
                return bad("input half-widths must be positive");
            }
        }
        if self.n_drones == 0 {
            return bad("n_drones must be at least 1");
        }
        if self.region_budget == 0 {
            return bad("region_budget must be at least 1");
        }
        if self.l1 < 3 || self.l2 < 1 {
            return bad("l1 must be >= 3 and l2 >= 1");
        }
        match self.reference {
            ReferenceSpec::Circle { radius, angular_rate, .. } => {
                if radius < 0.0 || !angular_rate.is_finite() {
                    return bad("circle radius must be non-negative");
                }
            }
            ReferenceSpec::WaypointSquare { side, period, .. } => {
                if side < 0.0 || !(period > 0.0) {
                    return bad("square side must be non-negative and period positive");
                }
            }
            ReferenceSpec::Setpoint { .. } => {}
        }
        Ok(())
    }

    /// Whether the reference is tracked with feedforward (otherwise the
    /// controllers regulate to piecewise-constant setpoints).
    pub fn is_tracking(&self) -> bool {
        matches!(self.reference, ReferenceSpec::Circle { .. })
    }
}
