//! Online evaluation of explicit controllers: sequential point location,
//! affine law evaluation and the three-axis control step.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flat::{flat_to_physical, FlatInput, PhysicalInput};
use crate::kernel::LinearSystem2D;
use crate::polytope::{VPolytope, FACET_TOL};
use crate::synth::AxisController;

/// Per-axis state `(position, velocity)` for the three flat axes.
pub type State3 = [[f64; 2]; 3];

/// Index of the first stored region containing `xi`.
pub fn locate(ctrl: &AxisController, xi: &[f64; 2]) -> Option<usize> {
    ctrl.regions
        .iter()
        .position(|r| r.region.contains(xi, FACET_TOL))
}

/// First optimal input at `xi`, with the region that produced it.
pub fn evaluate(ctrl: &AxisController, xi: &[f64; 2], axis: usize) -> Result<(f64, usize)> {
    let idx = locate(ctrl, xi).ok_or(Error::InfeasibleState {
        axis,
        p: xi[0],
        v: xi[1],
    })?;
    Ok((ctrl.regions[idx].first_input(xi), idx))
}

/// Reference states and feedforward inputs sampled at the controller rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackingReference {
    pub ts: f64,
    pub xi_ref: Vec<State3>,
    pub v_ref: Vec<[f64; 3]>,
    /// Encloses every `v_ref` sample.
    pub vc_ref_bound: VPolytope,
}

impl TrackingReference {
    /// Holds `p` at rest forever.
    pub fn setpoint(ts: f64, p: [f64; 3]) -> Self {
        Self {
            ts,
            xi_ref: vec![[[p[0], 0.0], [p[1], 0.0], [p[2], 0.0]]],
            v_ref: vec![[0.0; 3]],
            vc_ref_bound: VPolytope::singleton(&[0.0, 0.0, 0.0]),
        }
    }

    pub fn len(&self) -> usize {
        self.xi_ref.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xi_ref.is_empty()
    }

    /// Sample `k`, holding the last one beyond the end.
    pub fn at(&self, k: usize) -> (State3, [f64; 3]) {
        let i = k.min(self.len() - 1);
        (self.xi_ref[i], self.v_ref[i.min(self.v_ref.len() - 1)])
    }

    pub fn position(&self, k: usize) -> [f64; 3] {
        let (xi, _) = self.at(k);
        [xi[0][0], xi[1][0], xi[2][0]]
    }

    /// Largest `|xi_{k+1} - A xi_k - B v_k|` over the stored samples.
    pub fn consistency_residual(&self) -> f64 {
        let sys = LinearSystem2D::double_integrator(self.ts);
        let mut worst: f64 = 0.0;
        for k in 0..self.len().saturating_sub(1) {
            for i in 0..3 {
                let next = sys.step(self.xi_ref[k][i], self.v_ref[k][i]);
                for j in 0..2 {
                    worst = worst.max((next[j] - self.xi_ref[k + 1][i][j]).abs());
                }
            }
        }
        worst
    }

    /// Checks that the samples follow the double-integrator dynamics and
    /// stay inside the declared input bound.
    pub fn validate(&self) -> Result<()> {
        if self.is_empty() || self.v_ref.len() != self.len() {
            return Err(Error::ReferenceInconsistent("state and input sample counts differ".into()));
        }
        let res = self.consistency_residual();
        if res > 1e-9 {
            return Err(Error::ReferenceInconsistent(format!("dynamics residual {res:.3e}")));
        }
        let outside = self.v_ref.iter().any(|v| {
            (0..3).any(|i| {
                let mut e = [0.0; 3];
                e[i] = 1.0;
                let up = self.vc_ref_bound.support(&e);
                e[i] = -1.0;
                let down = -self.vc_ref_bound.support(&e);
                v[i] > up + 1e-12 || v[i] < down - 1e-12
            })
        });
        if outside {
            return Err(Error::ReferenceInconsistent("input sample outside its bound".into()));
        }
        Ok(())
    }
}

/// Result of one three-axis control evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutput {
    pub u: PhysicalInput,
    pub v: FlatInput,
    /// Feedback part `v - v_ref`.
    pub dv: [f64; 3],
    pub regions: [usize; 3],
    pub eval_time: Duration,
    pub singular_hover: bool,
}

/// Evaluates the three axis laws on the tracking error (or the state itself
/// without a reference), adds the feedforward input and inverts the flat
/// map. `eval_time` covers point location and law evaluation only.
pub fn control_step(
    ctrls: &[AxisController],
    state: &State3,
    psi: f64,
    g: f64,
    reference: Option<&TrackingReference>,
    k: usize,
) -> Result<StepOutput> {
    if ctrls.len() != 3 {
        return Err(Error::Dimension(format!("expected 3 axis controllers, got {}", ctrls.len())));
    }
    let (xi_ref, v_ref) = reference.map_or(([[0.0; 2]; 3], [0.0; 3]), |r| r.at(k));
    let start = Instant::now();
    let mut dv = [0.0; 3];
    let mut regions = [0; 3];
    for i in 0..3 {
        let err = [state[i][0] - xi_ref[i][0], state[i][1] - xi_ref[i][1]];
        let (vi, ri) = evaluate(&ctrls[i], &err, i)?;
        dv[i] = vi;
        regions[i] = ri;
    }
    let eval_time = start.elapsed();
    let v = FlatInput::new(dv[0] + v_ref[0], dv[1] + v_ref[1], dv[2] + v_ref[2]);
    let inv = flat_to_physical(&v, psi, g)?;
    Ok(StepOutput {
        u: inv.input,
        v,
        dv,
        regions,
        eval_time,
        singular_hover: inv.singular_hover,
    })
}
