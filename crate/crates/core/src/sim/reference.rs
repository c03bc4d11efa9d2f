use nalgebra::{DMatrix, DVector};

use crate::config::ReferenceSpec;
use crate::error::{Error, Result};
use crate::kernel::LinearSystem2D;
use crate::polytope::VPolytope;
use crate::runtime::{State3, TrackingReference};

/// Samples a reference over `duration` at period `ts` (`duration / ts + 1`
/// samples). `phase` rotates circle references about the vertical axis.
///
/// Circle inputs are the least-squares inputs steering the sampled
/// reference state toward the analytic circle, `v_k = B⁺(ξ_a(t_{k+1}) -
/// A ξ_k)`, and the reference state is propagated with exactly those
/// inputs, so it obeys the discrete dynamics by construction.
pub fn make_reference(kind: &ReferenceSpec, duration: f64, ts: f64, phase: f64) -> Result<TrackingReference> {
    let n = (duration / ts).round() as usize + 1;
    let reference = match *kind {
        ReferenceSpec::Setpoint { x, y, z } => {
            let mut r = TrackingReference::setpoint(ts, [x, y, z]);
            r.xi_ref = vec![r.xi_ref[0]; n];
            r.v_ref = vec![[0.0; 3]; n];
            r
        }
        ReferenceSpec::WaypointSquare { side, period, altitude } => {
            let h = 0.5 * side;
            let corners = [[h, h], [-h, h], [-h, -h], [h, -h]];
            let xi_ref = (0..n)
                .map(|k| {
                    let c = corners[((k as f64 * ts / period + 1e-9).floor() as usize) % 4];
                    [[c[0], 0.0], [c[1], 0.0], [altitude, 0.0]]
                })
                .collect();
            TrackingReference {
                ts,
                xi_ref,
                v_ref: vec![[0.0; 3]; n],
                vc_ref_bound: VPolytope::singleton(&[0.0; 3]),
            }
        }
        ReferenceSpec::Circle {
            radius,
            angular_rate,
            altitude,
        } => circle(radius, angular_rate, altitude, n, ts, phase)?,
    };
    Ok(reference)
}

fn analytic_circle(rho: f64, w: f64, h: f64, t: f64, phase: f64) -> State3 {
    let a = w * t + phase;
    [
        [rho * a.cos(), -rho * w * a.sin()],
        [rho * a.sin(), rho * w * a.cos()],
        [h, 0.0],
    ]
}

fn circle(rho: f64, w: f64, h: f64, n: usize, ts: f64, phase: f64) -> Result<TrackingReference> {
    let sys = LinearSystem2D::double_integrator(ts);
    let a = sys.a();
    let b = sys.b();
    let bpinv: DMatrix<f64> = (b.transpose() * &b)
        .try_inverse()
        .ok_or_else(|| Error::ReferenceInconsistent("degenerate input map".into()))?
        * b.transpose();
    let mut xi_ref = vec![analytic_circle(rho, w, h, 0.0, phase)];
    let mut v_ref = Vec::with_capacity(n);
    for k in 0..n {
        let target = analytic_circle(rho, w, h, (k + 1) as f64 * ts, phase);
        let mut v = [0.0; 3];
        let mut next = [[0.0; 2]; 3];
        for i in 0..3 {
            let x = DVector::from_row_slice(&xi_ref[k][i]);
            let t = DVector::from_row_slice(&target[i]);
            v[i] = (&bpinv * (t - &a * &x))[0];
            next[i] = sys.step(xi_ref[k][i], v[i]);
        }
        v_ref.push(v);
        if k + 1 < n {
            xi_ref.push(next);
        }
    }
    let vc_ref_bound = VPolytope::new(v_ref.iter().map(|v| v.to_vec()).collect());
    let r = TrackingReference {
        ts,
        xi_ref,
        v_ref,
        vc_ref_bound,
    };
    r.validate()?;
    Ok(r)
}
