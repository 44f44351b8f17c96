//! Horizontal lift `q' = sum_i u_i X_i` in the polynomial chart of the free
//! step-2 group:
//!
//! ```text
//! X_i  = d/dx_i - sum_{j>i} (x_j/2) d/dx_ij + sum_{j<i} (x_j/2) d/dx_ji
//! X_ij = d/dx_ij
//! ```
//!
//! so that `x_i' = u_i` and `x_ij' = (x_i u_j - x_j u_i)/2` for `i < j`. The
//! identity element is the origin.

use crate::convex_bodies::ControlBody;
use crate::error::{Error, Result};
use crate::extremal_flow::{drive, is_equilibrium, FlowOptions, Trajectory, VerticalState};
use crate::lie_structure::{AlgebraSpec, SkewMatrix};
use crate::ode::OdeSystem;

#[derive(Debug, Clone, PartialEq)]
pub struct GroupPoint {
    /// First-level coordinates `x_1..x_k`.
    pub x: Vec<f64>,
    /// Second-level coordinates `x_ij`, `i < j`, in flat pair order.
    pub y: Vec<f64>,
}

impl GroupPoint {
    pub fn identity(spec: AlgebraSpec) -> Self {
        Self { x: vec![0.0; spec.rank()], y: vec![0.0; spec.pair_count()] }
    }

    pub fn new(spec: AlgebraSpec, x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != spec.rank() {
            return Err(Error::DimensionMismatch { expected: spec.rank(), got: x.len() });
        }
        if y.len() != spec.pair_count() {
            return Err(Error::DimensionMismatch { expected: spec.pair_count(), got: y.len() });
        }
        Ok(Self { x, y })
    }

    fn from_state(state: &[f64], k: usize) -> Self {
        Self { x: state[k..2 * k].to_vec(), y: state[2 * k..].to_vec() }
    }
}

/// Tangent vector `(x', x_ij')` at a group point.
#[derive(Debug, Clone, PartialEq)]
pub struct HorizontalVelocity {
    pub dx: Vec<f64>,
    pub dy: Vec<f64>,
}

fn lift_into(spec: AlgebraSpec, x: &[f64], u: &[f64], dx: &mut [f64], dy: &mut [f64]) {
    dx.copy_from_slice(u);
    for ((i, j), d) in spec.pairs().zip(dy.iter_mut()) {
        *d = 0.5 * (x[i] * u[j] - x[j] * u[i]);
    }
}

pub fn horizontal_rhs(spec: AlgebraSpec, q: &GroupPoint, u: &[f64]) -> Result<HorizontalVelocity> {
    let k = spec.rank();
    for len in [q.x.len(), u.len()] {
        if len != k {
            return Err(Error::DimensionMismatch { expected: k, got: len });
        }
    }
    if q.y.len() != spec.pair_count() {
        return Err(Error::DimensionMismatch { expected: spec.pair_count(), got: q.y.len() });
    }
    let mut v = HorizontalVelocity { dx: vec![0.0; k], dy: vec![0.0; spec.pair_count()] };
    lift_into(spec, &q.x, u, &mut v.dx, &mut v.dy);
    Ok(v)
}

/// Coupled vertical and horizontal system with state `(h, x, y)`.
#[derive(Debug, Clone, Copy)]
pub struct LiftedFlow<'a> {
    m: &'a SkewMatrix,
    body: &'a ControlBody,
    frozen: bool,
}

impl<'a> LiftedFlow<'a> {
    pub fn new(m: &'a SkewMatrix, body: &'a ControlBody) -> Self {
        Self { m, body, frozen: false }
    }

    /// Lift of an equilibrium covector: `h' = 0`, constant control.
    pub fn stationary(m: &'a SkewMatrix, body: &'a ControlBody) -> Self {
        Self { m, body, frozen: true }
    }
}

impl OdeSystem for LiftedFlow<'_> {
    fn dim(&self) -> usize {
        let k = self.m.k();
        2 * k + self.m.spec().pair_count()
    }

    fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) -> Result<()> {
        let k = self.m.k();
        let (h, rest) = y.split_at(k);
        let x = &rest[..k];
        let mut u = vec![0.0; k];
        self.body.gradient_into(h, &mut u).map_err(|e| match e {
            Error::NonDifferentiable => Error::AbnormalCovector,
            other => other,
        })?;
        let (dh, drest) = dy.split_at_mut(k);
        let (dx, dyy) = drest.split_at_mut(k);
        if self.frozen {
            dh.fill(0.0);
        } else {
            self.m.apply_into(&u, dh, -1.0);
        }
        lift_into(self.m.spec(), x, &u, dx, dyy);
        Ok(())
    }

    fn switch_count(&self) -> usize {
        if self.body.has_coordinate_kinks() {
            self.m.k()
        } else {
            0
        }
    }

    fn switches(&self, y: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&y[..out.len()]);
    }
}

#[derive(Debug, Clone)]
pub struct LiftedTrajectory {
    pub vertical: Trajectory,
    pub path: Vec<GroupPoint>,
    pub endpoint: GroupPoint,
}

/// Like [`integrate_horizontal`], returning the recorded prefix on failure.
pub fn integrate_horizontal_partial(
    h0: &[f64],
    m: &SkewMatrix,
    body: &ControlBody,
    t1: f64,
    opts: &FlowOptions,
) -> Result<(LiftedTrajectory, Option<Error>)> {
    let state = VerticalState::normalized(h0, m.clone(), body)?;
    let k = m.k();
    let spec = m.spec();
    let casimirs = m.kernel_basis(opts.kernel_tol);
    let flow = if is_equilibrium(&state.h, m, body, opts.parallel_tol)? {
        LiftedFlow::stationary(m, body)
    } else {
        LiftedFlow::new(m, body)
    };
    let mut y0 = state.h.clone();
    y0.resize(flow.dim(), 0.0);
    let outcome = drive(&flow, &y0, k, (0.0, t1), body, &casimirs, opts)?;
    let vertical = Trajectory::from_samples(&outcome.samples, k, body, casimirs, &outcome)?;
    let path: Vec<GroupPoint> =
        outcome.samples.iter().map(|s| GroupPoint::from_state(&s.state, k)).collect();
    let endpoint = path.last().cloned().unwrap_or_else(|| GroupPoint::identity(spec));
    Ok((LiftedTrajectory { vertical, path, endpoint }, outcome.failure))
}

/// Integrates the extremal `(h(t), q(t))` from `(h0, id)` over `[0, t1]`.
pub fn integrate_horizontal(
    h0: &[f64],
    m: &SkewMatrix,
    body: &ControlBody,
    t1: f64,
    opts: &FlowOptions,
) -> Result<LiftedTrajectory> {
    match integrate_horizontal_partial(h0, m, body, t1, opts)? {
        (traj, None) => Ok(traj),
        (_, Some(e)) => Err(e),
    }
}
