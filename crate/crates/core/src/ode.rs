//! Adaptive Dormand–Prince 5(4) integrator.
//!
//! Off-grid values are produced by re-stepping: a state at time `t` inside an
//! accepted step `[t_n, t_n + h]` is obtained by one Runge–Kutta step of length
//! `t - t_n` from the stored node. The result has the local accuracy of an
//! ordinary step, which is what event refinement needs.

use crate::error::{Error, Result};

pub trait OdeSystem {
    fn dim(&self) -> usize;
    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]) -> Result<()>;

    /// Number of switching functions: scalar functions of the state across
    /// whose zero sets the right-hand side is not smooth.
    fn switch_count(&self) -> usize {
        0
    }

    /// Evaluates the switching functions at `y` into `out`.
    fn switches(&self, _y: &[f64], _out: &mut [f64]) {}
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepControl {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// Upper bound on the step length; `f64::INFINITY` disables it.
    pub max_step: f64,
}

impl Default for StepControl {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
            max_steps: 10_000_000,
            max_step: f64::INFINITY,
        }
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// fifth-order weights minus embedded fourth-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;

struct Stages {
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    k5: Vec<f64>,
    k6: Vec<f64>,
    tmp: Vec<f64>,
}

impl Stages {
    fn new(n: usize) -> Self {
        Self {
            k2: vec![0.0; n],
            k3: vec![0.0; n],
            k4: vec![0.0; n],
            k5: vec![0.0; n],
            k6: vec![0.0; n],
            tmp: vec![0.0; n],
        }
    }
}

/// One Dormand–Prince step of length `h` from `(t, y)` with `f = y'(t)`.
/// Writes the fifth-order solution into `out`; if `err` is given, it receives
/// the difference to the embedded solution and `f_out` the derivative at the
/// new point.
fn rk_step<S: OdeSystem + ?Sized>(
    sys: &S,
    t: f64,
    y: &[f64],
    f: &[f64],
    h: f64,
    st: &mut Stages,
    out: &mut [f64],
    tail: Option<(&mut [f64], &mut [f64])>,
) -> Result<()> {
    let n = y.len();
    for i in 0..n {
        st.tmp[i] = y[i] + h * A21 * f[i];
    }
    sys.rhs(t + C2 * h, &st.tmp, &mut st.k2)?;
    for i in 0..n {
        st.tmp[i] = y[i] + h * (A31 * f[i] + A32 * st.k2[i]);
    }
    sys.rhs(t + C3 * h, &st.tmp, &mut st.k3)?;
    for i in 0..n {
        st.tmp[i] = y[i] + h * (A41 * f[i] + A42 * st.k2[i] + A43 * st.k3[i]);
    }
    sys.rhs(t + C4 * h, &st.tmp, &mut st.k4)?;
    for i in 0..n {
        st.tmp[i] =
            y[i] + h * (A51 * f[i] + A52 * st.k2[i] + A53 * st.k3[i] + A54 * st.k4[i]);
    }
    sys.rhs(t + C5 * h, &st.tmp, &mut st.k5)?;
    for i in 0..n {
        st.tmp[i] = y[i]
            + h * (A61 * f[i] + A62 * st.k2[i] + A63 * st.k3[i] + A64 * st.k4[i] + A65 * st.k5[i]);
    }
    sys.rhs(t + h, &st.tmp, &mut st.k6)?;
    for i in 0..n {
        out[i] = y[i]
            + h * (A71 * f[i] + A73 * st.k3[i] + A74 * st.k4[i] + A75 * st.k5[i] + A76 * st.k6[i]);
    }
    if let Some((err, f_out)) = tail {
        sys.rhs(t + h, out, f_out)?;
        for i in 0..n {
            err[i] = h
                * (E1 * f[i]
                    + E3 * st.k3[i]
                    + E4 * st.k4[i]
                    + E5 * st.k5[i]
                    + E6 * st.k6[i]
                    + E7 * f_out[i]);
        }
    }
    Ok(())
}

fn scaled_rms(v: &[f64], y0: &[f64], y1: &[f64], ctl: &StepControl) -> f64 {
    let n = v.len().max(1) as f64;
    let sum: f64 = v
        .iter()
        .zip(y0.iter().zip(y1))
        .map(|(e, (a, b))| {
            let sc = ctl.atol + ctl.rtol * a.abs().max(b.abs());
            (e / sc).powi(2)
        })
        .sum();
    (sum / n).sqrt()
}

/// Stored accepted node: time, state and derivative.
#[derive(Debug, Clone)]
pub struct Node {
    pub t: f64,
    pub y: Vec<f64>,
    pub f: Vec<f64>,
}

pub struct Dopri5<'a, S: OdeSystem + ?Sized> {
    sys: &'a S,
    ctl: StepControl,
    cur: Node,
    prev: Node,
    h: f64,
    steps: usize,
    rejected: usize,
    stages: Stages,
    y_new: Vec<f64>,
    f_new: Vec<f64>,
    err: Vec<f64>,
}

impl<'a, S: OdeSystem + ?Sized> Dopri5<'a, S> {
    pub fn new(sys: &'a S, t0: f64, y0: &[f64], ctl: StepControl) -> Result<Self> {
        let n = sys.dim();
        if y0.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: y0.len() });
        }
        if !(ctl.rtol > 0.0 && ctl.atol >= 0.0) {
            return Err(Error::InvalidInput("tolerances must be positive".into()));
        }
        let mut f0 = vec![0.0; n];
        sys.rhs(t0, y0, &mut f0)?;
        let cur = Node { t: t0, y: y0.to_vec(), f: f0 };
        let mut solver = Self {
            sys,
            ctl,
            prev: cur.clone(),
            cur,
            h: 0.0,
            steps: 0,
            rejected: 0,
            stages: Stages::new(n),
            y_new: vec![0.0; n],
            f_new: vec![0.0; n],
            err: vec![0.0; n],
        };
        solver.h = solver.initial_step()?;
        Ok(solver)
    }

    // Hairer–Nørsett–Wanner starting step heuristic.
    fn initial_step(&mut self) -> Result<f64> {
        let n = self.cur.y.len();
        let zeros = vec![0.0; n];
        let d0 = scaled_rms(&self.cur.y, &self.cur.y, &zeros, &self.ctl);
        let d1 = scaled_rms(&self.cur.f, &self.cur.y, &zeros, &self.ctl);
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        let y1: Vec<f64> = self
            .cur
            .y
            .iter()
            .zip(&self.cur.f)
            .map(|(y, f)| y + h0 * f)
            .collect();
        let mut f1 = vec![0.0; n];
        self.sys.rhs(self.cur.t + h0, &y1, &mut f1)?;
        let diff: Vec<f64> = f1.iter().zip(&self.cur.f).map(|(a, b)| (a - b) / h0).collect();
        let d2 = scaled_rms(&diff, &self.cur.y, &zeros, &self.ctl);
        let dmax = d1.max(d2);
        let h1 = if dmax <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / dmax).powf(0.2)
        };
        Ok((100.0 * h0).min(h1).min(self.ctl.max_step))
    }

    pub fn t(&self) -> f64 {
        self.cur.t
    }

    pub fn y(&self) -> &[f64] {
        &self.cur.y
    }

    pub fn derivative(&self) -> &[f64] {
        &self.cur.f
    }

    pub fn current(&self) -> &Node {
        &self.cur
    }

    pub fn previous(&self) -> &Node {
        &self.prev
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn rejected(&self) -> usize {
        self.rejected
    }

    /// Takes one accepted step, never passing `t_bound`.
    pub fn step(&mut self, t_bound: f64) -> Result<()> {
        let remaining = t_bound - self.cur.t;
        if remaining <= 0.0 {
            return Ok(());
        }
        loop {
            if self.steps + self.rejected >= self.ctl.max_steps {
                return Err(Error::TooManySteps(self.ctl.max_steps));
            }
            let mut h = self.h.min(self.ctl.max_step);
            let last = h >= remaining;
            if last {
                h = remaining;
            }
            if h <= 16.0 * f64::EPSILON * self.cur.t.abs().max(1.0) && !last {
                return Err(Error::StepSizeUnderflow { time: self.cur.t, step: h });
            }
            rk_step(
                self.sys,
                self.cur.t,
                &self.cur.y,
                &self.cur.f,
                h,
                &mut self.stages,
                &mut self.y_new,
                Some((&mut self.err, &mut self.f_new)),
            )?;
            let err = scaled_rms(&self.err, &self.cur.y, &self.y_new, &self.ctl);
            if err <= 1.0 && !last {
                // land exactly on the first switching surface inside the step
                if let Some(tau) = self.first_switch(h)? {
                    self.h = tau;
                    continue;
                }
            }
            if err <= 1.0 {
                let fac = if err == 0.0 {
                    FAC_MAX
                } else {
                    (SAFETY * err.powf(-0.2)).clamp(FAC_MIN, FAC_MAX)
                };
                std::mem::swap(&mut self.prev, &mut self.cur);
                self.cur.t = if last { t_bound } else { self.prev.t + h };
                self.cur.y.clone_from(&self.y_new);
                self.cur.f.clone_from(&self.f_new);
                self.steps += 1;
                // keep the proposal from the unclipped step when the bound cut it short
                self.h = if last { self.h.max(h * fac) } else { h * fac };
                return Ok(());
            }
            self.rejected += 1;
            let fac = (SAFETY * err.powf(-0.2)).clamp(FAC_MIN, 1.0);
            self.h = h * fac;
            if !self.h.is_finite() {
                return Err(Error::StepSizeUnderflow { time: self.cur.t, step: self.h });
            }
        }
    }

    /// Length of the sub-step to the first sign change of a switching
    /// function within the trial step of length `h`, if any.
    fn first_switch(&mut self, h: f64) -> Result<Option<f64>> {
        let count = self.sys.switch_count();
        if count == 0 {
            return Ok(None);
        }
        let mut s0 = vec![0.0; count];
        let mut s1 = vec![0.0; count];
        self.sys.switches(&self.cur.y, &mut s0);
        self.sys.switches(&self.y_new, &mut s1);
        let crossing: Vec<usize> = (0..count).filter(|&i| s0[i] * s1[i] < 0.0).collect();
        if crossing.is_empty() {
            return Ok(None);
        }
        let mut buf = vec![0.0; self.cur.y.len()];
        let mut sw = vec![0.0; count];
        let (mut lo, mut hi) = (0.0, h);
        // bisection on the earliest sign change among the crossing functions
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            rk_step(self.sys, self.cur.t, &self.cur.y, &self.cur.f, mid, &mut self.stages, &mut buf, None)?;
            self.sys.switches(&buf, &mut sw);
            if crossing.iter().any(|&i| s0[i] * sw[i] <= 0.0) {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= 4.0 * f64::EPSILON * self.cur.t.abs().max(h) {
                break;
            }
        }
        // crossing already at the end of the step (up to round-off)
        if hi >= h * (1.0 - 1e-12) {
            return Ok(None);
        }
        Ok(Some(hi))
    }

    /// Replaces the current state, e.g. after projecting onto an invariant set.
    pub fn reset_state(&mut self, y: &[f64]) -> Result<()> {
        self.cur.y.copy_from_slice(y);
        self.sys.rhs(self.cur.t, &self.cur.y, &mut self.cur.f)
    }

    /// State at `t` within the last accepted step.
    pub fn eval(&mut self, t: f64, out: &mut [f64]) -> Result<()> {
        if t == self.cur.t {
            out.copy_from_slice(&self.cur.y);
            return Ok(());
        }
        restep(self.sys, &self.prev, t, &mut self.stages, out)
    }
}

fn restep<S: OdeSystem + ?Sized>(
    sys: &S,
    node: &Node,
    t: f64,
    stages: &mut Stages,
    out: &mut [f64],
) -> Result<()> {
    let h = t - node.t;
    if h == 0.0 {
        out.copy_from_slice(&node.y);
        return Ok(());
    }
    rk_step(sys, node.t, &node.y, &node.f, h, stages, out, None)
}

/// Full record of accepted nodes, evaluable anywhere in its time span.
#[derive(Debug, Clone, Default)]
pub struct DenseRecord {
    nodes: Vec<Node>,
}

impl DenseRecord {
    pub fn push(&mut self, node: Node) {
        self.nodes.push(node);
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn span(&self) -> Option<(f64, f64)> {
        Some((self.nodes.first()?.t, self.nodes.last()?.t))
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn eval<S: OdeSystem + ?Sized>(&self, sys: &S, t: f64) -> Result<Vec<f64>> {
        let (t0, t1) = self
            .span()
            .ok_or_else(|| Error::InvalidInput("empty dense record".into()))?;
        if !(t0..=t1).contains(&t) {
            return Err(Error::InvalidInput(format!(
                "t = {t} outside recorded span [{t0}, {t1}]"
            )));
        }
        // last node with node.t <= t
        let idx = self.nodes.partition_point(|n| n.t <= t).saturating_sub(1);
        let node = &self.nodes[idx];
        let mut out = vec![0.0; node.y.len()];
        let mut stages = Stages::new(node.y.len());
        restep(sys, node, t, &mut stages, &mut out)?;
        Ok(out)
    }
}
