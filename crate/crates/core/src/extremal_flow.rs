//! Normal extremals: the vertical subsystem `h' = -M grad H(h)` with
//! constant `M = (h_ij)`, its invariants, and the constant/periodic
//! classification for three generators.
//!
//! Along every solution `H` and the linear Casimirs `I_a`, `a in ker M`,
//! are conserved. Drift in these quantities is monitored but not corrected
//! unless [`FlowOptions::project`] is set.

use std::f64::consts::PI;

use log::{debug, warn};

use crate::convex_bodies::ControlBody;
use crate::error::{Error, Result};
use crate::lie_structure::{CasimirBasis, SkewMatrix, KERNEL_TOL};
use crate::ode::{DenseRecord, Dopri5, OdeSystem, StepControl};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Abort when `|H - 1|` or any `|I_a - I_a(h0)|` exceeds this.
    pub max_drift: f64,
    /// Rescale `h` onto `H = 1` after every accepted step.
    pub project: bool,
    /// Number of uniform output intervals (`samples + 1` nodes).
    pub samples: usize,
    pub kernel_tol: f64,
    /// Relative tolerance of the `grad H(h0) || a` test.
    pub parallel_tol: f64,
    /// Parallel residuals below this (but above `parallel_tol`) get a warning.
    pub borderline_tol: f64,
    /// A refined return is accepted only this close to `h0`.
    pub capture_radius: f64,
    /// Target `|g|` for bisection on the section function.
    pub event_tol: f64,
    /// Largest accepted `|h(T) - h0|` for a periodic classification.
    pub return_tol: f64,
    /// Return-search horizon; `None` means `100 * 2 pi / sigma_max(M)`.
    pub t_max: Option<f64>,
    /// Grid spacing of the return-distance scan.
    pub scan_step: f64,
    pub max_steps: usize,
}

impl Default for FlowOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
            max_drift: 1e-7,
            project: false,
            samples: 1000,
            kernel_tol: KERNEL_TOL,
            parallel_tol: 1e-9,
            borderline_tol: 1e-6,
            capture_radius: 1e-6,
            event_tol: 1e-12,
            return_tol: 1e-8,
            t_max: None,
            scan_step: 1e-2,
            max_steps: 20_000_000,
        }
    }
}

impl FlowOptions {
    pub(crate) fn step_control(&self) -> StepControl {
        StepControl {
            rtol: self.rtol,
            atol: self.atol,
            max_steps: self.max_steps,
            max_step: f64::INFINITY,
        }
    }
}

/// First-level covector `h` on the slice fixed by the constant matrix `M`.
#[derive(Debug, Clone, PartialEq)]
pub struct VerticalState {
    pub h: Vec<f64>,
    pub m: SkewMatrix,
}

impl VerticalState {
    pub fn new(h: Vec<f64>, m: SkewMatrix) -> Result<Self> {
        if h.len() != m.k() {
            return Err(Error::DimensionMismatch { expected: m.k(), got: h.len() });
        }
        if h.iter().all(|&x| x == 0.0) {
            return Err(Error::AbnormalCovector);
        }
        Ok(Self { h, m })
    }

    /// State with `h0` rescaled onto `H = 1`.
    pub fn normalized(h0: &[f64], m: SkewMatrix, body: &ControlBody) -> Result<Self> {
        check_dims(h0, &m, body)?;
        let h = body.normalize_to_level(h0)?;
        Ok(Self { h, m })
    }
}

fn check_dims(h: &[f64], m: &SkewMatrix, body: &ControlBody) -> Result<()> {
    let k = m.k();
    if body.dim() != k {
        return Err(Error::DimensionMismatch { expected: k, got: body.dim() });
    }
    if h.len() != k {
        return Err(Error::DimensionMismatch { expected: k, got: h.len() });
    }
    Ok(())
}

fn map_abnormal(e: Error) -> Error {
    match e {
        Error::NonDifferentiable => Error::AbnormalCovector,
        other => other,
    }
}

/// `h' = -M grad H(h)`.
pub fn vertical_rhs(state: &VerticalState, body: &ControlBody) -> Result<Vec<f64>> {
    check_dims(&state.h, &state.m, body)?;
    let flow = VerticalFlow::new(&state.m, body);
    let mut out = vec![0.0; state.h.len()];
    flow.rhs(0.0, &state.h, &mut out)?;
    Ok(out)
}

/// Extremal control `u = grad H(h)`.
pub fn extremal_control(h: &[f64], body: &ControlBody) -> Result<Vec<f64>> {
    body.support_gradient(h)
}

/// True when `grad H(h)` lies in `ker M` up to the relative tolerance
/// `tol`, i.e. `|M grad H(h)| <= tol * sigma_max(M) * |grad H(h)|`. Such
/// covectors are equilibria of the vertical flow.
pub fn is_equilibrium(h: &[f64], m: &SkewMatrix, body: &ControlBody, tol: f64) -> Result<bool> {
    check_dims(h, m, body)?;
    if m.is_zero() {
        return Ok(true);
    }
    let g = body.support_gradient(h).map_err(map_abnormal)?;
    Ok(norm(&m.apply(&g)) <= tol * m.sigma_max() * norm(&g))
}

/// The vertical subsystem as an ODE.
#[derive(Debug, Clone, Copy)]
pub struct VerticalFlow<'a> {
    m: &'a SkewMatrix,
    body: &'a ControlBody,
    frozen: bool,
}

impl<'a> VerticalFlow<'a> {
    pub fn new(m: &'a SkewMatrix, body: &'a ControlBody) -> Self {
        Self { m, body, frozen: false }
    }

    /// Flow with `h' = 0`, used on equilibria. Near an equilibrium a level
    /// drift of `eps` displaces the state by `O(sqrt(eps))`, so round-off in
    /// the right-hand side would otherwise move `h` visibly.
    pub fn stationary(m: &'a SkewMatrix, body: &'a ControlBody) -> Self {
        Self { m, body, frozen: true }
    }
}

impl OdeSystem for VerticalFlow<'_> {
    fn dim(&self) -> usize {
        self.m.k()
    }

    fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) -> Result<()> {
        let mut grad = vec![0.0; y.len()];
        self.body.gradient_into(y, &mut grad).map_err(map_abnormal)?;
        if self.frozen {
            dy.fill(0.0);
        } else {
            self.m.apply_into(&grad, dy, -1.0);
        }
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

/// Tracks `H - 1` and `I_a - I_a(h0)` along a run.
#[derive(Debug, Clone)]
pub(crate) struct InvariantMonitor<'a> {
    body: &'a ControlBody,
    casimirs: &'a CasimirBasis,
    initial: Vec<f64>,
    bound: f64,
    pub max_h_drift: f64,
    pub max_casimir_drift: f64,
}

impl<'a> InvariantMonitor<'a> {
    pub fn new(body: &'a ControlBody, casimirs: &'a CasimirBasis, h0: &[f64], bound: f64) -> Self {
        Self {
            body,
            casimirs,
            initial: casimirs.values(h0),
            bound,
            max_h_drift: 0.0,
            max_casimir_drift: 0.0,
        }
    }

    /// Signed drifts at `h`; errors once either bound is exceeded.
    pub fn check(&mut self, t: f64, h: &[f64]) -> Result<(f64, Vec<f64>)> {
        let h_drift = self.body.support_unchecked(h) - 1.0;
        let casimir_drift: Vec<f64> = self
            .casimirs
            .values(h)
            .iter()
            .zip(&self.initial)
            .map(|(v, v0)| v - v0)
            .collect();
        self.max_h_drift = self.max_h_drift.max(h_drift.abs());
        let worst_casimir = casimir_drift.iter().fold(0.0_f64, |m, d| m.max(d.abs()));
        self.max_casimir_drift = self.max_casimir_drift.max(worst_casimir);
        let worst = h_drift.abs().max(worst_casimir);
        if !(worst <= self.bound) {
            return Err(Error::DriftExceeded { time: t, drift: worst, bound: self.bound });
        }
        Ok((h_drift, casimir_drift))
    }
}

/// One output node of a run: time, full state and drifts.
#[derive(Debug, Clone)]
pub(crate) struct Sample {
    pub t: f64,
    pub state: Vec<f64>,
    pub h_drift: f64,
    pub casimir_drift: Vec<f64>,
}

pub(crate) struct DriveOutcome {
    pub samples: Vec<Sample>,
    pub steps: usize,
    pub rejected: usize,
    pub max_h_drift: f64,
    pub max_casimir_drift: f64,
    pub failure: Option<Error>,
}

/// Integrates `sys`, whose state starts with the `k` covector entries, over
/// `t_span` and records `opts.samples + 1` uniformly spaced nodes.
pub(crate) fn drive<S: OdeSystem>(
    sys: &S,
    y0: &[f64],
    k: usize,
    t_span: (f64, f64),
    body: &ControlBody,
    casimirs: &CasimirBasis,
    opts: &FlowOptions,
) -> Result<DriveOutcome> {
    let (t0, t1) = t_span;
    if !(t0.is_finite() && t1.is_finite() && t1 > t0) {
        return Err(Error::InvalidInput(format!("time span must satisfy t0 < t1, got [{t0}, {t1}]")));
    }
    if opts.samples == 0 {
        return Err(Error::InvalidInput("sample count must be positive".into()));
    }
    let mut monitor = InvariantMonitor::new(body, casimirs, &y0[..k], opts.max_drift);
    let mut samples = Vec::with_capacity(opts.samples + 1);
    let node_time = |m: usize| {
        if m == opts.samples {
            t1
        } else {
            t0 + (t1 - t0) * (m as f64 / opts.samples as f64)
        }
    };

    let mut solver = Dopri5::new(sys, t0, y0, opts.step_control())?;
    let mut buf = vec![0.0; y0.len()];
    let mut next = 0usize;
    let mut failure = None;

    let (h_drift, casimir_drift) = monitor.check(t0, &y0[..k])?;
    samples.push(Sample { t: t0, state: y0.to_vec(), h_drift, casimir_drift });
    next += 1;

    'outer: while next <= opts.samples {
        if let Err(e) = solver.step(t1) {
            failure = Some(e);
            break;
        }
        let t = solver.t();
        if let Err(e) = monitor.check(t, &solver.y()[..k]) {
            failure = Some(e);
            // keep the grid nodes that precede the failure
            while next <= opts.samples && node_time(next) < t {
                let tn = node_time(next);
                if solver.eval(tn, &mut buf).is_err() {
                    break;
                }
                match monitor.check(tn, &buf[..k]) {
                    Ok((hd, cd)) => samples.push(Sample {
                        t: tn,
                        state: buf.clone(),
                        h_drift: hd,
                        casimir_drift: cd,
                    }),
                    Err(_) => break,
                }
                next += 1;
            }
            break;
        }
        while next <= opts.samples && node_time(next) <= t {
            let tn = node_time(next);
            if let Err(e) = solver.eval(tn, &mut buf) {
                failure = Some(e);
                break 'outer;
            }
            match monitor.check(tn, &buf[..k]) {
                Ok((hd, cd)) => samples.push(Sample {
                    t: tn,
                    state: buf.clone(),
                    h_drift: hd,
                    casimir_drift: cd,
                }),
                Err(e) => {
                    failure = Some(e);
                    break 'outer;
                }
            }
            next += 1;
        }
        if opts.project {
            let mut y = solver.y().to_vec();
            let level = body.support_unchecked(&y[..k]);
            y[..k].iter_mut().for_each(|x| *x /= level);
            if let Err(e) = solver.reset_state(&y) {
                failure = Some(e);
                break;
            }
        }
    }
    if let Some(e) = &failure {
        warn!("integration stopped at t = {}: {e}", solver.t());
    }
    debug!(
        "integration finished: {} accepted, {} rejected steps",
        solver.steps(),
        solver.rejected()
    );
    Ok(DriveOutcome {
        samples,
        steps: solver.steps(),
        rejected: solver.rejected(),
        max_h_drift: monitor.max_h_drift,
        max_casimir_drift: monitor.max_casimir_drift,
        failure,
    })
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub controls: Vec<Vec<f64>>,
    /// Signed `H(h(t)) - 1` at each node.
    pub h_drift: Vec<f64>,
    /// `I_a(h(t)) - I_a(h0)` per node, one entry per Casimir basis vector.
    pub casimir_drift: Vec<Vec<f64>>,
    pub casimirs: CasimirBasis,
    /// Maxima over output nodes and accepted steps.
    pub max_h_drift: f64,
    pub max_casimir_drift: f64,
    pub steps: usize,
    pub rejected_steps: usize,
}

impl Trajectory {
    pub(crate) fn from_samples(
        samples: &[Sample],
        k: usize,
        body: &ControlBody,
        casimirs: CasimirBasis,
        outcome: &DriveOutcome,
    ) -> Result<Self> {
        let mut traj = Trajectory {
            times: Vec::with_capacity(samples.len()),
            states: Vec::with_capacity(samples.len()),
            controls: Vec::with_capacity(samples.len()),
            h_drift: Vec::with_capacity(samples.len()),
            casimir_drift: Vec::with_capacity(samples.len()),
            casimirs,
            max_h_drift: outcome.max_h_drift,
            max_casimir_drift: outcome.max_casimir_drift,
            steps: outcome.steps,
            rejected_steps: outcome.rejected,
        };
        for s in samples {
            let h = s.state[..k].to_vec();
            traj.controls.push(body.support_gradient(&h)?);
            traj.times.push(s.t);
            traj.states.push(h);
            traj.h_drift.push(s.h_drift);
            traj.casimir_drift.push(s.casimir_drift.clone());
        }
        Ok(traj)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Like [`integrate_vertical`], but a numerical failure still returns the
/// samples recorded before it.
pub fn integrate_vertical_partial(
    h0: &[f64],
    m: &SkewMatrix,
    body: &ControlBody,
    t_span: (f64, f64),
    opts: &FlowOptions,
) -> Result<(Trajectory, Option<Error>)> {
    let state = VerticalState::normalized(h0, m.clone(), body)?;
    let casimirs = m.kernel_basis(opts.kernel_tol);
    let flow = if is_equilibrium(&state.h, m, body, opts.parallel_tol)? {
        debug!("initial covector is an equilibrium, holding h fixed");
        VerticalFlow::stationary(m, body)
    } else {
        VerticalFlow::new(m, body)
    };
    let outcome = drive(&flow, &state.h, m.k(), t_span, body, &casimirs, opts)?;
    let traj = Trajectory::from_samples(&outcome.samples, m.k(), body, casimirs, &outcome)?;
    Ok((traj, outcome.failure))
}

/// Integrates the vertical subsystem from `h0` (rescaled onto `H = 1`).
pub fn integrate_vertical(
    h0: &[f64],
    m: &SkewMatrix,
    body: &ControlBody,
    t_span: (f64, f64),
    opts: &FlowOptions,
) -> Result<Trajectory> {
    match integrate_vertical_partial(h0, m, body, t_span, opts)? {
        (traj, None) => Ok(traj),
        (_, Some(e)) => Err(e),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExtremalClass {
    Constant,
    Periodic { period: f64, return_residual: f64 },
    Unclassified { reason: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub class: ExtremalClass,
    /// `|grad H(h0) - <grad H(h0), a> a| / |grad H(h0)|`; zero when `M = 0`.
    pub parallel_residual: f64,
    pub casimir: Option<Vec<f64>>,
    pub h0: Vec<f64>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodEstimate {
    pub period: f64,
    pub residual: f64,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// First return of the flow to `h0` through the section orthogonal to the
/// initial velocity.
///
/// The section function is `g(t) = <h(t) - h0, v>` with `v = h'(0)/|h'(0)|`.
/// A step on which `g` goes from negative to non-negative while the flow
/// moves along `v` brackets a return; the crossing is refined by bisection.
pub fn detect_period(
    flow: &VerticalFlow<'_>,
    h0: &[f64],
    t_max: f64,
    opts: &FlowOptions,
) -> Result<PeriodEstimate> {
    let k = flow.dim();
    if h0.len() != k {
        return Err(Error::DimensionMismatch { expected: k, got: h0.len() });
    }
    if !(t_max > 0.0 && t_max.is_finite()) {
        return Err(Error::InvalidInput(format!("t_max must be positive, got {t_max}")));
    }
    let mut v = vec![0.0; k];
    flow.rhs(0.0, h0, &mut v)?;
    let speed = norm(&v);
    if speed == 0.0 {
        return Err(Error::InvalidInput("initial covector is an equilibrium".into()));
    }
    let v0 = v.clone();
    v.iter_mut().for_each(|x| *x /= speed);
    let section = |y: &[f64]| -> f64 { y.iter().zip(h0).zip(&v).map(|((a, b), c)| (a - b) * c).sum() };

    let casimirs = flow.m.kernel_basis(opts.kernel_tol);
    let mut monitor = InvariantMonitor::new(flow.body, &casimirs, h0, opts.max_drift);
    let mut solver = Dopri5::new(flow, 0.0, h0, opts.step_control())?;
    let mut buf = vec![0.0; k];
    let mut g_prev = 0.0;
    while solver.t() < t_max {
        solver.step(t_max)?;
        monitor.check(solver.t(), solver.y())?;
        let g_new = section(solver.y());
        let moving_forward = dot(solver.derivative(), &v0) > 0.0;
        if g_prev < 0.0 && g_new >= 0.0 && moving_forward {
            let (mut lo, mut hi) = (solver.previous().t, solver.t());
            let mut t_cross = hi;
            let mut g_cross = g_new;
            for _ in 0..200 {
                if g_cross.abs() <= opts.event_tol {
                    break;
                }
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                solver.eval(mid, &mut buf)?;
                let g_mid = section(&buf);
                if g_mid < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
                t_cross = mid;
                g_cross = g_mid;
            }
            solver.eval(t_cross, &mut buf)?;
            let residual = distance(&buf, h0);
            if residual <= opts.capture_radius {
                debug!("return at T = {t_cross}, residual {residual:e}, {} steps", solver.steps());
                return Ok(PeriodEstimate { period: t_cross, residual });
            }
            debug!("crossing at t = {t_cross} rejected: distance {residual:e} outside capture radius");
        }
        g_prev = g_new;
    }
    Err(Error::HorizonExhausted { t_max })
}

/// Constant-or-periodic classification of the normal extremal through `h0`
/// for `k = 3`.
pub fn classify_k3(
    h0: &[f64],
    m: &SkewMatrix,
    body: &ControlBody,
    opts: &FlowOptions,
) -> Result<Classification> {
    if m.k() != 3 {
        return Err(Error::UnsupportedRank(m.k()));
    }
    let state = VerticalState::normalized(h0, m.clone(), body)?;
    let h0 = state.h;
    let basis = m.kernel_basis(opts.kernel_tol);
    let mut warnings: Vec<String> = basis.near_singular_warning().into_iter().collect();
    if basis.dim() == 3 {
        return Ok(Classification {
            class: ExtremalClass::Constant,
            parallel_residual: 0.0,
            casimir: None,
            h0,
            warnings,
        });
    }
    let a = basis.vectors[0].clone();
    let grad = body.support_gradient(&h0)?;
    let along = dot(&grad, &a);
    let transverse: Vec<f64> = grad.iter().zip(&a).map(|(g, x)| g - along * x).collect();
    let parallel_residual = norm(&transverse) / norm(&grad);
    if parallel_residual <= opts.parallel_tol {
        return Ok(Classification {
            class: ExtremalClass::Constant,
            parallel_residual,
            casimir: Some(a),
            h0,
            warnings,
        });
    }
    if parallel_residual <= opts.borderline_tol {
        warnings.push(format!(
            "borderline initial covector: parallel residual {parallel_residual:e} is close to the \
             constant branch, the computed period is sensitive to tolerances"
        ));
    }
    let t_max = opts.t_max.unwrap_or(100.0 * 2.0 * PI / basis.sigma_max);
    let flow = VerticalFlow::new(m, body);
    let class = match detect_period(&flow, &h0, t_max, opts) {
        Ok(est) if est.residual <= opts.return_tol => ExtremalClass::Periodic {
            period: est.period,
            return_residual: est.residual,
        },
        Ok(est) => ExtremalClass::Unclassified {
            reason: format!(
                "return residual {:e} exceeds {:e} at t = {}",
                est.residual, opts.return_tol, est.period
            ),
        },
        Err(Error::HorizonExhausted { t_max }) => ExtremalClass::Unclassified {
            reason: format!("horizon exhausted: no return before t_max = {t_max}"),
        },
        Err(e) => return Err(e),
    };
    Ok(Classification { class, parallel_residual, casimir: Some(a), h0, warnings })
}

/// Closest approach of the flow to its initial covector after a dead time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReturnWitness {
    pub min_return_distance: f64,
    pub time_of_min: f64,
}

/// Minimum of `|h(t) - h0|` over `t in [delta, t_max]`, sampled on a grid of
/// spacing `opts.scan_step` and refined by golden-section search around each
/// discrete local minimum. A finite-horizon witness of non-periodicity, not
/// a proof.
pub fn quasi_periodicity_check(
    h0: &[f64],
    m: &SkewMatrix,
    body: &ControlBody,
    t_max: f64,
    delta: f64,
    opts: &FlowOptions,
) -> Result<ReturnWitness> {
    if !(delta >= 0.0 && t_max > delta && t_max.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "need 0 <= delta < t_max, got delta = {delta}, t_max = {t_max}"
        )));
    }
    if !(opts.scan_step > 0.0) {
        return Err(Error::InvalidInput("scan step must be positive".into()));
    }
    let state = VerticalState::normalized(h0, m.clone(), body)?;
    let h0 = state.h;
    let flow = VerticalFlow::new(m, body);
    let casimirs = m.kernel_basis(opts.kernel_tol);
    let mut monitor = InvariantMonitor::new(body, &casimirs, &h0, opts.max_drift);
    let mut solver = Dopri5::new(&flow, 0.0, &h0, opts.step_control())?;
    let mut record = DenseRecord::default();
    record.push(solver.current().clone());
    while solver.t() < t_max {
        solver.step(t_max)?;
        monitor.check(solver.t(), solver.y())?;
        record.push(solver.current().clone());
    }

    let dist2 = |t: f64| -> Result<f64> {
        let y = record.eval(&flow, t)?;
        Ok(y.iter().zip(&h0).map(|(a, b)| (a - b).powi(2)).sum())
    };
    let n = (((t_max - delta) / opts.scan_step).ceil() as usize).max(1);
    let grid: Vec<f64> = (0..=n)
        .map(|i| if i == n { t_max } else { delta + i as f64 * opts.scan_step })
        .collect();
    let values = grid.iter().map(|&t| dist2(t)).collect::<Result<Vec<f64>>>()?;

    let mut best = (f64::INFINITY, delta);
    for i in 0..values.len() {
        let left = if i > 0 { values[i - 1] } else { f64::INFINITY };
        let right = values.get(i + 1).copied().unwrap_or(f64::INFINITY);
        if values[i] > left || values[i] > right {
            continue;
        }
        let lo = grid[i.saturating_sub(1)];
        let hi = grid[(i + 1).min(grid.len() - 1)];
        let (t_min, d_min) = golden_section(&dist2, lo, hi)?;
        let (t_min, d_min) = if values[i] < d_min { (grid[i], values[i]) } else { (t_min, d_min) };
        if d_min < best.0 {
            best = (d_min, t_min);
        }
    }
    Ok(ReturnWitness { min_return_distance: best.0.sqrt(), time_of_min: best.1 })
}

fn golden_section(f: &impl Fn(f64) -> Result<f64>, mut a: f64, mut b: f64) -> Result<(f64, f64)> {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while b - a > 1e-13 * (1.0 + a.abs()) {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d)?;
        }
    }
    let t = 0.5 * (a + b);
    Ok((t, f(t)?))
}
