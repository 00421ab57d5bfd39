//! Explicit time stepping of the log-radial flow
//!
//! ```text
//! ∂_t r = (1/F(a) − f(e^r x)) · e^{−r} · √(1 + |∇r|²),   r = log ρ,
//! ```
//!
//! with a step bound from the diffusion tensor of its linearisation, an
//! initial-data check, and passive tracking of material points.

use alloc::vec::Vec;

// redundant when a dependency links std
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::grid::SphereGrid;
use crate::linalg::{add3, normalize3, scale3, sub3, Vec2, Vec3};
use crate::monitors::{MonitorSeries, Snapshot};
use crate::prescribed::PrescribedSpec;
use crate::shape::{node_shape_log, NodeShape};
use crate::symfunc::CurvatureSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Integrator {
    Euler,
    Rk2,
    Rk4,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Recording {
    None,
    /// Only at the configured checkpoints (and the initial and final times).
    Checkpoints,
    /// At every snapshot.
    All,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlowConfig {
    /// Fraction of the stability bound used for each step, in (0, 1].
    pub safety: f64,
    pub integrator: Integrator,
    /// Stop once `max |∂_t ρ|` falls to this level.
    pub tol_residual: f64,
    pub t_max: f64,
    pub max_steps: usize,
    /// Steps between recorded snapshots.
    pub monitor_stride: usize,
    /// Which snapshots also keep the full field.
    pub record: Recording,
    /// Times at which a snapshot is forced (steps are shortened to hit them).
    pub checkpoints: Vec<f64>,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig {
            safety: 0.5,
            integrator: Integrator::Rk2,
            tol_residual: 1e-7,
            t_max: 50.0,
            max_steps: 10_000_000,
            monitor_stride: 100,
            record: Recording::None,
            checkpoints: Vec::new(),
        }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.safety > 0.0 && self.safety <= 1.0) {
            return Err(Error::InvalidParameter("safety must lie in (0, 1]"));
        }
        if !(self.tol_residual > 0.0) {
            return Err(Error::InvalidParameter("tol_residual must be positive"));
        }
        if !(self.t_max > 0.0 && self.t_max.is_finite()) {
            return Err(Error::InvalidParameter("t_max must be positive and finite"));
        }
        if self.monitor_stride == 0 {
            return Err(Error::InvalidParameter("monitor_stride must be positive"));
        }
        if self.checkpoints.iter().any(|t| !t.is_finite() || *t < 0.0) {
            return Err(Error::InvalidParameter("checkpoints must be non-negative times"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlowState {
    pub t: f64,
    /// `log ρ` per node.
    pub u: Vec<f64>,
    pub step: usize,
}

impl FlowState {
    pub fn rho(&self) -> Vec<f64> {
        self.u.iter().map(|v| v.exp()).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Termination {
    Converged,
    Horizon,
    StepLimit,
    ConeViolation { node: usize, kappa: Vec2 },
}

/// Field and velocity at one recorded time.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryFrame {
    pub t: f64,
    pub u: Vec<f64>,
    /// `∂_t log ρ` per node.
    pub velocity: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct FlowReport {
    pub termination: Termination,
    /// Last accepted state.
    pub state: FlowState,
    pub series: MonitorSeries,
    pub trajectory: Vec<TrajectoryFrame>,
    /// Field whose evaluation left the cone, for post-mortem.
    pub offending_field: Option<Vec<f64>>,
}

impl FlowReport {
    pub fn converged(&self) -> bool {
        self.termination == Termination::Converged
    }
}

/// Per-node quantities of one right-hand-side evaluation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NodeEval {
    pub shape: NodeShape,
    /// `F(κ)`.
    pub curvature_fn: f64,
    /// `f(ρ x)`.
    pub prescribed: f64,
    /// `∂_t log ρ`.
    pub velocity: f64,
}

impl NodeEval {
    /// `1/F − f`.
    pub fn speed(&self) -> f64 {
        1.0 / self.curvature_fn - self.prescribed
    }

    /// `∂_t ρ`.
    pub fn dt_rho(&self) -> f64 {
        self.shape.rho * self.velocity
    }
}

#[derive(Clone, Debug)]
pub struct Evaluation {
    pub nodes: Vec<NodeEval>,
    /// Largest spectral radius of the diffusion tensor, when requested.
    pub max_diffusion: Option<f64>,
}

impl Evaluation {
    pub fn velocity(&self) -> Vec<f64> {
        self.nodes.iter().map(|n| n.velocity).collect()
    }

    pub fn max_abs_dt_rho(&self) -> f64 {
        self.nodes.iter().map(|n| n.dt_rho().abs()).fold(0.0, f64::max)
    }
}

/// Evaluates geometry, speed and (optionally) the diffusion tensor bound.
pub fn evaluate(
    grid: &SphereGrid,
    u: &[f64],
    curvature: &CurvatureSpec,
    prescribed: &PrescribedSpec,
    diffusion: bool,
) -> Result<Evaluation> {
    grid.check_field(u)?;
    let mut nodes = Vec::with_capacity(u.len());
    let mut max_diffusion: f64 = 0.0;
    for (i, (&r, node)) in u.iter().zip(grid.nodes()).enumerate() {
        if !r.is_finite() {
            return Err(Error::NonPositiveRadius { node: Some(i), rho: r.exp() });
        }
        let (p, hess) = grid.derivatives_at(u, i);
        let (et, ep) = grid.node_frame(i);
        let shape = node_shape_log(r, p, &hess, (node.x, et, ep));
        let f_val = if diffusion {
            let (f, d) = curvature
                .matrix_derivative(&shape.a, shape.kappa)
                .map_err(|e| e.at_node(i))?;
            // A = e^{−2r} F^{−2} γ F′ γ
            let a = d.congruence(&shape.gamma).scale(1.0 / (shape.rho * shape.rho * f * f));
            let eig = a.eigenvalues();
            max_diffusion = max_diffusion.max(eig[0].abs().max(eig[1].abs()));
            f
        } else {
            curvature.eval_f(shape.kappa).map_err(|e| e.at_node(i))?
        };
        if !(f_val > 0.0) {
            return Err(Error::ConeViolation { node: Some(i), kappa: shape.kappa });
        }
        let target = prescribed.eval_unchecked(shape.rho, node.x);
        let velocity = (1.0 / f_val - target) * shape.w / shape.rho;
        nodes.push(NodeEval { shape, curvature_fn: f_val, prescribed: target, velocity });
    }
    Ok(Evaluation { nodes, max_diffusion: diffusion.then_some(max_diffusion) })
}

/// `∂_t log ρ` per node.
pub fn velocity(
    grid: &SphereGrid,
    u: &[f64],
    curvature: &CurvatureSpec,
    prescribed: &PrescribedSpec,
) -> Result<Vec<f64>> {
    Ok(evaluate(grid, u, curvature, prescribed, false)?.velocity())
}

fn dt_from_diffusion(grid: &SphereGrid, radius: f64, safety: f64) -> f64 {
    let h = grid.h_min();
    if radius > 0.0 {
        safety * h * h / (4.0 * radius)
    } else {
        f64::INFINITY
    }
}

/// `safety · h_min² / (4 · max spectral radius of A)`; infinite when the
/// diffusion tensor vanishes everywhere.
pub fn stable_dt(
    grid: &SphereGrid,
    u: &[f64],
    curvature: &CurvatureSpec,
    prescribed: &PrescribedSpec,
    safety: f64,
) -> Result<f64> {
    let e = evaluate(grid, u, curvature, prescribed, true)?;
    Ok(dt_from_diffusion(grid, e.max_diffusion.unwrap_or(0.0), safety))
}

fn axpy(u: &[f64], dt: f64, k: &[f64]) -> Vec<f64> {
    u.iter().zip(k).map(|(a, b)| a + dt * b).collect()
}

enum StepFailure {
    Cone { node: usize, kappa: Vec2, field: Vec<f64> },
    Other(Error),
}

fn stage(
    grid: &SphereGrid,
    u: Vec<f64>,
    curvature: &CurvatureSpec,
    prescribed: &PrescribedSpec,
) -> core::result::Result<Vec<f64>, StepFailure> {
    match velocity(grid, &u, curvature, prescribed) {
        Ok(v) => Ok(v),
        Err(Error::ConeViolation { node, kappa }) => {
            Err(StepFailure::Cone { node: node.unwrap_or(0), kappa, field: u })
        }
        Err(e) => Err(StepFailure::Other(e)),
    }
}

fn advance(
    grid: &SphereGrid,
    u: &[f64],
    k1: &[f64],
    dt: f64,
    integrator: Integrator,
    curvature: &CurvatureSpec,
    prescribed: &PrescribedSpec,
) -> core::result::Result<Vec<f64>, StepFailure> {
    match integrator {
        Integrator::Euler => Ok(axpy(u, dt, k1)),
        Integrator::Rk2 => {
            let k2 = stage(grid, axpy(u, dt, k1), curvature, prescribed)?;
            Ok(u.iter()
                .zip(k1.iter().zip(&k2))
                .map(|(x, (a, b))| x + 0.5 * dt * (a + b))
                .collect())
        }
        Integrator::Rk4 => {
            let k2 = stage(grid, axpy(u, 0.5 * dt, k1), curvature, prescribed)?;
            let k3 = stage(grid, axpy(u, 0.5 * dt, &k2), curvature, prescribed)?;
            let k4 = stage(grid, axpy(u, dt, &k3), curvature, prescribed)?;
            Ok((0..u.len())
                .map(|i| u[i] + dt / 6.0 * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i]))
                .collect())
        }
    }
}

/// Integrates from `u0 = log ρ₀` until convergence, the horizon, the step
/// limit, or a cone violation.
pub fn evolve(
    grid: &SphereGrid,
    u0: &[f64],
    curvature: &CurvatureSpec,
    prescribed: &PrescribedSpec,
    config: &FlowConfig,
) -> Result<FlowReport> {
    config.validate()?;
    grid.check_field(u0)?;
    let mut checkpoints = config.checkpoints.clone();
    checkpoints.sort_by(f64::total_cmp);
    let mut next_checkpoint = 0usize;

    let mut state = FlowState { t: 0.0, u: u0.to_vec(), step: 0 };
    let mut series = MonitorSeries::default();
    let mut trajectory = Vec::new();

    let mut eval = match evaluate(grid, &state.u, curvature, prescribed, true) {
        Ok(e) => e,
        Err(Error::ConeViolation { node, kappa }) => {
            return Ok(FlowReport {
                termination: Termination::ConeViolation { node: node.unwrap_or(0), kappa },
                offending_field: Some(state.u.clone()),
                state,
                series,
                trajectory,
            })
        }
        Err(e) => return Err(e),
    };
    let mut force_snapshot = true;

    loop {
        while next_checkpoint < checkpoints.len() && checkpoints[next_checkpoint] <= state.t {
            next_checkpoint += 1;
            force_snapshot = true;
        }
        let converged = eval.max_abs_dt_rho() <= config.tol_residual;
        let finished = converged || state.t >= config.t_max || state.step >= config.max_steps;

        if force_snapshot || finished || state.step.is_multiple_of(config.monitor_stride) {
            let snap = Snapshot::from_evaluation(state.t, &eval, curvature);
            if series.snapshots.last().is_none_or(|s| s.t < snap.t) {
                series.snapshots.push(snap);
                let keep = match config.record {
                    Recording::None => false,
                    Recording::Checkpoints => force_snapshot || finished,
                    Recording::All => true,
                };
                if keep {
                    trajectory.push(TrajectoryFrame {
                        t: state.t,
                        u: state.u.clone(),
                        velocity: eval.velocity(),
                    });
                }
            }
            force_snapshot = false;
        }

        let termination = if converged {
            Some(Termination::Converged)
        } else if state.t >= config.t_max {
            Some(Termination::Horizon)
        } else if state.step >= config.max_steps {
            Some(Termination::StepLimit)
        } else {
            None
        };
        if let Some(termination) = termination {
            return Ok(FlowReport { termination, state, series, trajectory, offending_field: None });
        }

        let mut dt = dt_from_diffusion(grid, eval.max_diffusion.unwrap_or(0.0), config.safety);
        let mut target = config.t_max;
        if let Some(&c) = checkpoints.get(next_checkpoint) {
            target = target.min(c);
        }
        let mut hits_target = false;
        if state.t + dt >= target {
            dt = target - state.t;
            hits_target = true;
        }

        let k1 = eval.velocity();
        let next = advance(grid, &state.u, &k1, dt, config.integrator, curvature, prescribed);
        let next = next.and_then(|u| {
            let e = evaluate(grid, &u, curvature, prescribed, true).map_err(|err| match err {
                Error::ConeViolation { node, kappa } => StepFailure::Cone {
                    node: node.unwrap_or(0),
                    kappa,
                    field: u.clone(),
                },
                other => StepFailure::Other(other),
            })?;
            Ok((u, e))
        });
        match next {
            Ok((u, e)) => {
                state.u = u;
                state.t = if hits_target { target } else { state.t + dt };
                state.step += 1;
                eval = e;
            }
            Err(StepFailure::Cone { node, kappa, field }) => {
                return Ok(FlowReport {
                    termination: Termination::ConeViolation { node, kappa },
                    state,
                    series,
                    trajectory,
                    offending_field: Some(field),
                });
            }
            Err(StepFailure::Other(e)) => return Err(e),
        }
    }
}

/// Outcome of the initial-data check.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InitialVerdict {
    pub pass: bool,
    /// Degree of the curvature function; selects the branch.
    pub k: f64,
    pub big_r1: f64,
    pub big_r2: f64,
    /// Minimum over nodes of `1/F − f`.
    pub min_speed: f64,
    /// Maximum over nodes of `1/F − f`.
    pub max_speed: f64,
    /// Range of `∂_t ρ` at time zero.
    pub min_operator: f64,
    pub max_operator: f64,
    /// For `k > 1`: `max −(1/F − f)·|∇X₀|/|X₀|` with `|∇X₀| = √(trace g)`.
    pub lhs: f64,
    /// For `k > 1`: `k R1 / ((k+1) R2) · min f` over the annulus.
    pub rhs: f64,
}

pub const SIGN_TOL: f64 = 1e-12;

impl InitialVerdict {
    pub fn large_degree(&self) -> bool {
        self.k > 1.0
    }
}

/// Checks the initial surface against the sign condition (degree ≤ 1) or
/// the two-sided speed condition (degree > 1).
pub fn check_initial(
    grid: &SphereGrid,
    u0: &[f64],
    curvature: &CurvatureSpec,
    prescribed: &PrescribedSpec,
    r1: f64,
    r2: f64,
    scan_grid: &SphereGrid,
) -> Result<InitialVerdict> {
    let eval = evaluate(grid, u0, curvature, prescribed, false)?;
    let k = curvature.degree();
    let mut v = InitialVerdict {
        pass: false,
        k,
        big_r1: f64::INFINITY,
        big_r2: f64::NEG_INFINITY,
        min_speed: f64::INFINITY,
        max_speed: f64::NEG_INFINITY,
        min_operator: f64::INFINITY,
        max_operator: f64::NEG_INFINITY,
        lhs: f64::NEG_INFINITY,
        rhs: f64::NAN,
    };
    for n in &eval.nodes {
        let s = n.speed();
        let p = n.shape.grad_r;
        v.min_speed = v.min_speed.min(s);
        v.max_speed = v.max_speed.max(s);
        v.min_operator = v.min_operator.min(n.dt_rho());
        v.max_operator = v.max_operator.max(n.dt_rho());
        v.big_r1 = v.big_r1.min(n.shape.rho);
        v.big_r2 = v.big_r2.max(n.shape.rho);
        // √(trace g)/ρ = √(2 + |∇log ρ|²)
        let ratio = (2.0 + p[0] * p[0] + p[1] * p[1]).sqrt();
        v.lhs = v.lhs.max(-s * ratio);
    }
    v.big_r1 = v.big_r1.min(r1);
    v.big_r2 = v.big_r2.max(r2);
    if k <= 1.0 {
        v.pass = v.min_speed >= -SIGN_TOL;
    } else {
        let min_f = prescribed.min_f(v.big_r1, v.big_r2, scan_grid);
        v.rhs = k * v.big_r1 / ((k + 1.0) * v.big_r2) * min_f;
        v.pass = v.max_speed <= SIGN_TOL && v.lhs <= v.rhs;
    }
    Ok(v)
}

/// Tracked sphere points and the surface points they carry at one time.
#[derive(Clone, Debug, PartialEq)]
pub struct DiffeoFrame {
    pub t: f64,
    pub directions: Vec<Vec3>,
    pub points: Vec<Vec3>,
}

/// Tangential field `Z = −∂_t ρ ∇ρ / (ρ² + |∇ρ|²)` in frame components,
/// written in log variables as `−(∂_t log ρ) ∇log ρ / (1 + |∇log ρ|²)`.
fn tangential_field(grid: &SphereGrid, frame: &TrajectoryFrame) -> Vec<Vec2> {
    (0..grid.len())
        .map(|i| {
            let (p, _) = grid.derivatives_at(&frame.u, i);
            let s = -frame.velocity[i] / (1.0 + p[0] * p[0] + p[1] * p[1]);
            [s * p[0], s * p[1]]
        })
        .collect()
}

/// Integrates `∂_t φ = Z(t, φ)` through a recorded trajectory with Heun's
/// method, `substeps` per recorded interval, interpolating bilinearly in
/// space and linearly in time.
pub fn track_material_points(
    grid: &SphereGrid,
    trajectory: &[TrajectoryFrame],
    seeds: &[Vec3],
    substeps: usize,
) -> Vec<DiffeoFrame> {
    let mut out = Vec::with_capacity(trajectory.len());
    if trajectory.is_empty() {
        return out;
    }
    let fields: Vec<Vec<Vec2>> = trajectory.iter().map(|f| tangential_field(grid, f)).collect();
    let mut dirs: Vec<Vec3> = seeds.iter().map(|s| normalize3(*s)).collect();
    let record = |t: f64, frame: &TrajectoryFrame, dirs: &[Vec3]| DiffeoFrame {
        t,
        directions: dirs.to_vec(),
        points: dirs
            .iter()
            .map(|d| scale3(*d, grid.interpolate(&frame.u, *d).exp()))
            .collect(),
    };
    out.push(record(trajectory[0].t, &trajectory[0], &dirs));
    let substeps = substeps.max(1);
    for w in 0..trajectory.len() - 1 {
        let (t0, t1) = (trajectory[w].t, trajectory[w + 1].t);
        let span = t1 - t0;
        let h = span / substeps as f64;
        let z_at = |s: f64, x: Vec3| -> Vec3 {
            let a = grid.interpolate_tangent(&fields[w], x);
            let b = grid.interpolate_tangent(&fields[w + 1], x);
            let lam = if span > 0.0 { s / span } else { 0.0 };
            add3(a, scale3(sub3(b, a), lam))
        };
        for d in dirs.iter_mut() {
            for step in 0..substeps {
                let s = step as f64 * h;
                let z1 = z_at(s, *d);
                let pred = normalize3(add3(*d, scale3(z1, h)));
                let z2 = z_at(s + h, pred);
                *d = normalize3(add3(*d, scale3(add3(z1, z2), 0.5 * h)));
            }
        }
        out.push(record(t1, &trajectory[w + 1], &dirs));
    }
    out
}
