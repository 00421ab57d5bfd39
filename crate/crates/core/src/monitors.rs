//! Snapshot diagnostics and end-of-run certificates for the a priori
//! estimates: radial bounds, sign and decay of the speed, the gradient
//! cap, curvature caps, and convergence of the residual.

use alloc::vec::Vec;

// redundant when a dependency links std
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::Result;
use crate::flow::{evaluate, evolve, Evaluation, FlowConfig, FlowReport};
use crate::grid::SphereGrid;
use crate::prescribed::PrescribedSpec;
use crate::shape::ShapeState;
use crate::symfunc::{CurvatureSpec, DIM};

/// Diagnostics at one recorded time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    /// `max |∂_t ρ|`.
    pub max_dt_rho: f64,
    pub min_dt_rho_signed: f64,
    pub max_dt_rho_signed: f64,
    pub min_rho: f64,
    pub max_rho: f64,
    /// `max |∇ρ|`.
    pub max_grad_rho: f64,
    pub min_kappa: f64,
    pub max_kappa: f64,
    /// `max |1/F − f|`.
    pub residual: f64,
    pub min_f: f64,
    pub cone_margin: f64,
    /// `max ½|∇log ρ|²`.
    pub max_h: f64,
    /// Range of `G = ∂_t log ρ`.
    pub max_g: f64,
    pub min_g: f64,
    pub min_support: f64,
}

impl Snapshot {
    pub fn from_evaluation(t: f64, eval: &Evaluation, curvature: &CurvatureSpec) -> Self {
        let mut s = Snapshot {
            t,
            max_dt_rho: 0.0,
            min_dt_rho_signed: f64::INFINITY,
            max_dt_rho_signed: f64::NEG_INFINITY,
            min_rho: f64::INFINITY,
            max_rho: f64::NEG_INFINITY,
            max_grad_rho: 0.0,
            min_kappa: f64::INFINITY,
            max_kappa: f64::NEG_INFINITY,
            residual: 0.0,
            min_f: f64::INFINITY,
            cone_margin: f64::INFINITY,
            max_h: 0.0,
            max_g: f64::NEG_INFINITY,
            min_g: f64::INFINITY,
            min_support: f64::INFINITY,
        };
        for n in &eval.nodes {
            let sh = &n.shape;
            let dt_rho = n.dt_rho();
            let p2 = sh.grad_r[0] * sh.grad_r[0] + sh.grad_r[1] * sh.grad_r[1];
            s.max_dt_rho = s.max_dt_rho.max(dt_rho.abs());
            s.min_dt_rho_signed = s.min_dt_rho_signed.min(dt_rho);
            s.max_dt_rho_signed = s.max_dt_rho_signed.max(dt_rho);
            s.min_rho = s.min_rho.min(sh.rho);
            s.max_rho = s.max_rho.max(sh.rho);
            s.max_grad_rho = s.max_grad_rho.max(sh.rho * p2.sqrt());
            s.min_kappa = s.min_kappa.min(sh.kappa[0]);
            s.max_kappa = s.max_kappa.max(sh.kappa[1]);
            s.residual = s.residual.max(n.speed().abs());
            s.min_f = s.min_f.min(n.curvature_fn);
            s.cone_margin = s.cone_margin.min(curvature.cone_margin(sh.kappa));
            s.max_h = s.max_h.max(0.5 * p2);
            s.max_g = s.max_g.max(n.velocity);
            s.min_g = s.min_g.min(n.velocity);
            s.min_support = s.min_support.min(sh.support);
        }
        s
    }

    pub fn is_finite(&self) -> bool {
        [
            self.t,
            self.max_dt_rho,
            self.min_dt_rho_signed,
            self.max_dt_rho_signed,
            self.min_rho,
            self.max_rho,
            self.max_grad_rho,
            self.min_kappa,
            self.max_kappa,
            self.residual,
            self.min_f,
            self.cone_margin,
            self.max_h,
            self.max_g,
            self.min_g,
            self.min_support,
        ]
        .iter()
        .all(|v| v.is_finite())
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct MonitorSeries {
    pub snapshots: Vec<Snapshot>,
}

impl MonitorSeries {
    pub fn first(&self) -> Option<&Snapshot> {
        self.snapshots.first()
    }

    pub fn last(&self) -> Option<&Snapshot> {
        self.snapshots.last()
    }

    pub fn times_increasing(&self) -> bool {
        self.snapshots.windows(2).all(|w| w[0].t < w[1].t)
    }

    /// Least-squares slope of `−log max|∂_t ρ|` against time, over
    /// snapshots with a nonzero speed. `None` with fewer than two points.
    pub fn fitted_decay_rate(&self) -> Option<f64> {
        let pts: Vec<(f64, f64)> = self
            .snapshots
            .iter()
            .filter(|s| s.max_dt_rho > 0.0)
            .map(|s| (s.t, s.max_dt_rho.ln()))
            .collect();
        if pts.len() < 2 {
            return None;
        }
        let n = pts.len() as f64;
        let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mt) * (p.0 - mt)).sum();
        if sxx > 0.0 {
            Some(-sxy / sxx)
        } else {
            None
        }
    }
}

/// Verdict of one certificate with the constants it was computed from.
#[derive(Clone, Debug, PartialEq)]
pub struct Certificate {
    pub name: &'static str,
    pub pass: bool,
    pub constants: Vec<(&'static str, f64)>,
    /// Smallest slack observed; negative means the bound was exceeded.
    pub worst_margin: f64,
    pub worst_time: f64,
}

fn worst<'a>(
    series: &'a MonitorSeries,
    margin: impl Fn(&'a Snapshot) -> f64,
) -> (f64, f64) {
    series
        .snapshots
        .iter()
        .map(|s| (margin(s), s.t))
        .fold((f64::INFINITY, 0.0), |acc, x| if x.0 < acc.0 { x } else { acc })
}

pub const BOUNDS_TOL: f64 = 1e-8;
pub const DECAY_FACTOR: f64 = 1.05;
pub const SIGN_TOL: f64 = 1e-10;
pub const GRADIENT_TOL: f64 = 1e-8;
pub const CURVATURE_REL_TOL: f64 = 1e-6;

/// `R1 ≤ ρ ≤ R2` at every snapshot, with `R1 = min(r1, min ρ₀)` and
/// `R2 = max(r2, max ρ₀)`.
pub fn cert_bounds(series: &MonitorSeries, rho0_range: (f64, f64), r1: f64, r2: f64) -> Certificate {
    let big_r1 = r1.min(rho0_range.0);
    let big_r2 = r2.max(rho0_range.1);
    let (m, t) = worst(series, |s| (s.min_rho - big_r1).min(big_r2 - s.max_rho));
    Certificate {
        name: "radial_bounds",
        pass: m >= -BOUNDS_TOL,
        constants: alloc::vec![("R1", big_r1), ("R2", big_r2)],
        worst_margin: m,
        worst_time: t,
    }
}

/// Exponential decay `max|∂_t ρ| ≤ 1.05 (R2/R1) F0 e^{−λt}` with
/// `λ = δ₀/R2` for degree ≤ 1 and `δ₀/R1` above, plus the sign of `∂_t ρ`.
pub fn cert_decay(
    series: &MonitorSeries,
    delta0: f64,
    big_r1: f64,
    big_r2: f64,
    k: f64,
    f0_max: f64,
) -> Certificate {
    let lambda = if k <= 1.0 { delta0 / big_r2 } else { delta0 / big_r1 };
    let prefactor = big_r2 / big_r1 * f0_max;
    let (m, t) = worst(series, |s| {
        let bound = DECAY_FACTOR * prefactor * (-lambda * s.t).exp();
        let sign = if k <= 1.0 { s.min_dt_rho_signed + SIGN_TOL } else { SIGN_TOL - s.max_dt_rho_signed };
        (bound - s.max_dt_rho).min(sign)
    });
    let mut constants = alloc::vec![
        ("R1", big_r1),
        ("R2", big_r2),
        ("delta0", delta0),
        ("lambda", lambda),
        ("prefactor", prefactor),
    ];
    if let Some(rate) = series.fitted_decay_rate() {
        constants.push(("fitted_rate", rate));
    }
    Certificate { name: "speed_decay", pass: m >= 0.0, constants, worst_margin: m, worst_time: t }
}

/// `max H ≤ max(H₀, C₀² R2² / (2 δ₀²))` with `H = ½|∇log ρ|²`.
pub fn cert_gradient(series: &MonitorSeries, c0_grad: f64, big_r2: f64, delta0: f64, h0_max: f64) -> Certificate {
    let cap = h0_max.max(c0_grad * c0_grad * big_r2 * big_r2 / (2.0 * delta0 * delta0));
    let (m, t) = worst(series, |s| cap + GRADIENT_TOL - s.max_h);
    Certificate {
        name: "gradient_bound",
        pass: m >= 0.0,
        constants: alloc::vec![("C0", c0_grad), ("R2", big_r2), ("delta0", delta0), ("H0", h0_max), ("cap", cap)],
        worst_margin: m,
        worst_time: t,
    }
}

/// `max_x log(κ_max / ⟨X, ν⟩)` of a state.
pub fn max_log_curvature_support(state: &ShapeState) -> f64 {
    state
        .nodes
        .iter()
        .map(|n| (n.kappa[1] / n.support).ln())
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Curvature caps `κ ≤ R2 e^{C₀}` and `κ ≥ −(n−1) R2 e^{C₀}` with
/// `C₀ = max(log(C/δ₀), max h(0,·))`.
pub fn cert_curvature(
    series: &MonitorSeries,
    shape0: &ShapeState,
    c2_norm: f64,
    delta0: f64,
    big_r2: f64,
) -> Certificate {
    let h0 = max_log_curvature_support(shape0);
    let c0 = (c2_norm / delta0).ln().max(h0);
    let upper = big_r2 * c0.exp();
    let lower = -((DIM - 1) as f64) * upper;
    let slack = 1.0 + CURVATURE_REL_TOL;
    let (m, t) = worst(series, |s| (upper * slack - s.max_kappa).min(s.min_kappa - lower * slack));
    Certificate {
        name: "curvature_bound",
        pass: m >= 0.0,
        constants: alloc::vec![
            ("C", c2_norm),
            ("delta0", delta0),
            ("h0", h0),
            ("C0", c0),
            ("upper", upper),
            ("lower", lower)
        ],
        worst_margin: m,
        worst_time: t,
    }
}

/// Final residual below `tol`.
pub fn cert_residual(series: &MonitorSeries, tol: f64) -> Certificate {
    let last = series.last();
    let r = last.map_or(f64::INFINITY, |s| s.residual);
    Certificate {
        name: "residual",
        pass: r <= tol,
        constants: alloc::vec![("tol", tol), ("final_residual", r)],
        worst_margin: tol - r,
        worst_time: last.map_or(0.0, |s| s.t),
    }
}

/// `max |1/F(κ) − f(ρx)|` over the nodes.
pub fn residual(
    grid: &SphereGrid,
    u: &[f64],
    curvature: &CurvatureSpec,
    prescribed: &PrescribedSpec,
) -> Result<f64> {
    let e = evaluate(grid, u, curvature, prescribed, false)?;
    Ok(e.nodes.iter().map(|n| n.speed().abs()).fold(0.0, f64::max))
}

pub struct UniquenessOutcome {
    pub max_difference: f64,
    pub runs: [FlowReport; 2],
}

/// Evolves two initial fields and compares the final radial functions.
pub fn uniqueness_experiment(
    grid: &SphereGrid,
    curvature: &CurvatureSpec,
    prescribed: &PrescribedSpec,
    u0_a: &[f64],
    u0_b: &[f64],
    config: &FlowConfig,
) -> Result<UniquenessOutcome> {
    let a = evolve(grid, u0_a, curvature, prescribed, config)?;
    let b = evolve(grid, u0_b, curvature, prescribed, config)?;
    let max_difference = a
        .state
        .u
        .iter()
        .zip(&b.state.u)
        .map(|(x, y)| (x.exp() - y.exp()).abs())
        .fold(0.0, f64::max);
    Ok(UniquenessOutcome { max_difference, runs: [a, b] })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridMode;
    use crate::shape::shape_state;
    use alloc::vec;

    fn snap(t: f64, rho: f64, dt_rho: f64, h: f64) -> Snapshot {
        Snapshot {
            t,
            max_dt_rho: dt_rho.abs(),
            min_dt_rho_signed: dt_rho,
            max_dt_rho_signed: dt_rho,
            min_rho: rho,
            max_rho: rho,
            max_grad_rho: 0.0,
            min_kappa: 1.0 / rho,
            max_kappa: 1.0 / rho,
            residual: dt_rho.abs(),
            min_f: 1.0 / rho,
            cone_margin: 1.0 / rho,
            max_h: h,
            max_g: dt_rho / rho,
            min_g: dt_rho / rho,
            min_support: rho,
        }
    }

    fn logistic_series() -> MonitorSeries {
        let snapshots = (0..50)
            .map(|i| {
                let t = 0.2 * i as f64;
                let rho = 1.0 / (1.0 + 0.25 * (-t).exp());
                snap(t, rho, rho - rho * rho, 0.0)
            })
            .collect();
        MonitorSeries { snapshots }
    }

    #[test]
    fn bounds_and_decay_on_logistic_series() {
        let s = logistic_series();
        let b = cert_bounds(&s, (0.8, 0.8), 0.8, 1.0);
        assert!(b.pass);
        let d = cert_decay(&s, 0.64, 0.8, 1.0, 1.0, 0.16);
        assert!(d.pass, "{d:?}");
        let lambda = d.constants.iter().find(|c| c.0 == "lambda").unwrap().1;
        let pre = d.constants.iter().find(|c| c.0 == "prefactor").unwrap().1;
        assert!((lambda - 0.64).abs() < 1e-15 && (pre - 0.2).abs() < 1e-15);
        let fitted = s.fitted_decay_rate().unwrap();
        assert!(fitted > 0.64);
    }

    #[test]
    fn decay_constants_for_large_degree() {
        let d = cert_decay(&MonitorSeries::default(), 0.729, 0.9, 1.05, 2.0, 0.055_125);
        let get = |n: &str| d.constants.iter().find(|c| c.0 == n).unwrap().1;
        assert!((get("lambda") - 0.81).abs() < 1e-15);
        assert!((get("prefactor") - 1.05 / 0.9 * 0.055_125).abs() < 1e-15);
    }

    #[test]
    fn sign_violation_fails_decay() {
        let mut s = logistic_series();
        s.snapshots[10].min_dt_rho_signed = -1e-6;
        assert!(!cert_decay(&s, 0.64, 0.8, 1.0, 1.0, 0.16).pass);
    }

    #[test]
    fn gradient_cap_detects_injection() {
        let mut s = logistic_series();
        assert!(cert_gradient(&s, 2.0, 1.0, 0.64, 0.0).pass);
        let cap = 4.0 / (2.0 * 0.64 * 0.64);
        s.snapshots[7].max_h = cap * 1.01;
        let c = cert_gradient(&s, 2.0, 1.0, 0.64, 0.0);
        assert!(!c.pass && c.worst_time == s.snapshots[7].t);
    }

    #[test]
    fn curvature_cap_on_sphere_start() {
        let grid = SphereGrid::new(GridMode::Full, 8, 16).unwrap();
        let shape0 = shape_state(&grid, &vec![0.8; grid.len()]).unwrap();
        let h0 = max_log_curvature_support(&shape0);
        assert!((h0 - 1.5625f64.ln()).abs() < 1e-13);
        let c = cert_curvature(&logistic_series(), &shape0, 2.0 * 3f64.sqrt(), 0.64, 1.0);
        assert!(c.pass);
        let upper = c.constants.iter().find(|x| x.0 == "upper").unwrap().1;
        assert!(upper >= h0.exp());
    }

    #[test]
    fn residual_examples() {
        let grid = SphereGrid::new(GridMode::Full, 8, 16).unwrap();
        let s1 = CurvatureSpec::sigma_k(1).unwrap();
        let f2 = PrescribedSpec::radial(2.0).unwrap();
        assert_eq!(residual(&grid, &vec![0.0; grid.len()], &s1, &f2).unwrap(), 0.0);
        let r = residual(&grid, &vec![0.8f64.ln(); grid.len()], &s1, &f2).unwrap();
        assert!((r - 0.16).abs() < 1e-14);
    }

    #[test]
    fn certification_is_idempotent() {
        let s = logistic_series();
        assert_eq!(cert_decay(&s, 0.64, 0.8, 1.0, 1.0, 0.16), cert_decay(&s, 0.64, 0.8, 1.0, 1.0, 0.16));
    }
}
