//! Built-in invariant checks. Geometry is computed through a derivative
//! provider so a deliberately broken Hessian can be injected to confirm
//! the checks have teeth.

use std::fmt::Write as _;

use starflow_core::flow::velocity;
use starflow_core::grid::{GridMode, SphereGrid};
use starflow_core::linalg::{Sym2, Vec2};
use starflow_core::prescribed::PrescribedSpec;
use starflow_core::shape::{node_shape_log, rho_route, NodeShape};
use starflow_core::symfunc::CurvatureSpec;

use crate::commands::{Outcome, EXIT_CHECK_FAILED, EXIT_OK};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mutation {
    None,
    /// Drops the `cot θ · u_θ` connection term from the `φφ` Hessian entry.
    Hessian,
}

struct Provider {
    mutation: Mutation,
}

impl Provider {
    fn derivatives(&self, grid: &SphereGrid, u: &[f64], i: usize) -> (Vec2, Sym2) {
        let (p, mut hess) = grid.derivatives_at(u, i);
        if self.mutation == Mutation::Hessian {
            let theta = grid.nodes()[i].theta;
            hess.yy -= theta.cos() / theta.sin() * p[0];
        }
        (p, hess)
    }

    fn shape(&self, grid: &SphereGrid, u: &[f64], i: usize) -> NodeShape {
        let (p, hess) = self.derivatives(grid, u, i);
        let (et, ep) = grid.node_frame(i);
        node_shape_log(u[i], p, &hess, (grid.nodes()[i].x, et, ep))
    }
}

struct Check {
    name: &'static str,
    pass: bool,
    detail: String,
}

/// Sphere of radius `radius` centred at `c`, seen from the origin.
fn shifted_sphere(x: [f64; 3], c: [f64; 3], radius: f64) -> f64 {
    let xc = x[0] * c[0] + x[1] * c[1] + x[2] * c[2];
    let cc = c[0] * c[0] + c[1] * c[1] + c[2] * c[2];
    xc + (xc * xc + radius * radius - cc).sqrt()
}

fn sphere_curvatures(pr: &Provider, grid: &SphereGrid, name: &'static str) -> Check {
    let (c, radius) = ([0.08, -0.05, 0.2], 1.3);
    let u = grid.field_from_fn(|n| shifted_sphere(n.x, c, radius).ln());
    let mut worst: f64 = 0.0;
    for i in 0..grid.len() {
        let s = pr.shape(grid, &u, i);
        for k in s.kappa {
            worst = worst.max((k * radius - 1.0).abs());
        }
    }
    Check { name, pass: worst <= 5e-3, detail: format!("max |kappa R - 1| = {worst:.3e}") }
}

fn scaling(pr: &Provider, grid: &SphereGrid) -> Check {
    let u = grid.field_from_fn(|n| 0.15 * n.x[0] * n.x[2] + 0.1 * n.x[1]);
    let lambda: f64 = 2.5;
    let v: Vec<f64> = u.iter().map(|r| r + lambda.ln()).collect();
    let mut worst: f64 = 0.0;
    for i in 0..grid.len() {
        let (a, b) = (pr.shape(grid, &u, i), pr.shape(grid, &v, i));
        for j in 0..2 {
            worst = worst.max((b.kappa[j] * lambda - a.kappa[j]).abs() / a.kappa[j].abs().max(1.0));
        }
    }
    Check { name: "dilation scaling", pass: worst <= 1e-10, detail: format!("max defect {worst:.3e}") }
}

fn route_equivalence(pr: &Provider, grid: &SphereGrid) -> Check {
    let u = grid.field_from_fn(|n| 0.2 * n.x[2] * n.x[2] - 0.1 * n.x[0] + 0.05 * n.x[1] * n.x[2]);
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for i in 0..grid.len() {
        let s = pr.shape(grid, &u, i);
        let (p, hess_r) = pr.derivatives(grid, &u, i);
        let d = [s.rho * p[0], s.rho * p[1]];
        let hess_rho = hess_r.add(&Sym2::outer(p)).scale(s.rho);
        let direct = rho_route(s.rho, d, &hess_rho);
        worst = worst.max(direct.a.sub(&s.a).max_abs());
        scale = scale.max(s.a.max_abs());
    }
    let rel = worst / scale;
    Check { name: "log and direct routes", pass: rel <= 1e-9, detail: format!("relative gap {rel:.3e}") }
}

fn structure(spec: CurvatureSpec, name: &'static str) -> Check {
    let r = spec.check_structure(300, 7);
    Check {
        name,
        pass: r.passes(),
        detail: format!(
            "min grad {:.3e}, homogeneity {:.3e}, log-hessian {:.3e}",
            r.min_grad, r.max_homogeneity_defect, r.max_log_hessian_eig
        ),
    }
}

fn steady_sphere() -> Check {
    let run = || -> starflow_core::Result<f64> {
        let grid = SphereGrid::new(GridMode::Full, 16, 32)?;
        let spec = CurvatureSpec::sigma_k(1)?;
        let f = PrescribedSpec::radial(2.0)?;
        let v = velocity(&grid, &vec![0.0; grid.len()], &spec, &f)?;
        Ok(v.iter().fold(0.0, |m, x| m.max(x.abs())))
    };
    match run() {
        Ok(worst) => Check {
            name: "unit sphere is stationary",
            pass: worst <= 1e-12,
            detail: format!("max |speed| {worst:.3e}"),
        },
        Err(e) => Check { name: "unit sphere is stationary", pass: false, detail: e.to_string() },
    }
}

pub fn run(mutation: Mutation) -> Outcome {
    let pr = Provider { mutation };
    let full = SphereGrid::new(GridMode::Full, 48, 96).expect("valid grid");
    let axi = SphereGrid::new(GridMode::Axisymmetric, 96, 1).expect("valid grid");
    let axial = [0.0, 0.0, 0.25];
    let axi_check = {
        let u = axi.field_from_fn(|n| shifted_sphere(n.x, axial, 1.0).ln());
        let worst = (0..axi.len())
            .flat_map(|i| pr.shape(&axi, &u, i).kappa)
            .fold(0.0f64, |m, k| m.max((k - 1.0).abs()));
        Check {
            name: "shifted sphere, axisymmetric",
            pass: worst <= 5e-3,
            detail: format!("max |kappa R - 1| = {worst:.3e}"),
        }
    };
    let checks = [
        sphere_curvatures(&pr, &full, "shifted sphere, full grid"),
        axi_check,
        scaling(&pr, &full),
        route_equivalence(&pr, &full),
        structure(CurvatureSpec::sigma_k(1).expect("k = 1"), "structure of S1/2"),
        structure(CurvatureSpec::sigma_k(2).expect("k = 2"), "structure of S2"),
        structure(CurvatureSpec::inv_sigma_k(2).expect("k = 2"), "structure of 1/S2(1/kappa)"),
        steady_sphere(),
    ];
    let mut report = String::new();
    if mutation != Mutation::None {
        let _ = writeln!(report, "mutation active: {mutation:?}");
    }
    for c in &checks {
        let _ = writeln!(report, "{:<30} {}  {}", c.name, if c.pass { "pass" } else { "FAIL" }, c.detail);
    }
    let pass = checks.iter().all(|c| c.pass);
    Outcome { code: if pass { EXIT_OK } else { EXIT_CHECK_FAILED }, report }
}
