use proptest::prelude::*;

use starflow_core::flow::{evaluate, evolve, stable_dt, FlowConfig, Integrator};
use starflow_core::grid::{GridMode, SphereGrid};
use starflow_core::prescribed::{default_scan_grid, Angular, PrescribedSpec};
use starflow_core::shape::{shape_state, shape_state_verified};
use starflow_core::symfunc::CurvatureSpec;
use starflow_core::Sym2;

fn specs() -> Vec<CurvatureSpec> {
    vec![
        CurvatureSpec::sigma_k(1).unwrap(),
        CurvatureSpec::sigma_k(2).unwrap(),
        CurvatureSpec::inv_sigma_k(1).unwrap(),
        CurvatureSpec::inv_sigma_k(2).unwrap(),
        CurvatureSpec::power_scaled(CurvatureSpec::sigma_k(1).unwrap(), 2.0).unwrap(),
        CurvatureSpec::power_scaled(CurvatureSpec::sigma_k(2).unwrap(), 0.5).unwrap(),
    ]
}

fn spec_strategy() -> impl Strategy<Value = CurvatureSpec> {
    (0..6usize).prop_map(|i| specs()[i].clone())
}

/// A cone point for `spec`, drawn from the box [−2, 2]² and pushed inside.
fn cone_point(spec: &CurvatureSpec, a: f64, b: f64) -> Option<[f64; 2]> {
    let k = [a, b];
    spec.in_cone(k).then_some(k)
}

/// Low-order harmonic mix with values in [−1, 1].
fn harmonic_mix(c: &[f64; 8], x: [f64; 3]) -> f64 {
    let basis = [
        x[0],
        x[1],
        x[2],
        2.0 * x[0] * x[1],
        2.0 * x[0] * x[2],
        2.0 * x[1] * x[2],
        x[0] * x[0] - x[1] * x[1],
        0.5 * (3.0 * x[2] * x[2] - 1.0),
    ];
    let norm: f64 = c.iter().map(|v| v.abs()).sum::<f64>().max(1e-12);
    c.iter().zip(basis).map(|(a, b)| a * b).sum::<f64>() / norm
}

fn coeffs() -> impl Strategy<Value = [f64; 8]> {
    prop::array::uniform8(-1.0f64..1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn curvature_function_is_symmetric(spec in spec_strategy(), a in -2.0f64..2.0, b in -2.0f64..2.0) {
        if let Some(k) = cone_point(&spec, a, b) {
            prop_assert_eq!(spec.eval_f(k).unwrap(), spec.eval_f([k[1], k[0]]).unwrap());
        }
    }

    #[test]
    fn curvature_function_is_homogeneous(
        spec in spec_strategy(), a in -2.0f64..2.0, b in -2.0f64..2.0, t in 0.25f64..4.0,
    ) {
        if let Some(k) = cone_point(&spec, a, b) {
            let f = spec.eval_f(k).unwrap();
            let ft = spec.eval_f([t * k[0], t * k[1]]).unwrap();
            let expect = t.powf(spec.degree()) * f;
            prop_assert!((ft - expect).abs() <= 1e-10 * expect);
        }
    }

    #[test]
    fn gradient_is_positive_and_satisfies_euler(spec in spec_strategy(), a in -2.0f64..2.0, b in -2.0f64..2.0) {
        if let Some(k) = cone_point(&spec, a, b) {
            let f = spec.eval_f(k).unwrap();
            let g = spec.grad_f(k).unwrap();
            prop_assert!(g[0] > 0.0 && g[1] > 0.0);
            let euler = k[0] * g[0] + k[1] * g[1] - spec.degree() * f;
            prop_assert!(euler.abs() <= 1e-10 * (spec.degree() * f).abs().max(1e-300));
        }
    }

    #[test]
    fn gradient_matches_finite_differences(spec in spec_strategy(), a in -2.0f64..2.0, b in -2.0f64..2.0) {
        if let Some(k) = cone_point(&spec, a, b) {
            let h = 1e-6 * k[0].hypot(k[1]);
            let shifted = [[k[0] + h, k[1]], [k[0] - h, k[1]], [k[0], k[1] + h], [k[0], k[1] - h]];
            // keep samples whose stencil stays well inside the cone
            if shifted.iter().all(|s| spec.cone_margin(*s) > 1e3 * h) {
                let g = spec.grad_f(k).unwrap();
                let f = |p: [f64; 2]| spec.eval_f(p).unwrap();
                let fd = [
                    (f(shifted[0]) - f(shifted[1])) / (2.0 * h),
                    (f(shifted[2]) - f(shifted[3])) / (2.0 * h),
                ];
                let scale = g[0].abs().max(g[1].abs());
                prop_assert!((fd[0] - g[0]).abs() <= 1e-6 * scale, "{:?} {:?}", fd, g);
                prop_assert!((fd[1] - g[1]).abs() <= 1e-6 * scale, "{:?} {:?}", fd, g);
            }
        }
    }

    #[test]
    fn second_elementary_degenerates_at_the_boundary(a in 0.1f64..2.0, b in 0.1f64..2.0) {
        // ray from (a, b) towards (0, b), a boundary point of the cone
        let spec = CurvatureSpec::sigma_k(2).unwrap();
        let mut last = f64::INFINITY;
        for i in 0..20 {
            let s = 0.5f64.powi(i);
            let v = spec.eval_f([a * s, b]).unwrap();
            prop_assert!(v < last);
            last = v;
        }
        prop_assert!(last <= a * b * 0.5f64.powi(19) * 1.0000001);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn routes_agree_and_shape_invariants_hold(c in coeffs(), amp in 0.05f64..0.2) {
        let grid = SphereGrid::new(GridMode::Full, 16, 32).unwrap();
        let rho = grid.field_from_fn(|n| 1.0 + amp * harmonic_mix(&c, n.x));
        let (state, rel) = shape_state_verified(&grid, &rho).unwrap();
        prop_assert!(rel <= 1e-9, "route disagreement {}", rel);
        for n in &state.nodes {
            prop_assert!(n.support > 0.0);
            prop_assert!(n.kappa[0] <= n.kappa[1]);
            let nu = n.nu;
            prop_assert!(((nu[0] * nu[0] + nu[1] * nu[1] + nu[2] * nu[2]).sqrt() - 1.0).abs() < 1e-12);
            let ident = n.g.congruence(&n.g_inv_sqrt);
            prop_assert!(ident.sub(&Sym2::IDENTITY).max_abs() < 1e-10);
            let sq = n.g_inv_sqrt.matmul(&n.g_inv_sqrt);
            let inv = n.g.inverse().unwrap();
            prop_assert!((sq[0][0] - inv.xx).abs() < 1e-10);
            prop_assert!((sq[0][1] - inv.xy).abs() < 1e-10);
            prop_assert!((sq[1][1] - inv.yy).abs() < 1e-10);
            prop_assert!((n.kappa[0] + n.kappa[1] - n.a.trace()).abs() < 1e-12 * n.a.max_abs().max(1.0));
        }
    }

    #[test]
    fn curvatures_scale_inversely_with_radius(c in coeffs(), t in 0.5f64..3.0) {
        let grid = SphereGrid::new(GridMode::Full, 16, 32).unwrap();
        let rho = grid.field_from_fn(|n| 1.0 + 0.1 * harmonic_mix(&c, n.x));
        let scaled: Vec<f64> = rho.iter().map(|v| t * v).collect();
        let a = shape_state(&grid, &rho).unwrap();
        let b = shape_state(&grid, &scaled).unwrap();
        for (x, y) in a.nodes.iter().zip(&b.nodes) {
            for i in 0..2 {
                prop_assert!((y.kappa[i] * t - x.kappa[i]).abs() <= 1e-10 * x.kappa[i].abs().max(1.0));
            }
        }
    }

    #[test]
    fn speed_identities(c in coeffs()) {
        let grid = SphereGrid::new(GridMode::Full, 16, 32).unwrap();
        let spec = CurvatureSpec::sigma_k(1).unwrap();
        let f = PrescribedSpec::new(2.0, 0.1, Angular::Linear([0.0, 0.0, 1.0])).unwrap();
        let u: Vec<f64> = grid.field_from_fn(|n| (1.0 + 0.1 * harmonic_mix(&c, n.x)).ln());
        let e = evaluate(&grid, &u, &spec, &f, true).unwrap();
        let max_dt_rho = e.max_abs_dt_rho();
        let max_rho = e.nodes.iter().map(|n| n.shape.rho).fold(0.0, f64::max);
        let min_support = e.nodes.iter().map(|n| n.shape.support).fold(f64::INFINITY, f64::min);
        let mut residual: f64 = 0.0;
        for n in &e.nodes {
            // ∂_t ρ = ρ G
            prop_assert!((n.dt_rho() - n.shape.rho * n.velocity).abs() <= 1e-12);
            residual = residual.max(n.speed().abs());
        }
        prop_assert!(residual <= max_dt_rho * max_rho / min_support * (1.0 + 1e-12));
        let dt = stable_dt(&grid, &u, &spec, &f, 0.5).unwrap();
        prop_assert!(dt > 0.0 && dt.is_finite());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn monotonicity_matches_finite_differences(
        p in 1.0f64..4.0, k in 0.5f64..2.0, eps in -0.5f64..0.5, rho in 0.5f64..1.5,
    ) {
        let f = PrescribedSpec::new(p, eps, Angular::Linear([0.3, -0.2, 0.6])).unwrap();
        let x = [0.0, 0.6, 0.8];
        let g = |r: f64| r.powf(-k) * f.eval_f(r, x).unwrap();
        let h = 1e-5 * rho;
        let fd = (g(rho + h) - g(rho - h)) / (2.0 * h);
        let exact = (p - k) * rho.powf(p - k - 1.0) * (1.0 + eps * (-0.2 * 0.6 + 0.6 * 0.8));
        prop_assert!((fd - exact).abs() <= 1e-8, "{} vs {}", fd, exact);
    }

    #[test]
    fn radial_reports_do_not_depend_on_directions(p in 1.5f64..4.0, lo in 0.5f64..0.9, width in 0.05f64..0.5) {
        let f = PrescribedSpec::radial(p).unwrap();
        let full = default_scan_grid();
        let coarse = SphereGrid::new(GridMode::Axisymmetric, 8, 0).unwrap();
        let hi = lo + width;
        prop_assert!((f.delta0_scan(1.0, lo, hi, &full) - f.delta0_scan(1.0, lo, hi, &coarse)).abs() <= 1e-12);
        prop_assert!((f.check_monotonicity(1.0, (lo, hi), &full) - f.check_monotonicity(1.0, (lo, hi), &coarse)).abs() <= 1e-12);
    }

    #[test]
    fn delta0_shrinks_on_larger_annuli(eps in -0.3f64..0.3, lo in 0.6f64..0.9, hi in 1.0f64..1.3, grow in 0.0f64..0.3) {
        let f = PrescribedSpec::new(2.5, eps, Angular::Linear([0.0, 0.0, 1.0])).unwrap();
        let g = default_scan_grid();
        let inner = f.delta0_scan(1.0, lo, hi, &g);
        let outer = f.delta0_scan(1.0, lo - grow * 0.5, hi + grow, &g);
        prop_assert!(outer <= inner + 1e-15);
    }

    #[test]
    fn radial_barriers_hold_around_the_unit_sphere(p in 1.1f64..4.0, k in 0.5f64..1.0, r1 in 0.3f64..1.0, r2 in 1.0f64..2.0) {
        let f = PrescribedSpec::radial(p).unwrap();
        prop_assert!(f.verify_barriers(k, r1, r2, &default_scan_grid()).pass);
    }
}

#[test]
fn integrators_agree_on_the_limit() {
    let grid = SphereGrid::new(GridMode::Axisymmetric, 32, 0).unwrap();
    let spec = CurvatureSpec::sigma_k(1).unwrap();
    let f = PrescribedSpec::new(2.0, 0.1, Angular::Linear([0.0, 0.0, 1.0])).unwrap();
    let u0 = vec![0.85f64.ln(); grid.len()];
    let run = |integrator| {
        let cfg = FlowConfig { integrator, tol_residual: 1e-10, t_max: 60.0, ..FlowConfig::default() };
        let r = evolve(&grid, &u0, &spec, &f, &cfg).unwrap();
        assert!(r.converged(), "{:?}", r.termination);
        r.state.rho()
    };
    let a = run(Integrator::Rk2);
    let b = run(Integrator::Rk4);
    let diff = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    assert!(diff <= 1e-7, "{diff}");
}

#[test]
fn snapshot_series_is_finite_and_ordered() {
    let grid = SphereGrid::new(GridMode::Axisymmetric, 32, 0).unwrap();
    let spec = CurvatureSpec::sigma_k(1).unwrap();
    let f = PrescribedSpec::radial(2.0).unwrap();
    let cfg = FlowConfig { t_max: 2.0, monitor_stride: 50, ..FlowConfig::default() };
    let r = evolve(&grid, &vec![0.8f64.ln(); 32], &spec, &f, &cfg).unwrap();
    assert!(r.series.times_increasing());
    assert!(r.series.snapshots.iter().all(|s| s.is_finite()));
    // sphere runs: residual decreases monotonically
    assert!(r.series.snapshots.windows(2).all(|w| w[1].residual <= w[0].residual));
    assert!(r.series.snapshots.iter().all(|s| s.cone_margin > 0.0));
}
