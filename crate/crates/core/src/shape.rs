//! Geometry of the radial surface `X(x) = ρ(x)·x` at every grid node.
//!
//! The primary route works with `r = log ρ`. With `p = ∇r` and
//! `W = √(1 + |p|²)`:
//!
//! ```text
//! γ = I − p pᵀ / (W (1 + W))          (= (I + p pᵀ)^{-1/2})
//! b = γ (I + p pᵀ − ∇²r) γ
//! a = e^{−r} b / W
//! ```
//!
//! A second route from `ρ` and its derivatives (metric, second fundamental
//! form, explicit inverse square root of the metric) is kept as a
//! cross-check; both read the same discrete derivatives of `r`.

use alloc::vec::Vec;

// redundant when a dependency links std
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::grid::SphereGrid;
use crate::linalg::{add3, dot2, scale3, sub3, Sym2, Vec2, Vec3};
use crate::symfunc::CurvatureSpec;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NodeShape {
    pub rho: f64,
    /// Frame gradient of `log ρ`.
    pub grad_r: Vec2,
    /// `√(1 + |∇log ρ|²)`.
    pub w: f64,
    pub g: Sym2,
    pub g_inv_sqrt: Sym2,
    pub h: Sym2,
    pub a: Sym2,
    /// Ascending eigenvalues of `a`.
    pub kappa: Vec2,
    /// `⟨X, ν⟩`.
    pub support: f64,
    pub nu: Vec3,
    pub gamma: Sym2,
}

#[derive(Clone, Debug)]
pub struct ShapeState {
    pub nodes: Vec<NodeShape>,
}

impl ShapeState {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn min_kappa(&self) -> f64 {
        self.nodes.iter().map(|n| n.kappa[0]).fold(f64::INFINITY, f64::min)
    }

    pub fn max_kappa(&self) -> f64 {
        self.nodes.iter().map(|n| n.kappa[1]).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// `(I + p pᵀ)^{-1/2}` in closed form.
pub fn gamma_of(p: Vec2) -> Sym2 {
    let w = (1.0 + dot2(p, p)).sqrt();
    Sym2::IDENTITY.sub(&Sym2::outer(p).scale(1.0 / (w * (1.0 + w))))
}

/// Node geometry from `r = log ρ`, its frame gradient and Hessian, and the
/// ambient frame `(x, e_θ, e_φ)` at the node.
pub fn node_shape_log(r: f64, p: Vec2, hess: &Sym2, frame: (Vec3, Vec3, Vec3)) -> NodeShape {
    let rho = r.exp();
    let pp = Sym2::outer(p);
    let w = (1.0 + dot2(p, p)).sqrt();
    let gamma = Sym2::IDENTITY.sub(&pp.scale(1.0 / (w * (1.0 + w))));
    let inner = Sym2::IDENTITY.add(&pp).sub(hess);
    let b = inner.congruence(&gamma);
    let a = b.scale(1.0 / (rho * w));
    let kappa = principal_curvatures(&a);

    let (x, et, ep) = frame;
    let p_amb = add3(scale3(et, p[0]), scale3(ep, p[1]));
    let nu = scale3(sub3(x, p_amb), 1.0 / w);

    NodeShape {
        rho,
        grad_r: p,
        w,
        g: Sym2::IDENTITY.add(&pp).scale(rho * rho),
        g_inv_sqrt: gamma.scale(1.0 / rho),
        h: inner.scale(rho / w),
        a,
        kappa,
        support: rho / w,
        nu,
        gamma,
    }
}

/// Matrices of the direct route from `ρ`, its frame gradient `d` and Hessian.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RhoRoute {
    pub g: Sym2,
    pub g_inv: Sym2,
    pub g_inv_sqrt: Sym2,
    pub h: Sym2,
    pub a: Sym2,
    pub support: f64,
}

pub fn rho_route(rho: f64, d: Vec2, hess: &Sym2) -> RhoRoute {
    let dd = Sym2::outer(d);
    let q = rho * rho + dot2(d, d);
    let sq = q.sqrt();
    let g = Sym2::scaled_identity(rho * rho).add(&dd);
    let g_inv = Sym2::IDENTITY.sub(&dd.scale(1.0 / q)).scale(1.0 / (rho * rho));
    let g_inv_sqrt = Sym2::IDENTITY.sub(&dd.scale(1.0 / (sq * (rho + sq)))).scale(1.0 / rho);
    let h = Sym2::scaled_identity(rho * rho)
        .add(&dd.scale(2.0))
        .sub(&hess.scale(rho))
        .scale(1.0 / sq);
    let a = h.congruence(&g_inv_sqrt);
    RhoRoute { g, g_inv, g_inv_sqrt, h, a, support: rho * rho / sq }
}

/// Ascending eigenvalues of a symmetric 2×2 matrix.
pub fn principal_curvatures(a: &Sym2) -> Vec2 {
    a.eigenvalues()
}

fn frame(grid: &SphereGrid, node: usize) -> (Vec3, Vec3, Vec3) {
    let (et, ep) = grid.node_frame(node);
    (grid.nodes()[node].x, et, ep)
}

fn log_field(grid: &SphereGrid, rho: &[f64]) -> Result<Vec<f64>> {
    grid.check_field(rho)?;
    rho.iter()
        .enumerate()
        .map(|(i, &v)| {
            if v > 0.0 && v.is_finite() {
                Ok(v.ln())
            } else {
                Err(Error::NonPositiveRadius { node: Some(i), rho: v })
            }
        })
        .collect()
}

/// Shape state of the radial field `rho`.
pub fn shape_state(grid: &SphereGrid, rho: &[f64]) -> Result<ShapeState> {
    let u = log_field(grid, rho)?;
    shape_state_log(grid, &u)
}

/// Shape state from the log-radial field `u = log ρ`.
pub fn shape_state_log(grid: &SphereGrid, u: &[f64]) -> Result<ShapeState> {
    grid.check_field(u)?;
    let mut nodes = Vec::with_capacity(u.len());
    for (i, &r) in u.iter().enumerate() {
        if !r.is_finite() {
            return Err(Error::NonPositiveRadius { node: Some(i), rho: r.exp() });
        }
        let (p, hess) = grid.derivatives_at(u, i);
        nodes.push(node_shape_log(r, p, &hess, frame(grid, i)));
    }
    Ok(ShapeState { nodes })
}

/// Shape state plus the largest relative disagreement between the log
/// route and the direct route for the shape matrix.
pub fn shape_state_verified(grid: &SphereGrid, rho: &[f64]) -> Result<(ShapeState, f64)> {
    let u = log_field(grid, rho)?;
    let state = shape_state_log(grid, &u)?;
    let mut worst_diff: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for (i, n) in state.nodes.iter().enumerate() {
        let (p, hess_r) = grid.derivatives_at(&u, i);
        let d = [n.rho * p[0], n.rho * p[1]];
        let hess_rho = hess_r.add(&Sym2::outer(p)).scale(n.rho);
        let direct = rho_route(n.rho, d, &hess_rho);
        worst_diff = worst_diff.max(direct.a.sub(&n.a).max_abs());
        scale = scale.max(n.a.max_abs());
    }
    Ok((state, worst_diff / scale.max(f64::MIN_POSITIVE)))
}

/// Smallest cone slack of the principal curvatures over all nodes;
/// positive iff every node is admissible.
pub fn min_cone_margin(state: &ShapeState, spec: &CurvatureSpec) -> f64 {
    state
        .nodes
        .iter()
        .map(|n| spec.cone_margin(n.kappa))
        .fold(f64::INFINITY, f64::min)
}

/// Smallest value of `F(κ)` over the nodes; errors at the first node
/// outside the cone.
pub fn min_curvature_function(state: &ShapeState, spec: &CurvatureSpec) -> Result<f64> {
    let mut m = f64::INFINITY;
    for (i, n) in state.nodes.iter().enumerate() {
        m = m.min(spec.eval_f(n.kappa).map_err(|e| e.at_node(i))?);
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridMode;
    use crate::linalg::norm3;

    #[test]
    fn round_sphere_is_exact() {
        let grid = SphereGrid::new(GridMode::Full, 16, 32).unwrap();
        let r0 = 1.7;
        let rho = alloc::vec![r0; grid.len()];
        let s = shape_state(&grid, &rho).unwrap();
        for (n, node) in s.nodes.iter().zip(grid.nodes()) {
            assert!(n.a.sub(&Sym2::scaled_identity(1.0 / r0)).max_abs() < 1e-14);
            assert!(n.g.sub(&Sym2::scaled_identity(r0 * r0)).max_abs() < 1e-13);
            assert!(n.h.sub(&Sym2::scaled_identity(r0)).max_abs() < 1e-13);
            assert!((n.support - r0).abs() < 1e-14);
            assert!(norm3(sub3(n.nu, node.x)) < 1e-15);
        }
    }

    #[test]
    fn metric_inverse_example() {
        let route = rho_route(1.0, [0.3, 0.0], &Sym2::ZERO);
        assert!((route.g.xx - 1.09).abs() < 1e-15);
        assert!((route.g_inv.xx - 0.917_431).abs() < 1e-6);
        assert!((route.g_inv.xx - 1.0 / 1.09).abs() < 1e-15);
        let sq = route.g_inv_sqrt.congruence(&Sym2::IDENTITY);
        let prod = route.g.congruence(&route.g_inv_sqrt);
        assert!(prod.sub(&Sym2::IDENTITY).max_abs() < 1e-14);
        let m = sq.matmul(&sq);
        assert!((m[0][0] - route.g_inv.xx).abs() < 1e-14);
    }

    #[test]
    fn rejects_nonpositive_radius() {
        let grid = SphereGrid::new(GridMode::Axisymmetric, 8, 0).unwrap();
        let mut rho = alloc::vec![1.0; 8];
        rho[3] = 0.0;
        assert!(matches!(
            shape_state(&grid, &rho),
            Err(Error::NonPositiveRadius { node: Some(3), .. })
        ));
    }

    #[test]
    fn cone_margin_examples() {
        let grid = SphereGrid::new(GridMode::Full, 8, 8).unwrap();
        let s1 = CurvatureSpec::sigma_k(1).unwrap();
        let s2 = CurvatureSpec::sigma_k(2).unwrap();
        let one = shape_state(&grid, &alloc::vec![1.0; 64]).unwrap();
        assert!((min_cone_margin(&one, &s1) - 1.0).abs() < 1e-14);
        let two = shape_state(&grid, &alloc::vec![2.0; 64]).unwrap();
        assert!((min_cone_margin(&two, &s2) - 0.25).abs() < 1e-14);
        assert!((min_curvature_function(&two, &s2).unwrap() - 0.25).abs() < 1e-14);
        let mut flat = two.clone();
        flat.nodes[5].kappa = [0.0, 1.0];
        assert!(min_cone_margin(&flat, &s2) <= 0.0);
        assert!(matches!(
            min_curvature_function(&flat, &s2),
            Err(Error::ConeViolation { node: Some(5), .. })
        ));
    }

    #[test]
    fn gamma_squares_to_inverse() {
        let p = [0.4, -1.3];
        let g = gamma_of(p);
        let m = g.matmul(&g);
        let inv = Sym2::IDENTITY.add(&Sym2::outer(p)).inverse().unwrap();
        assert!((m[0][0] - inv.xx).abs() < 1e-14);
        assert!((m[0][1] - inv.xy).abs() < 1e-14);
        assert!((m[1][1] - inv.yy).abs() < 1e-14);
    }
}
