//! Latitude–longitude discretisation of the unit sphere with second-order
//! covariant derivatives for the round metric.
//!
//! Rows sit at the offset latitudes `θ_j = (j + ½)π / n_theta`, so neither
//! pole is a node. Stencils that step across a pole read the reflected node
//! `(−θ, φ + π)` (north) or `(2π − θ, φ + π)` (south); in full mode this
//! requires an even number of longitudes so that `φ + π` is again a node.
//!
//! Frame components are taken in the orthonormal frame `(e_θ, e_φ / sin θ)`.

use alloc::vec::Vec;
use core::f64::consts::PI;

// redundant when a dependency links std
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::{add3, dot3, scale3, sub3, Sym2, Vec2, Vec3};

/// Per-node frame components of a tangent vector field.
pub type FrameVectorField = Vec<Vec2>;
/// Per-node frame components of a symmetric 2-tensor field.
pub type FrameMatrixField = Vec<Sym2>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GridMode {
    Full,
    /// Fields depending on θ only; a single meridian at φ = 0.
    Axisymmetric,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Node {
    pub theta: f64,
    pub phi: f64,
    pub x: Vec3,
}

#[derive(Clone, Debug)]
pub struct SphereGrid {
    mode: GridMode,
    n_theta: usize,
    n_phi: usize,
    d_theta: f64,
    d_phi: f64,
    sin_theta: Vec<f64>,
    cot_theta: Vec<f64>,
    nodes: Vec<Node>,
    frames: Vec<(Vec3, Vec3)>,
    h_min: f64,
}

pub const MIN_NODES: usize = 8;

impl SphereGrid {
    /// `n_phi` is ignored in axisymmetric mode.
    pub fn new(mode: GridMode, n_theta: usize, n_phi: usize) -> Result<Self> {
        if n_theta < MIN_NODES {
            return Err(Error::InvalidGrid("n_theta must be at least 8"));
        }
        let n_phi = match mode {
            GridMode::Axisymmetric => 1,
            GridMode::Full => {
                if n_phi < MIN_NODES {
                    return Err(Error::InvalidGrid("n_phi must be at least 8"));
                }
                if !n_phi.is_multiple_of(2) {
                    return Err(Error::InvalidGrid(
                        "n_phi must be even so pole-crossing stencils land on nodes",
                    ));
                }
                n_phi
            }
        };
        let d_theta = PI / n_theta as f64;
        let d_phi = 2.0 * PI / n_phi as f64;

        let mut sin_theta = Vec::with_capacity(n_theta);
        let mut cot_theta = Vec::with_capacity(n_theta);
        let mut nodes = Vec::with_capacity(n_theta * n_phi);
        for j in 0..n_theta {
            let theta = (j as f64 + 0.5) * d_theta;
            let (st, ct) = theta.sin_cos();
            sin_theta.push(st);
            cot_theta.push(ct / st);
            for i in 0..n_phi {
                let phi = i as f64 * d_phi;
                let (sp, cp) = phi.sin_cos();
                nodes.push(Node { theta, phi, x: [st * cp, st * sp, ct] });
            }
        }
        let frames = nodes.iter().map(|n| Self::frame_at(n.theta, n.phi)).collect();
        let h_min = match mode {
            GridMode::Axisymmetric => d_theta,
            GridMode::Full => d_theta.min(sin_theta[0] * d_phi),
        };
        Ok(SphereGrid { mode, n_theta, n_phi, d_theta, d_phi, sin_theta, cot_theta, nodes, frames, h_min })
    }

    pub fn mode(&self) -> GridMode {
        self.mode
    }

    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    /// Number of longitudes; 1 in axisymmetric mode.
    pub fn n_phi(&self) -> usize {
        self.n_phi
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn h_min(&self) -> f64 {
        self.h_min
    }

    pub fn d_theta(&self) -> f64 {
        self.d_theta
    }

    pub fn d_phi(&self) -> f64 {
        self.d_phi
    }

    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.n_phi + col
    }

    pub fn check_field(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.len() {
            return Err(Error::FieldLength { expected: self.len(), found: u.len() });
        }
        Ok(())
    }

    /// Evaluates `func` at every node.
    pub fn field_from_fn(&self, func: impl FnMut(&Node) -> f64) -> Vec<f64> {
        self.nodes.iter().map(func).collect()
    }

    /// Ambient `(e_θ, e_φ)` at a node.
    #[inline]
    pub fn node_frame(&self, node: usize) -> (Vec3, Vec3) {
        self.frames[node]
    }

    /// Value at a (possibly ghost) stencil position.
    #[inline]
    fn sample(&self, u: &[f64], row: isize, col: isize) -> f64 {
        let n = self.n_phi as isize;
        if row >= 0 && row < self.n_theta as isize {
            let col = if col < 0 {
                col + n
            } else if col >= n {
                col - n
            } else {
                col
            };
            return u[(row * n + col) as usize];
        }
        let (row, col) = self.resolve(row, col);
        u[row * self.n_phi + col]
    }

    #[inline]
    fn resolve(&self, row: isize, col: isize) -> (usize, usize) {
        let nt = self.n_theta as isize;
        let half = (self.n_phi / 2) as isize;
        let (row, shift) = if row < 0 {
            (-1 - row, half)
        } else if row >= nt {
            (2 * nt - 1 - row, half)
        } else {
            (row, 0)
        };
        let col = (col + shift).rem_euclid(self.n_phi as isize);
        (row as usize, col as usize)
    }

    /// Gradient and Hessian frame components of `u` at one node.
    #[inline]
    pub fn derivatives_at(&self, u: &[f64], node: usize) -> (Vec2, Sym2) {
        let row = (node / self.n_phi) as isize;
        let col = (node % self.n_phi) as isize;
        let c = u[node];
        let north = self.sample(u, row - 1, col);
        let south = self.sample(u, row + 1, col);
        let west = self.sample(u, row, col - 1);
        let east = self.sample(u, row, col + 1);

        let dt = self.d_theta;
        let dp = self.d_phi;
        let u_t = (south - north) / (2.0 * dt);
        let u_tt = ((south + north) - 2.0 * c) / (dt * dt);
        let (u_p, u_pp, u_tp) = match self.mode {
            GridMode::Axisymmetric => (0.0, 0.0, 0.0),
            GridMode::Full => {
                let ne = self.sample(u, row - 1, col + 1);
                let nw = self.sample(u, row - 1, col - 1);
                let se = self.sample(u, row + 1, col + 1);
                let sw = self.sample(u, row + 1, col - 1);
                (
                    (east - west) / (2.0 * dp),
                    ((east + west) - 2.0 * c) / (dp * dp),
                    ((se - sw) - (ne - nw)) / (4.0 * dt * dp),
                )
            }
        };

        let r = row as usize;
        let s = self.sin_theta[r];
        let cot = self.cot_theta[r];
        let grad = [u_t, u_p / s];
        let hess = Sym2::new(u_tt, (u_tp - cot * u_p) / s, u_pp / (s * s) + cot * u_t);
        (grad, hess)
    }

    pub fn covariant_gradient(&self, u: &[f64]) -> FrameVectorField {
        (0..self.len()).map(|n| self.derivatives_at(u, n).0).collect()
    }

    pub fn covariant_hessian(&self, u: &[f64]) -> FrameMatrixField {
        (0..self.len()).map(|n| self.derivatives_at(u, n).1).collect()
    }

    /// Ambient unit vectors `(e_θ, e_φ)` at a point given by its angles.
    pub fn frame_at(theta: f64, phi: f64) -> (Vec3, Vec3) {
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        ([ct * cp, ct * sp, -st], [-sp, cp, 0.0])
    }

    /// Embeds frame components at a node as an ambient tangent vector.
    pub fn to_ambient(&self, node: usize, v: Vec2) -> Vec3 {
        let (et, ep) = self.frames[node];
        add3(scale3(et, v[0]), scale3(ep, v[1]))
    }

    fn locate(&self, x: Vec3) -> (f64, f64, isize, f64, isize, f64) {
        let theta = x[2].clamp(-1.0, 1.0).acos();
        let mut phi = x[1].atan2(x[0]);
        if phi < 0.0 {
            phi += 2.0 * PI;
        }
        let s = theta / self.d_theta - 0.5;
        let row = s.floor();
        let wt = s - row;
        let t = phi / self.d_phi;
        let col = t.floor();
        let wp = t - col;
        (theta, phi, row as isize, wt, col as isize, wp)
    }

    /// Bilinear interpolation in (θ, φ) of a scalar node field at the
    /// direction of `x` (need not be normalised).
    pub fn interpolate(&self, u: &[f64], x: Vec3) -> f64 {
        let (_, _, row, wt, col, wp) = self.locate(x);
        match self.mode {
            GridMode::Axisymmetric => {
                let a = self.sample(u, row, 0);
                let b = self.sample(u, row + 1, 0);
                a + wt * (b - a)
            }
            GridMode::Full => {
                let a = self.sample(u, row, col);
                let b = self.sample(u, row, col + 1);
                let c = self.sample(u, row + 1, col);
                let d = self.sample(u, row + 1, col + 1);
                let top = a + wp * (b - a);
                let bottom = c + wp * (d - c);
                top + wt * (bottom - top)
            }
        }
    }

    /// Bilinear interpolation of a tangent field (frame components per node)
    /// at the direction `x`, returned as an ambient vector tangent at `x`.
    pub fn interpolate_tangent(&self, v: &[Vec2], x: Vec3) -> Vec3 {
        let (theta, phi, row, wt, col, wp) = self.locate(x);
        match self.mode {
            GridMode::Axisymmetric => {
                // Across a pole the frame at the reflected node is reversed.
                let comp = |r: isize| -> Vec2 {
                    let (rr, _) = self.resolve(r, 0);
                    let w = v[rr];
                    if r < 0 || r >= self.n_theta as isize {
                        [-w[0], -w[1]]
                    } else {
                        w
                    }
                };
                let a = comp(row);
                let b = comp(row + 1);
                let g = [a[0] + wt * (b[0] - a[0]), a[1] + wt * (b[1] - a[1])];
                let (et, ep) = Self::frame_at(theta, phi);
                add3(scale3(et, g[0]), scale3(ep, g[1]))
            }
            GridMode::Full => {
                let amb = |r: isize, c: isize| -> Vec3 {
                    let (rr, cc) = self.resolve(r, c);
                    let idx = rr * self.n_phi + cc;
                    self.to_ambient(idx, v[idx])
                };
                let lerp = |p: Vec3, q: Vec3, w: f64| add3(p, scale3(sub3(q, p), w));
                let top = lerp(amb(row, col), amb(row, col + 1), wp);
                let bottom = lerp(amb(row + 1, col), amb(row + 1, col + 1), wp);
                let g = lerp(top, bottom, wt);
                let n = crate::linalg::normalize3(x);
                sub3(g, scale3(n, dot3(g, n)))
            }
        }
    }
}
