//! Prescribed functions `f(X) = |X|^p (1 + ε Y(X/|X|))` and their
//! admissibility constants on an annulus.

use alloc::boxed::Box;
use alloc::vec::Vec;

// redundant when a dependency links std
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::grid::{GridMode, SphereGrid};
use crate::linalg::{norm3, scale3, Vec3};

/// Conditions required to be strictly positive are certified at this level.
pub const STRICT_TOL: f64 = 1e-10;
/// Slack allowed on the barrier inequalities.
pub const BARRIER_TOL: f64 = 1e-12;
/// Radial resolution of annulus scans.
pub const RADIAL_SAMPLES: usize = 32;

/// Angular profile `Y` on the unit sphere.
#[derive(Clone, Debug)]
pub enum Angular {
    /// `Y(x) = c · x`.
    Linear(Vec3),
    /// Node values on a grid, bilinearly interpolated.
    Tabulated(Box<TabulatedProfile>),
}

#[derive(Clone, Debug)]
pub struct TabulatedProfile {
    pub grid: SphereGrid,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct PrescribedSpec {
    pub p: f64,
    pub epsilon: f64,
    pub angular: Angular,
}

impl PrescribedSpec {
    pub fn new(p: f64, epsilon: f64, angular: Angular) -> Result<Self> {
        if !p.is_finite() || !epsilon.is_finite() {
            return Err(Error::InvalidParameter("p and epsilon must be finite"));
        }
        if epsilon.abs() >= 1.0 {
            return Err(Error::InvalidParameter("|epsilon| must be below 1"));
        }
        let (lo, hi) = match &angular {
            Angular::Linear(c) => {
                if c.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidParameter("angular coefficients must be finite"));
                }
                let n = norm3(*c);
                (-n, n)
            }
            Angular::Tabulated(t) => {
                t.grid.check_field(&t.values)?;
                if t.values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidParameter("angular table must be finite"));
                }
                let lo = t.values.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = t.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                (lo, hi)
            }
        };
        if 1.0 + epsilon * lo <= 0.0 || 1.0 + epsilon * hi <= 0.0 {
            return Err(Error::InvalidParameter("1 + epsilon·Y must stay positive"));
        }
        Ok(PrescribedSpec { p, epsilon, angular })
    }

    /// Purely radial `f = |X|^p`.
    pub fn radial(p: f64) -> Result<Self> {
        Self::new(p, 0.0, Angular::Linear([0.0; 3]))
    }

    /// `Y` at a unit direction.
    pub fn angular_at(&self, x: Vec3) -> f64 {
        match &self.angular {
            Angular::Linear(c) => c[0] * x[0] + c[1] * x[1] + c[2] * x[2],
            Angular::Tabulated(t) => t.grid.interpolate(&t.values, x),
        }
    }

    fn angular_factor(&self, x: Vec3) -> f64 {
        if self.epsilon == 0.0 {
            1.0
        } else {
            1.0 + self.epsilon * self.angular_at(x)
        }
    }

    /// `f(ρ x)` for a unit direction `x`.
    pub fn eval_f(&self, rho: f64, x: Vec3) -> Result<f64> {
        if !(rho > 0.0) {
            return Err(Error::NonPositiveRadius { node: None, rho });
        }
        Ok(self.eval_unchecked(rho, x))
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, rho: f64, x: Vec3) -> f64 {
        power(rho, self.p) * self.angular_factor(x)
    }

    /// `∂f/∂ρ` along the ray through `x`.
    pub fn d_rho_f(&self, rho: f64, x: Vec3) -> Result<f64> {
        if !(rho > 0.0) {
            return Err(Error::NonPositiveRadius { node: None, rho });
        }
        Ok(self.p * rho.powf(self.p - 1.0) * self.angular_factor(x))
    }

    /// `f` at an ambient point.
    pub fn eval_ambient(&self, point: Vec3) -> f64 {
        let rho = norm3(point);
        self.eval_unchecked(rho, scale3(point, 1.0 / rho))
    }

    /// Directions used by the annulus scans: the nodes of `grid`, plus the
    /// extremal directions of a linear profile and the table nodes of a
    /// tabulated one.
    pub fn sample_directions(&self, grid: &SphereGrid) -> Vec<Vec3> {
        let mut dirs: Vec<Vec3> = grid.nodes().iter().map(|n| n.x).collect();
        match &self.angular {
            Angular::Linear(c) => {
                let n = norm3(*c);
                if n > 0.0 {
                    let d = scale3(*c, 1.0 / n);
                    dirs.push(d);
                    dirs.push(scale3(d, -1.0));
                }
            }
            Angular::Tabulated(t) => dirs.extend(t.grid.nodes().iter().map(|n| n.x)),
        }
        dirs
    }

    /// Minimum of `∂_ρ(ρ^{−k} f) = (p − k) ρ^{p−k−1} (1 + εY)` over a
    /// radius × direction lattice.
    pub fn check_monotonicity(&self, k: f64, range: (f64, f64), grid: &SphereGrid) -> f64 {
        let dirs = self.sample_directions(grid);
        let mut m = f64::INFINITY;
        for rho in radii(range.0, range.1) {
            let radial = (self.p - k) * rho.powf(self.p - k - 1.0);
            for x in &dirs {
                m = m.min(radial * self.angular_factor(*x));
            }
        }
        m
    }

    /// Barrier inequalities `f(r1 x) ≤ r1^k` and `f(r2 x) ≥ r2^k`.
    pub fn verify_barriers(&self, k: f64, r1: f64, r2: f64, grid: &SphereGrid) -> BarrierReport {
        let dirs = self.sample_directions(grid);
        let max_inner = dirs
            .iter()
            .map(|x| self.eval_unchecked(r1, *x))
            .fold(f64::NEG_INFINITY, f64::max);
        let min_outer = dirs
            .iter()
            .map(|x| self.eval_unchecked(r2, *x))
            .fold(f64::INFINITY, f64::min);
        let inner_margin = r1.powf(k) - max_inner;
        let outer_margin = min_outer - r2.powf(k);
        BarrierReport {
            inner_margin,
            outer_margin,
            pass: r1 > 0.0
                && r1 <= r2
                && inner_margin >= -BARRIER_TOL
                && outer_margin >= -BARRIER_TOL,
        }
    }

    /// Scan value of `min (ρ ∂_ρ f − k f) = min (p − k) ρ^p (1 + εY)` over
    /// `[R1, R2] × S²`, without the positivity requirement.
    pub fn delta0_scan(&self, k: f64, big_r1: f64, big_r2: f64, grid: &SphereGrid) -> f64 {
        let dirs = self.sample_directions(grid);
        let mut m = f64::INFINITY;
        for rho in radii(big_r1, big_r2) {
            let radial = (self.p - k) * rho.powf(self.p);
            for x in &dirs {
                m = m.min(radial * self.angular_factor(*x));
            }
        }
        m
    }

    /// As [`delta0_scan`](Self::delta0_scan) but errors unless the value is
    /// strictly positive.
    pub fn delta0(&self, k: f64, big_r1: f64, big_r2: f64, grid: &SphereGrid) -> Result<f64> {
        let d = self.delta0_scan(k, big_r1, big_r2, grid);
        if d >= STRICT_TOL {
            Ok(d)
        } else {
            Err(Error::Admissibility("rho·d_rho f − k·f is not positive on the annulus"))
        }
    }

    /// Minimum of `f` over the annulus.
    pub fn min_f(&self, big_r1: f64, big_r2: f64, grid: &SphereGrid) -> f64 {
        let dirs = self.sample_directions(grid);
        let mut m = f64::INFINITY;
        for rho in radii(big_r1, big_r2) {
            for x in &dirs {
                m = m.min(self.eval_unchecked(rho, *x));
            }
        }
        m
    }

    /// `(sup |∇f|, max(sup |f|, sup |∇f|, sup |∇²f|))` over the annulus, by
    /// central differences in ambient coordinates with step `1e-4·R1`.
    pub fn norms(&self, big_r1: f64, big_r2: f64, grid: &SphereGrid) -> (f64, f64) {
        let dirs = self.sample_directions(grid);
        let h = 1e-4 * big_r1;
        let mut sup_f: f64 = 0.0;
        let mut sup_grad: f64 = 0.0;
        let mut sup_hess: f64 = 0.0;
        for rho in radii(big_r1, big_r2) {
            for x in &dirs {
                let c = scale3(*x, rho);
                let (f0, grad, hess) = self.ambient_derivatives(c, h);
                sup_f = sup_f.max(f0.abs());
                sup_grad = sup_grad.max(norm3(grad));
                let frob = hess.iter().flatten().map(|v| v * v).sum::<f64>().sqrt();
                sup_hess = sup_hess.max(frob);
            }
        }
        (sup_grad, sup_f.max(sup_grad).max(sup_hess))
    }

    fn ambient_derivatives(&self, c: Vec3, h: f64) -> (f64, Vec3, [[f64; 3]; 3]) {
        let at = |di: [f64; 3]| self.eval_ambient([c[0] + di[0], c[1] + di[1], c[2] + di[2]]);
        let unit = |i: usize, s: f64| {
            let mut v = [0.0; 3];
            v[i] = s;
            v
        };
        let f0 = at([0.0; 3]);
        let mut grad = [0.0; 3];
        let mut hess = [[0.0; 3]; 3];
        for i in 0..3 {
            let fp = at(unit(i, h));
            let fm = at(unit(i, -h));
            grad[i] = (fp - fm) / (2.0 * h);
            hess[i][i] = ((fp + fm) - 2.0 * f0) / (h * h);
            for j in (i + 1)..3 {
                let mut pp = unit(i, h);
                pp[j] = h;
                let mut pm = unit(i, h);
                pm[j] = -h;
                let mut mp = unit(i, -h);
                mp[j] = h;
                let mut mm = unit(i, -h);
                mm[j] = -h;
                let v = ((at(pp) - at(pm)) - (at(mp) - at(mm))) / (4.0 * h * h);
                hess[i][j] = v;
                hess[j][i] = v;
            }
        }
        (f0, grad, hess)
    }

    /// Full admissibility assessment for curvature degree `k`, barrier radii
    /// `r1 ≤ r2` and an initial radius range.
    pub fn admissibility(
        &self,
        k: f64,
        r1: f64,
        r2: f64,
        rho0_range: (f64, f64),
        grid: &SphereGrid,
    ) -> AdmissibilityReport {
        let big_r1 = r1.min(rho0_range.0);
        let big_r2 = r2.max(rho0_range.1);
        let barriers = self.verify_barriers(k, r1, r2, grid);
        let min_mono = self.check_monotonicity(k, (big_r1, big_r2), grid);
        let delta0 = self.delta0_scan(k, big_r1, big_r2, grid);
        let (c0_grad, c2_norm) = self.norms(big_r1, big_r2, grid);
        let min_f = self.min_f(big_r1, big_r2, grid);
        let pass =
            barriers.pass && min_mono >= STRICT_TOL && delta0 >= STRICT_TOL && r1 <= r2;
        AdmissibilityReport {
            r1,
            r2,
            big_r1,
            big_r2,
            min_mono,
            barriers,
            delta0,
            c0_grad,
            c2_norm,
            min_f,
            pass,
        }
    }

    /// Largest `r1` and smallest `r2` from `candidates` satisfying the
    /// respective barrier inequality.
    pub fn scan_barrier_radii(
        &self,
        k: f64,
        candidates: &[f64],
        grid: &SphereGrid,
    ) -> (Option<f64>, Option<f64>) {
        let mut inner = None;
        let mut outer = None;
        for &r in candidates {
            let rep = self.verify_barriers(k, r, r, grid);
            if rep.inner_margin >= -BARRIER_TOL && inner.is_none_or(|v| r > v) {
                inner = Some(r);
            }
            if rep.outer_margin >= -BARRIER_TOL && outer.is_none_or(|v| r < v) {
                outer = Some(r);
            }
        }
        (inner, outer)
    }
}

/// `x^p`, exact repeated multiplication for small integral exponents.
#[inline]
fn power(x: f64, p: f64) -> f64 {
    if p == p.trunc() && p.abs() <= 16.0 {
        x.powi(p as i32)
    } else {
        x.powf(p)
    }
}

/// Default angular sampling grid for annulus scans.
pub fn default_scan_grid() -> SphereGrid {
    SphereGrid::new(GridMode::Full, 24, 48).expect("valid scan grid")
}

fn radii(lo: f64, hi: f64) -> impl Iterator<Item = f64> {
    let n = RADIAL_SAMPLES;
    (0..n).map(move |i| {
        if i + 1 == n {
            hi
        } else {
            lo + (hi - lo) * i as f64 / (n - 1) as f64
        }
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BarrierReport {
    /// `r1^k − max f(r1 ·)`.
    pub inner_margin: f64,
    /// `min f(r2 ·) − r2^k`.
    pub outer_margin: f64,
    pub pass: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdmissibilityReport {
    pub r1: f64,
    pub r2: f64,
    /// Lower end of the trapping annulus, `min(r1, min ρ₀)`.
    pub big_r1: f64,
    /// Upper end, `max(r2, max ρ₀)`.
    pub big_r2: f64,
    pub min_mono: f64,
    pub barriers: BarrierReport,
    pub delta0: f64,
    pub c0_grad: f64,
    pub c2_norm: f64,
    pub min_f: f64,
    pub pass: bool,
}
