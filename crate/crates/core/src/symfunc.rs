//! Symmetric curvature functions of the two principal curvatures.
//!
//! Every function is normalised so that `F(1, 1) = 1`:
//!
//! * `SigmaK(k)`: `S_k(κ) / C(2, k)` on the Gårding cone `{S_1 > 0, …, S_k > 0}`.
//! * `InvSigmaK(k)`: `C(2, k) / S_k(1/κ₁, 1/κ₂)` on the positive cone.
//! * `PowerScaled(base, α)`: `base^α`, homogeneous of degree `α · deg(base)`.

use alloc::boxed::Box;

// redundant when a dependency links std
#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{Sym2, Vec2};

/// Number of principal curvatures of a surface in ℝ³.
pub const DIM: usize = 2;

#[derive(Clone, Debug, PartialEq)]
pub enum CurvatureSpec {
    SigmaK { k: u32 },
    InvSigmaK { k: u32 },
    PowerScaled { base: Box<CurvatureSpec>, alpha: f64 },
}

/// Elementary symmetric polynomial `S_j` of two variables.
pub fn elementary(j: u32, kappa: Vec2) -> f64 {
    match j {
        0 => 1.0,
        1 => kappa[0] + kappa[1],
        2 => kappa[0] * kappa[1],
        _ => 0.0,
    }
}

/// `C(2, j)`.
fn binom2(j: u32) -> f64 {
    match j {
        0 | 2 => 1.0,
        1 => 2.0,
        _ => 0.0,
    }
}

impl CurvatureSpec {
    pub fn sigma_k(k: u32) -> Result<Self> {
        if !(1..=DIM as u32).contains(&k) {
            return Err(Error::InvalidParameter("k must be 1 or 2"));
        }
        Ok(CurvatureSpec::SigmaK { k })
    }

    pub fn inv_sigma_k(k: u32) -> Result<Self> {
        if !(1..=DIM as u32).contains(&k) {
            return Err(Error::InvalidParameter("k must be 1 or 2"));
        }
        Ok(CurvatureSpec::InvSigmaK { k })
    }

    pub fn power_scaled(base: CurvatureSpec, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidParameter("alpha must be positive and finite"));
        }
        Ok(CurvatureSpec::PowerScaled { base: Box::new(base), alpha })
    }

    /// Homogeneity degree.
    pub fn degree(&self) -> f64 {
        match self {
            CurvatureSpec::SigmaK { k } | CurvatureSpec::InvSigmaK { k } => *k as f64,
            CurvatureSpec::PowerScaled { base, alpha } => alpha * base.degree(),
        }
    }

    /// Strict membership in the admissible cone.
    pub fn in_cone(&self, kappa: Vec2) -> bool {
        self.cone_margin(kappa) > 0.0
    }

    /// Signed slack of `κ` inside the cone: the smallest normalised
    /// `S_j(κ) / C(2, j)` for `j ≤ k` on Gårding cones, the smaller
    /// curvature on the positive cone. Positive exactly on the interior.
    pub fn cone_margin(&self, kappa: Vec2) -> f64 {
        match self {
            CurvatureSpec::SigmaK { k } => (1..=*k)
                .map(|j| elementary(j, kappa) / binom2(j))
                .fold(f64::INFINITY, f64::min),
            CurvatureSpec::InvSigmaK { .. } => kappa[0].min(kappa[1]),
            CurvatureSpec::PowerScaled { base, .. } => base.cone_margin(kappa),
        }
    }

    fn require_cone(&self, kappa: Vec2) -> Result<()> {
        if self.in_cone(kappa) {
            Ok(())
        } else {
            Err(Error::ConeViolation { node: None, kappa })
        }
    }

    /// `F(κ)`; errors outside the cone.
    pub fn eval_f(&self, kappa: Vec2) -> Result<f64> {
        self.require_cone(kappa)?;
        Ok(self.eval_unchecked(kappa))
    }

    /// `∇F(κ)`; errors outside the cone.
    pub fn grad_f(&self, kappa: Vec2) -> Result<Vec2> {
        self.require_cone(kappa)?;
        Ok(self.grad_unchecked(kappa))
    }

    /// `F` and `∇F` together; errors outside the cone.
    pub fn eval_with_grad(&self, kappa: Vec2) -> Result<(f64, Vec2)> {
        self.require_cone(kappa)?;
        Ok((self.eval_unchecked(kappa), self.grad_unchecked(kappa)))
    }

    fn eval_unchecked(&self, kappa: Vec2) -> f64 {
        match self {
            CurvatureSpec::SigmaK { k } => elementary(*k, kappa) / binom2(*k),
            CurvatureSpec::InvSigmaK { k } => {
                let mu = [1.0 / kappa[0], 1.0 / kappa[1]];
                binom2(*k) / elementary(*k, mu)
            }
            CurvatureSpec::PowerScaled { base, alpha } => base.eval_unchecked(kappa).powf(*alpha),
        }
    }

    fn grad_unchecked(&self, kappa: Vec2) -> Vec2 {
        match self {
            CurvatureSpec::SigmaK { k } => {
                let c = binom2(*k);
                match k {
                    1 => [1.0 / c, 1.0 / c],
                    _ => [kappa[1] / c, kappa[0] / c],
                }
            }
            CurvatureSpec::InvSigmaK { k } => {
                // ∂F/∂κ_i = C · S_{k-1}(μ | i) / (S_k(μ)² κ_i²), μ = 1/κ
                let mu = [1.0 / kappa[0], 1.0 / kappa[1]];
                let s = elementary(*k, mu);
                let c = binom2(*k) / (s * s);
                let without = |i: usize| -> f64 {
                    match k {
                        1 => 1.0,
                        _ => mu[1 - i],
                    }
                };
                [c * without(0) * mu[0] * mu[0], c * without(1) * mu[1] * mu[1]]
            }
            CurvatureSpec::PowerScaled { base, alpha } => {
                let b = base.eval_unchecked(kappa);
                let g = base.grad_unchecked(kappa);
                let s = alpha * b.powf(alpha - 1.0);
                [s * g[0], s * g[1]]
            }
        }
    }

    /// Derivative of `F` with respect to a symmetric matrix argument at `a`,
    /// expressed as a symmetric matrix. `eig` are the ascending eigenvalues of `a`.
    pub fn matrix_derivative(&self, a: &Sym2, eig: Vec2) -> Result<(f64, Sym2)> {
        let (f, g) = self.eval_with_grad(eig)?;
        let d = match a.upper_projector(eig) {
            Some(p) => Sym2::scaled_identity(g[0]).add(&p.scale(g[1] - g[0])),
            None => Sym2::scaled_identity(g[0]),
        };
        Ok((f, d))
    }

    /// Samples the structure conditions: monotonicity, homogeneity,
    /// log-concavity and normalisation.
    pub fn check_structure(&self, sample_count: usize, seed: u64) -> StructureReport {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = self.degree();
        let mut report = StructureReport {
            samples: 0,
            min_grad: f64::INFINITY,
            max_homogeneity_defect: 0.0,
            max_log_hessian_eig: f64::NEG_INFINITY,
            normalization_defect: (self.eval_unchecked([1.0, 1.0]) - 1.0).abs(),
        };
        const STEP: f64 = 1e-5;
        let mut attempts = 0usize;
        while report.samples < sample_count && attempts < 1000 * sample_count.max(1) {
            attempts += 1;
            let raw = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
            if !self.in_cone(raw) {
                continue;
            }
            let norm = raw[0].hypot(raw[1]);
            let kappa = [raw[0] / norm, raw[1] / norm];
            let h = STEP * norm_of(kappa);
            let stencil = [
                [kappa[0] + h, kappa[1]],
                [kappa[0] - h, kappa[1]],
                [kappa[0], kappa[1] + h],
                [kappa[0], kappa[1] - h],
            ];
            if !self.in_cone(kappa) || stencil.iter().any(|s| !self.in_cone(*s)) {
                continue;
            }
            report.samples += 1;

            let f = self.eval_unchecked(kappa);
            let g = self.grad_unchecked(kappa);
            report.min_grad = report.min_grad.min(g[0]).min(g[1]);

            for t in [0.5, 2.0] {
                let scaled = self.eval_unchecked([t * kappa[0], t * kappa[1]]);
                let defect = (scaled - t.powf(k) * f).abs();
                report.max_homogeneity_defect = report.max_homogeneity_defect.max(defect);
            }

            // Differentiate ∇log F = ∇F / F.
            let log_grad = |p: Vec2| -> Vec2 {
                let fp = self.eval_unchecked(p);
                let gp = self.grad_unchecked(p);
                [gp[0] / fp, gp[1] / fp]
            };
            let (gx1, gx0) = (log_grad(stencil[0]), log_grad(stencil[1]));
            let (gy1, gy0) = (log_grad(stencil[2]), log_grad(stencil[3]));
            let h2 = 2.0 * h;
            let hess = Sym2::new(
                (gx1[0] - gx0[0]) / h2,
                0.5 * ((gx1[1] - gx0[1]) / h2 + (gy1[0] - gy0[0]) / h2),
                (gy1[1] - gy0[1]) / h2,
            );
            let top = hess.eigenvalues()[1];
            report.max_log_hessian_eig = report.max_log_hessian_eig.max(top);
        }
        report
    }
}

fn norm_of(v: Vec2) -> f64 {
    v[0].hypot(v[1])
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StructureReport {
    pub samples: usize,
    pub min_grad: f64,
    pub max_homogeneity_defect: f64,
    pub max_log_hessian_eig: f64,
    pub normalization_defect: f64,
}

impl StructureReport {
    pub const HOMOGENEITY_TOL: f64 = 1e-10;
    pub const LOG_CONCAVITY_TOL: f64 = 1e-6;
    pub const NORMALIZATION_TOL: f64 = 1e-12;

    pub fn is_finite(&self) -> bool {
        self.min_grad.is_finite()
            && self.max_homogeneity_defect.is_finite()
            && self.max_log_hessian_eig.is_finite()
            && self.normalization_defect.is_finite()
    }

    pub fn monotone(&self) -> bool {
        self.min_grad > 0.0
    }

    pub fn homogeneous(&self) -> bool {
        self.max_homogeneity_defect <= Self::HOMOGENEITY_TOL
    }

    pub fn log_concave(&self) -> bool {
        self.max_log_hessian_eig <= Self::LOG_CONCAVITY_TOL
    }

    pub fn normalized(&self) -> bool {
        self.normalization_defect <= Self::NORMALIZATION_TOL
    }

    pub fn passes(&self) -> bool {
        self.samples > 0
            && self.is_finite()
            && self.monotone()
            && self.homogeneous()
            && self.log_concave()
            && self.normalized()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn evaluation_examples() {
        let s1 = CurvatureSpec::sigma_k(1).unwrap();
        let s2 = CurvatureSpec::sigma_k(2).unwrap();
        let h1 = CurvatureSpec::inv_sigma_k(1).unwrap();
        assert_eq!(s1.eval_f([1.0, 1.0]).unwrap(), 1.0);
        assert_eq!(s1.eval_f([2.0, 4.0]).unwrap(), 3.0);
        assert_eq!(s2.eval_f([2.0, 3.0]).unwrap(), 6.0);
        assert!(close(h1.eval_f([1.0, 2.0]).unwrap(), 4.0 / 3.0, 1e-15));
        assert_eq!(s1.grad_f([0.3, 7.0]).unwrap(), [0.5, 0.5]);
        assert_eq!(s2.grad_f([2.0, 3.0]).unwrap(), [3.0, 2.0]);
    }

    #[test]
    fn cone_examples() {
        let s1 = CurvatureSpec::sigma_k(1).unwrap();
        let s2 = CurvatureSpec::sigma_k(2).unwrap();
        let h2 = CurvatureSpec::inv_sigma_k(2).unwrap();
        for spec in [&s1, &s2, &h2] {
            assert!(spec.in_cone([1.0, 1.0]));
        }
        assert!(s1.in_cone([-0.5, 1.0]));
        assert!(!s2.in_cone([-0.5, 1.0]));
        assert!(!s2.in_cone([0.0, 1.0]));
        assert!(s2.cone_margin([0.0, 1.0]) <= 0.0);
        assert!(matches!(s2.eval_f([0.0, 1.0]), Err(Error::ConeViolation { .. })));
    }

    #[test]
    fn power_scaled_degree_and_grad() {
        let p = CurvatureSpec::power_scaled(CurvatureSpec::sigma_k(1).unwrap(), 2.0).unwrap();
        assert_eq!(p.degree(), 2.0);
        assert!(close(p.eval_f([2.0, 4.0]).unwrap(), 9.0, 1e-13));
        let g = p.grad_f([2.0, 4.0]).unwrap();
        assert!(close(g[0], 3.0, 1e-13) && close(g[1], 3.0, 1e-13));
        assert!(CurvatureSpec::power_scaled(CurvatureSpec::sigma_k(1).unwrap(), 0.0).is_err());
    }

    #[test]
    fn matrix_derivative_on_diagonal() {
        let s2 = CurvatureSpec::sigma_k(2).unwrap();
        let a = Sym2::new(2.0, 0.0, 3.0);
        let (f, d) = s2.matrix_derivative(&a, a.eigenvalues()).unwrap();
        assert_eq!(f, 6.0);
        // ∂(det)/∂a = cofactor = diag(3, 2)
        assert!(close(d.xx, 3.0, 1e-14) && close(d.yy, 2.0, 1e-14) && d.xy.abs() < 1e-14);
    }

    #[test]
    fn structure_reports_pass() {
        let specs = [
            CurvatureSpec::sigma_k(1).unwrap(),
            CurvatureSpec::sigma_k(2).unwrap(),
            CurvatureSpec::inv_sigma_k(1).unwrap(),
            CurvatureSpec::inv_sigma_k(2).unwrap(),
            CurvatureSpec::power_scaled(CurvatureSpec::sigma_k(1).unwrap(), 2.0).unwrap(),
        ];
        for spec in specs {
            let r = spec.check_structure(200, 7);
            assert_eq!(r.samples, 200);
            assert!(r.passes(), "{spec:?}: {r:?}");
        }
    }
}
