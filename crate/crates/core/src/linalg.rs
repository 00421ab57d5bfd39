//! Small fixed-size linear algebra used in the per-node inner loops.

// redundant when a dependency links std
#[allow(unused_imports)]
use num_traits::Float;

pub type Vec2 = [f64; 2];
pub type Vec3 = [f64; 3];

/// Symmetric 2×2 matrix stored as its three independent entries.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sym2 {
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
}

impl Sym2 {
    pub const ZERO: Sym2 = Sym2 { xx: 0.0, xy: 0.0, yy: 0.0 };
    pub const IDENTITY: Sym2 = Sym2 { xx: 1.0, xy: 0.0, yy: 1.0 };

    pub const fn new(xx: f64, xy: f64, yy: f64) -> Self {
        Sym2 { xx, xy, yy }
    }

    pub fn scaled_identity(s: f64) -> Self {
        Sym2::new(s, 0.0, s)
    }

    /// Outer product `v vᵀ`.
    pub fn outer(v: Vec2) -> Self {
        Sym2::new(v[0] * v[0], v[0] * v[1], v[1] * v[1])
    }

    pub fn trace(&self) -> f64 {
        self.xx + self.yy
    }

    pub fn det(&self) -> f64 {
        self.xx * self.yy - self.xy * self.xy
    }

    pub fn scale(&self, s: f64) -> Self {
        Sym2::new(self.xx * s, self.xy * s, self.yy * s)
    }

    pub fn add(&self, o: &Sym2) -> Self {
        Sym2::new(self.xx + o.xx, self.xy + o.xy, self.yy + o.yy)
    }

    pub fn sub(&self, o: &Sym2) -> Self {
        Sym2::new(self.xx - o.xx, self.xy - o.xy, self.yy - o.yy)
    }

    pub fn mul_vec(&self, v: Vec2) -> Vec2 {
        [self.xx * v[0] + self.xy * v[1], self.xy * v[0] + self.yy * v[1]]
    }

    /// `s · self · s` for symmetric `s`; the result is symmetric.
    pub fn congruence(&self, s: &Sym2) -> Sym2 {
        // t = self · s (general 2×2)
        let t00 = self.xx * s.xx + self.xy * s.xy;
        let t01 = self.xx * s.xy + self.xy * s.yy;
        let t10 = self.xy * s.xx + self.yy * s.xy;
        let t11 = self.xy * s.xy + self.yy * s.yy;
        Sym2::new(
            s.xx * t00 + s.xy * t10,
            0.5 * ((s.xx * t01 + s.xy * t11) + (s.xy * t00 + s.yy * t10)),
            s.xy * t01 + s.yy * t11,
        )
    }

    /// Full matrix product of two symmetric matrices, returned row-major.
    pub fn matmul(&self, o: &Sym2) -> [[f64; 2]; 2] {
        [
            [self.xx * o.xx + self.xy * o.xy, self.xx * o.xy + self.xy * o.yy],
            [self.xy * o.xx + self.yy * o.xy, self.xy * o.xy + self.yy * o.yy],
        ]
    }

    pub fn inverse(&self) -> Option<Sym2> {
        let d = self.det();
        if d == 0.0 || !d.is_finite() {
            return None;
        }
        Some(Sym2::new(self.yy / d, -self.xy / d, self.xx / d))
    }

    /// Eigenvalues in ascending order, closed form.
    pub fn eigenvalues(&self) -> Vec2 {
        let mean = 0.5 * (self.xx + self.yy);
        let d = 0.5 * (self.xx - self.yy);
        let half_gap = (d * d + self.xy * self.xy).sqrt();
        [mean - half_gap, mean + half_gap]
    }

    /// Orthogonal projector onto the eigenspace of the larger eigenvalue,
    /// given the ascending eigenvalue pair. `None` when the eigenvalues coincide.
    pub fn upper_projector(&self, eig: Vec2) -> Option<Sym2> {
        let gap = eig[1] - eig[0];
        if gap <= 0.0 {
            return None;
        }
        Some(Sym2::new(
            (self.xx - eig[0]) / gap,
            self.xy / gap,
            (self.yy - eig[0]) / gap,
        ))
    }

    pub fn max_abs(&self) -> f64 {
        self.xx.abs().max(self.xy.abs()).max(self.yy.abs())
    }

    pub fn is_finite(&self) -> bool {
        self.xx.is_finite() && self.xy.is_finite() && self.yy.is_finite()
    }
}

pub fn dot2(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

pub fn norm2(a: Vec2) -> f64 {
    a[0].hypot(a[1])
}

pub fn dot3(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn norm3(a: Vec3) -> f64 {
    dot3(a, a).sqrt()
}

pub fn scale3(a: Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

pub fn add3(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub fn sub3(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn normalize3(a: Vec3) -> Vec3 {
    scale3(a, 1.0 / norm3(a))
}
