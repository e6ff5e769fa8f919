//! Constant-curvature backgrounds.

use serde::{Deserialize, Serialize};

use crate::error::ForgeError;

/// A simply connected space form of dimension `n` and sectional curvature `k0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BackgroundSpace {
    pub n: usize,
    pub k0: f64,
}

impl BackgroundSpace {
    pub fn new(n: usize, k0: f64) -> Result<Self, ForgeError> {
        if n < 3 {
            return Err(ForgeError::InvalidInput(format!("dimension {n} < 3")));
        }
        if !k0.is_finite() {
            return Err(ForgeError::InvalidInput("curvature must be finite".into()));
        }
        Ok(Self { n, k0 })
    }

    /// Unit round sphere of dimension `n`.
    pub fn unit_sphere(n: usize) -> Self {
        Self { n, k0: 1.0 }
    }

    pub fn nf(&self) -> f64 {
        self.n as f64
    }

    /// Scalar curvature n(n-1)K0.
    pub fn scalar(&self) -> f64 {
        let n = self.nf();
        n * (n - 1.0) * self.k0
    }

    /// Ric(∂r, ∂r) = (n-1)K0.
    pub fn ric_radial(&self) -> f64 {
        (self.nf() - 1.0) * self.k0
    }

    /// Distance-sphere warp sn_{K0}(r).
    pub fn sn(&self, r: f64) -> f64 {
        if self.k0 > 0.0 {
            let q = self.k0.sqrt();
            (q * r).sin() / q
        } else if self.k0 < 0.0 {
            let q = (-self.k0).sqrt();
            (q * r).sinh() / q
        } else {
            r
        }
    }

    /// Derivative of sn_{K0}.
    pub fn cs(&self, r: f64) -> f64 {
        if self.k0 > 0.0 {
            (self.k0.sqrt() * r).cos()
        } else if self.k0 < 0.0 {
            ((-self.k0).sqrt() * r).cosh()
        } else {
            1.0
        }
    }

    /// sn(r0 − x) − sn(r0) + cs(r0)·x, evaluated without cancellation.
    pub fn sn_remainder(&self, r0: f64, x: f64) -> f64 {
        if self.k0 > 0.0 {
            let q = self.k0.sqrt();
            let y = q * x;
            let h = (0.5 * y).sin();
            (-2.0 * (q * r0).sin() * h * h - (q * r0).cos() * sin_minus_id(y)) / q
        } else if self.k0 < 0.0 {
            let q = (-self.k0).sqrt();
            let y = q * x;
            let h = (0.5 * y).sinh();
            (2.0 * (q * r0).sinh() * h * h - (q * r0).cosh() * sinh_minus_id(y)) / q
        } else {
            0.0
        }
    }

    /// Principal curvature of the distance sphere of radius r: √K0·cot(√K0 r).
    pub fn mean_curv(&self, r: f64) -> f64 {
        if self.k0 > 0.0 {
            let q = self.k0.sqrt();
            q / (q * r).tan()
        } else if self.k0 < 0.0 {
            let q = (-self.k0).sqrt();
            q / (q * r).tanh()
        } else {
            1.0 / r
        }
    }

    /// Radius beyond which sn stops being positive (π/√K0), or infinity.
    pub fn injectivity_radius(&self) -> f64 {
        if self.k0 > 0.0 {
            std::f64::consts::PI / self.k0.sqrt()
        } else {
            f64::INFINITY
        }
    }

    /// Volume of the closed space form (only for K0 > 0).
    pub fn total_volume(&self) -> Option<f64> {
        if self.k0 > 0.0 {
            Some(sphere_area(self.n) / self.k0.powf(self.nf() / 2.0))
        } else {
            None
        }
    }

    /// Volume of the geodesic ball of radius r.
    pub fn ball_volume(&self, r: f64) -> f64 {
        let n1 = (self.n - 1) as i32;
        sphere_area(self.n - 1) * crate::quad::gauss_legendre(|x| self.sn(x).powi(n1), 0.0, r, 8)
    }

    /// Area of the distance sphere of radius r.
    pub fn sphere_area_at(&self, r: f64) -> f64 {
        sphere_area(self.n - 1) * self.sn(r).powi((self.n - 1) as i32)
    }

    /// Distance between two points at distance `a` from a common center
    /// subtending angle `psi` there (law of cosines in the space form).
    pub fn chord(&self, a: f64, psi: f64) -> f64 {
        if self.k0 > 0.0 {
            let q = self.k0.sqrt();
            // sin(d/2) = sin(√K0 a)·sin(ψ/2), stable for short chords.
            let half = ((q * a).sin() * (psi / 2.0).sin()).clamp(-1.0, 1.0);
            2.0 * half.asin() / q
        } else if self.k0 < 0.0 {
            let q = (-self.k0).sqrt();
            let half = (q * a).sinh() * (psi / 2.0).sin();
            2.0 * half.asinh() / q
        } else {
            2.0 * a * (psi / 2.0).sin()
        }
    }
}

/// sin y − y.
fn sin_minus_id(y: f64) -> f64 {
    if y.abs() < 0.1 {
        let y2 = y * y;
        -y * y2 / 6.0
            * (1.0 - y2 / 20.0 * (1.0 - y2 / 42.0 * (1.0 - y2 / 72.0 * (1.0 - y2 / 110.0))))
    } else {
        y.sin() - y
    }
}

/// sinh y − y.
fn sinh_minus_id(y: f64) -> f64 {
    if y.abs() < 0.1 {
        let y2 = y * y;
        y * y2 / 6.0
            * (1.0 + y2 / 20.0 * (1.0 + y2 / 42.0 * (1.0 + y2 / 72.0 * (1.0 + y2 / 110.0))))
    } else {
        y.sinh() - y
    }
}

/// Area ω_k of the unit round k-sphere S^k.
pub fn sphere_area(k: usize) -> f64 {
    use std::f64::consts::PI;
    match k {
        0 => 2.0,
        1 => 2.0 * PI,
        _ => 2.0 * PI * sphere_area(k - 2) / (k as f64 - 1.0),
    }
}

/// Volume of the unit Euclidean n-ball.
pub fn ball_volume_unit(n: usize) -> f64 {
    sphere_area(n - 1) / n as f64
}
