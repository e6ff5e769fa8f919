use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

/// Tangent angle θ stored together with its complement φ = π/2 − θ.
///
/// Whichever of the two is smaller in magnitude is authoritative, so angles
/// a hair away from 0 or from π/2 keep full relative precision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Angle {
    pub theta: f64,
    pub phi: f64,
}

impl Angle {
    pub const ZERO: Angle = Angle {
        theta: 0.0,
        phi: FRAC_PI_2,
    };
    pub const RIGHT: Angle = Angle {
        theta: FRAC_PI_2,
        phi: 0.0,
    };

    pub fn from_theta(theta: f64) -> Self {
        Self {
            theta,
            phi: FRAC_PI_2 - theta,
        }
    }

    pub fn from_phi(phi: f64) -> Self {
        Self {
            theta: FRAC_PI_2 - phi,
            phi,
        }
    }

    fn phi_authoritative(&self) -> bool {
        self.phi.abs() < self.theta.abs()
    }

    pub fn sin(&self) -> f64 {
        if self.phi.abs() <= FRAC_PI_4 {
            self.phi.cos()
        } else if self.theta <= FRAC_PI_2 {
            self.theta.sin()
        } else {
            (PI - self.theta).sin()
        }
    }

    pub fn cos(&self) -> f64 {
        if self.phi.abs() <= FRAC_PI_4 {
            self.phi.sin()
        } else {
            self.theta.cos()
        }
    }

    /// The angle θ + delta, computed in the more precise representation.
    pub fn add(&self, delta: f64) -> Self {
        if self.phi_authoritative() {
            Self::from_phi(self.phi - delta)
        } else {
            Self::from_theta(self.theta + delta)
        }
    }

    /// Signed difference self − other, computed in the shared precise representation.
    pub fn minus(&self, other: &Angle) -> f64 {
        if self.phi_authoritative() && other.phi_authoritative() {
            other.phi - self.phi
        } else {
            self.theta - other.theta
        }
    }

    /// The reflected angle π − θ (tangent of the mirrored curve).
    pub fn reflected(&self) -> Self {
        Self {
            theta: PI - self.theta,
            phi: -self.phi,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complement_keeps_precision() {
        let a = Angle::from_phi(1e-30);
        assert_eq!(a.cos(), 1e-30_f64.sin());
        let b = a.add(-1e-30);
        assert_eq!(b.phi, 2e-30);
        assert_eq!(Angle::RIGHT.cos(), 0.0);
        assert_eq!(Angle::ZERO.sin(), 0.0);
        assert_eq!(Angle::ZERO.reflected().sin(), 0.0);
    }

    #[test]
    fn trig_matches_direct() {
        for &t in &[0.1, 0.7, 1.2, 1.5, 2.0, 3.0] {
            let a = Angle::from_theta(t);
            assert!((a.sin() - t.sin()).abs() < 1e-15);
            assert!((a.cos() - t.cos()).abs() < 1e-15);
        }
    }
}
