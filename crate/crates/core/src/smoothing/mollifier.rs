//! Variable-width mollification of a Lipschitz function with a single corner at 0.
//!
//! h_ε(t) = ∫ h(t − σ_ε(t)s) φ(s) ds with σ_ε(t) = ε³σ(t/ε), so the smoothing
//! radius never exceeds ε³/100 and vanishes for |t| ≥ ε/2.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::transition;
use crate::error::ForgeError;

/// Number of Simpson intervals over the mollifier support [−1, 1].
pub const QUAD_INTERVALS: usize = 1 << 9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MollifierSpec {
    pub epsilon: f64,
    pub epsilon0: f64,
}

impl MollifierSpec {
    pub fn new(epsilon: f64, epsilon0: f64) -> Result<Self, ForgeError> {
        if !(epsilon > 0.0) || !(epsilon0 > 0.0) {
            return Err(ForgeError::InvalidInput(
                "mollifier scales must be positive".into(),
            ));
        }
        if epsilon >= epsilon0 / 10.0 {
            return Err(ForgeError::ScaleTooLarge {
                epsilon,
                limit: epsilon0 / 10.0,
            });
        }
        Ok(Self { epsilon, epsilon0 })
    }

    /// σ_ε(t) = ε³σ(t/ε).
    pub fn sigma_eps(&self, t: f64) -> f64 {
        self.epsilon.powi(3) * sigma(t / self.epsilon)
    }
}

/// Bump equal to 1/100 on |t| ≤ 1/4, supported in [−1/2, 1/2].
pub fn sigma(t: f64) -> f64 {
    let a = t.abs();
    if a <= 0.25 {
        0.01
    } else if a >= 0.5 {
        0.0
    } else {
        0.01 * transition::g(4.0 * (0.5 - a))
    }
}

pub fn sigma_prime(t: f64) -> f64 {
    let a = t.abs();
    if a <= 0.25 || a >= 0.5 {
        0.0
    } else {
        -0.04 * transition::g_prime(4.0 * (0.5 - a)) * t.signum()
    }
}

/// Standard mollifier shape exp(−1/(1 − s²)) on (−1, 1), unnormalized.
fn phi_shape(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - s * s)).exp()
    }
}

/// Simpson nodes and weights of φ over [−1, 1], normalized so Σw = 1.
fn nodes() -> &'static [(f64, f64)] {
    static NODES: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    NODES.get_or_init(|| {
        let n = QUAD_INTERVALS;
        let h = 2.0 / n as f64;
        let mut v: Vec<(f64, f64)> = (0..=n)
            .map(|i| {
                let s = -1.0 + i as f64 * h;
                let c = if i == 0 || i == n {
                    1.0
                } else if i % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                (s, c * phi_shape(s))
            })
            .collect();
        let total: f64 = v.iter().map(|p| p.1).sum();
        for p in &mut v {
            p.1 /= total;
        }
        v
    })
}

/// A Lipschitz function smooth on each side of a single corner at t = 0.
pub trait CornerFunction: Sync {
    /// (h(t), h'(t)); at t = 0 the slope may be either one-sided value.
    fn eval(&self, t: f64) -> (f64, f64);
    fn lipschitz(&self) -> f64;
    /// sup of h' over t ≠ 0.
    fn sup_slope(&self) -> f64;
}

/// Two linear pieces meeting at (0, value).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearCorner {
    pub value: f64,
    pub slope_minus: f64,
    pub slope_plus: f64,
}

impl CornerFunction for LinearCorner {
    fn eval(&self, t: f64) -> (f64, f64) {
        if t < 0.0 {
            (self.value + self.slope_minus * t, self.slope_minus)
        } else if t > 0.0 {
            (self.value + self.slope_plus * t, self.slope_plus)
        } else {
            (self.value, 0.5 * (self.slope_minus + self.slope_plus))
        }
    }
    fn lipschitz(&self) -> f64 {
        self.slope_minus.abs().max(self.slope_plus.abs())
    }
    fn sup_slope(&self) -> f64 {
        self.slope_minus.max(self.slope_plus)
    }
}

/// Corner function given by closures for each side.
pub struct SidedCorner<M, P>
where
    M: Fn(f64) -> (f64, f64) + Sync,
    P: Fn(f64) -> (f64, f64) + Sync,
{
    pub minus: M,
    pub plus: P,
    pub lipschitz: f64,
    pub sup_slope: f64,
}

impl<M, P> CornerFunction for SidedCorner<M, P>
where
    M: Fn(f64) -> (f64, f64) + Sync,
    P: Fn(f64) -> (f64, f64) + Sync,
{
    fn eval(&self, t: f64) -> (f64, f64) {
        if t < 0.0 {
            (self.minus)(t)
        } else if t > 0.0 {
            (self.plus)(t)
        } else {
            let (v, a) = (self.minus)(0.0);
            let (_, b) = (self.plus)(0.0);
            (v, 0.5 * (a + b))
        }
    }
    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }
    fn sup_slope(&self) -> f64 {
        self.sup_slope
    }
}

/// The mollified function, evaluable anywhere.
pub struct Mollified<'a, H: CornerFunction> {
    pub h: &'a H,
    pub spec: MollifierSpec,
}

impl<'a, H: CornerFunction> Mollified<'a, H> {
    pub fn value(&self, t: f64) -> f64 {
        let se = if t.abs() < self.spec.epsilon0 {
            self.spec.sigma_eps(t)
        } else {
            0.0
        };
        if se == 0.0 {
            return self.h.eval(t).0;
        }
        nodes()
            .iter()
            .map(|&(s, w)| w * self.h.eval(t - se * s).0)
            .sum()
    }

    /// h'_ε(t). The exact integral is an average of h' values, so the
    /// quadrature result is clamped to the Lipschitz constant of h; this only
    /// removes rounding of a few ulps.
    pub fn derivative(&self, t: f64) -> f64 {
        let l = self.h.lipschitz();
        self.derivative_unclamped(t).clamp(-l, l)
    }

    fn derivative_unclamped(&self, t: f64) -> f64 {
        let se = if t.abs() < self.spec.epsilon0 {
            self.spec.sigma_eps(t)
        } else {
            0.0
        };
        if se == 0.0 {
            return self.h.eval(t).1;
        }
        let e = self.spec.epsilon;
        let sp = e * e * sigma_prime(t / e);
        nodes()
            .iter()
            .map(|&(s, w)| w * self.h.eval(t - se * s).1 * (1.0 - s * sp))
            .sum()
    }

    /// Half-width of the region where h_ε may differ from h.
    pub fn support(&self) -> f64 {
        0.5 * self.spec.epsilon
    }
}

/// Mollifies `h` per `spec`.
pub fn mollify_lipschitz<H: CornerFunction>(
    h: &H,
    spec: MollifierSpec,
) -> Result<Mollified<'_, H>, ForgeError> {
    let spec = MollifierSpec::new(spec.epsilon, spec.epsilon0)?;
    Ok(Mollified { h, spec })
}

/// Sup-norm deviations of a mollified corner on a uniform grid over [−ε₀, ε₀].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MollifierDeviation {
    pub value: f64,
    /// |h'_ε − h'| on grid points farther than ε³/50 from the corner.
    pub slope_away: f64,
    pub max_abs_slope: f64,
    pub max_slope: f64,
}

pub fn measure_deviation<H: CornerFunction>(
    m: &Mollified<'_, H>,
    grid: usize,
) -> MollifierDeviation {
    let e0 = m.spec.epsilon0;
    let near = m.spec.epsilon.powi(3) / 50.0;
    let mut dev = MollifierDeviation {
        value: 0.0,
        slope_away: 0.0,
        max_abs_slope: 0.0,
        max_slope: f64::NEG_INFINITY,
    };
    // Uniform grid plus a fine grid across the smoothing radius, which a
    // uniform grid would step over.
    let fine = (0..=grid).map(|i| -2.0 * near + 4.0 * near * i as f64 / grid as f64);
    let coarse = (0..=grid).map(|i| -e0 + 2.0 * e0 * i as f64 / grid as f64);
    for t in coarse.chain(fine) {
        let (hv, hp) = m.h.eval(t);
        let d = m.derivative(t);
        dev.value = dev.value.max((m.value(t) - hv).abs());
        if t.abs() > near {
            dev.slope_away = dev.slope_away.max((d - hp).abs());
        }
        dev.max_abs_slope = dev.max_abs_slope.max(d.abs());
        dev.max_slope = dev.max_slope.max(d);
    }
    dev
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigma_shape() {
        assert_eq!(sigma(0.1), 0.01);
        assert_eq!(sigma(0.6), 0.0);
        for i in 0..100 {
            let t = -0.6 + 1.2 * i as f64 / 99.0;
            assert!((0.0..=0.01).contains(&sigma(t)));
        }
        let fd = (sigma(0.3 + 1e-7) - sigma(0.3 - 1e-7)) / 2e-7;
        assert!((fd - sigma_prime(0.3)).abs() < 1e-7);
    }

    #[test]
    fn rejects_large_scale() {
        assert!(matches!(
            MollifierSpec::new(0.1, 0.5),
            Err(ForgeError::ScaleTooLarge { .. })
        ));
    }

    #[test]
    fn linear_function_unchanged() {
        let h = LinearCorner {
            value: 0.3,
            slope_minus: -0.5,
            slope_plus: -0.5,
        };
        let m = mollify_lipschitz(&h, MollifierSpec::new(0.01, 0.5).unwrap()).unwrap();
        for i in 0..50 {
            let t = -0.01 + 0.02 * i as f64 / 49.0;
            assert!((m.value(t) - h.eval(t).0).abs() < 1e-15);
        }
    }

    #[test]
    fn abs_corner_stays_one_lipschitz() {
        let h = LinearCorner {
            value: 0.0,
            slope_minus: 1.0,
            slope_plus: -1.0,
        };
        let m = mollify_lipschitz(&h, MollifierSpec::new(0.05, 1.0).unwrap()).unwrap();
        let dev = measure_deviation(&m, 4096);
        assert!(dev.max_abs_slope <= 1.0 + 1e-12);
        assert!(dev.value > 0.0 && dev.value < 0.05f64.powi(3));
    }

    #[test]
    fn clamp_only_absorbs_rounding() {
        let h = LinearCorner {
            value: 0.0,
            slope_minus: 1.0,
            slope_plus: -1.0,
        };
        let m = mollify_lipschitz(&h, MollifierSpec::new(0.0625, 1.0).unwrap()).unwrap();
        let excess = (0..=4096)
            .map(|i| -0.05 + 0.1 * i as f64 / 4096.0)
            .map(|t| m.derivative_unclamped(t).abs() - 1.0)
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(excess < 16.0 * f64::EPSILON, "{excess:e}");
    }

    #[test]
    fn second_derivative_grows_like_inverse_cube() {
        let h = LinearCorner {
            value: 0.0,
            slope_minus: 1.0,
            slope_plus: -1.0,
        };
        let peak = |e: f64| {
            let m = mollify_lipschitz(&h, MollifierSpec::new(e, 1.0).unwrap()).unwrap();
            let dt = e.powi(3) / 1e4;
            (m.derivative(dt) - m.derivative(-dt)).abs() / (2.0 * dt)
        };
        let (a, b) = (0.5f64.powi(4), 0.5f64.powi(8));
        let rate = (peak(b) / peak(a)).ln() / (a / b).ln();
        assert!((rate - 3.0).abs() < 0.05, "{rate}");
    }
}
