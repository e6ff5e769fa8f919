//! The C^∞ transition g: [0,1] → [0,1] built from exp(−1/x).

fn e(x: f64) -> f64 {
    if x > 0.0 {
        (-1.0 / x).exp()
    } else {
        0.0
    }
}

/// g(x) = e(x) / (e(x) + e(1 − x)), with e(x) = exp(−1/x) for x > 0.
pub fn g(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        let a = e(x);
        let b = e(1.0 - x);
        a / (a + b)
    }
}

/// g'(x).
pub fn g_prime(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        0.0
    } else {
        let (a, b) = (e(x), e(1.0 - x));
        let (da, db) = (a / (x * x), b / ((1.0 - x) * (1.0 - x)));
        (da * b + a * db) / ((a + b) * (a + b))
    }
}

/// h(x) = g(1 − x).
pub fn h(x: f64) -> f64 {
    g(1.0 - x)
}

/// ∫₀¹ h. Equal to 1/2 because g(1 − x) = 1 − g(x).
pub const H_INTEGRAL: f64 = 0.5;

/// ∫₀¹ g, the fraction of a jump accumulated across a blend.
pub const G_INTEGRAL: f64 = 1.0 - H_INTEGRAL;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::gauss_legendre;

    #[test]
    fn endpoints_and_symmetry() {
        assert_eq!(g(0.0), 0.0);
        assert_eq!(g(1.0), 1.0);
        for i in 1..100 {
            let x = i as f64 / 100.0;
            assert!((g(x) + g(1.0 - x) - 1.0).abs() < 1e-15);
            assert!(g(x) >= g(x - 0.01));
            assert!(!(0.1..0.9).contains(&x) || g(x) > g(x - 0.01));
        }
        for i in 1..50 {
            let x = i as f64 / 50.0;
            let fd = (g(x + 1e-6) - g(x - 1e-6)) / 2e-6;
            assert!((fd - g_prime(x)).abs() < 1e-8);
        }
        let hi = gauss_legendre(h, 0.0, 1.0, 64);
        assert!((hi - H_INTEGRAL).abs() < 1e-13);
    }
}
