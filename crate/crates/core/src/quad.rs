//! Quadrature helpers.

const GL_X: [f64; 10] = [
    -0.9739065285171717,
    -0.8650633666889845,
    -0.6794095682990244,
    -0.4333953941292472,
    -0.14887433898163122,
    0.14887433898163122,
    0.4333953941292472,
    0.6794095682990244,
    0.8650633666889845,
    0.9739065285171717,
];
const GL_W: [f64; 10] = [
    0.06667134430868807,
    0.14945134915058036,
    0.219086362515982,
    0.2692667193099965,
    0.295524224714753,
    0.295524224714753,
    0.2692667193099965,
    0.219086362515982,
    0.14945134915058036,
    0.06667134430868807,
];

/// Composite 10-point Gauss–Legendre rule on `panels` equal panels.
pub fn gauss_legendre<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * h;
        let half = 0.5 * h;
        let mut acc = 0.0;
        for (x, w) in GL_X.iter().zip(GL_W.iter()) {
            acc += w * f(mid + half * x);
        }
        total += acc * half;
    }
    total
}

/// Composite Simpson rule on uniformly spaced samples with an even number of intervals.
/// Falls back to the trapezoid rule on a trailing odd interval.
pub fn simpson_uniform(values: &[f64], h: f64) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let intervals = n - 1;
    let even = intervals - intervals % 2;
    let mut acc = 0.0;
    let mut i = 0;
    while i < even {
        acc += values[i] + 4.0 * values[i + 1] + values[i + 2];
        i += 2;
    }
    let mut total = acc * h / 3.0;
    if even < intervals {
        total += 0.5 * h * (values[n - 2] + values[n - 1]);
    }
    total
}

/// Composite Simpson rule for a function on [a, b] with `intervals` (rounded up to even).
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, intervals: usize) -> f64 {
    let m = intervals + intervals % 2;
    let h = (b - a) / m as f64;
    let values: Vec<f64> = (0..=m).map(|i| f(a + i as f64 * h)).collect();
    simpson_uniform(&values, h)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_is_exact_on_polynomials() {
        let v = gauss_legendre(|x| x.powi(19), 0.0, 1.0, 1);
        assert!((v - 0.05).abs() < 1e-15);
    }

    #[test]
    fn simpson_fourth_order() {
        let exact = 1.0 - 1f64.cos();
        let e1 = (simpson(f64::sin, 0.0, 1.0, 8) - exact).abs();
        let e2 = (simpson(f64::sin, 0.0, 1.0, 16) - exact).abs();
        assert!(e1 / e2 > 14.0 && e1 / e2 < 18.0);
    }
}
