//! Convergence-side quantities: the intrinsic flat upper bound, packing counts
//! and the generalized scalar curvature of a pulled point.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::ForgeError;
use crate::gluing::{GluedManifold, PieceKind};
use crate::quad::gauss_legendre;
use crate::sequences::{DecoratedSphere, Member};
use crate::space_form::{ball_volume_unit, sphere_area, BackgroundSpace};

/// Inputs of the flat distance estimate for two manifolds sharing a region U.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlatBoundInput {
    pub d_u1: f64,
    pub d_u2: f64,
    pub epsilon: f64,
    pub lambda: f64,
    pub vol_u1: f64,
    pub vol_u2: f64,
    pub area_du1: f64,
    pub area_du2: f64,
    pub vol_rest1: f64,
    pub vol_rest2: f64,
    /// Overrides the default a = 1.01 × lower bound.
    pub a: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlatBound {
    pub a: f64,
    pub a_lower: f64,
    pub h: f64,
    pub h_bar: f64,
    pub bound: f64,
}

impl FlatBoundInput {
    fn validate(&self) -> Result<(), ForgeError> {
        let fields = [
            self.d_u1,
            self.d_u2,
            self.epsilon,
            self.lambda,
            self.vol_u1,
            self.vol_u2,
            self.area_du1,
            self.area_du2,
            self.vol_rest1,
            self.vol_rest2,
        ];
        if fields.iter().all(|x| x.is_finite() && *x >= 0.0) {
            Ok(())
        } else {
            Err(ForgeError::InvalidInput(
                "flat bound inputs must be finite and nonnegative".into(),
            ))
        }
    }

    /// Strict lower bound on a.
    pub fn a_lower(&self) -> f64 {
        (1.0 / (1.0 + self.epsilon)).acos() / PI * self.d_u1.max(self.d_u2)
    }
}

pub fn flat_distance_upper_bound(input: &FlatBoundInput) -> Result<FlatBound, ForgeError> {
    input.validate()?;
    let a_lower = input.a_lower();
    let a = match input.a {
        Some(a) if a > a_lower => a,
        Some(_) => return Err(ForgeError::InfeasibleA),
        // With a_lower = 0 this is the infimum a → 0.
        None => 1.01 * a_lower,
    };
    let dmax = input.d_u1.max(input.d_u2);
    let h = (input.lambda * (dmax + input.lambda / 4.0)).sqrt();
    let e = (input.epsilon * input.epsilon + 2.0 * input.epsilon).sqrt();
    let h_bar = h.max(e * input.d_u1).max(e * input.d_u2);
    let bound = (2.0 * h_bar + a) * (input.vol_u1 + input.vol_u2 + input.area_du1 + input.area_du2)
        + input.vol_rest1
        + input.vol_rest2;
    Ok(FlatBound {
        a,
        a_lower,
        h,
        h_bar,
        bound,
    })
}

/// Inputs comparing a two-sphere tunnel member with the disjoint union of its
/// two backgrounds. U is each background minus its 2δ-ball, so ε = 0. λ is the
/// largest detour around a removed ball, (π − 2)·2δ; pairs in different
/// components are excluded since the disjoint union separates them.
pub fn tunnel_flat_input(m: &GluedManifold) -> Result<FlatBoundInput, ForgeError> {
    if m.piece(PieceKind::Cylinder).is_none() && m.piece(PieceKind::MirroredHalfTunnel).is_none() {
        return Err(ForgeError::InvalidInput("not a tunnel member".into()));
    }
    let bg = m.bg;
    let total = bg
        .total_volume()
        .ok_or_else(|| ForgeError::InvalidInput("background must be compact".into()))?;
    let two_delta = 2.0 * m.params.delta;
    let ball = bg.ball_volume(two_delta);
    let area = bg.sphere_area_at(two_delta);
    let lambda = (PI - 2.0) * two_delta;
    let vols = m.piece_volumes();
    let tunnel: f64 = m
        .pieces
        .iter()
        .zip(&vols)
        .filter(|(p, _)| {
            !matches!(
                p.kind,
                PieceKind::Background | PieceKind::MirroredBackground
            )
        })
        .map(|(_, v)| v)
        .sum();
    Ok(FlatBoundInput {
        d_u1: bg.injectivity_radius() + lambda,
        d_u2: bg.injectivity_radius(),
        epsilon: 0.0,
        lambda,
        vol_u1: 2.0 * (total - ball),
        vol_u2: 2.0 * (total - ball),
        area_du1: 2.0 * area,
        area_du2: 2.0 * area,
        vol_rest1: tunnel,
        vol_rest2: 2.0 * ball,
        a: None,
    })
}

/// The order-of-magnitude form (1/j)(vol Sⁿ + vol S^{n−1}) + vol B + vol B′ + vol T.
pub fn tunnel_flat_estimate(m: &GluedManifold) -> Result<f64, ForgeError> {
    let input = tunnel_flat_input(m)?;
    let bg = m.bg;
    let spheres =
        bg.total_volume().unwrap() + sphere_area(bg.n - 1) / bg.k0.powf((bg.nf() - 1.0) / 2.0);
    Ok(spheres / m.params.j + input.vol_rest2 + input.vol_rest1)
}

/// Greedy packing of ε/2-balls centred at the given points, where `dist(a, b)`
/// is a lower bound on their distance. Points a, b are accepted together when
/// dist ≥ ε. Maximizing over thresholds τ ≥ ε keeps the count monotone in ε.
fn greedy_packing(points: usize, dist: impl Fn(usize, usize) -> f64, epsilon: f64) -> usize {
    let greedy = |tau: f64| {
        let mut chosen: Vec<usize> = Vec::new();
        for p in 0..points {
            if chosen.iter().all(|&q| dist(p, q) >= tau) {
                chosen.push(p);
            }
        }
        chosen.len()
    };
    let mut taus = vec![epsilon];
    for a in 0..points {
        for b in a + 1..points {
            let d = dist(a, b);
            if d >= epsilon {
                taus.push(d);
            }
        }
    }
    taus.into_iter().map(greedy).max().unwrap_or(0).max(1)
}

/// Certified lower bound on the number of disjoint ε/2-balls.
pub fn packing_count(m: &Member, epsilon: f64) -> usize {
    match m {
        Member::Decorated(d) => decorated_packing(d, epsilon),
        // The two poles of a rotationally symmetric sphere are a length apart.
        Member::Glued(g) => greedy_packing(2, |_, _| g.length(), epsilon),
        Member::Sewn(_) => 1,
    }
}

pub fn decorated_packing(m: &DecoratedSphere, epsilon: f64) -> usize {
    greedy_packing(m.tip_count(), |a, b| m.tip_distance_lower(a, b), epsilon)
}

/// Volume of the r-tube about a totally geodesic m-sphere (K0 > 0), or about
/// an m-dimensional piece of unit volume otherwise.
pub fn tube_volume(bg: &BackgroundSpace, m_sub: usize, r: f64) -> f64 {
    let n = bg.n;
    let sigma = if bg.k0 > 0.0 {
        sphere_area(m_sub) / bg.k0.powf(m_sub as f64 / 2.0)
    } else {
        1.0
    };
    let fibre = sphere_area(n - m_sub - 1);
    let k = (n - m_sub - 1) as i32;
    sigma
        * fibre
        * gauss_legendre(
            |x| bg.cs(x).powi(m_sub as i32) * bg.sn(x).powi(k),
            0.0,
            r,
            16,
        )
}

/// 6(n+2)(ω rⁿ − H(B(p₀, r)))/(r² ω rⁿ) with the ball at the pulled point
/// equal to the tube about the collapsed m-sphere.
pub fn generalized_scalar_ratio(
    n: usize,
    m_sub: usize,
    k0: f64,
    r: f64,
) -> Result<f64, ForgeError> {
    if m_sub < 1 || m_sub + 1 > n {
        return Err(ForgeError::InvalidInput("need 1 ≤ m ≤ n − 1".into()));
    }
    let bg = BackgroundSpace::new(n, k0)?;
    let eucl = ball_volume_unit(n) * r.powi(n as i32);
    let h = tube_volume(&bg, m_sub, r);
    Ok(6.0 * (n as f64 + 2.0) * (eucl - h) / (r * r * eucl))
}

/// The same ratio at a smooth point, with the volume defect integrated directly.
pub fn smooth_point_ratio(n: usize, k0: f64, r: f64) -> Result<f64, ForgeError> {
    let bg = BackgroundSpace::new(n, k0)?;
    let k = n - 1;
    // ρ^k − sn^k = (ρ − sn)·Σ ρ^i sn^{k−1−i}, with ρ − sn free of cancellation.
    let defect = |x: f64| {
        let s = bg.sn(x);
        let sum: f64 = (0..k)
            .map(|i| x.powi(i as i32) * s.powi((k - 1 - i) as i32))
            .sum();
        bg.sn_remainder(0.0, x) * sum
    };
    let eucl = ball_volume_unit(n) * r.powi(n as i32);
    let diff = sphere_area(k) * gauss_legendre(defect, 0.0, r, 16);
    Ok(6.0 * (n as f64 + 2.0) * diff / (r * r * eucl))
}

/// Least-squares slope of log y against log x.
pub fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

/// Least-squares c for y ≈ c/x.
pub fn inverse_law_fit(points: &[(f64, f64)]) -> f64 {
    let num: f64 = points.iter().map(|&(x, y)| y / x).sum();
    let den: f64 = points.iter().map(|&(x, _)| 1.0 / (x * x)).sum();
    num / den
}

/// Fitted exponent of the tube volume over a radius ladder.
pub fn tube_exponent(bg: &BackgroundSpace, m_sub: usize, radii: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = radii
        .iter()
        .map(|&r| (r, tube_volume(bg, m_sub, r)))
        .collect();
    log_log_slope(&pts)
}

/// One report row per member.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub family: String,
    pub j: u32,
    pub flat_bound: Option<f64>,
    pub packing: usize,
    pub wr_ladder: Vec<(f64, f64)>,
}

pub const WR_LADDER: [f64; 3] = [1e-1, 1e-2, 1e-3];

pub fn convergence_row(family: &str, j: u32, m: &Member, epsilon0: f64) -> ConvergenceRow {
    let flat_bound = match m {
        Member::Glued(g) => tunnel_flat_input(g)
            .and_then(|i| flat_distance_upper_bound(&i))
            .ok()
            .map(|b| b.bound),
        _ => None,
    };
    let wr_ladder = match m {
        Member::Sewn(s) => WR_LADDER
            .iter()
            .filter_map(|&r| {
                generalized_scalar_ratio(s.bg.n, s.pulled_dim, s.bg.k0, r)
                    .ok()
                    .map(|v| (r, v))
            })
            .collect(),
        _ => Vec::new(),
    };
    ConvergenceRow {
        family: family.to_string(),
        j,
        flat_bound,
        packing: packing_count(m, epsilon0),
        wr_ladder,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample_input() -> FlatBoundInput {
        FlatBoundInput {
            d_u1: 3.0,
            d_u2: 3.2,
            epsilon: 0.01,
            lambda: 0.05,
            vol_u1: 19.0,
            vol_u2: 19.5,
            area_du1: 0.3,
            area_du2: 0.2,
            vol_rest1: 0.01,
            vol_rest2: 0.02,
            a: None,
        }
    }

    #[test]
    fn identical_manifolds_bound_vanishes() {
        let i = FlatBoundInput {
            epsilon: 0.0,
            lambda: 0.0,
            vol_rest1: 0.0,
            vol_rest2: 0.0,
            ..sample_input()
        };
        let b = flat_distance_upper_bound(&i).unwrap();
        assert_eq!(b.bound, 0.0);
        assert_eq!(b.a, 0.0);
    }

    #[test]
    fn infeasible_a_is_rejected() {
        let mut i = sample_input();
        i.a = Some(i.a_lower());
        assert!(matches!(
            flat_distance_upper_bound(&i),
            Err(ForgeError::InfeasibleA)
        ));
        i.a = Some(2.0 * i.a_lower());
        assert!(flat_distance_upper_bound(&i).is_ok());
    }

    #[test]
    fn unit_sphere_tube_volume() {
        // T_r(S¹) in S³: 4π² sin²(r)/2.
        let bg = BackgroundSpace::unit_sphere(3);
        let r = 0.3f64;
        let exact = 2.0 * PI * PI * r.sin().powi(2);
        assert!((tube_volume(&bg, 1, r) - exact).abs() < 1e-13);
    }

    #[test]
    fn smooth_point_recovers_scalar() {
        let v = smooth_point_ratio(3, 1.0, 1e-3).unwrap();
        assert!((v - 6.0).abs() < 6e-2);
    }

    #[test]
    fn sewn_ratio_diverges() {
        let v: Vec<f64> = WR_LADDER
            .iter()
            .map(|&r| generalized_scalar_ratio(3, 1, 1.0, r).unwrap())
            .collect();
        assert!(v[0] > v[1] && v[1] > v[2]);
        assert!(v[1] < -1e3);
    }

    #[test]
    fn packing_monotone_and_trivial() {
        let pts = [0.0f64, 0.3, 0.5, 1.4, 2.0];
        let dist = |a: usize, b: usize| (pts[a] - pts[b]).abs();
        assert_eq!(greedy_packing(5, dist, 0.1), 5);
        assert_eq!(greedy_packing(0, dist, 1.0), 1);
        let counts: Vec<usize> = [0.1, 0.25, 0.5, 1.0, 3.0]
            .iter()
            .map(|&e| greedy_packing(5, dist, e))
            .collect();
        assert!(counts.windows(2).all(|w| w[0] >= w[1]), "{counts:?}");
    }

    proptest! {
        #[test]
        fn bound_monotone_in_each_argument(which in 0usize..10, bump in 1e-6f64..1.0) {
            let base = sample_input();
            let mut up = base;
            match which {
                0 => up.d_u1 += bump,
                1 => up.d_u2 += bump,
                2 => up.epsilon += bump,
                3 => up.lambda += bump,
                4 => up.vol_u1 += bump,
                5 => up.vol_u2 += bump,
                6 => up.area_du1 += bump,
                7 => up.area_du2 += bump,
                8 => up.vol_rest1 += bump,
                _ => up.vol_rest2 += bump,
            }
            let b0 = flat_distance_upper_bound(&base).unwrap().bound;
            let b1 = flat_distance_upper_bound(&up).unwrap().bound;
            prop_assert!(b1 >= b0);
        }

        #[test]
        fn packing_non_increasing(pts in proptest::collection::vec(0.0f64..10.0, 1..12), e1 in 0.01f64..5.0, e2 in 0.01f64..5.0) {
            let dist = |a: usize, b: usize| (pts[a] - pts[b]).abs();
            let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
            prop_assert!(greedy_packing(pts.len(), dist, lo) >= greedy_packing(pts.len(), dist, hi));
        }

        #[test]
        fn tube_exponent_matches_codimension(n in 3usize..7, m in 1usize..3, k0 in 0.2f64..4.0) {
            prop_assume!(m < n);
            let bg = BackgroundSpace::new(n, k0).unwrap();
            let e = tube_exponent(&bg, m, &[1e-3, 1e-2, 1e-1]);
            let want = (n - m) as f64;
            prop_assert!((e - want).abs() <= 0.02 * want, "{e} vs {want}");
        }
    }
}
