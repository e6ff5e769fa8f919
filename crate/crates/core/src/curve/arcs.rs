//! Arc-by-arc construction of the piecewise-constant well and half-tunnel profiles.

use super::angle::Angle;
use super::profile::*;
use crate::error::ForgeError;
use crate::space_form::BackgroundSpace;
use crate::warped::{gauss_scalar, GaussConvention};

/// sin θ̄ with θ̄ = arcsin(12/13).
pub const SIN_THETA_BAR: f64 = 12.0 / 13.0;
/// Grid used when testing a candidate s₀.
pub const S0_GRID: usize = 1 << 10;
const MAX_ARCS: usize = 100_000;

pub fn theta_bar() -> f64 {
    SIN_THETA_BAR.asin()
}

/// π/2 − θ̄ = arcsin(5/13).
pub fn phi_bar() -> f64 {
    (5.0_f64 / 13.0).asin()
}

/// sin b − sin a without cancellation.
fn sin_diff(a: Angle, b: Angle) -> f64 {
    let mid = a.add(0.5 * b.minus(&a));
    2.0 * mid.cos() * (0.5 * b.minus(&a)).sin()
}

/// Safety margin required above κ − 1/j when choosing s₀.
pub fn s0_margin(bg: &BackgroundSpace) -> f64 {
    1e-10 * bg.scalar().abs().max(1.0)
}

/// Whether the unit arc on [0, s0] keeps R above the floor and sin θ/(8r) < 1 at s0.
pub fn s0_admissible(s0: f64, delta0: f64, floor: f64, bg: &BackgroundSpace) -> bool {
    let r_end = delta0 - s0.sin();
    if r_end <= 0.0 || s0.sin() / (8.0 * r_end) >= 1.0 {
        return false;
    }
    let margin = s0_margin(bg);
    (0..=S0_GRID).all(|i| {
        let s = s0 * i as f64 / S0_GRID as f64;
        let r = delta0 - s.sin();
        let rr = gauss_scalar(bg, r, Angle::from_theta(s), 1.0, GaussConvention::Derived);
        rr > floor + margin
    })
}

/// Largest admissible s₀ ≤ δ₀/2, found by bisection.
pub fn select_s0(delta0: f64, floor: f64, bg: &BackgroundSpace) -> Result<f64, ForgeError> {
    let hi0 = 0.5 * delta0;
    if s0_admissible(hi0, delta0, floor, bg) {
        return Ok(hi0);
    }
    if bg.scalar() <= floor + s0_margin(bg) {
        return Err(ForgeError::NoAdmissibleS0 { delta0 });
    }
    let (mut lo, mut hi) = (0.0, hi0);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if s0_admissible(mid, delta0, floor, bg) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if lo > 0.0 {
        Ok(lo)
    } else {
        Err(ForgeError::NoAdmissibleS0 { delta0 })
    }
}

fn validate(params: &WellParams, bg: &BackgroundSpace) -> Result<(), ForgeError> {
    let p = params;
    if !(p.delta > 0.0 && p.delta0 > 0.0 && p.delta0 <= p.delta) {
        return Err(ForgeError::InvalidInput(format!(
            "need 0 < delta0 <= delta, got delta = {}, delta0 = {}",
            p.delta, p.delta0
        )));
    }
    if !(p.j > 0.0) || !p.kappa.is_finite() {
        return Err(ForgeError::InvalidInput(
            "need j > 0 and finite kappa".into(),
        ));
    }
    if 2.0 * p.delta >= bg.injectivity_radius() {
        return Err(ForgeError::RadiusExceedsBall {
            r: 2.0 * p.delta,
            limit: bg.injectivity_radius(),
        });
    }
    Ok(())
}

struct Common {
    segments: Vec<Segment>,
    end_radii: Vec<f64>,
    ledger: ArcLedger,
    r_m: f64,
    k_approach: f64,
    r_full: f64,
}

/// Initial line, unit arc and inductive arcs up to θ̄.
fn build_common(params: &WellParams, bg: &BackgroundSpace) -> Result<Common, ForgeError> {
    validate(params, bg)?;
    let delta0 = params.delta0;
    let s0 = select_s0(delta0, params.floor(), bg)?;
    let theta_bar = theta_bar();
    let mut segments = vec![
        Segment {
            role: Role::InitialLine,
            law: CurvatureLaw::Constant { k: 0.0 },
            extent: Extent::Length(2.0 * params.delta - delta0),
            end: Angle::ZERO,
        },
        Segment {
            role: Role::UnitArc,
            law: CurvatureLaw::Constant { k: 1.0 },
            extent: Extent::Length(s0),
            end: Angle::from_theta(s0),
        },
    ];
    let mut radii = vec![delta0 - s0.sin()];
    let mut thetas = vec![s0];
    let mut curvatures = Vec::new();
    let mut lengths = Vec::new();
    loop {
        if curvatures.len() >= MAX_ARCS {
            return Err(ForgeError::InvalidInput(
                "inductive arcs do not reach theta_bar".into(),
            ));
        }
        let (r_prev, th_prev) = (*radii.last().unwrap(), *thetas.last().unwrap());
        let k = th_prev.sin() / (8.0 * r_prev);
        let mut ds = 0.5 * r_prev;
        let mut th = th_prev + th_prev.sin() / 16.0;
        let last = th >= theta_bar;
        if last {
            ds = (theta_bar - th_prev) / k;
            th = theta_bar;
        }
        let r = r_prev - sin_diff(Angle::from_theta(th_prev), Angle::from_theta(th)) / k;
        if r <= 0.0 {
            return Err(ForgeError::NonPositiveRadius { s: f64::NAN });
        }
        curvatures.push(k);
        lengths.push(ds);
        radii.push(r);
        thetas.push(th);
        segments.push(Segment {
            role: Role::Inductive(curvatures.len() as u32),
            law: CurvatureLaw::Constant { k },
            extent: Extent::Length(ds),
            end: Angle::from_theta(th),
        });
        if last {
            break;
        }
    }
    let m = curvatures.len();
    let r_m = radii[m];
    let lo = (1.0 - SIN_THETA_BAR) * 2.0 / r_m;
    let hi = SIN_THETA_BAR / (4.0 * r_m);
    let k_approach = 0.5 * (lo + hi);
    let r_full = r_m - (1.0 - SIN_THETA_BAR) / k_approach;
    let s_m = (2.0 * params.delta - delta0) + s0 + lengths.iter().sum::<f64>();
    let ledger = ArcLedger {
        s0,
        radii,
        thetas,
        curvatures,
        lengths,
        m,
        theta_bar,
        k_approach,
        r_full,
        phi_hat: None,
        k_closing: None,
        s_m,
        length_without_straight: 0.0,
        total_length: 0.0,
    };
    let mut end_radii = vec![delta0];
    end_radii.extend_from_slice(&ledger.radii);
    Ok(Common {
        segments,
        end_radii,
        ledger,
        r_m,
        k_approach,
        r_full,
    })
}

/// Stop-angle window: admissible φ = π/2 − θ̂ lie in (0, min(φ̄, arcsin x)).
pub fn stop_angle_window(r_full: f64, d: f64) -> Result<f64, ForgeError> {
    let x = if d <= 1.0 {
        0.5 * r_full
    } else {
        r_full / (2.0 * d)
    };
    if !(x > 0.0) || x >= 1.0 {
        return Err(ForgeError::StopAngleInfeasible);
    }
    let upper = phi_bar().min(x.asin());
    if upper > 0.0 {
        Ok(upper)
    } else {
        Err(ForgeError::StopAngleInfeasible)
    }
}

/// Piecewise-constant well profile: initial line, unit arc, inductive arcs,
/// approach to θ̂, straight run of length d, closing arc and vertical tip.
pub fn build_well_arcs(
    params: WellParams,
    bg: &BackgroundSpace,
) -> Result<CurvatureProfile, ForgeError> {
    if !(params.d > 0.0) {
        return Err(ForgeError::InvalidInput("wells need d > 0".into()));
    }
    let Common {
        mut segments,
        mut end_radii,
        mut ledger,
        r_m,
        k_approach,
        r_full,
    } = build_common(&params, bg)?;
    let phi_hat = 0.5 * stop_angle_window(r_full, params.d)?;
    let bar = Angle::from_theta(ledger.theta_bar);
    let hat = Angle::from_phi(phi_hat);
    let approach_len = (phi_bar() - phi_hat) / k_approach;
    let r_app = r_m - sin_diff(bar, hat) / k_approach;
    let r_straight = r_app - params.d * hat.cos();
    if r_straight <= 0.0 {
        return Err(ForgeError::StopAngleInfeasible);
    }
    let k_closing = -4.0 * hat.sin() / r_straight;
    let closing_len = hat.theta / (-k_closing);
    let r_closed = r_straight + hat.sin() / k_closing;
    segments.push(Segment {
        role: Role::Approach,
        law: CurvatureLaw::Constant { k: k_approach },
        extent: Extent::Length(approach_len),
        end: hat,
    });
    segments.push(Segment {
        role: Role::Straight,
        law: CurvatureLaw::Constant { k: 0.0 },
        extent: Extent::Length(params.d),
        end: hat,
    });
    segments.push(Segment {
        role: Role::Closing,
        law: CurvatureLaw::Constant { k: k_closing },
        extent: Extent::Length(closing_len),
        end: Angle::ZERO,
    });
    segments.push(Segment {
        role: Role::Tip,
        law: CurvatureLaw::Constant { k: 0.0 },
        extent: Extent::ToAxis,
        end: Angle::ZERO,
    });
    end_radii.extend_from_slice(&[r_app, r_straight, r_closed, 0.0]);
    ledger.phi_hat = Some(phi_hat);
    ledger.k_closing = Some(k_closing);
    ledger.length_without_straight = ledger.s_m + approach_len + closing_len + r_closed;
    ledger.total_length = ledger.length_without_straight + params.d;
    Ok(CurvatureProfile {
        mode: Mode::Well,
        params,
        s_origin: -(2.0 * params.delta - params.delta0),
        start: CurveState {
            t: 0.0,
            r: 2.0 * params.delta,
            angle: Angle::ZERO,
        },
        segments,
        ledger: Some(ledger),
        blend: None,
        end_radii,
    })
}

/// Piecewise-constant half-tunnel profile: as a well up to θ̄, then the approach
/// arc runs to θ = π/2 and the curve ends on a plateau of constant radius.
pub fn build_half_tunnel_arcs(
    params: WellParams,
    bg: &BackgroundSpace,
) -> Result<CurvatureProfile, ForgeError> {
    let params = WellParams { d: 0.0, ..params };
    let Common {
        mut segments,
        mut end_radii,
        mut ledger,
        k_approach,
        r_full,
        ..
    } = build_common(&params, bg)?;
    let approach_len = phi_bar() / k_approach;
    segments.push(Segment {
        role: Role::Approach,
        law: CurvatureLaw::Constant { k: k_approach },
        extent: Extent::Length(approach_len),
        end: Angle::RIGHT,
    });
    let plateau = 0.5 * r_full;
    segments.push(Segment {
        role: Role::Plateau,
        law: CurvatureLaw::Constant { k: 0.0 },
        extent: Extent::Length(plateau),
        end: Angle::RIGHT,
    });
    end_radii.extend_from_slice(&[r_full, r_full]);
    ledger.length_without_straight = ledger.s_m + approach_len + plateau;
    ledger.total_length = ledger.length_without_straight;
    Ok(CurvatureProfile {
        mode: Mode::HalfTunnel,
        params,
        s_origin: -(2.0 * params.delta - params.delta0),
        start: CurveState {
            t: 0.0,
            r: 2.0 * params.delta,
            angle: Angle::ZERO,
        },
        segments,
        ledger: Some(ledger),
        blend: None,
        end_radii,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(delta: f64, j: f64) -> WellParams {
        WellParams {
            delta,
            delta0: delta / 2.0,
            d: 0.5,
            kappa: 6.0,
            j,
        }
    }

    #[test]
    fn angle_recursion_is_sin_over_16() {
        let p = WellParams {
            delta: 0.1,
            delta0: 0.1,
            d: 0.5,
            kappa: 6.0,
            j: 10.0,
        };
        let prof = build_well_arcs(p, &BackgroundSpace::unit_sphere(3)).unwrap();
        let l = prof.ledger.unwrap();
        for i in 1..l.m {
            let inc = l.thetas[i] - l.thetas[i - 1];
            assert!((inc - l.thetas[i - 1].sin() / 16.0).abs() <= 1e-15 * l.thetas[i]);
            assert!((l.curvatures[i - 1] * l.lengths[i - 1] - inc).abs() <= 1e-14 * inc);
        }
        assert_eq!(l.thetas[l.m], theta_bar());
    }

    #[test]
    fn approach_window_and_radius() {
        let prof =
            build_half_tunnel_arcs(params(0.2, 10.0), &BackgroundSpace::unit_sphere(3)).unwrap();
        let l = prof.ledger.unwrap();
        let r_m = l.radii[l.m];
        let x = l.k_approach * r_m / 2.0;
        assert!(1.0 - SIN_THETA_BAR < x && x < SIN_THETA_BAR / 8.0);
        assert!(l.r_full > r_m / 2.0);
        assert_eq!(prof.segments.last().unwrap().end, Angle::RIGHT);
    }

    #[test]
    fn s0_is_maximal_and_admissible() {
        let bg = BackgroundSpace::unit_sphere(3);
        let s0 = select_s0(0.05, 5.9, &bg).unwrap();
        assert!(s0_admissible(s0, 0.05, 5.9, &bg));
        assert!(!s0_admissible(s0 * (1.0 + 1e-6), 0.05, 5.9, &bg));
        assert!(select_s0(0.05, 6.0, &bg).is_err());
    }

    #[test]
    fn scalpos_at_breakpoints() {
        let prof = build_well_arcs(params(0.1, 10.0), &BackgroundSpace::unit_sphere(3)).unwrap();
        let l = prof.ledger.unwrap();
        for i in 0..l.m {
            assert!(l.thetas[i].sin() / (4.0 * l.radii[i]) > l.curvatures[i]);
        }
        let r_m = l.radii[l.m];
        assert!(SIN_THETA_BAR / (4.0 * r_m) > l.k_approach);
    }
}
