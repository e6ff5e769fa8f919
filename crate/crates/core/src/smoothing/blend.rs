//! Bump-blend regularization of a piecewise-constant curvature profile.

use serde::{Deserialize, Serialize};

use super::transition::{self, G_INTEGRAL, H_INTEGRAL};
use crate::curve::{
    constant_arc, turn, Angle, CurvatureLaw, CurvatureProfile, Extent, Mode, Role, Segment,
};
use crate::error::ForgeError;
use crate::quad::gauss_legendre;

/// Blend parameters: width α of every breakpoint blend, width β of the
/// corrective blend (filled in by [`smooth_curvature`]), and H = ∫₀¹ h.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BumpBlend {
    pub alpha: f64,
    pub beta: f64,
    pub h_integral: f64,
}

impl BumpBlend {
    pub fn new(alpha: f64) -> Self {
        Self {
            alpha,
            beta: 0.0,
            h_integral: H_INTEGRAL,
        }
    }

    /// Initial α of the acceptance loop: an eighth of the shortest segment.
    pub fn initial_for(profile: &CurvatureProfile) -> Self {
        Self::new(profile.shortest_segment() / 8.0)
    }
}

fn constant(role: Role, k: f64, length: f64, start: Angle) -> Segment {
    Segment {
        role,
        law: CurvatureLaw::Constant { k },
        extent: Extent::Length(length),
        end: start.add(k * length),
    }
}

fn blend(role: Role, from: f64, to: f64, width: f64, start: Angle) -> Segment {
    Segment {
        role,
        law: CurvatureLaw::Blend { from, to, width },
        extent: Extent::Length(width),
        end: start.add(width * (from + (to - from) * G_INTEGRAL)),
    }
}

fn len(seg: &Segment) -> f64 {
    match seg.extent {
        Extent::Length(l) => l,
        Extent::ToAxis => f64::NAN,
    }
}

fn k_of(seg: &Segment) -> f64 {
    match seg.law {
        CurvatureLaw::Constant { k } => k,
        CurvatureLaw::Blend { .. } => f64::NAN,
    }
}

fn positive(what: &str, l: f64) -> Result<f64, ForgeError> {
    if l > 0.0 {
        Ok(l)
    } else {
        Err(ForgeError::AlphaTooLarge(format!(
            "{what} has length {l:e}"
        )))
    }
}

/// Replaces every curvature jump by a blend of width α and applies the
/// terminal corrections: the approach arc is re-ended so the straight run
/// starts exactly at θ̂ (wells), the closing arc is re-ended where θ̃ = α/2 and
/// a β-blend brings θ̃ to 0 (wells) or, for half tunnels, the approach arc is
/// re-ended where π/2 − θ̃ = α/2 and a β-blend brings θ̃ to π/2.
///
/// The blend at s₀ sits before the breakpoint; all others sit after it.
pub fn smooth_curvature(
    profile: &CurvatureProfile,
    blend_spec: BumpBlend,
) -> Result<CurvatureProfile, ForgeError> {
    let alpha = blend_spec.alpha;
    if !(alpha > 0.0) {
        return Err(ForgeError::InvalidInput("alpha must be positive".into()));
    }
    if profile.blend.is_some() {
        return Err(ForgeError::InvalidInput(
            "profile is already smoothed".into(),
        ));
    }
    if !matches!(profile.mode, Mode::Well | Mode::HalfTunnel) {
        return Err(ForgeError::InvalidInput(
            "only wells and half tunnels are smoothed".into(),
        ));
    }
    if 2.0 * alpha >= profile.shortest_segment() {
        return Err(ForgeError::AlphaTooLarge(format!(
            "alpha {alpha:e} is not below half the shortest segment {:e}",
            profile.shortest_segment()
        )));
    }
    let ledger = profile
        .ledger
        .as_ref()
        .ok_or_else(|| ForgeError::InvalidInput("profile carries no arc ledger".into()))?;
    let segs = &profile.segments;
    let mut out: Vec<Segment> = Vec::with_capacity(2 * segs.len());
    // Raw segment hosting each smoothed segment, with the offset into it.
    let mut hosts: Vec<Option<(usize, f64)>> = Vec::with_capacity(2 * segs.len());
    let mut angle = profile.start.angle;
    let mut push = |seg: Segment, host: Option<(usize, f64)>, angle: &mut Angle| {
        *angle = seg.end;
        out.push(seg);
        hosts.push(host);
    };

    // Initial line and unit arc with blends after 0 and before s₀.
    let init = segs[0];
    debug_assert_eq!(init.role, Role::InitialLine);
    push(init, Some((0, 0.0)), &mut angle);
    push(
        blend(Role::Blend, 0.0, 1.0, alpha, angle),
        Some((1, 0.0)),
        &mut angle,
    );
    let s0 = len(&segs[1]);
    let unit = constant(
        Role::UnitArc,
        1.0,
        positive("unit arc", s0 - 2.0 * alpha)?,
        angle,
    );
    push(unit, Some((1, alpha)), &mut angle);
    let k1 = k_of(&segs[2]);
    push(
        blend(Role::Blend, 1.0, k1, alpha, angle),
        Some((1, s0 - alpha)),
        &mut angle,
    );

    // Inductive arcs: arc 1 keeps its full length, later arcs lose α to the blend after s_{i−1}.
    let m = ledger.m;
    for i in 1..=m {
        let seg = segs[1 + i];
        let k = k_of(&seg);
        let (l, offset) = if i == 1 {
            (len(&seg), 0.0)
        } else {
            (len(&seg) - alpha, alpha)
        };
        push(
            constant(seg.role, k, positive("inductive arc", l)?, angle),
            Some((1 + i, offset)),
            &mut angle,
        );
        let k_next = k_of(&segs[2 + i]);
        push(
            blend(Role::Blend, k, k_next, alpha, angle),
            Some((2 + i, 0.0)),
            &mut angle,
        );
    }
    let k_app = ledger.k_approach;
    let beta;
    match profile.mode {
        Mode::Well => {
            let phi_hat = ledger.phi_hat.expect("well ledger has phi_hat");
            let k_close = ledger.k_closing.expect("well ledger has k_closing");
            // Approach ends where the following h-blend lands exactly on θ̂.
            let end = Angle::from_phi(phi_hat + alpha * k_app * H_INTEGRAL);
            let l = positive("approach arc", end.minus(&angle) / k_app)?;
            push(
                Segment {
                    role: Role::Approach,
                    law: CurvatureLaw::Constant { k: k_app },
                    extent: Extent::Length(l),
                    end,
                },
                None,
                &mut angle,
            );
            let mut b = blend(Role::Blend, k_app, 0.0, alpha, angle);
            b.end = Angle::from_phi(phi_hat);
            push(b, None, &mut angle);
            let d = profile.params.d;
            push(
                constant(
                    Role::Straight,
                    0.0,
                    positive("straight run", d - alpha)?,
                    angle,
                ),
                None,
                &mut angle,
            );
            let mut b = blend(Role::Blend, 0.0, k_close, alpha, angle);
            b.end = Angle::from_phi(phi_hat - alpha * k_close * G_INTEGRAL);
            push(b, None, &mut angle);
            // Closing arc re-ended at θ̃(s*) = α/2, then the β-blend to θ = 0.
            let target = Angle::from_theta(0.5 * alpha);
            let l = positive("closing arc", target.minus(&angle) / k_close)?;
            push(
                Segment {
                    role: Role::Closing,
                    law: CurvatureLaw::Constant { k: k_close },
                    extent: Extent::Length(l),
                    end: target,
                },
                None,
                &mut angle,
            );
            beta = target.theta / (-k_close * H_INTEGRAL);
            push(
                Segment {
                    role: Role::Corrective,
                    law: CurvatureLaw::Blend {
                        from: k_close,
                        to: 0.0,
                        width: beta,
                    },
                    extent: Extent::Length(beta),
                    end: Angle::ZERO,
                },
                None,
                &mut angle,
            );
            push(
                Segment {
                    role: Role::Tip,
                    law: CurvatureLaw::Constant { k: 0.0 },
                    extent: Extent::ToAxis,
                    end: Angle::ZERO,
                },
                None,
                &mut angle,
            );
        }
        Mode::HalfTunnel => {
            let target = Angle::from_phi(0.5 * alpha);
            let l = positive("approach arc", target.minus(&angle) / k_app)?;
            push(
                Segment {
                    role: Role::Approach,
                    law: CurvatureLaw::Constant { k: k_app },
                    extent: Extent::Length(l),
                    end: target,
                },
                None,
                &mut angle,
            );
            beta = target.phi / (k_app * H_INTEGRAL);
            push(
                Segment {
                    role: Role::Corrective,
                    law: CurvatureLaw::Blend {
                        from: k_app,
                        to: 0.0,
                        width: beta,
                    },
                    extent: Extent::Length(beta),
                    end: Angle::RIGHT,
                },
                None,
                &mut angle,
            );
            push(constant(Role::Plateau, 0.0, beta, angle), None, &mut angle);
        }
        _ => unreachable!(),
    }
    let end_radii = declare_radii(profile, &out, &hosts)?;
    Ok(CurvatureProfile {
        segments: out,
        blend: Some((alpha, beta)),
        end_radii,
        ..profile.clone()
    })
}

/// k̃ − k_raw on a smoothed segment.
fn curvature_gap(law: &CurvatureLaw, k_raw: f64, sigma: f64) -> f64 {
    match *law {
        CurvatureLaw::Constant { k } => k - k_raw,
        CurvatureLaw::Blend { from, to, width } => {
            let g = transition::g(sigma / width);
            (from - k_raw) * (1.0 - g) + (to - k_raw) * g
        }
    }
}

/// Radius at the end of every smoothed segment.
///
/// While a smoothed segment lies inside a raw arc, the radius is the raw
/// radius plus the accumulated deviation ∫(cos θ − cos θ̃), with θ̃ − θ itself
/// accumulated from k̃ − k. Subtracting radii directly would lose everything
/// below the rounding level of the first arcs, far above the deepest radii.
/// Past the raw arcs the radius is advanced segment by segment.
fn declare_radii(
    raw: &CurvatureProfile,
    segs: &[Segment],
    hosts: &[Option<(usize, f64)>],
) -> Result<Vec<f64>, ForgeError> {
    if raw.end_radii.len() != raw.segments.len() {
        return Err(ForgeError::InvalidInput(
            "raw profile carries no declared radii".into(),
        ));
    }
    let raw_start = |j: usize| -> (Angle, f64) {
        if j == 0 {
            (raw.start.angle, raw.start.r)
        } else {
            (raw.segments[j - 1].end, raw.end_radii[j - 1])
        }
    };
    let (mut e, mut c) = (0.0f64, 0.0f64);
    let mut r = raw.start.r;
    let mut angle = raw.start.angle;
    let mut out = Vec::with_capacity(segs.len());
    for (seg, host) in segs.iter().zip(hosts) {
        let l = len(seg);
        r = match (*host, seg.extent) {
            (_, Extent::ToAxis) => 0.0,
            (Some((j, u)), _) => {
                let (a_raw, r_raw) = raw_start(j);
                let k_raw = k_of(&raw.segments[j]);
                let law = seg.law;
                let e0 = e;
                let gap = |sigma: f64| {
                    e0 + gauss_legendre(|x| curvature_gap(&law, k_raw, x), 0.0, sigma, 2)
                };
                let drift = |sigma: f64| {
                    let ei = gap(sigma);
                    2.0 * a_raw.add(k_raw * (u + sigma) + 0.5 * ei).sin() * (0.5 * ei).sin()
                };
                c += gauss_legendre(drift, 0.0, l, 4);
                e = gap(l);
                let (_, r_end, _) = constant_arc(a_raw, r_raw, k_raw, u + l);
                r_end + c
            }
            (None, _) => match seg.law {
                CurvatureLaw::Constant { k } => constant_arc(angle, r, k, l).1,
                law => r - gauss_legendre(|x| angle.add(turn(&law, 0.0, x)).cos(), 0.0, l, 8),
            },
        };
        if !(r >= 0.0) {
            return Err(ForgeError::AlphaTooLarge(format!(
                "declared radius {r:e} is not positive"
            )));
        }
        angle = seg.end;
        out.push(r);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::{build_half_tunnel_arcs, build_well_arcs, WellParams};
    use crate::space_form::BackgroundSpace;

    fn params() -> WellParams {
        WellParams {
            delta: 0.1,
            delta0: 0.05,
            d: 0.5,
            kappa: 6.0,
            j: 10.0,
        }
    }

    #[test]
    fn well_ends_vertical_and_straight_at_theta_hat() {
        let raw = build_well_arcs(params(), &BackgroundSpace::unit_sphere(3)).unwrap();
        let sm = smooth_curvature(&raw, BumpBlend::initial_for(&raw)).unwrap();
        let phi_hat = raw.ledger.as_ref().unwrap().phi_hat.unwrap();
        let straight = sm
            .segments
            .iter()
            .find(|s| s.role == Role::Straight)
            .unwrap();
        assert_eq!(straight.end.phi, phi_hat);
        assert_eq!(sm.segments.last().unwrap().end, Angle::ZERO);
        let corr = sm
            .segments
            .iter()
            .find(|s| s.role == Role::Corrective)
            .unwrap();
        assert!(corr.law.total_turn(len(corr)) + sm.blend.unwrap().0 / 2.0 < 1e-15);
    }

    #[test]
    fn tunnel_plateau_is_right_angle() {
        let raw = build_half_tunnel_arcs(params(), &BackgroundSpace::unit_sphere(3)).unwrap();
        let sm = smooth_curvature(&raw, BumpBlend::initial_for(&raw)).unwrap();
        let last = sm.segments.last().unwrap();
        assert_eq!(last.role, Role::Plateau);
        assert_eq!(last.end, Angle::RIGHT);
    }

    #[test]
    fn rejects_wide_alpha() {
        let raw = build_well_arcs(params(), &BackgroundSpace::unit_sphere(3)).unwrap();
        let wide = BumpBlend::new(raw.shortest_segment());
        assert!(matches!(
            smooth_curvature(&raw, wide),
            Err(ForgeError::AlphaTooLarge(_))
        ));
    }
}
