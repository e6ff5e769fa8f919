//! Degree-one 1-Lipschitz maps onto the round sphere and the certificates they carry.
//!
//! A rotationally symmetric sphere dt² + sin²(ρ(t)) g on [0, D] maps to the
//! round sphere by (t, x) ↦ (f(t), x). The map is 1-Lipschitz when f'² ≤ 1 and
//! sin² f ≤ sin² ρ, and a diffeomorphism of degree one when f is a strictly
//! decreasing bijection onto [0, π].

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::ForgeError;
use crate::gluing::GluedManifold;
use crate::sequences::DecoratedSphere;
use crate::smoothing::{mollify_lipschitz, LinearCorner, MollifierSpec};

/// Uniform certificate grid size.
pub const CERT_SAMPLES: usize = 1 << 14;
/// Relative slack on both certificate inequalities.
pub const CERT_SLACK: f64 = 1e-12;
/// Margin below which ρ − f counts as tight when choosing ε.
pub const TIGHT_MARGIN: f64 = 1e-9;

/// Corner data of the piecewise-linear precursor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MapCorner {
    pub t_j: f64,
    pub a_j: f64,
    pub b_j: f64,
    /// |f'| on [0, t_j]; 1 for the genuine map.
    pub lead_slope: f64,
}

/// Where the neck sits and how far from the midpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NeckData {
    pub rho_min: f64,
    pub t_min: f64,
    pub offset_from_half: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MapSample {
    pub t: f64,
    /// Offset from the corner, kept exactly for samples near it.
    pub u: f64,
    pub f: f64,
    pub df: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxialMap {
    pub d_total: f64,
    /// None for the identity map of a round sphere.
    pub corner: Option<MapCorner>,
    pub epsilon: f64,
    pub epsilon0: f64,
    pub neck: Option<NeckData>,
    pub samples: Vec<MapSample>,
}

/// First violation found by a certificate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub t: f64,
    pub check: CheckKind,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CheckKind {
    Slope,
    Sine,
    Monotone,
    Endpoints,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LipschitzCertificate {
    pub samples: usize,
    pub max_slope_sq: f64,
    /// max over samples of sin²f − sin²ρ (≤ 0 when the check holds exactly).
    pub max_sine_excess: f64,
    pub strictly_monotone: bool,
    pub endpoints_ok: bool,
    pub violation: Option<Violation>,
}

impl LipschitzCertificate {
    pub fn passes(&self) -> bool {
        self.violation.is_none()
    }
}

fn rho_at(m: &GluedManifold, t: f64) -> f64 {
    m.curve.state_at(t).r
}

/// Largest power of two strictly below x.
fn pow2_below(x: f64) -> f64 {
    let mut e = 2f64.powi(x.log2().floor() as i32);
    if e >= x {
        e /= 2.0;
    }
    e
}

/// The round sphere's identity-grade map f(t) = π − t.
pub fn identity_map(d_total: f64) -> AxialMap {
    let samples = (0..=CERT_SAMPLES)
        .map(|i| {
            let t = d_total * i as f64 / CERT_SAMPLES as f64;
            MapSample {
                t,
                u: t,
                f: PI - t,
                df: -1.0,
            }
        })
        .collect();
    AxialMap {
        d_total,
        corner: None,
        epsilon: 0.0,
        epsilon0: 0.0,
        neck: None,
        samples,
    }
}

fn is_round(m: &GluedManifold) -> bool {
    (m.length() - PI / m.bg.k0.sqrt()).abs() < 1e-12
        && m.curve
            .samples()
            .all(|(p, s)| (s.r - (PI - p.s_start - s.sigma)).abs() < 1e-12)
}

/// Sampled minimum of ρ over the interior.
pub fn neck(m: &GluedManifold) -> Option<NeckData> {
    let d = m.length();
    let mut best: Option<(f64, f64)> = None;
    for (p, s) in m.curve.samples() {
        let t = p.s_start + s.sigma;
        if t <= 0.0 || t >= d || s.r == 0.0 {
            continue;
        }
        // Ties along a cylinder resolve toward the midpoint.
        if best.is_none_or(|b| {
            s.r < b.0 || (s.r == b.0 && (t - 0.5 * d).abs() < (b.1 - 0.5 * d).abs())
        }) {
            best = Some((s.r, t));
        }
    }
    let (rho_min, t_min) = best?;
    let first = m.curve.pieces[0].first().r;
    let last = m.curve.pieces.last().unwrap().last().r;
    // An interior minimum only: both ends must lie above it.
    if !(first > rho_min && last > rho_min) {
        return None;
    }
    Some(NeckData {
        rho_min,
        t_min,
        offset_from_half: t_min - 0.5 * d,
    })
}

/// Builds the mollified two-piece map with |f'| = `lead_slope` up to the corner.
pub fn build_axial_map_with_slope(
    m: &GluedManifold,
    lead_slope: f64,
) -> Result<AxialMap, ForgeError> {
    let d = m.length();
    let Some(nk) = neck(m) else {
        if is_round(m) && lead_slope == 1.0 {
            return Ok(identity_map(d));
        }
        return Err(ForgeError::NoNeck);
    };
    let fc = 0.1 * nk.rho_min;
    let t_j = (PI - fc) / lead_slope;
    if !(t_j < d) {
        return Err(ForgeError::InvalidInput(
            "corner lies beyond the profile".into(),
        ));
    }
    let a_j = -fc / (d - t_j);
    let corner = MapCorner {
        t_j,
        a_j,
        b_j: fc,
        lead_slope,
    };
    let epsilon0 = t_j.min(d - t_j);
    // Distance from the corner back to the last sample where ρ − f is tight.
    let mut tight = 0.0f64;
    for (p, s) in m.curve.samples() {
        let t = p.s_start + s.sigma;
        if t < t_j && s.r - (PI - lead_slope * t) <= TIGHT_MARGIN {
            tight = tight.max(t);
        }
    }
    let gap = t_j - tight;
    let epsilon = pow2_below((epsilon0 / 20.0).min(gap / 40.0));
    let lin = LinearCorner {
        value: fc,
        slope_minus: -lead_slope,
        slope_plus: a_j,
    };
    let spec = MollifierSpec::new(epsilon, epsilon0)?;
    let moll = mollify_lipschitz(&lin, spec)?;
    let eval = |t: f64, u: f64| -> (f64, f64) {
        if u.abs() < moll.support() {
            (moll.value(u), moll.derivative(u))
        } else if u < 0.0 {
            (PI - lead_slope * t, -lead_slope)
        } else {
            (-a_j * (d - t), a_j)
        }
    };
    let mut pts: Vec<(f64, f64)> = (0..=CERT_SAMPLES)
        .map(|i| {
            let t = d * i as f64 / CERT_SAMPLES as f64;
            (t, t - t_j)
        })
        .collect();
    for p in &m.curve.pieces {
        pts.push((p.s_start, p.s_start - t_j));
    }
    // Dense points across the smoothing radius, which the uniform grid misses.
    let radius = spec.sigma_eps(0.0);
    for k in -32..=32 {
        let u = 2.0 * radius * k as f64 / 32.0;
        pts.push((t_j + u, u));
    }
    pts.retain(|&(t, _)| (0.0..=d).contains(&t));
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    pts.dedup_by(|a, b| a.0 == b.0);
    let samples = pts
        .into_iter()
        .map(|(t, u)| {
            let (f, df) = eval(t, u);
            MapSample { t, u, f, df }
        })
        .collect();
    Ok(AxialMap {
        d_total: d,
        corner: Some(corner),
        epsilon,
        epsilon0,
        neck: Some(nk),
        samples,
    })
}

/// The map of a tunnel manifold, with its corner at f(t_j) = ρ_min/10.
pub fn build_axial_map(m: &GluedManifold) -> Result<AxialMap, ForgeError> {
    build_axial_map_with_slope(m, 1.0)
}

/// Checks (f')² ≤ 1 and sin² f ≤ sin² ρ at every sample, plus the bijection onto [0, π].
pub fn certify_lipschitz(map: &AxialMap, m: &GluedManifold) -> LipschitzCertificate {
    let mut cert = LipschitzCertificate {
        samples: map.samples.len(),
        max_slope_sq: 0.0,
        max_sine_excess: f64::NEG_INFINITY,
        strictly_monotone: true,
        endpoints_ok: true,
        violation: None,
    };
    let flag = |cert: &mut LipschitzCertificate, t: f64, check: CheckKind, value: f64| {
        if cert.violation.is_none() {
            cert.violation = Some(Violation { t, check, value });
        }
    };
    for w in map.samples.windows(2) {
        let dt = if w[0].u.abs() < 1.0 && w[1].u.abs() < 1.0 {
            w[1].u - w[0].u
        } else {
            w[1].t - w[0].t
        };
        let slope = (w[1].f - w[0].f) / dt;
        cert.max_slope_sq = cert.max_slope_sq.max(slope * slope);
        // Rounding in f and t alone moves a difference quotient by about eps·π/dt.
        let roundoff = 8.0 * f64::EPSILON * (PI + w[1].t.abs()) / dt.abs();
        if slope * slope > 1.0 + CERT_SLACK + roundoff {
            flag(&mut cert, w[0].t, CheckKind::Slope, slope);
        }
        if slope > 0.0 {
            cert.strictly_monotone = false;
            flag(&mut cert, w[0].t, CheckKind::Monotone, slope);
        }
    }
    for s in &map.samples {
        if !(s.df < 0.0) {
            cert.strictly_monotone = false;
            flag(&mut cert, s.t, CheckKind::Monotone, s.df);
        }
        let sf = s.f.sin().powi(2);
        let sr = rho_at(m, s.t).sin().powi(2);
        cert.max_sine_excess = cert.max_sine_excess.max(sf - sr);
        if sf > sr * (1.0 + CERT_SLACK) + f64::MIN_POSITIVE {
            flag(&mut cert, s.t, CheckKind::Sine, sf - sr);
        }
    }
    let first = map.samples.first().unwrap();
    let last = map.samples.last().unwrap();
    cert.endpoints_ok =
        (first.f - PI).abs() <= 1e-12 && last.f.abs() <= 1e-12 && last.t == map.d_total;
    if !cert.endpoints_ok {
        flag(&mut cert, last.t, CheckKind::Endpoints, last.f);
    }
    cert
}

/// The width lower bound 4π for a certified map on a 3-sphere.
pub fn certify_width(cert: &LipschitzCertificate, m: &GluedManifold) -> Result<f64, ForgeError> {
    if m.bg.n == 3 && cert.passes() && cert.strictly_monotone && cert.endpoints_ok {
        Ok(4.0 * PI)
    } else {
        Err(ForgeError::CertificationMissing)
    }
}

/// Largest slope² and sine excess of F∘Φ⁻¹ measured in the pulled-back round
/// metric, where Φ(r) = πr/D rescales [0, D] to [0, π].
pub fn rescaled_margins(map: &AxialMap) -> (f64, f64) {
    let d = map.d_total;
    let g: Vec<(f64, f64)> = map
        .samples
        .iter()
        .rev()
        .map(|s| (d - s.t, (d / PI) * s.f))
        .collect();
    let mut slope_sq = 0.0f64;
    for w in g.windows(2) {
        let h = w[1].0 - w[0].0;
        if h > 0.0 {
            // Φ*g_round = (π/D)² dr² + sin²(πr/D) g.
            let s = (PI / d) * (w[1].1 - w[0].1) / h;
            slope_sq = slope_sq.max(s * s);
        }
    }
    let sine = g
        .iter()
        .zip(map.samples.iter().rev())
        .map(|(&(_, gv), s)| ((PI / d) * gv).sin().powi(2) - s.f.sin().powi(2))
        .fold(f64::NEG_INFINITY, f64::max);
    (slope_sq, sine)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VadbCertificate {
    pub samples: usize,
    /// max (dr/ds)² of the projection of each well onto its ball.
    pub radial_max: f64,
    /// min over samples of (w_j − w_base∘F)/w_j.
    pub spherical_min: f64,
    pub volume_gap: f64,
    pub volume_bound: f64,
    pub violation: Option<Violation>,
}

impl VadbCertificate {
    pub fn passes(&self) -> bool {
        self.violation.is_none() && self.volume_gap <= self.volume_bound
    }
}

/// Metric domination g ≤ g_j for the projection of every well onto the ball it
/// replaced (identity elsewhere), and the volume gap against C·j(δⁿ + dδ^{n−1}).
pub fn certify_vadb(m: &DecoratedSphere) -> VadbCertificate {
    let mut cert = VadbCertificate {
        samples: 0,
        radial_max: 0.0,
        spherical_min: f64::INFINITY,
        volume_gap: (m.volume() - m.base_volume()).abs(),
        volume_bound: 0.0,
        violation: None,
    };
    let bg = m.bg;
    for w in &m.inserts {
        for ((p, s), wj) in w
            .curve
            .samples()
            .zip(w.manifold.cells.iter().flat_map(|c| c.w.iter()))
        {
            cert.samples += 1;
            let radial = s.angle.cos().powi(2);
            cert.radial_max = cert.radial_max.max(radial);
            if radial > 1.0 + CERT_SLACK && cert.violation.is_none() {
                cert.violation = Some(Violation {
                    t: p.s_start + s.sigma,
                    check: CheckKind::Slope,
                    value: radial,
                });
            }
            if *wj > 0.0 {
                let rel = (wj - bg.sn(s.r)) / wj;
                cert.spherical_min = cert.spherical_min.min(rel);
                if rel < -CERT_SLACK && cert.violation.is_none() {
                    cert.violation = Some(Violation {
                        t: p.s_start + s.sigma,
                        check: CheckKind::Sine,
                        value: rel,
                    });
                }
            }
        }
    }
    let n = bg.n as i32;
    let c = m.volume_constant();
    cert.volume_bound = m
        .sites
        .iter()
        .map(|site| {
            let w = &m.inserts[site.insert];
            c * (w.delta().powi(n) + w.depth() * w.delta().powi(n - 1))
        })
        .sum();
    cert
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::build::{well_params, BuildOptions};
    use crate::gluing::attach_tunnel;
    use crate::space_form::BackgroundSpace;

    fn tunnel() -> GluedManifold {
        let bg = BackgroundSpace::unit_sphere(3);
        attach_tunnel(
            &bg,
            &bg,
            well_params(0.2, 30.0, 6.0, 10.0),
            &BuildOptions::default(),
        )
        .unwrap()
    }

    #[test]
    fn round_sphere_gets_identity() {
        let m = crate::gluing::round_sphere(&BackgroundSpace::unit_sphere(3)).unwrap();
        let map = build_axial_map(&m).unwrap();
        assert!(map.corner.is_none() && map.neck.is_none());
        assert!(map.samples.iter().all(|s| (s.f - (PI - s.t)).abs() < 1e-15));
        let c = certify_lipschitz(&map, &m);
        assert!(c.passes(), "{:?}", c.violation);
        assert!(build_axial_map_with_slope(&m, 1.1).is_err());
    }

    #[test]
    fn tunnel_map_certifies() {
        let m = tunnel();
        let map = build_axial_map(&m).unwrap();
        let c = certify_lipschitz(&map, &m);
        assert!(c.passes(), "{:?}", c.violation);
        assert!(c.samples > CERT_SAMPLES);
        assert_eq!(certify_width(&c, &m).unwrap(), 4.0 * PI);
        let nk = map.neck.unwrap();
        assert!(nk.offset_from_half.abs() < 1.0);
    }

    #[test]
    fn steep_map_fails_with_sample() {
        let m = tunnel();
        let map = build_axial_map_with_slope(&m, 1.1).unwrap();
        let c = certify_lipschitz(&map, &m);
        let v = c.violation.unwrap();
        assert_eq!(v.check, CheckKind::Slope);
        assert!((v.value.abs() - 1.1).abs() < 1e-9);
        assert!(certify_width(&c, &m).is_err());
    }

    #[test]
    fn pow2_below_is_strict() {
        assert_eq!(pow2_below(1.0), 0.5);
        assert_eq!(pow2_below(0.3), 0.25);
    }
}
