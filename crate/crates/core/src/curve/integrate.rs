//! Fourth-order integration of γ' = (sin θ, −cos θ), θ' = k in piece-local coordinates.

use serde::{Deserialize, Serialize};

use super::angle::Angle;
use super::profile::*;
use crate::error::ForgeError;

/// How finely each segment is sampled.
///
/// A segment gets at least `min_steps` steps, at least `length/base_step` steps
/// (capped at `macro_cap`), and for curved segments enough steps to resolve the
/// turning angle (`angle_step` per step) or the blend profile (`blend_steps`).
/// The curvature-driven counts are weighted by r_deep / r_piece, so that the
/// finite-difference error is balanced against the largest curvature scale of
/// the whole profile. Every count is multiplied by 2^refine.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sampling {
    pub base_step: f64,
    pub refine: u32,
    pub min_steps: usize,
    pub macro_cap: usize,
    pub angle_step: f64,
    pub blend_steps: usize,
}

impl Sampling {
    pub fn for_delta0(delta0: f64) -> Self {
        Self {
            base_step: delta0 / 8192.0,
            refine: 0,
            min_steps: 8,
            macro_cap: 4096,
            angle_step: 2.5e-4,
            blend_steps: 8192,
        }
    }

    pub fn refined(&self, levels: u32) -> Self {
        Self {
            refine: self.refine + levels,
            ..*self
        }
    }

    fn steps(&self, law: &CurvatureLaw, length: f64, weight: f64) -> usize {
        let curved = match *law {
            CurvatureLaw::Constant { k } => k.abs() * length / self.angle_step,
            CurvatureLaw::Blend { .. } => self.blend_steps as f64,
        };
        let macro_steps = (length / self.base_step).min(self.macro_cap as f64);
        let n = (curved * weight).max(macro_steps).ceil() as usize;
        let n = n.max(self.min_steps);
        (n + n % 2) << self.refine
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveSample {
    /// Arclength from the piece start.
    pub sigma: f64,
    /// t minus the piece's starting t.
    pub dt: f64,
    pub r: f64,
    /// Radius lost since the piece start, accumulated locally.
    pub dr: f64,
    /// dr − σ·cos θ(0), accumulated from cos θ − cos θ(0) without cancellation.
    pub q: f64,
    pub angle: Angle,
    pub k: f64,
}

/// One integrated segment, uniformly sampled including both endpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePiece {
    pub role: Role,
    pub law: CurvatureLaw,
    pub s_start: f64,
    pub length: f64,
    pub t_start: f64,
    pub samples: Vec<CurveSample>,
}

impl CurvePiece {
    pub fn step(&self) -> f64 {
        self.length / (self.samples.len() - 1) as f64
    }
    pub fn first(&self) -> &CurveSample {
        &self.samples[0]
    }
    pub fn last(&self) -> &CurveSample {
        self.samples.last().unwrap()
    }
    pub fn r_scale(&self) -> f64 {
        self.first().r.max(self.last().r)
    }
    pub fn s_end(&self) -> f64 {
        self.s_start + self.length
    }
}

/// Arclength-sampled solution of the curve equations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileCurve {
    pub mode: Mode,
    pub pieces: Vec<CurvePiece>,
    pub sampling: Sampling,
}

/// ∫ k over [σ0, σ1] (Gauss–Legendre on blends, exact on constants). Blends
/// are integrated as from·∫h + to·∫g so that no cancellation occurs near
/// either end.
pub fn turn(law: &CurvatureLaw, sigma0: f64, sigma1: f64) -> f64 {
    use crate::quad::gauss_legendre;
    use crate::smoothing::transition::{g, h};
    match *law {
        CurvatureLaw::Constant { k } => k * (sigma1 - sigma0),
        CurvatureLaw::Blend { from, to, width } => {
            let (x0, x1) = (sigma0 / width, sigma1 / width);
            let mut sum = 0.0;
            if from != 0.0 {
                sum += from * gauss_legendre(h, x0, x1, 2);
            }
            if to != 0.0 {
                sum += to * gauss_legendre(g, x0, x1, 2);
            }
            width * sum
        }
    }
}

/// Classical RK4 for (θ, t, r). The right-hand side of t and r depends on the
/// state only through θ, which is advanced by quadrature of k, so each step is
/// Simpson's rule on the three stage angles.
///
/// Angles in the first half of the piece are measured from its start and in
/// the second half from its declared end, so both ends are resolved to their
/// own scale. Returns the samples and the end angle reached from the start.
fn rk4_piece(
    law: &CurvatureLaw,
    start: Angle,
    end: Angle,
    r0: f64,
    length: f64,
    steps: usize,
) -> (Vec<CurveSample>, Angle) {
    let h = length / steps as f64;
    let node = |i: usize| if i == steps { length } else { i as f64 * h };
    let mut full = Vec::with_capacity(steps);
    let mut first_half = Vec::with_capacity(steps);
    let mut second_half = Vec::with_capacity(steps);
    for i in 0..steps {
        let (a, b) = (node(i), node(i + 1));
        let m = 0.5 * (a + b);
        let (ta, tb) = (turn(law, a, m), turn(law, m, b));
        first_half.push(ta);
        second_half.push(tb);
        full.push(ta + tb);
    }
    let mut prefix = vec![0.0; steps + 1];
    for i in 0..steps {
        prefix[i + 1] = prefix[i] + full[i];
    }
    let mut suffix = vec![0.0; steps + 1];
    for i in (0..steps).rev() {
        suffix[i] = suffix[i + 1] + full[i];
    }
    let at_node = |i: usize| {
        if 2 * i <= steps {
            start.add(prefix[i])
        } else {
            end.add(-suffix[i])
        }
    };
    let at_mid = |i: usize| {
        if 2 * i < steps {
            start.add(prefix[i] + first_half[i])
        } else {
            end.add(-(suffix[i + 1] + second_half[i]))
        }
    };
    // cos θ − cos θ0 from the turned angle Δ.
    let cos_gap = |delta: f64| -2.0 * start.add(0.5 * delta).sin() * (0.5 * delta).sin();
    let mut out = Vec::with_capacity(steps + 1);
    let (mut t, mut dr, mut q) = (0.0f64, 0.0f64, 0.0f64);
    out.push(CurveSample {
        sigma: 0.0,
        dt: 0.0,
        r: r0,
        dr: 0.0,
        q: 0.0,
        angle: start,
        k: law.k_at(0.0),
    });
    for i in 0..steps {
        let (a, b) = (node(i), node(i + 1));
        let w = (b - a) / 6.0;
        let (a0, am, a1) = (at_node(i), at_mid(i), at_node(i + 1));
        t += w * (a0.sin() + 4.0 * am.sin() + a1.sin());
        dr += w * (a0.cos() + 4.0 * am.cos() + a1.cos());
        q += w
            * (cos_gap(prefix[i])
                + 4.0 * cos_gap(prefix[i] + first_half[i])
                + cos_gap(prefix[i + 1]));
        out.push(CurveSample {
            sigma: b,
            dt: t,
            r: r0 - dr,
            dr,
            q,
            angle: a1,
            k: law.k_at(b),
        });
    }
    (out, start.add(prefix[steps]))
}

fn resolve_length(seg: &Segment, state: &CurveState) -> Result<f64, ForgeError> {
    match seg.extent {
        Extent::Length(l) => Ok(l),
        Extent::ToAxis => {
            let c = state.angle.cos();
            if c <= 0.0 || !matches!(seg.law, CurvatureLaw::Constant { k } if k == 0.0) {
                return Err(ForgeError::InvalidInput(
                    "axis-bound segment must be a descending line".into(),
                ));
            }
            Ok(state.r / c)
        }
    }
}

/// Largest angle mismatch tolerated when snapping a segment end to its exact angle.
pub const SNAP_TOL: f64 = 1e-11;
/// Largest relative radius mismatch tolerated against a declared end radius.
pub const RADIUS_SNAP_TOL: f64 = 1e-9;

fn integrate_with(
    profile: &CurvatureProfile,
    initial: CurveState,
    sampling: &Sampling,
    weights: Option<&[f64]>,
) -> Result<ProfileCurve, ForgeError> {
    let mut state = initial;
    let mut s = profile.s_origin;
    let mut pieces = Vec::with_capacity(profile.segments.len());
    let last_index = profile.segments.len() - 1;
    let declared = !profile.end_radii.is_empty();
    if declared && profile.end_radii.len() != profile.segments.len() {
        return Err(ForgeError::InvalidInput(
            "one declared radius per segment required".into(),
        ));
    }
    for (idx, seg) in profile.segments.iter().enumerate() {
        if declared && idx > 0 {
            state.r = profile.end_radii[idx - 1];
        }
        let length = resolve_length(seg, &state)?;
        if !(length > 0.0) {
            return Err(ForgeError::InvalidInput(format!(
                "segment {idx} has non-positive length {length:e}"
            )));
        }
        let weight = weights.map_or(0.0, |w| w[idx]);
        let steps = sampling.steps(&seg.law, length, weight);
        let (mut samples, reached) =
            rk4_piece(&seg.law, state.angle, seg.end, state.r, length, steps);
        let end = samples.last_mut().unwrap();
        let mismatch = reached.minus(&seg.end).abs();
        if mismatch > SNAP_TOL * (1.0 + seg.law.max_abs_k() * length) {
            return Err(ForgeError::InvalidInput(format!(
                "segment {idx} ends {mismatch:e} away from its declared angle"
            )));
        }
        end.angle = seg.end;
        if declared {
            let target = profile.end_radii[idx];
            let miss = (end.r - target).abs();
            // The coarse pass only sizes the final one, so only the final pass is checked.
            if weights.is_some() && miss > RADIUS_SNAP_TOL * state.r.max(target) {
                return Err(ForgeError::InvalidInput(format!(
                    "segment {idx} ends at radius {:e}, declared {target:e}",
                    end.r
                )));
            }
            end.r = target;
        }
        let terminal = idx == last_index && seg.extent == Extent::ToAxis;
        if terminal {
            end.r = 0.0;
        }
        for smp in &samples {
            let interior_tip = terminal && smp.sigma == length;
            if !(smp.r > 0.0) && !interior_tip {
                return Err(ForgeError::NonPositiveRadius { s: s + smp.sigma });
            }
        }
        let end = *samples.last().unwrap();
        pieces.push(CurvePiece {
            role: seg.role,
            law: seg.law,
            s_start: s,
            length,
            t_start: state.t,
            samples,
        });
        state = CurveState {
            t: state.t + end.dt,
            r: end.r,
            angle: end.angle,
        };
        s += length;
    }
    Ok(ProfileCurve {
        mode: profile.mode,
        pieces,
        sampling: *sampling,
    })
}

/// Integrates the profile from `initial`, sampling each segment per `sampling`.
pub fn integrate_curve(
    profile: &CurvatureProfile,
    initial: CurveState,
    sampling: &Sampling,
) -> Result<ProfileCurve, ForgeError> {
    if !(initial.r > 0.0) {
        return Err(ForgeError::InvalidInput(
            "initial radius must be positive".into(),
        ));
    }
    if !(sampling.base_step > 0.0) {
        return Err(ForgeError::InvalidInput("step must be positive".into()));
    }
    let coarse = integrate_with(
        profile,
        initial,
        &Sampling {
            refine: 0,
            ..*sampling
        },
        None,
    )?;
    let r_deep = coarse
        .pieces
        .iter()
        .map(CurvePiece::r_scale)
        .fold(f64::INFINITY, f64::min);
    let weights: Vec<f64> = coarse
        .pieces
        .iter()
        .map(|p| (r_deep / p.r_scale()).min(1.0))
        .collect();
    let curve = integrate_with(profile, initial, sampling, Some(&weights))?;
    let defect = curve.unit_speed_defect();
    let tol = unit_speed_tolerance(&curve);
    if defect > tol {
        return Err(ForgeError::StepTooCoarse { defect, tol });
    }
    Ok(curve)
}

/// Integrates from the profile's own start state.
pub fn integrate_profile(
    profile: &CurvatureProfile,
    sampling: &Sampling,
) -> Result<ProfileCurve, ForgeError> {
    integrate_curve(profile, profile.start, sampling)
}

/// Tolerance for the unit-speed defect: 10·η⁴ with η the largest per-step
/// turning angle, plus a floor for rounding in the difference quotients.
pub fn unit_speed_tolerance(curve: &ProfileCurve) -> f64 {
    let eta = curve
        .pieces
        .iter()
        .map(|p| p.step() * p.law.max_abs_k())
        .fold(0.0, f64::max);
    10.0 * eta.powi(4) + 1e-9
}

impl ProfileCurve {
    pub fn samples(&self) -> impl Iterator<Item = (&CurvePiece, &CurveSample)> {
        self.pieces
            .iter()
            .flat_map(|p| p.samples.iter().map(move |s| (p, s)))
    }

    pub fn sample_count(&self) -> usize {
        self.pieces.iter().map(|p| p.samples.len()).sum()
    }

    pub fn total_length(&self) -> f64 {
        self.pieces.iter().map(|p| p.length).sum()
    }

    pub fn s_min(&self) -> f64 {
        self.pieces[0].s_start
    }

    pub fn s_max(&self) -> f64 {
        self.pieces.last().unwrap().s_end()
    }

    /// sup over samples of |(dt/ds)² + (dr/ds)² − 1| with five-point differences inside pieces.
    pub fn unit_speed_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for p in &self.pieces {
            let n = p.samples.len();
            if n < 5 {
                continue;
            }
            let h = p.step();
            for i in 2..n - 2 {
                let d = |f: &dyn Fn(&CurveSample) -> f64| {
                    (f(&p.samples[i - 2]) - 8.0 * f(&p.samples[i - 1]) + 8.0 * f(&p.samples[i + 1])
                        - f(&p.samples[i + 2]))
                        / (12.0 * h)
                };
                let tp = d(&|s: &CurveSample| s.dt);
                let rp = d(&|s: &CurveSample| s.dr);
                worst = worst.max((tp * tp + rp * rp - 1.0).abs());
            }
        }
        worst
    }

    /// Largest deviation |θ(end) − θ(start) − ∫k| over pieces, using Simpson on the samples.
    pub fn turning_defect(&self) -> f64 {
        self.pieces
            .iter()
            .map(|p| {
                let ks: Vec<f64> = p.samples.iter().map(|s| s.k).collect();
                let integral = crate::quad::simpson_uniform(&ks, p.step());
                (p.last().angle.minus(&p.first().angle) - integral).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Index of the first piece with the given role.
    pub fn find(&self, role: Role) -> Option<usize> {
        self.pieces.iter().position(|p| p.role == role)
    }

    /// Curve state at global arclength s (closed form on constant pieces, cubic Hermite on blends).
    pub fn state_at(&self, s: f64) -> CurveState {
        let idx = match self.pieces.iter().position(|p| s <= p.s_end()) {
            Some(i) => i,
            None => self.pieces.len() - 1,
        };
        let p = &self.pieces[idx];
        let sigma = (s - p.s_start).clamp(0.0, p.length);
        piece_state(p, sigma)
    }

    /// The curve traversed backwards and reflected in t, as the second half of a
    /// symmetric tunnel: angle π − θ(L − s), curvature k(L − s).
    pub fn mirrored(&self, s_start: f64, t_start: f64) -> ProfileCurve {
        let mut pieces = Vec::with_capacity(self.pieces.len());
        let mut s = s_start;
        let mut t = t_start;
        for p in self.pieces.iter().rev() {
            let end = p.last();
            let samples: Vec<CurveSample> = p
                .samples
                .iter()
                .rev()
                .map(|q| CurveSample {
                    sigma: p.length - q.sigma,
                    dt: end.dt - q.dt,
                    r: q.r,
                    dr: q.dr - end.dr,
                    // ∫ over the reversed range of cos θ' − cos θ'(0), with θ' = π − θ.
                    q: (q.q - end.q)
                        + (p.length - q.sigma) * sin_gap_cos(end.angle, p.first().angle),
                    angle: q.angle.reflected(),
                    k: q.k,
                })
                .collect();
            let law = match p.law {
                CurvatureLaw::Blend { from, to, width } => CurvatureLaw::Blend {
                    from: to,
                    to: from,
                    width,
                },
                c => c,
            };
            let dt_total = samples.last().unwrap().dt;
            pieces.push(CurvePiece {
                role: p.role,
                law,
                s_start: s,
                length: p.length,
                t_start: t,
                samples,
            });
            s += p.length;
            t += dt_total;
        }
        ProfileCurve {
            mode: self.mode,
            pieces,
            sampling: self.sampling,
        }
    }

    /// Shifts global s and t coordinates.
    pub fn shifted(mut self, ds: f64, dt: f64) -> ProfileCurve {
        for p in &mut self.pieces {
            p.s_start += ds;
            p.t_start += dt;
        }
        self
    }
}

/// State at local arclength σ within a piece.
pub fn piece_state(p: &CurvePiece, sigma: f64) -> CurveState {
    let a = p.first();
    if let CurvatureLaw::Constant { k } = p.law {
        let (dt, r, angle) = constant_arc(a.angle, a.r, k, sigma);
        return CurveState {
            t: p.t_start + dt,
            r,
            angle,
        };
    }
    let h = p.step();
    let i = ((sigma / h) as usize).min(p.samples.len() - 2);
    let (s0, s1) = (&p.samples[i], &p.samples[i + 1]);
    let u = ((sigma - s0.sigma) / h).clamp(0.0, 1.0);
    let herm = |y0: f64, y1: f64, d0: f64, d1: f64| {
        let (u2, u3) = (u * u, u * u * u);
        (2.0 * u3 - 3.0 * u2 + 1.0) * y0
            + (u3 - 2.0 * u2 + u) * h * d0
            + (-2.0 * u3 + 3.0 * u2) * y1
            + (u3 - u2) * h * d1
    };
    let r = herm(s0.r, s1.r, -s0.angle.cos(), -s1.angle.cos());
    let dt = herm(s0.dt, s1.dt, s0.angle.sin(), s1.angle.sin());
    let dth = s1.angle.minus(&s0.angle);
    let angle = s0.angle.add(herm(0.0, dth, s0.k, s1.k));
    CurveState {
        t: p.t_start + dt,
        r,
        angle,
    }
}

/// cos a − cos b without cancellation.
fn sin_gap_cos(a: Angle, b: Angle) -> f64 {
    let d = a.minus(&b);
    -2.0 * b.add(0.5 * d).sin() * (0.5 * d).sin()
}

/// Closed-form constant-curvature arc: (Δt, r, angle) after arclength σ.
pub fn constant_arc(a: Angle, r0: f64, k: f64, sigma: f64) -> (f64, f64, Angle) {
    if k == 0.0 {
        return (sigma * a.sin(), r0 - sigma * a.cos(), a);
    }
    let delta = k * sigma;
    let mid = a.add(0.5 * delta);
    let chord = 2.0 * (0.5 * delta).sin() / k;
    (chord * mid.sin(), r0 - chord * mid.cos(), a.add(delta))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(law: CurvatureLaw, length: f64, start: CurveState) -> CurvatureProfile {
        let end = start.angle.add(law.total_turn(length));
        CurvatureProfile {
            mode: Mode::Well,
            params: WellParams {
                delta: 1.0,
                delta0: 1.0,
                d: 1.0,
                kappa: 0.0,
                j: 1.0,
            },
            s_origin: 0.0,
            start,
            segments: vec![Segment {
                role: Role::UnitArc,
                law,
                extent: Extent::Length(length),
                end,
            }],
            ledger: None,
            blend: None,
            end_radii: vec![],
        }
    }

    fn sampling(h: f64) -> Sampling {
        Sampling {
            base_step: h,
            refine: 0,
            min_steps: 4,
            macro_cap: 1 << 20,
            angle_step: 1.0,
            blend_steps: 8,
        }
    }

    #[test]
    fn vertical_segment_is_exact() {
        let start = CurveState {
            t: 0.0,
            r: 0.2,
            angle: Angle::ZERO,
        };
        let c = integrate_curve(
            &single(CurvatureLaw::Constant { k: 0.0 }, 0.1, start),
            start,
            &sampling(0.01),
        )
        .unwrap();
        for (_, s) in c.samples() {
            assert_eq!(s.dt, 0.0);
            assert!((s.r - (0.2 - s.sigma)).abs() < 1e-16);
        }
    }

    #[test]
    fn unit_arc_matches_closed_form() {
        let start = CurveState {
            t: 0.0,
            r: 2.0,
            angle: Angle::ZERO,
        };
        let c = integrate_curve(
            &single(CurvatureLaw::Constant { k: 1.0 }, 1.0, start),
            start,
            &sampling(1e-3),
        )
        .unwrap();
        for (_, s) in c.samples() {
            assert!((s.angle.theta - s.sigma).abs() < 1e-14);
            assert!((s.dt - (1.0 - s.sigma.cos())).abs() < 1e-13);
            assert!((s.r - (2.0 - s.sigma.sin())).abs() < 1e-13);
        }
    }

    #[test]
    fn fourth_order_on_blend() {
        let start = CurveState {
            t: 0.0,
            r: 5.0,
            angle: Angle::from_theta(0.2),
        };
        let law = CurvatureLaw::Blend {
            from: 0.5,
            to: 2.0,
            width: 1.0,
        };
        let prof = single(law, 1.0, start);
        let end_r = |h: f64| {
            let c = integrate_curve(&prof, start, &sampling(h)).unwrap();
            c.pieces[0].last().r
        };
        let (a, b, c) = (end_r(1.0 / 16.0), end_r(1.0 / 32.0), end_r(1.0 / 64.0));
        let ratio = (a - b).abs() / (b - c).abs();
        assert!(ratio > 12.0 && ratio < 24.0, "ratio {ratio}");
    }

    #[test]
    fn mirror_reverses() {
        let start = CurveState {
            t: 0.0,
            r: 2.0,
            angle: Angle::ZERO,
        };
        let c = integrate_curve(
            &single(CurvatureLaw::Constant { k: 1.0 }, 1.0, start),
            start,
            &sampling(0.1),
        )
        .unwrap();
        let m = c.mirrored(1.0, 1.0);
        let (a, b) = (c.pieces[0].last(), m.pieces[0].first());
        assert_eq!(a.r, b.r);
        assert!((b.angle.theta - (std::f64::consts::PI - 1.0)).abs() < 1e-15);
    }
}
