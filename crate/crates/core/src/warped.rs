//! Warped products dt² + w(t)² g_{S^{n−1}} realized from generating curves.

use serde::{Deserialize, Serialize};

use crate::curve::{Angle, CurvePiece, ProfileCurve, Role};
use crate::error::ForgeError;
use crate::quad::simpson_uniform;
use crate::space_form::{sphere_area, BackgroundSpace};

/// Coefficient on the c·k·sin θ term of the hypersurface scalar curvature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GaussConvention {
    /// 2(n−1), from summing 2·λ₁λ_j over the n−1 spherical principal curvatures.
    Derived,
    /// (n−1), as printed in the hypersurface formula.
    Printed,
}

/// Scalar curvature of the hypersurface over a distance sphere of radius r
/// whose generating curve has angle θ and geodesic curvature k.
pub fn gauss_scalar(
    bg: &BackgroundSpace,
    r: f64,
    angle: Angle,
    k: f64,
    conv: GaussConvention,
) -> f64 {
    let n = bg.nf();
    let s = angle.sin();
    let c = bg.mean_curv(r);
    let coeff = match conv {
        GaussConvention::Derived => 2.0 * (n - 1.0),
        GaussConvention::Printed => n - 1.0,
    };
    bg.scalar() - 2.0 * (n - 1.0) * bg.k0 * s * s + (n - 1.0) * (n - 2.0) * c * c * s * s
        - coeff * c * k * s
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Cap {
    Pole,
    Boundary { radius: f64 },
}

/// Uniformly sampled warp function on one curve piece.
///
/// Besides w itself the cell keeps w'(0) and the remainder
/// w(σ) − w(0) − w'(0)σ, so that difference quotients of w stay meaningful
/// when the step is many orders of magnitude below w.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WarpCell {
    pub role: Role,
    pub s_start: f64,
    pub length: f64,
    pub w: Vec<f64>,
    pub slope0: f64,
    pub rem: Vec<f64>,
}

impl WarpCell {
    pub fn step(&self) -> f64 {
        self.length / (self.w.len() - 1) as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WarpedManifold {
    pub bg: BackgroundSpace,
    pub cells: Vec<WarpCell>,
    pub caps: (Cap, Cap),
}

fn is_pole(bg: &BackgroundSpace, r: f64) -> bool {
    r == 0.0 || r >= bg.injectivity_radius()
}

fn cap_for(bg: &BackgroundSpace, r: f64) -> Cap {
    if is_pole(bg, r) {
        Cap::Pole
    } else {
        Cap::Boundary { radius: bg.sn(r) }
    }
}

/// w(s) = sn_{K0}(r(s)) on every sample; w = 0 exactly at poles.
pub fn realize(curve: &ProfileCurve, bg: &BackgroundSpace) -> Result<WarpedManifold, ForgeError> {
    let limit = bg.injectivity_radius();
    let mut cells = Vec::with_capacity(curve.pieces.len());
    for p in &curve.pieces {
        let mut w = Vec::with_capacity(p.samples.len());
        let mut rem = Vec::with_capacity(p.samples.len());
        let first = p.first();
        let cs0 = bg.cs(first.r);
        for s in &p.samples {
            if s.r > limit || s.r < 0.0 {
                return Err(ForgeError::RadiusExceedsBall { r: s.r, limit });
            }
            w.push(if is_pole(bg, s.r) { 0.0 } else { bg.sn(s.r) });
            rem.push(bg.sn_remainder(first.r, s.dr) - cs0 * s.q);
        }
        cells.push(WarpCell {
            role: p.role,
            s_start: p.s_start,
            length: p.length,
            w,
            slope0: -cs0 * first.angle.cos(),
            rem,
        });
    }
    let first = curve.pieces[0].first().r;
    let last = curve.pieces.last().unwrap().last().r;
    Ok(WarpedManifold {
        bg: *bg,
        cells,
        caps: (cap_for(bg, first), cap_for(bg, last)),
    })
}

/// Per-sample scalar field laid out like the samples (None where undefined).
pub type Field = Vec<Vec<Option<f64>>>;

/// Scalar curvature from the hypersurface formula at every non-pole sample.
pub fn scalar_curvature_gauss(
    curve: &ProfileCurve,
    bg: &BackgroundSpace,
    conv: GaussConvention,
) -> Field {
    curve
        .pieces
        .iter()
        .map(|p| {
            p.samples
                .iter()
                .map(|s| (!is_pole(bg, s.r)).then(|| gauss_scalar(bg, s.r, s.angle, s.k, conv)))
                .collect()
        })
        .collect()
}

/// (w', w'') by fourth-order differences: centered inside a cell, biased next
/// to its ends and one-sided at them. The differences act on the remainder; the
/// linear part is exact.
pub fn warp_derivatives(cell: &WarpCell) -> Vec<(f64, f64)> {
    let w = &cell.rem;
    let slope0 = cell.slope0;
    let n = w.len();
    let h = cell.step();
    let ends = end_derivatives(cell);
    let biased = |f: [f64; 6], sign: f64| {
        (
            slope0
                + sign * (-3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]) / (12.0 * h),
            (10.0 * f[0] - 15.0 * f[1] - 4.0 * f[2] + 14.0 * f[3] - 6.0 * f[4] + f[5])
                / (12.0 * h * h),
        )
    };
    (0..n)
        .map(|i| {
            if i == 0 {
                ends[0]
            } else if i == n - 1 {
                ends[1]
            } else if i == 1 {
                biased([w[0], w[1], w[2], w[3], w[4], w[5]], 1.0)
            } else if i == n - 2 {
                biased(
                    [w[n - 1], w[n - 2], w[n - 3], w[n - 4], w[n - 5], w[n - 6]],
                    -1.0,
                )
            } else {
                (
                    slope0 + (-w[i + 2] + 8.0 * w[i + 1] - 8.0 * w[i - 1] + w[i - 2]) / (12.0 * h),
                    (-w[i + 2] + 16.0 * w[i + 1] - 30.0 * w[i] + 16.0 * w[i - 1] - w[i - 2])
                        / (12.0 * h * h),
                )
            }
        })
        .collect()
}

/// (w', w'') at the first and last sample of a cell from five-point one-sided
/// differences (orders four and three), for comparing neighbouring cells.
pub fn end_derivatives(cell: &WarpCell) -> [(f64, f64); 2] {
    let w = &cell.rem;
    let n = w.len();
    let h = cell.step();
    let one_sided = |f: [f64; 5], sign: f64| {
        (
            cell.slope0
                + sign * (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4])
                    / (12.0 * h),
            (35.0 * f[0] - 104.0 * f[1] + 114.0 * f[2] - 56.0 * f[3] + 11.0 * f[4])
                / (12.0 * h * h),
        )
    };
    [
        one_sided([w[0], w[1], w[2], w[3], w[4]], 1.0),
        one_sided([w[n - 1], w[n - 2], w[n - 3], w[n - 4], w[n - 5]], -1.0),
    ]
}

/// R = −2(n−1)w''/w + (n−1)(n−2)(1 − w'²)/w² at every sample with w ≠ 0.
pub fn scalar_curvature_warp(m: &WarpedManifold) -> Field {
    let n = m.bg.nf();
    m.cells
        .iter()
        .map(|c| {
            let d = warp_derivatives(c);
            c.w.iter()
                .zip(d)
                .map(|(&w, (w1, w2))| {
                    (w != 0.0).then(|| {
                        -2.0 * (n - 1.0) * w2 / w
                            + (n - 1.0) * (n - 2.0) * (1.0 - w1 * w1) / (w * w)
                    })
                })
                .collect()
        })
        .collect()
}

/// Checked variant of [`scalar_curvature_warp`] at a single sample.
pub fn warp_scalar_at(m: &WarpedManifold, cell: usize, i: usize) -> Result<f64, ForgeError> {
    let c = &m.cells[cell];
    if c.w[i] == 0.0 {
        return Err(ForgeError::PoleSingularity {
            s: c.s_start + i as f64 * c.step(),
        });
    }
    Ok(scalar_curvature_warp(m)[cell][i].unwrap())
}

/// Outcome of comparing the two curvature oracles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossOracle {
    pub max_abs_r: f64,
    pub min_r: f64,
    pub max_diff_derived: f64,
    pub max_diff_printed: f64,
    /// Largest per-sample |ΔR|/(1 + |R|) under the derived convention.
    pub max_rel_local: f64,
    pub tolerance: f64,
    pub agreeing: Option<GaussConvention>,
}

impl CrossOracle {
    pub fn passes(&self) -> bool {
        self.max_diff_derived <= self.tolerance && self.agreeing == Some(GaussConvention::Derived)
    }
}

/// Compares Gauss-formula curvature (both conventions) against the warp formula.
pub fn cross_oracle(curve: &ProfileCurve, m: &WarpedManifold, rel_tol: f64) -> CrossOracle {
    let gd = scalar_curvature_gauss(curve, &m.bg, GaussConvention::Derived);
    let gp = scalar_curvature_gauss(curve, &m.bg, GaussConvention::Printed);
    let wr = scalar_curvature_warp(m);
    let mut out = CrossOracle {
        max_abs_r: 0.0,
        min_r: f64::INFINITY,
        max_diff_derived: 0.0,
        max_diff_printed: 0.0,
        max_rel_local: 0.0,
        tolerance: 0.0,
        agreeing: None,
    };
    for ((a, b), c) in gd.iter().zip(&gp).zip(&wr) {
        for ((x, y), z) in a.iter().zip(b).zip(c) {
            if let (Some(x), Some(y), Some(z)) = (x, y, z) {
                out.max_abs_r = out.max_abs_r.max(x.abs());
                out.min_r = out.min_r.min(*x);
                out.max_diff_derived = out.max_diff_derived.max((x - z).abs());
                out.max_diff_printed = out.max_diff_printed.max((y - z).abs());
                out.max_rel_local = out.max_rel_local.max((x - z).abs() / (1.0 + x.abs()));
            }
        }
    }
    out.tolerance = rel_tol * (1.0 + out.max_abs_r);
    out.agreeing = match (
        out.max_diff_derived <= out.tolerance,
        out.max_diff_printed <= out.tolerance,
    ) {
        (true, false) => Some(GaussConvention::Derived),
        (false, true) => Some(GaussConvention::Printed),
        (true, true) if out.max_diff_derived <= out.max_diff_printed => {
            Some(GaussConvention::Derived)
        }
        (true, true) => Some(GaussConvention::Printed),
        _ => None,
    };
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VolumeEstimate {
    pub value: f64,
    /// |Simpson(h) − Simpson(2h)|/15, summed over cells.
    pub error_estimate: f64,
}

fn cell_volume(c: &WarpCell, n: usize) -> (f64, f64) {
    let f: Vec<f64> = c.w.iter().map(|w| w.powi(n as i32 - 1)).collect();
    let h = c.step();
    let fine = simpson_uniform(&f, h);
    let coarse_pts: Vec<f64> = f.iter().step_by(2).copied().collect();
    let err = if (f.len() - 1).is_multiple_of(4) {
        (fine - simpson_uniform(&coarse_pts, 2.0 * h)).abs() / 15.0
    } else {
        0.0
    };
    (fine, err)
}

/// ω_{n−1}∫ w^{n−1} ds by composite Simpson per cell.
pub fn volume(m: &WarpedManifold) -> VolumeEstimate {
    volume_where(m, |_| true)
}

/// Volume restricted to cells whose role satisfies `keep`.
pub fn volume_where(m: &WarpedManifold, keep: impl Fn(Role) -> bool) -> VolumeEstimate {
    let omega = sphere_area(m.bg.n - 1);
    let (mut v, mut e) = (0.0, 0.0);
    for c in m.cells.iter().filter(|c| keep(c.role)) {
        let (a, b) = cell_volume(c, m.bg.n);
        v += a;
        e += b;
    }
    VolumeEstimate {
        value: omega * v,
        error_estimate: omega * e,
    }
}

impl WarpedManifold {
    pub fn length(&self) -> f64 {
        self.cells.iter().map(|c| c.length).sum()
    }

    pub fn straight_run(&self) -> f64 {
        self.cells
            .iter()
            .filter(|c| c.role == Role::Straight)
            .map(|c| c.length)
            .sum()
    }

    /// Flattened (s, w) samples without the duplicated cell endpoints.
    pub fn flat_samples(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        for (ci, c) in self.cells.iter().enumerate() {
            let h = c.step();
            for (i, &w) in c.w.iter().enumerate() {
                if ci > 0 && i == 0 {
                    continue;
                }
                let s = if i == c.w.len() - 1 {
                    c.s_start + c.length
                } else {
                    c.s_start + i as f64 * h
                };
                out.push((s, w));
            }
        }
        out
    }

    pub fn min_interior_w(&self) -> f64 {
        let f = self.flat_samples();
        f[1..f.len() - 1]
            .iter()
            .map(|p| p.1)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Diameter bracket from the profile length L.
///
/// Closed manifolds (two poles): every point lies on a meridian of length L
/// between the poles, so diam = L. With one pole: every point is within L of
/// it, giving 2L. Otherwise two points meet at the narrowest level, giving
/// 2L + π·min w. The lower bound is the distance between the end levels (L),
/// which dominates the straight run.
pub fn diameter_bounds(m: &WarpedManifold) -> (f64, f64) {
    let l = m.length();
    let lower = l.max(m.straight_run());
    let upper = match m.caps {
        (Cap::Pole, Cap::Pole) => l,
        (Cap::Pole, _) | (_, Cap::Pole) => 2.0 * l,
        _ => 2.0 * l + std::f64::consts::PI * m.min_interior_w(),
    };
    (lower, upper)
}

/// Interior local minima of the sampled warp (plateaus count once, at their midpoint).
pub fn neck_areas(m: &WarpedManifold) -> Vec<(f64, f64)> {
    let f = m.flat_samples();
    let omega = sphere_area(m.bg.n - 1);
    let mut out = Vec::new();
    let mut i = 1;
    while i + 1 < f.len() {
        let mut j = i;
        while j + 1 < f.len() && f[j + 1].1 == f[i].1 {
            j += 1;
        }
        if j + 1 < f.len() && f[i - 1].1 > f[i].1 && f[j + 1].1 > f[j].1 {
            let t = 0.5 * (f[i].0 + f[j].0);
            out.push((t, omega * f[i].1.powi(m.bg.n as i32 - 1)));
        }
        i = j + 1;
    }
    out
}

/// |dw/ds| over the last `count` samples before a terminal pole.
pub fn pole_slopes(m: &WarpedManifold, count: usize) -> Vec<f64> {
    let c = m.cells.last().unwrap();
    let d = warp_derivatives(c);
    d.iter().rev().take(count).map(|p| p.0.abs()).collect()
}

/// Collar agreement: on the initial line of a well or half tunnel, the largest
/// deviation of (w, w', w'') from the background warp sn(2δ − σ).
pub fn collar_deviation(m: &WarpedManifold, two_delta: f64) -> Option<(f64, f64, f64)> {
    let c = m.cells.iter().find(|c| c.role == Role::InitialLine)?;
    let d = warp_derivatives(c);
    let h = c.step();
    let bg = &m.bg;
    let mut dev = (0.0f64, 0.0f64, 0.0f64);
    for (i, (&w, (w1, w2))) in c.w.iter().zip(d).enumerate() {
        let r = two_delta - i as f64 * h;
        dev.0 = dev.0.max((w - bg.sn(r)).abs());
        dev.1 = dev.1.max((w1 + bg.cs(r)).abs());
        dev.2 = dev.2.max((w2 + bg.k0 * bg.sn(r)).abs());
    }
    Some(dev)
}

/// Minimum of the derived Gauss curvature over all non-pole samples.
pub fn min_scalar(curve: &ProfileCurve, bg: &BackgroundSpace) -> f64 {
    scalar_curvature_gauss(curve, bg, GaussConvention::Derived)
        .iter()
        .flatten()
        .flatten()
        .fold(f64::INFINITY, |a, &b| a.min(b))
}

/// sin θ/(4r) − k > 0 (or k ≤ 0 with sin θ ≥ 0) on the pieces from s₀ on.
pub fn scalpos_margin(curve: &ProfileCurve) -> (bool, f64) {
    let start = curve
        .pieces
        .iter()
        .position(|p| matches!(p.role, Role::Inductive(_)))
        .unwrap_or(curve.pieces.len());
    let mut ok = true;
    let mut worst = f64::INFINITY;
    for p in &curve.pieces[start..] {
        for s in &p.samples {
            if s.r == 0.0 {
                continue;
            }
            let margin = s.angle.sin() / (4.0 * s.r) - s.k;
            if s.k > 0.0 {
                ok &= margin > 0.0;
                worst = worst.min(margin * s.r);
            } else {
                ok &= s.angle.sin() >= 0.0;
            }
        }
    }
    (ok, worst)
}

/// θ non-decreasing up to the straight run and non-increasing afterwards.
pub fn angle_monotone(curve: &ProfileCurve) -> bool {
    let turn = curve
        .pieces
        .iter()
        .position(|p| p.role == Role::Straight)
        .unwrap_or(curve.pieces.len());
    let rising = curve.pieces[..turn].iter().all(|p| {
        p.samples
            .windows(2)
            .all(|w| w[1].angle.minus(&w[0].angle) >= 0.0)
    });
    let falling = curve.pieces[turn..].iter().all(|p| {
        p.samples
            .windows(2)
            .all(|w| w[1].angle.minus(&w[0].angle) <= 0.0)
    });
    rising && falling
}

/// Pieces of the curve with their realized cells, for per-sample output.
pub fn zip_cells<'a>(
    curve: &'a ProfileCurve,
    m: &'a WarpedManifold,
) -> impl Iterator<Item = (&'a CurvePiece, &'a WarpCell)> {
    curve.pieces.iter().zip(m.cells.iter())
}
