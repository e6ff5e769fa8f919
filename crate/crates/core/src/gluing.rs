//! Closed manifolds assembled from background pieces, wells, half tunnels and cylinders.

use serde::{Deserialize, Serialize};

use crate::build::{build_half_tunnel, build_well, BuildOptions, BuiltProfile, ProfileChecks};
use crate::curve::{
    integrate_profile, ArcLedger, CurvatureProfile, CurvePiece, Extent, Mode, ProfileCurve, Role,
    Sampling, Segment, WellParams,
};
use crate::error::ForgeError;
use crate::space_form::BackgroundSpace;
use crate::warped::{
    cross_oracle, diameter_bounds, end_derivatives, min_scalar, realize, volume, volume_where,
    CrossOracle, WarpCell, WarpedManifold,
};

/// Relative tolerance on the agreement of the two half-tunnel radii.
pub const RADIUS_MATCH_TOL: f64 = 1e-10;
/// Tolerance on the jump of w (relative) and w' (absolute) across an interface.
pub const INTERFACE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PieceKind {
    Background,
    Well,
    HalfTunnel,
    Cylinder,
    MirroredHalfTunnel,
    MirroredBackground,
}

/// One entry of the atlas: where a component sits in the global arclength.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GluedPiece {
    pub kind: PieceKind,
    pub s_offset: f64,
    pub length: f64,
    /// Traversed from its far end (mirrored halves).
    pub reversed: bool,
    /// Half-open range of cells in the realized manifold.
    pub cells: (usize, usize),
    pub r_start: f64,
    pub r_end: f64,
}

/// Construction data kept from a well or half-tunnel build.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildSummary {
    pub params: WellParams,
    pub ledger: Option<ArcLedger>,
    pub checks: ProfileChecks,
    pub alpha: f64,
    pub beta: f64,
}

impl From<&BuiltProfile> for BuildSummary {
    fn from(b: &BuiltProfile) -> Self {
        Self {
            params: b.params,
            ledger: b.raw.ledger.clone(),
            checks: b.checks.clone(),
            alpha: b.alpha,
            beta: b.beta,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GluedManifold {
    pub bg: BackgroundSpace,
    /// Requested parameters; the builds may have shrunk δ₀.
    pub params: WellParams,
    pub curve: ProfileCurve,
    pub manifold: WarpedManifold,
    pub pieces: Vec<GluedPiece>,
    pub builds: Vec<BuildSummary>,
}

/// Jumps of (w, w', w'') across a boundary between two cells.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterfaceJump {
    pub s: f64,
    pub w: f64,
    pub rel_w: f64,
    pub dw: f64,
    pub ddw: f64,
    /// Larger of the two adjacent steps.
    pub h: f64,
}

impl InterfaceJump {
    pub fn c1_ok(&self) -> bool {
        self.rel_w <= INTERFACE_TOL && self.dw <= INTERFACE_TOL
    }

    /// |Δw''| ≤ 10h².
    pub fn c2_ok(&self) -> bool {
        self.ddw <= 10.0 * self.h * self.h
    }
}

/// Jump across the boundary between `a` and the following cell `b`.
pub fn interface_jump(a: &WarpCell, b: &WarpCell) -> InterfaceJump {
    let (wa, wb) = (*a.w.last().unwrap(), b.w[0]);
    let (la, lb) = (end_derivatives(a)[1], end_derivatives(b)[0]);
    let scale = wa.abs().max(wb.abs());
    InterfaceJump {
        s: b.s_start,
        w: (wa - wb).abs(),
        rel_w: if scale > 0.0 {
            (wa - wb).abs() / scale
        } else {
            0.0
        },
        dw: (la.0 - lb.0).abs(),
        ddw: (la.1 - lb.1).abs(),
        h: a.step().max(b.step()),
    }
}

/// Concatenates curves end to end in s and t.
fn concat(parts: Vec<ProfileCurve>, mode: Mode) -> ProfileCurve {
    let sampling = parts[0].sampling;
    let mut pieces: Vec<CurvePiece> = Vec::new();
    let (mut s, mut t) = (0.0, 0.0);
    for part in parts {
        let ds = s - part.s_min();
        let dt = t - part.pieces[0].t_start;
        let part = part.shifted(ds, dt);
        let last = part.pieces.last().unwrap();
        s = last.s_end();
        t = last.t_start + last.last().dt;
        pieces.extend(part.pieces);
    }
    ProfileCurve {
        mode,
        pieces,
        sampling,
    }
}

/// Vertical run of the background from its antipodal pole down to radius `r_end`.
fn background_curve(
    bg: &BackgroundSpace,
    r_end: f64,
    params: WellParams,
    sampling: &Sampling,
) -> Result<ProfileCurve, ForgeError> {
    let top = bg.injectivity_radius();
    if !top.is_finite() {
        return Err(ForgeError::InvalidInput(
            "closed assembly needs a spherical background".into(),
        ));
    }
    let mut prof = CurvatureProfile::background_line(top, r_end, params);
    prof.end_radii.clear();
    prof.segments[0].extent = if r_end == 0.0 {
        Extent::ToAxis
    } else {
        Extent::Length(top - r_end)
    };
    integrate_profile(&prof, sampling)
}

fn atlas(kinds: &[(PieceKind, bool, usize)], curve: &ProfileCurve) -> Vec<GluedPiece> {
    let mut out = Vec::new();
    let mut first = 0;
    for &(kind, reversed, count) in kinds {
        let ps = &curve.pieces[first..first + count];
        out.push(GluedPiece {
            kind,
            s_offset: ps[0].s_start,
            length: ps.iter().map(|p| p.length).sum(),
            reversed,
            cells: (first, first + count),
            r_start: ps[0].first().r,
            r_end: ps.last().unwrap().last().r,
        });
        first += count;
    }
    out
}

fn check_ball(bg: &BackgroundSpace, delta: f64) -> Result<(), ForgeError> {
    let limit = bg.injectivity_radius();
    if !(delta > 0.0) || 2.0 * delta >= limit {
        return Err(ForgeError::InvalidInput(format!(
            "2δ = {} must lie in (0, {limit})",
            2.0 * delta
        )));
    }
    Ok(())
}

/// Replaces B(p, 2δ) in a round background by a well.
pub fn attach_well(
    bg: &BackgroundSpace,
    params: WellParams,
    opts: &BuildOptions,
) -> Result<GluedManifold, ForgeError> {
    check_ball(bg, params.delta)?;
    if !(params.d > 0.0) {
        return Err(ForgeError::InvalidInput("wells need d > 0".into()));
    }
    let well = build_well(params, bg, opts)?;
    let back = background_curve(bg, 2.0 * params.delta, params, &well.sampling)?;
    let kinds = [
        (PieceKind::Background, false, back.pieces.len()),
        (PieceKind::Well, false, well.curve.pieces.len()),
    ];
    let curve = concat(vec![back, well.curve.clone()], Mode::Well);
    let manifold = realize(&curve, bg)?;
    let pieces = atlas(&kinds, &curve);
    Ok(GluedManifold {
        bg: *bg,
        params,
        curve,
        manifold,
        pieces,
        builds: vec![BuildSummary::from(&well)],
    })
}

/// The round background itself, as one vertical run from pole to pole.
pub fn round_sphere(bg: &BackgroundSpace) -> Result<GluedManifold, ForgeError> {
    let params = WellParams {
        delta: 0.25 * bg.injectivity_radius(),
        delta0: 0.125 * bg.injectivity_radius(),
        d: 0.0,
        kappa: bg.scalar(),
        j: f64::INFINITY,
    };
    let sampling = Sampling::for_delta0(params.delta0);
    let top = bg.injectivity_radius();
    // Short cells at both poles keep the warp remainders small there.
    let cap = top / 64.0;
    let mut prof = CurvatureProfile::background_line(top, 0.0, params);
    prof.end_radii.clear();
    let seg = prof.segments[0];
    prof.segments = [
        Extent::Length(cap),
        Extent::Length(top - 2.0 * cap),
        Extent::ToAxis,
    ]
    .into_iter()
    .map(|extent| Segment { extent, ..seg })
    .collect();
    let curve = integrate_profile(&prof, &sampling)?;
    let kinds = [(PieceKind::Background, false, curve.pieces.len())];
    let manifold = realize(&curve, bg)?;
    let pieces = atlas(&kinds, &curve);
    Ok(GluedManifold {
        bg: *bg,
        params,
        curve,
        manifold,
        pieces,
        builds: Vec::new(),
    })
}

/// Tunnel region alone: half tunnel, cylinder of length d, mirrored half tunnel.
/// Kind, mirrored flag and piece count of each part.
type PartKinds = Vec<(PieceKind, bool, usize)>;

fn tunnel_parts(
    h1: &BuiltProfile,
    h2: &BuiltProfile,
    d: f64,
) -> Result<(Vec<ProfileCurve>, PartKinds), ForgeError> {
    let c1 = h1.curve.pieces.last().unwrap().last().r;
    let c2 = h2.curve.pieces.last().unwrap().last().r;
    if (c1 - c2).abs() > RADIUS_MATCH_TOL * c1.max(c2) {
        return Err(ForgeError::RadiusMismatch { c1, c2 });
    }
    let mut parts = vec![h1.curve.clone()];
    let mut kinds = vec![(PieceKind::HalfTunnel, false, h1.curve.pieces.len())];
    if d > 0.0 {
        let cyl = CurvatureProfile::cylinder(c1, d, 0.0, h1.params);
        let cyl = integrate_profile(&cyl, &h1.sampling)?;
        kinds.push((PieceKind::Cylinder, false, cyl.pieces.len()));
        parts.push(cyl);
    }
    let mirror = h2.curve.mirrored(0.0, 0.0);
    kinds.push((PieceKind::MirroredHalfTunnel, true, mirror.pieces.len()));
    parts.push(mirror);
    Ok((parts, kinds))
}

fn build_pair(
    bg: &BackgroundSpace,
    bg2: &BackgroundSpace,
    params: WellParams,
    opts: &BuildOptions,
) -> Result<(BuiltProfile, BuiltProfile), ForgeError> {
    if bg.n != bg2.n || bg.k0 != bg2.k0 {
        return Err(ForgeError::InvalidInput(
            "tunnels join isometric backgrounds only".into(),
        ));
    }
    check_ball(bg, params.delta)?;
    if params.d < 0.0 {
        return Err(ForgeError::InvalidInput("tunnels need d ≥ 0".into()));
    }
    let (a, b) = rayon::join(
        || build_half_tunnel(params, bg, opts),
        || build_half_tunnel(params, bg2, opts),
    );
    Ok((a?, b?))
}

/// Joins two round backgrounds by a tunnel through balls of radius 2δ.
pub fn attach_tunnel(
    bg: &BackgroundSpace,
    bg2: &BackgroundSpace,
    params: WellParams,
    opts: &BuildOptions,
) -> Result<GluedManifold, ForgeError> {
    let (h1, h2) = build_pair(bg, bg2, params, opts)?;
    let (parts, tk) = tunnel_parts(&h1, &h2, params.d)?;
    let back = background_curve(bg, 2.0 * params.delta, params, &h1.sampling)?;
    let back2 = background_curve(bg2, 2.0 * params.delta, params, &h2.sampling)?.mirrored(0.0, 0.0);
    let mut kinds = vec![(PieceKind::Background, false, back.pieces.len())];
    kinds.extend(tk);
    kinds.push((PieceKind::MirroredBackground, true, back2.pieces.len()));
    let mut all = vec![back];
    all.extend(parts);
    all.push(back2);
    let curve = concat(all, Mode::HalfTunnel);
    let manifold = realize(&curve, bg)?;
    let pieces = atlas(&kinds, &curve);
    Ok(GluedManifold {
        bg: *bg,
        params,
        curve,
        manifold,
        pieces,
        builds: vec![BuildSummary::from(&h1), BuildSummary::from(&h2)],
    })
}

/// The tunnel T between two boundary spheres, without the backgrounds.
pub fn tunnel_region(
    bg: &BackgroundSpace,
    params: WellParams,
    opts: &BuildOptions,
) -> Result<GluedManifold, ForgeError> {
    let (h1, h2) = build_pair(bg, bg, params, opts)?;
    let (parts, kinds) = tunnel_parts(&h1, &h2, params.d)?;
    let curve = concat(parts, Mode::HalfTunnel);
    let manifold = realize(&curve, bg)?;
    let pieces = atlas(&kinds, &curve);
    Ok(GluedManifold {
        bg: *bg,
        params,
        curve,
        manifold,
        pieces,
        builds: vec![BuildSummary::from(&h1), BuildSummary::from(&h2)],
    })
}

impl GluedManifold {
    pub fn piece(&self, kind: PieceKind) -> Option<&GluedPiece> {
        self.pieces.iter().find(|p| p.kind == kind)
    }

    pub fn length(&self) -> f64 {
        self.manifold.length()
    }

    /// Volume of each atlas entry, in order.
    pub fn piece_volumes(&self) -> Vec<f64> {
        self.pieces
            .iter()
            .map(|p| {
                let sub = self.sub_manifold(p.cells);
                volume(&sub).value
            })
            .collect()
    }

    /// The cells in `range` as a manifold of their own.
    pub fn sub_manifold(&self, range: (usize, usize)) -> WarpedManifold {
        let cells = self.manifold.cells[range.0..range.1].to_vec();
        let cap = |w: f64| {
            if w == 0.0 {
                crate::warped::Cap::Pole
            } else {
                crate::warped::Cap::Boundary { radius: w }
            }
        };
        let caps = (
            cap(cells[0].w[0]),
            cap(*cells.last().unwrap().w.last().unwrap()),
        );
        WarpedManifold {
            bg: self.bg,
            cells,
            caps,
        }
    }

    /// The part replacing the removed balls: the well, or half tunnels plus cylinder.
    pub fn inserted(&self) -> WarpedManifold {
        let inner: Vec<&GluedPiece> = self
            .pieces
            .iter()
            .filter(|p| {
                !matches!(
                    p.kind,
                    PieceKind::Background | PieceKind::MirroredBackground
                )
            })
            .collect();
        self.sub_manifold((inner[0].cells.0, inner.last().unwrap().cells.1))
    }

    /// Jumps at the boundaries between atlas entries.
    pub fn glued_interfaces(&self) -> Vec<InterfaceJump> {
        self.pieces
            .windows(2)
            .map(|w| {
                let a = &self.manifold.cells[w[0].cells.1 - 1];
                let b = &self.manifold.cells[w[1].cells.0];
                interface_jump(a, b)
            })
            .collect()
    }

    /// Jumps at every cell boundary.
    pub fn all_interfaces(&self) -> Vec<InterfaceJump> {
        all_interfaces(&self.manifold)
    }

    pub fn min_scalar(&self) -> f64 {
        min_scalar(&self.curve, &self.bg)
    }

    pub fn cross_oracle(&self, rel_tol: f64) -> CrossOracle {
        cross_oracle(&self.curve, &self.manifold, rel_tol)
    }

    pub fn volume(&self) -> f64 {
        volume(&self.manifold).value
    }

    pub fn diameter_bounds(&self) -> (f64, f64) {
        diameter_bounds(&self.manifold)
    }

    /// Largest |w(s) − w(D − s)| relative to max w, comparing mirrored cells sample by sample.
    pub fn mirror_defect(&self) -> f64 {
        let cells = &self.manifold.cells;
        let wmax = cells
            .iter()
            .flat_map(|c| c.w.iter())
            .fold(0.0f64, |a, &b| a.max(b));
        let mut worst = 0.0f64;
        for (a, b) in cells.iter().zip(cells.iter().rev()) {
            if a.w.len() != b.w.len() {
                return f64::INFINITY;
            }
            for (x, y) in a.w.iter().zip(b.w.iter().rev()) {
                worst = worst.max((x - y).abs() / wmax);
            }
        }
        worst
    }

    pub fn roles(&self) -> impl Iterator<Item = Role> + '_ {
        self.manifold.cells.iter().map(|c| c.role)
    }

    /// Volume of the cells whose role satisfies `keep`.
    pub fn volume_where(&self, keep: impl Fn(Role) -> bool) -> f64 {
        volume_where(&self.manifold, keep).value
    }
}

/// Jumps at every cell boundary of a manifold.
pub fn all_interfaces(m: &WarpedManifold) -> Vec<InterfaceJump> {
    m.cells
        .windows(2)
        .map(|w| interface_jump(&w[0], &w[1]))
        .collect()
}
