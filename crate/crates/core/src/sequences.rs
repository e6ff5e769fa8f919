//! Example sequences: two spheres joined by a shrinking tunnel, many wells,
//! a cascade of deepening wells, and a round space form sewn along a circle.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::build::{build_well, BuildOptions, BuiltProfile};
use crate::curve::{ProfileCurve, WellParams};
use crate::error::ForgeError;
use crate::gluing::{attach_tunnel, tunnel_region, BuildSummary, GluedManifold};
use crate::space_form::BackgroundSpace;
use crate::warped::{collar_deviation, diameter_bounds, min_scalar, volume, WarpedManifold};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    TwoSphereTunnel,
    ManyWells,
    WellCascade,
    Sewn,
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::TwoSphereTunnel => "two-sphere-tunnel",
            Family::ManyWells => "many-wells",
            Family::WellCascade => "well-cascade",
            Family::Sewn => "sewn",
        }
    }
}

impl std::str::FromStr for Family {
    type Err = ForgeError;
    fn from_str(s: &str) -> Result<Self, ForgeError> {
        match s {
            "two-sphere-tunnel" => Ok(Family::TwoSphereTunnel),
            "many-wells" => Ok(Family::ManyWells),
            "well-cascade" => Ok(Family::WellCascade),
            "sewn" => Ok(Family::Sewn),
            other => Err(ForgeError::InvalidInput(format!("unknown family {other}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceSpec {
    pub family: Family,
    pub n: usize,
    pub kappa: f64,
    pub j_list: Vec<u32>,
    /// Overrides the family law for δ_j (must still satisfy it).
    pub delta: Option<f64>,
    /// Overrides the family depth d (two-sphere-tunnel and many-wells).
    pub d: Option<f64>,
    pub opts: BuildOptions,
}

impl SequenceSpec {
    pub fn new(family: Family, n: usize, kappa: f64, j_list: Vec<u32>) -> Self {
        Self {
            family,
            n,
            kappa,
            j_list,
            delta: None,
            d: None,
            opts: BuildOptions::default(),
        }
    }

    /// The space form every member is built on.
    pub fn base(&self) -> Result<BackgroundSpace, ForgeError> {
        let nn = (self.n * (self.n - 1)) as f64;
        let k0 = match self.family {
            Family::WellCascade => 2.0 * self.kappa / nn,
            _ => self.kappa / nn,
        };
        if !(k0 > 0.0) {
            return Err(ForgeError::InvalidInput("families need κ > 0".into()));
        }
        BackgroundSpace::new(self.n, k0)
    }

    fn validate(&self, j: u32) -> Result<(), ForgeError> {
        if self.n < 3 {
            return Err(ForgeError::InvalidInput(
                "dimension must be at least 3".into(),
            ));
        }
        let jf = j as f64;
        let bad = |msg: String| Err(ForgeError::InvalidInput(msg));
        match self.family {
            Family::TwoSphereTunnel => {
                if j < 10 {
                    return bad(format!("two-sphere-tunnel needs j ≥ 10, got {j}"));
                }
            }
            Family::ManyWells => {
                if j < 1 {
                    return bad("many-wells needs j ≥ 1".into());
                }
                if let Some(dl) = self.delta {
                    if !(dl > 0.0 && dl < 1.0 / jf) {
                        return bad(format!("many-wells needs 0 < δ < 1/j, got {dl}"));
                    }
                }
            }
            Family::WellCascade => {
                if j < 1 {
                    return bad("well-cascade needs j ≥ 1".into());
                }
            }
            Family::Sewn => {
                if j < 2 {
                    return bad("sewn needs j ≥ 2".into());
                }
            }
        }
        Ok(())
    }
}

/// Cascade ball radius δ_i = 2^{−(i+1)} < 2^{−i}.
pub fn cascade_delta(i: u32) -> f64 {
    0.5f64.powi(i as i32 + 1)
}

/// Cascade depth d_i = 10 − 8/i, strictly increasing in [2, 10).
pub fn cascade_depth(i: u32) -> f64 {
    10.0 - 8.0 / i as f64
}

/// A well profile that may be inserted at several sites.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WellInsert {
    pub summary: BuildSummary,
    pub curve: ProfileCurve,
    pub manifold: WarpedManifold,
}

impl From<BuiltProfile> for WellInsert {
    fn from(b: BuiltProfile) -> Self {
        Self {
            summary: BuildSummary::from(&b),
            curve: b.curve,
            manifold: b.manifold,
        }
    }
}

impl WellInsert {
    pub fn delta(&self) -> f64 {
        self.summary.params.delta
    }

    pub fn depth(&self) -> f64 {
        self.summary.params.d
    }

    /// Distance from the tip to the boundary sphere.
    pub fn length(&self) -> f64 {
        self.manifold.length()
    }

    pub fn volume(&self) -> f64 {
        volume(&self.manifold).value
    }

    pub fn min_scalar(&self) -> f64 {
        min_scalar(&self.curve, &self.manifold.bg)
    }

    pub fn diameter_upper(&self) -> f64 {
        diameter_bounds(&self.manifold).1
    }

    pub fn collar_ok(&self) -> bool {
        collar_deviation(&self.manifold, 2.0 * self.delta())
            .is_some_and(|(a, b, _)| a <= 1e-8 && b <= 1e-8)
    }
}

/// A well placed at arclength `position` along a fixed great circle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WellSite {
    pub position: f64,
    pub insert: usize,
}

/// A round space form with wells replacing disjoint balls centred on a great circle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecoratedSphere {
    pub bg: BackgroundSpace,
    pub inserts: Vec<WellInsert>,
    pub sites: Vec<WellSite>,
}

impl DecoratedSphere {
    fn circle(&self) -> f64 {
        2.0 * self.bg.injectivity_radius()
    }

    fn insert(&self, site: usize) -> &WellInsert {
        &self.inserts[self.sites[site].insert]
    }

    /// Distance between two site centres in the base.
    pub fn base_distance(&self, a: usize, b: usize) -> f64 {
        let d = (self.sites[a].position - self.sites[b].position).abs() % self.circle();
        d.min(self.circle() - d)
    }

    /// Smallest gap between the 2δ-balls of distinct sites (negative if two overlap).
    pub fn min_ball_gap(&self) -> f64 {
        let mut gap = f64::INFINITY;
        for a in 0..self.sites.len() {
            for b in a + 1..self.sites.len() {
                let reach = 2.0 * (self.insert(a).delta() + self.insert(b).delta());
                gap = gap.min(self.base_distance(a, b) - reach);
            }
        }
        gap
    }

    pub fn removed_volume(&self) -> f64 {
        (0..self.sites.len())
            .map(|i| self.bg.ball_volume(2.0 * self.insert(i).delta()))
            .sum()
    }

    pub fn added_volume(&self) -> f64 {
        (0..self.sites.len()).map(|i| self.insert(i).volume()).sum()
    }

    pub fn base_volume(&self) -> f64 {
        self.bg.total_volume().unwrap()
    }

    pub fn volume(&self) -> f64 {
        self.base_volume() - self.removed_volume() + self.added_volume()
    }

    pub fn min_scalar(&self) -> f64 {
        self.inserts
            .iter()
            .map(WellInsert::min_scalar)
            .fold(self.bg.scalar(), f64::min)
    }

    /// Lower bound on the distance between the tips of wells a and b: each path
    /// leaves both wells through their boundary spheres, and outside the wells
    /// the metric dominates the base.
    pub fn tip_distance_lower(&self, a: usize, b: usize) -> f64 {
        let (wa, wb) = (self.insert(a), self.insert(b));
        let gap = self.base_distance(a, b) - 2.0 * (wa.delta() + wb.delta());
        wa.length() + wb.length() + gap.max(0.0)
    }

    /// Diameter bound: reach the boundary sphere of a well (at most L), cross
    /// the base (half the circle) with a detour of at most (π − 2)·2δ around
    /// each removed ball.
    pub fn diameter_upper(&self) -> f64 {
        let reach = self
            .inserts
            .iter()
            .map(WellInsert::length)
            .fold(0.0, f64::max);
        let detours: f64 = (0..self.sites.len())
            .map(|i| (PI - 2.0) * 2.0 * self.insert(i).delta())
            .sum();
        2.0 * reach + self.bg.injectivity_radius() + detours
    }

    /// Wells whose collar matches the base and whose balls are disjoint from all others.
    pub fn untouched_collars(&self) -> usize {
        (0..self.sites.len())
            .filter(|&a| {
                self.insert(a).collar_ok()
                    && (0..self.sites.len()).all(|b| {
                        b == a
                            || self.base_distance(a, b)
                                > 2.0 * (self.insert(a).delta() + self.insert(b).delta())
                    })
            })
            .count()
    }

    /// max over wells of diam(W)/(δ + d).
    pub fn diameter_constant(&self) -> f64 {
        self.inserts
            .iter()
            .map(|w| w.diameter_upper() / (w.delta() + w.depth()))
            .fold(0.0, f64::max)
    }

    /// max over wells of vol(W)/(δⁿ + dδ^{n−1}).
    pub fn volume_constant(&self) -> f64 {
        let n = self.bg.n as i32;
        self.inserts
            .iter()
            .map(|w| w.volume() / (w.delta().powi(n) + w.depth() * w.delta().powi(n - 1)))
            .fold(0.0, f64::max)
    }

    pub fn tip_count(&self) -> usize {
        self.sites.len()
    }
}

/// Tunnel pairing for sewing: consecutive entries of `positions` are joined.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SewingSchedule {
    pub delta: f64,
    pub count: usize,
    /// Number of regions the curve is cut into; every pair of regions gets one tunnel.
    pub nbar: usize,
    /// Arclength positions, ordered so that (2i, 2i+1) are tunnel ends.
    pub positions: Vec<f64>,
    pub spacing: f64,
    pub tunnel_volume: f64,
    pub tunnel_length: f64,
    pub added_volume: f64,
    pub removed_volume: f64,
}

/// Declared constant in diam(A′_r) ≤ c·r.
pub const SEWN_DIAMETER_CONSTANT: f64 = 6.0;

/// Chooses δ and an even point count n = n̄(n̄ − 1) along a closed curve of length
/// `curve_length` so that the 2δ-balls are disjoint, the tunnels add at most ε
/// in volume, and every region of length ℓ/n̄ ≤ r is joined to every other.
pub fn sewing_schedule(
    bg: &BackgroundSpace,
    curve_length: f64,
    kappa: f64,
    r: f64,
    epsilon: f64,
    opts: &BuildOptions,
) -> Result<(SewingSchedule, GluedManifold), ForgeError> {
    let a = 0.5 * bg.injectivity_radius();
    if !(r > 0.0 && r < a) {
        return Err(ForgeError::ScheduleInfeasible(format!(
            "r = {r} outside (0, {a})"
        )));
    }
    if !(epsilon > 0.0) || !(curve_length > 0.0) {
        return Err(ForgeError::ScheduleInfeasible(
            "ε and the curve length must be positive".into(),
        ));
    }
    let mut nbar = ((curve_length / r).ceil() as usize).max(2);
    while nbar <= 1 << 12 {
        let count = nbar * (nbar - 1);
        let spacing = curve_length / count as f64;
        let delta = spacing / 5.0;
        if delta >= r {
            nbar += 1;
            continue;
        }
        let params = WellParams {
            delta,
            delta0: delta / 2.0,
            d: 0.0,
            kappa,
            j: 1.0 / epsilon,
        };
        let tunnel = tunnel_region(bg, params, opts)?;
        let tunnel_volume = tunnel.volume();
        let added = (count / 2) as f64 * tunnel_volume;
        if added <= epsilon {
            let schedule = SewingSchedule {
                delta,
                count,
                nbar,
                positions: pair_positions(nbar, curve_length),
                spacing,
                tunnel_volume,
                tunnel_length: tunnel.length(),
                added_volume: added,
                removed_volume: count as f64 * bg.ball_volume(2.0 * delta),
            };
            return Ok((schedule, tunnel));
        }
        nbar *= 2;
    }
    Err(ForgeError::ScheduleInfeasible(format!(
        "no schedule adds at most ε = {epsilon}"
    )))
}

/// Region a holds n̄ − 1 equally spaced points, one per other region; the
/// output lists the two ends of each region pair next to each other.
fn pair_positions(nbar: usize, length: f64) -> Vec<f64> {
    let count = nbar * (nbar - 1);
    let spacing = length / count as f64;
    let slot = |region: usize, other: usize| {
        let k = if other < region { other } else { other - 1 };
        (region * (nbar - 1) + k) as f64 * spacing
    };
    let mut out = Vec::with_capacity(count);
    for a in 0..nbar {
        for b in a + 1..nbar {
            out.push(slot(a, b));
            out.push(slot(b, a));
        }
    }
    out
}

/// A space form sewn along a great circle; the limit pulls the circle to a point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SewnComplex {
    pub bg: BackgroundSpace,
    pub curve_length: f64,
    pub r: f64,
    pub epsilon: f64,
    pub schedule: SewingSchedule,
    /// One representative tunnel; all tunnels are congruent.
    pub tunnel: GluedManifold,
    /// Dimension of the pulled submanifold.
    pub pulled_dim: usize,
}

impl SewnComplex {
    pub fn base_volume(&self) -> f64 {
        self.bg.total_volume().unwrap()
    }

    pub fn volume(&self) -> f64 {
        self.base_volume() - self.schedule.removed_volume + self.schedule.added_volume
    }

    /// A point of the sewn tube reaches its region's tunnel mouth within r plus
    /// the region length plus the detours around the region's balls.
    pub fn diameter_upper(&self) -> f64 {
        let s = &self.schedule;
        let region = self.curve_length / s.nbar as f64;
        let detours = (s.nbar - 1) as f64 * (PI - 2.0) * 2.0 * s.delta;
        2.0 * (self.r + region + detours) + s.tunnel_length
    }

    pub fn min_scalar(&self) -> f64 {
        self.tunnel.min_scalar().min(self.bg.scalar())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Member {
    Glued(GluedManifold),
    Decorated(DecoratedSphere),
    Sewn(SewnComplex),
}

/// Parameters of the two-sphere-tunnel member j.
pub fn tunnel_member_params(spec: &SequenceSpec, j: u32) -> WellParams {
    let delta = spec.delta.unwrap_or(2.0 / j as f64);
    WellParams {
        delta,
        delta0: delta / 2.0,
        d: spec.d.unwrap_or(30.0),
        kappa: spec.kappa,
        j: j as f64,
    }
}

/// The j-th member of the family.
pub fn generate(spec: &SequenceSpec, j: u32) -> Result<Member, ForgeError> {
    spec.validate(j)?;
    let bg = spec.base()?;
    let jf = j as f64;
    match spec.family {
        Family::TwoSphereTunnel => {
            let p = tunnel_member_params(spec, j);
            Ok(Member::Glued(attach_tunnel(&bg, &bg, p, &spec.opts)?))
        }
        Family::ManyWells => {
            let delta = spec.delta.unwrap_or(0.5 / jf);
            let p = WellParams {
                delta,
                delta0: delta / 2.0,
                d: spec.d.unwrap_or(0.5),
                kappa: spec.kappa,
                j: jf,
            };
            let insert = WellInsert::from(build_well(p, &bg, &spec.opts)?);
            let circle = 2.0 * bg.injectivity_radius();
            let sites = (0..j)
                .map(|i| WellSite {
                    position: circle * i as f64 / jf,
                    insert: 0,
                })
                .collect();
            let m = DecoratedSphere {
                bg,
                inserts: vec![insert],
                sites,
            };
            if j > 1 && !(m.min_ball_gap() > 0.0) {
                return Err(ForgeError::InvalidInput("well balls overlap".into()));
            }
            Ok(Member::Decorated(m))
        }
        Family::WellCascade => {
            let half = bg.injectivity_radius();
            let built: Result<Vec<WellInsert>, ForgeError> = (1..=j)
                .into_par_iter()
                .map(|i| {
                    let delta = cascade_delta(i);
                    let p = WellParams {
                        delta,
                        delta0: delta / 2.0,
                        d: cascade_depth(i),
                        kappa: 2.0 * spec.kappa,
                        // 2κ − 1/j_w = 2κ(1 − 1/(10i)).
                        j: 5.0 * i as f64 / spec.kappa,
                    };
                    build_well(p, &bg, &spec.opts).map(WellInsert::from)
                })
                .collect();
            let inserts = built?;
            let sites = (1..=j)
                .map(|i| WellSite {
                    position: half * (1.0 - 0.5f64.powi(i as i32)),
                    insert: (i - 1) as usize,
                })
                .collect();
            Ok(Member::Decorated(DecoratedSphere { bg, inserts, sites }))
        }
        Family::Sewn => {
            let curve_length = 2.0 * bg.injectivity_radius();
            let (r, epsilon) = (1.0 / jf, 1.0 / jf);
            let (schedule, tunnel) =
                sewing_schedule(&bg, curve_length, spec.kappa, r, epsilon, &spec.opts)?;
            Ok(Member::Sewn(SewnComplex {
                bg,
                curve_length,
                r,
                epsilon,
                schedule,
                tunnel,
                pulled_dim: 1,
            }))
        }
    }
}

/// Generates every member of `spec.j_list` in parallel, in list order.
pub fn generate_all(spec: &SequenceSpec) -> Vec<(u32, Result<Member, ForgeError>)> {
    spec.j_list
        .par_iter()
        .map(|&j| (j, generate(spec, j)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pair_positions_cover_every_region_pair() {
        let p = pair_positions(4, 12.0);
        assert_eq!(p.len(), 12);
        let mut sorted = p.clone();
        sorted.sort_by(f64::total_cmp);
        for (i, x) in sorted.iter().enumerate() {
            assert!((x - i as f64).abs() < 1e-12);
        }
        let region = |x: f64| (x / 3.0).floor() as usize;
        let mut pairs: Vec<(usize, usize)> =
            p.chunks(2).map(|c| (region(c[0]), region(c[1]))).collect();
        pairs.sort();
        assert_eq!(pairs, vec![(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]);
    }

    #[test]
    fn cascade_laws() {
        for i in 1..20 {
            assert!(cascade_delta(i) < 0.5f64.powi(i as i32));
            assert!((2.0..=10.0).contains(&cascade_depth(i)));
            assert!(cascade_depth(i + 1) > cascade_depth(i));
        }
    }

    #[test]
    fn many_wells_member() {
        let spec = SequenceSpec::new(Family::ManyWells, 3, 6.0, vec![4]);
        let Member::Decorated(m) = generate(&spec, 4).unwrap() else {
            panic!()
        };
        assert_eq!(m.tip_count(), 4);
        assert_eq!(m.untouched_collars(), 4);
        assert!(m.min_ball_gap() > 0.0);
        assert!(m.min_scalar() >= 6.0 - 0.25);
    }

    #[test]
    fn two_sphere_rejects_small_j() {
        let spec = SequenceSpec::new(Family::TwoSphereTunnel, 3, 6.0, vec![5]);
        assert!(matches!(
            generate(&spec, 5),
            Err(ForgeError::InvalidInput(_))
        ));
    }

    #[test]
    fn sewing_schedule_is_disjoint_and_cheap() {
        let bg = BackgroundSpace::unit_sphere(3);
        let (s, t) =
            sewing_schedule(&bg, 2.0 * PI, 6.0, 0.5, 1e-2, &BuildOptions::default()).unwrap();
        assert_eq!(s.count % 2, 0);
        assert_eq!(s.count, s.nbar * (s.nbar - 1));
        assert!(s.spacing > 4.0 * s.delta);
        assert!(s.added_volume <= 1e-2);
        assert!(t.min_scalar() >= 6.0 - 1e-2);
        assert!(sewing_schedule(&bg, 2.0 * PI, 6.0, 2.0, 1e-2, &BuildOptions::default()).is_err());
    }
}
