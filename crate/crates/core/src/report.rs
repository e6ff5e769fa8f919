//! Claims, verification reports and their CSV/JSON renderings.

use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::build::CROSS_TOL;
use crate::convergence::{
    decorated_packing, flat_distance_upper_bound, generalized_scalar_ratio, inverse_law_fit,
    log_log_slope, tunnel_flat_input, WR_LADDER,
};
use crate::gluing::{GluedManifold, InterfaceJump};
use crate::profile_io::AssemblyKind;
use crate::sequences::{Family, Member, SequenceSpec};
use crate::sphere_maps::{build_axial_map, certify_lipschitz, certify_vadb, certify_width};
use crate::warped::{
    neck_areas, scalar_curvature_gauss, scalar_curvature_warp, volume, GaussConvention,
};

pub const REPORT_SCHEMA: &str = "scalarforge.report/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Relation {
    Le,
    Lt,
    Ge,
    Gt,
}

impl Relation {
    fn holds(&self, a: f64, b: f64) -> bool {
        match self {
            Self::Le => a <= b,
            Self::Lt => a < b,
            Self::Ge => a >= b,
            Self::Gt => a > b,
        }
    }

    fn symbol(&self) -> &'static str {
        match self {
            Self::Le => "<=",
            Self::Lt => "<",
            Self::Ge => ">=",
            Self::Gt => ">",
        }
    }
}

/// One checked statement: `measured relation threshold`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Claim {
    pub tag: String,
    pub measured: f64,
    pub relation: Relation,
    pub threshold: f64,
    pub pass: bool,
    pub evidence: String,
}

impl Claim {
    pub fn new(
        tag: &str,
        measured: f64,
        relation: Relation,
        threshold: f64,
        evidence: impl Into<String>,
    ) -> Self {
        Self {
            tag: tag.to_string(),
            measured,
            relation,
            threshold,
            pass: relation.holds(measured, threshold),
            evidence: evidence.into(),
        }
    }

    /// A yes/no statement recorded as 1 ≥ 1 or 0 ≥ 1.
    pub fn flag(tag: &str, ok: bool, evidence: impl Into<String>) -> Self {
        Self::new(tag, if ok { 1.0 } else { 0.0 }, Relation::Ge, 1.0, evidence)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Environment {
    pub package: String,
    pub version: String,
    pub os: String,
    pub arch: String,
    pub float: String,
}

impl Environment {
    /// Fields that do not vary between runs of the same build.
    pub fn current() -> Self {
        Self {
            package: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            os: std::env::consts::OS.to_string(),
            arch: std::env::consts::ARCH.to_string(),
            float: "ieee754-binary64".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub kind: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub schema: String,
    pub subject: String,
    pub config_hash: String,
    pub environment: Environment,
    pub claims: Vec<Claim>,
    pub error: Option<ErrorRecord>,
}

impl VerificationReport {
    pub fn new(subject: impl Into<String>, config_hash: impl Into<String>) -> Self {
        Self {
            schema: REPORT_SCHEMA.to_string(),
            subject: subject.into(),
            config_hash: config_hash.into(),
            environment: Environment::current(),
            claims: Vec::new(),
            error: None,
        }
    }

    pub fn all_pass(&self) -> bool {
        self.error.is_none() && self.claims.iter().all(|c| c.pass)
    }

    pub fn failed(&self) -> impl Iterator<Item = &Claim> {
        self.claims.iter().filter(|c| !c.pass)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }

    pub fn to_csv(&self) -> String {
        let mut o = String::from("tag,measured,relation,threshold,pass,evidence\n");
        for c in &self.claims {
            let _ = writeln!(
                o,
                "{},{:.16e},{},{:.16e},{},\"{}\"",
                c.tag,
                c.measured,
                c.relation.symbol(),
                c.threshold,
                c.pass,
                c.evidence.replace('"', "'")
            );
        }
        o
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Per-sample table of a profile: s, t, r, θ, k, w, R (Gauss) and R (warp).
pub fn samples_csv(m: &GluedManifold) -> String {
    let gauss = scalar_curvature_gauss(&m.curve, &m.bg, GaussConvention::Derived);
    let warp = scalar_curvature_warp(&m.manifold);
    let cell = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:.16e}"));
    let mut o = String::from("s,t,r,theta,k,w,r_gauss,r_warp\n");
    for (ci, p) in m.curve.pieces.iter().enumerate() {
        for (i, smp) in p.samples.iter().enumerate() {
            let _ = writeln!(
                o,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{},{}",
                p.s_start + smp.sigma,
                p.t_start + smp.dt,
                smp.r,
                smp.angle.theta,
                smp.k,
                m.manifold.cells[ci].w[i],
                cell(gauss[ci][i]),
                cell(warp[ci][i])
            );
        }
    }
    o
}

fn interface_claims(prefix: &str, jumps: &[InterfaceJump], glued: &[InterfaceJump]) -> Vec<Claim> {
    let rel_w = jumps.iter().map(|j| j.rel_w).fold(0.0, f64::max);
    let dw = jumps.iter().map(|j| j.dw).fold(0.0, f64::max);
    let c2 = glued.iter().filter(|j| !j.c2_ok()).count();
    vec![
        Claim::new(
            &format!("{prefix}.interface-w"),
            rel_w,
            Relation::Le,
            1e-8,
            format!("{} interfaces", jumps.len()),
        ),
        Claim::new(
            &format!("{prefix}.interface-dw"),
            dw,
            Relation::Le,
            1e-8,
            format!("{} interfaces", jumps.len()),
        ),
        Claim::new(
            &format!("{prefix}.glued-c2"),
            c2 as f64,
            Relation::Le,
            0.0,
            format!("{} glued interfaces", glued.len()),
        ),
    ]
}

/// Claims common to every assembled profile.
pub fn profile_claims(prefix: &str, m: &GluedManifold) -> Vec<Claim> {
    let cross = m.cross_oracle(CROSS_TOL);
    let mut out = vec![Claim::new(
        &format!("{prefix}.cross-oracle"),
        cross.max_diff_derived,
        Relation::Le,
        cross.tolerance,
        format!("max|R| = {:.6e}", cross.max_abs_r),
    )];
    if m.params.j.is_finite() {
        out.push(Claim::new(
            &format!("{prefix}.scalar-floor"),
            m.min_scalar(),
            Relation::Ge,
            m.params.floor(),
            format!("{} samples", m.curve.sample_count()),
        ));
    }
    out.extend(interface_claims(
        prefix,
        &m.all_interfaces(),
        &m.glued_interfaces(),
    ));
    out
}

fn tunnel_claims(m: &GluedManifold) -> Vec<Claim> {
    let mut out = profile_claims("tunnel", m);
    let bg = m.bg;
    let total = bg.total_volume().unwrap_or(f64::NAN);
    let two_delta = 2.0 * m.params.delta;
    let ball = bg.ball_volume(two_delta);
    let gap = m.volume() - 2.0 * total;
    let inserted = volume(&m.inserted()).value;
    out.push(Claim::new(
        "tunnel.volume-gap-lower",
        gap,
        Relation::Ge,
        -2.0 * ball,
        "vol(M) - 2 vol(S)",
    ));
    out.push(Claim::new(
        "tunnel.volume-gap-upper",
        gap,
        Relation::Le,
        inserted,
        "vol(M) - 2 vol(S) against vol(T)",
    ));
    let diam = m.diameter_bounds().1;
    out.push(Claim::new(
        "tunnel.diameter",
        diam,
        Relation::Le,
        4.0 * bg.injectivity_radius() + m.params.d,
        "pole-to-pole length",
    ));
    out.push(Claim::new(
        "tunnel.mirror-defect",
        m.mirror_defect(),
        Relation::Le,
        1e-12,
        "w(s) against w(D - s)",
    ));
    match build_axial_map(m) {
        Ok(map) => {
            let cert = certify_lipschitz(&map, m);
            out.push(Claim::new(
                "tunnel.map-slope",
                cert.max_slope_sq,
                Relation::Le,
                1.0 + crate::sphere_maps::CERT_SLACK,
                format!("{} samples, epsilon = {:e}", cert.samples, map.epsilon),
            ));
            out.push(Claim::flag(
                "tunnel.map-certificate",
                cert.passes(),
                cert.violation
                    .map_or("none".into(), |v| format!("{:?} at t = {:e}", v.check, v.t)),
            ));
            if bg.n == 3 {
                let w = certify_width(&cert, m).unwrap_or(0.0);
                out.push(Claim::new(
                    "tunnel.width",
                    w,
                    Relation::Ge,
                    4.0 * PI,
                    "4 pi emitted",
                ));
            }
        }
        Err(e) => out.push(Claim::flag("tunnel.map-certificate", false, e.to_string())),
    }
    if let Ok(b) = tunnel_flat_input(m).and_then(|i| flat_distance_upper_bound(&i)) {
        out.push(Claim::flag(
            "tunnel.flat-bound-finite",
            b.bound.is_finite(),
            format!("bound = {:e}, h = {:e}", b.bound, b.h),
        ));
    }
    out
}

/// Claims for a single assembled profile.
pub fn assembly_claims(kind: AssemblyKind, m: &GluedManifold) -> Vec<Claim> {
    match kind {
        AssemblyKind::Tunnel => tunnel_claims(m),
        AssemblyKind::Well => {
            let mut out = profile_claims("well", m);
            if let Some(b) = m.builds.first() {
                let (w, dw, _) = b.checks.collar;
                out.push(Claim::new(
                    "well.collar",
                    w.max(dw),
                    Relation::Le,
                    1e-8,
                    "w and w' against the background",
                ));
                if let Some(p) = b.checks.pole_slope_defect {
                    out.push(Claim::new(
                        "well.pole-closure",
                        p,
                        Relation::Le,
                        1e-4,
                        "| |w'| - 1 | near the tip",
                    ));
                }
            }
            out
        }
        AssemblyKind::Sphere => {
            let mut out = profile_claims("sphere", m);
            let total = m.bg.total_volume().unwrap_or(f64::NAN);
            out.push(Claim::new(
                "sphere.volume",
                (m.volume() - total).abs(),
                Relation::Le,
                1e-9 * total,
                "against the closed form",
            ));
            let ok = build_axial_map(m)
                .map(|map| certify_lipschitz(&map, m).passes())
                .unwrap_or(false);
            out.push(Claim::flag("sphere.identity-map", ok, "f(t) = pi - t"));
            out
        }
    }
}

/// Claims recorded for member j of a family.
pub fn member_claims(spec: &SequenceSpec, j: u32, m: &Member) -> Vec<Claim> {
    let jf = j as f64;
    match (spec.family, m) {
        (Family::TwoSphereTunnel, Member::Glued(g)) => tunnel_claims(g),
        (Family::ManyWells, Member::Decorated(d)) => {
            let floor = spec.kappa - 1.0 / jf;
            let vadb = certify_vadb(d);
            vec![
                Claim::new(
                    "wells.scalar-floor",
                    d.min_scalar(),
                    Relation::Ge,
                    floor,
                    "kappa - 1/j",
                ),
                Claim::flag(
                    "wells.vadb-domination",
                    vadb.violation.is_none(),
                    format!("{} samples, radial max {:e}", vadb.samples, vadb.radial_max),
                ),
                Claim::new(
                    "wells.volume-gap",
                    vadb.volume_gap,
                    Relation::Le,
                    vadb.volume_bound,
                    "C j (delta^n + d delta^(n-1))",
                ),
                Claim::new(
                    "wells.packing",
                    decorated_packing(d, 0.25) as f64,
                    Relation::Ge,
                    jf,
                    "epsilon = 1/4",
                ),
                Claim::new(
                    "wells.untouched-collars",
                    d.untouched_collars() as f64,
                    Relation::Ge,
                    jf,
                    "collar within 1e-8",
                ),
            ]
        }
        (Family::WellCascade, Member::Decorated(d)) => {
            let margin = d
                .inserts
                .iter()
                .enumerate()
                .map(|(i, w)| {
                    w.min_scalar() - 2.0 * spec.kappa * (1.0 - 1.0 / (10.0 * (i + 1) as f64))
                })
                .fold(f64::INFINITY, f64::min);
            let mut tip = f64::INFINITY;
            for a in 0..d.tip_count() {
                for b in a + 1..d.tip_count() {
                    tip = tip.min(d.tip_distance_lower(a, b));
                }
            }
            let reach = d
                .inserts
                .iter()
                .map(|w| w.length())
                .fold(f64::INFINITY, f64::min);
            let c = d.volume_constant();
            vec![
                Claim::new(
                    "cascade.well-floors",
                    margin,
                    Relation::Gt,
                    0.0,
                    "min_i R_i - 2 kappa (1 - 1/(10 i))",
                ),
                Claim::new(
                    "cascade.scalar-above-kappa",
                    d.min_scalar(),
                    Relation::Gt,
                    spec.kappa,
                    "all samples",
                ),
                Claim::new(
                    "cascade.tip-separation",
                    tip,
                    Relation::Gt,
                    2.0,
                    format!("{} tips", d.tip_count()),
                ),
                Claim::new(
                    "cascade.unit-ball-depth",
                    reach,
                    Relation::Ge,
                    1.0,
                    "shortest well length",
                ),
                Claim::new(
                    "cascade.volume",
                    d.volume(),
                    Relation::Le,
                    d.base_volume() + 11.0 * c,
                    format!("C = {c:.6e}"),
                ),
                Claim::new(
                    "cascade.diameter",
                    d.diameter_upper(),
                    Relation::Le,
                    25.0 * d.diameter_constant(),
                    format!("C = {:.6e}", d.diameter_constant()),
                ),
            ]
        }
        (Family::Sewn, Member::Sewn(s)) => {
            let mut out = vec![
                Claim::new(
                    "sewn.added-volume",
                    s.schedule.added_volume,
                    Relation::Le,
                    s.epsilon,
                    "tunnels add at most epsilon",
                ),
                Claim::new(
                    "sewn.scalar-floor",
                    s.min_scalar(),
                    Relation::Ge,
                    spec.kappa - s.epsilon,
                    "kappa - epsilon",
                ),
                Claim::new(
                    "sewn.ball-spacing",
                    4.0 * s.schedule.delta,
                    Relation::Lt,
                    s.schedule.spacing,
                    "2 delta balls disjoint",
                ),
            ];
            let ladder: Vec<f64> = WR_LADDER
                .iter()
                .filter_map(|&r| generalized_scalar_ratio(s.bg.n, s.pulled_dim, s.bg.k0, r).ok())
                .collect();
            let decreasing = ladder.windows(2).all(|w| w[1] < w[0]);
            out.push(Claim::flag(
                "sewn.wr-decreasing",
                decreasing,
                format!("{ladder:?}"),
            ));
            out
        }
        _ => vec![Claim::flag(
            "plumbing.member-kind",
            false,
            "member does not match its family",
        )],
    }
}

/// Claims about a whole sequence, evaluated on the members that built.
pub fn sequence_claims(spec: &SequenceSpec, members: &[(u32, &Member)]) -> Vec<Claim> {
    let mut out = Vec::new();
    match spec.family {
        Family::TwoSphereTunnel => {
            let mut bounds = Vec::new();
            let mut necks = Vec::new();
            for (j, m) in members {
                if let Member::Glued(g) = m {
                    if let Ok(b) = tunnel_flat_input(g).and_then(|i| flat_distance_upper_bound(&i))
                    {
                        bounds.push((*j as f64, b.bound));
                    }
                    if let Some(a) = neck_areas(&g.manifold).iter().map(|n| n.1).reduce(f64::min) {
                        necks.push((1.0 / *j as f64, a));
                    }
                }
            }
            if bounds.len() >= 2 {
                let decreasing = bounds.windows(2).all(|w| w[1].1 < w[0].1);
                out.push(Claim::flag(
                    "tunnels.flat-bound-decreasing",
                    decreasing,
                    format!("{} members", bounds.len()),
                ));
                let c = inverse_law_fit(&bounds);
                let worst = bounds.iter().map(|&(j, b)| b / (c / j)).fold(0.0, f64::max);
                out.push(Claim::new(
                    "tunnels.flat-bound-vs-inverse-law",
                    worst,
                    Relation::Le,
                    2.0,
                    format!("c = {c:.6e}"),
                ));
            }
            if necks.len() >= 2 {
                let e = log_log_slope(&necks);
                out.push(Claim::new(
                    "tunnels.neck-area-exponent",
                    e,
                    Relation::Ge,
                    1.5,
                    "fit in 1/j",
                ));
            }
        }
        Family::ManyWells => {
            let counts: Vec<usize> = members
                .iter()
                .filter_map(|(_, m)| match m {
                    Member::Decorated(d) => Some(decorated_packing(d, 0.25)),
                    _ => None,
                })
                .collect();
            out.push(Claim::flag(
                "wells.packing-nondecreasing",
                counts.windows(2).all(|w| w[1] >= w[0]),
                format!("{counts:?}"),
            ));
        }
        Family::WellCascade | Family::Sewn => {}
    }
    out
}
