//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::f64::consts::PI;
use std::time::Instant;

use scalarforge::build::{
    build_half_tunnel, build_well, well_params, BuildOptions, BuiltProfile, CROSS_TOL,
};
use scalarforge::convergence::{
    generalized_scalar_ratio, packing_count, smooth_point_ratio, tube_exponent, tube_volume,
    WR_LADDER,
};
use scalarforge::curve::{ArcLedger, Role};
use scalarforge::gluing::{round_sphere, GluedManifold};
use scalarforge::profile_io::{AssemblyKind, ProfileFile};
use scalarforge::report::{
    assembly_claims, member_claims, sequence_claims, sha256_hex, Claim, VerificationReport,
};
use scalarforge::sequences::{generate, generate_all, Family, Member, SequenceSpec};
use scalarforge::smoothing::{measure_deviation, mollify_lipschitz, LinearCorner, MollifierSpec};
use scalarforge::space_form::BackgroundSpace;
use scalarforge::sphere_maps::{
    build_axial_map, build_axial_map_with_slope, certify_lipschitz, certify_width, CERT_SAMPLES,
};
use scalarforge::warped::{
    diameter_bounds, scalar_curvature_gauss, scalar_curvature_warp, volume, CrossOracle,
    GaussConvention,
};

struct Outcome {
    pass: bool,
    lines: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Self {
            pass: true,
            lines: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, what: impl Into<String>) {
        let what = what.into();
        if !ok {
            self.pass = false;
            self.lines.push(format!("  fail: {what}"));
        } else {
            self.lines.push(format!("  ok:   {what}"));
        }
    }

    fn claims<'a>(&mut self, label: &str, claims: impl IntoIterator<Item = &'a Claim>) {
        let mut n = 0;
        for c in claims {
            n += 1;
            if !c.pass {
                self.check(
                    false,
                    format!(
                        "{label} {} measured {:e} against {:e} ({})",
                        c.tag, c.measured, c.threshold, c.evidence
                    ),
                );
            }
        }
        self.lines.push(format!("  {label}: {n} claims evaluated"));
    }
}

/// Everything built once and shared between criteria.
struct Corpus {
    wells: Vec<(f64, BuiltProfile, f64)>,
    half_tunnel: BuiltProfile,
    sphere: GluedManifold,
    tunnels: Vec<(u32, GluedManifold)>,
    tunnel_spec: SequenceSpec,
    many: Vec<(u32, Member)>,
    many_spec: SequenceSpec,
    cascade: Vec<(u32, Member)>,
    cascade_spec: SequenceSpec,
    sewn: Vec<(u32, Member)>,
    sewn_spec: SequenceSpec,
}

fn members(spec: &SequenceSpec) -> Vec<(u32, Member)> {
    generate_all(spec)
        .into_iter()
        .map(|(j, m)| {
            (
                j,
                m.unwrap_or_else(|e| panic!("{} member {j}: {e}", spec.family.name())),
            )
        })
        .collect()
}

fn corpus() -> Corpus {
    let bg = BackgroundSpace::unit_sphere(3);
    let wells = [10.0, 20.0, 40.0]
        .into_iter()
        .map(|j| {
            let t = Instant::now();
            let b = build_well(
                well_params(1.0 / j, 0.5, 6.0, j),
                &bg,
                &BuildOptions::default(),
            )
            .expect("well builds");
            (j, b, t.elapsed().as_secs_f64())
        })
        .collect();
    let half_tunnel = build_half_tunnel(
        well_params(0.2, 30.0, 6.0, 10.0),
        &bg,
        &BuildOptions::default(),
    )
    .expect("half tunnel");
    let tunnel_spec = SequenceSpec::new(Family::TwoSphereTunnel, 3, 6.0, (10..=64).collect());
    let tunnels = members(&tunnel_spec)
        .into_iter()
        .map(|(j, m)| match m {
            Member::Glued(g) => (j, g),
            _ => panic!("tunnel member {j} is not glued"),
        })
        .collect();
    let many_spec = SequenceSpec::new(Family::ManyWells, 3, 6.0, vec![2, 4, 8, 16]);
    let cascade_spec = SequenceSpec::new(Family::WellCascade, 3, 3.0, vec![1, 2, 4, 8]);
    let sewn_spec = SequenceSpec::new(Family::Sewn, 3, 6.0, vec![2, 4]);
    Corpus {
        wells,
        half_tunnel,
        sphere: round_sphere(&bg).expect("round sphere"),
        tunnels,
        many: members(&many_spec),
        many_spec,
        cascade: members(&cascade_spec),
        cascade_spec,
        sewn: members(&sewn_spec),
        sewn_spec,
        tunnel_spec,
    }
}

fn wells_criterion(c: &Corpus) -> Outcome {
    let mut o = Outcome::new();
    let mut constants = Vec::new();
    for (j, b, secs) in &c.wells {
        let delta = 1.0 / j;
        let d = 0.5;
        o.check(
            b.checks.min_r >= 6.0 - 1.0 / j,
            format!(
                "j = {j}: min R {:.12} >= {:.12}",
                b.checks.min_r,
                6.0 - 1.0 / j
            ),
        );
        let (w, dw, _) = b.checks.collar;
        o.check(
            w.max(dw) <= 1e-8,
            format!("j = {j}: collar deviation {:e}", w.max(dw)),
        );
        let (lo, hi) = diameter_bounds(&b.manifold);
        o.check(
            lo >= d,
            format!("j = {j}: diameter lower bound {lo:.6} >= 1/2"),
        );
        let vol = volume(&b.manifold).value;
        // Smallest constants for the diameter bound and for the δ³ part of the volume bound.
        let c_diam = hi / (delta + d);
        let c_vol = vol / delta.powi(3);
        let cst = c_diam.max(c_vol);
        o.check(
            hi < cst * (delta + d),
            format!("j = {j}: diameter {hi:.6} < C (delta + d), C_diam = {c_diam:.4}"),
        );
        o.check(
            vol < cst * (delta.powi(3) + d * delta * delta),
            format!("j = {j}: volume {vol:.6e} < C (delta^3 + d delta^2), C_vol = {c_vol:.4}"),
        );
        o.check(*secs < 10.0, format!("j = {j}: built in {secs:.2} s"));
        constants.push(cst);
    }
    for w in constants.windows(2) {
        let ratio = w[1] / w[0];
        o.check(
            (ratio - 1.0).abs() <= 0.2,
            format!("C under delta-halving: {:.4} -> {:.4}", w[0], w[1]),
        );
    }
    o
}

/// Largest per-sample relative discrepancy over the blend cells, where the
/// curvature varies and truncation dominates rounding.
fn blend_discrepancy(b: &BuiltProfile) -> f64 {
    let g = scalar_curvature_gauss(&b.curve, &b.manifold.bg, GaussConvention::Derived);
    let w = scalar_curvature_warp(&b.manifold);
    let mut worst = 0.0f64;
    for ((a, c), cell) in g.iter().zip(&w).zip(&b.manifold.cells) {
        if cell.role != Role::Blend {
            continue;
        }
        for (x, y) in a.iter().zip(c) {
            if let (Some(x), Some(y)) = (x, y) {
                worst = worst.max((x - y).abs() / (1.0 + x.abs()));
            }
        }
    }
    worst
}

fn cross_criterion(c: &Corpus) -> Outcome {
    let mut o = Outcome::new();
    let mut record = |label: String, x: CrossOracle| {
        o.check(
            x.passes(),
            format!(
                "{label}: max diff {:.3e} <= {:.3e}",
                x.max_diff_derived, x.tolerance
            ),
        );
    };
    for (j, b, _) in &c.wells {
        record(format!("well j = {j}"), b.checks.cross);
    }
    record("half tunnel".into(), c.half_tunnel.checks.cross);
    record("round sphere".into(), c.sphere.cross_oracle(CROSS_TOL));
    let mut worst_tunnel = (0, 0.0f64);
    let mut tunnels_ok = true;
    for (j, g) in &c.tunnels {
        let x = g.cross_oracle(CROSS_TOL);
        tunnels_ok &= x.passes();
        let rel = x.max_diff_derived / x.tolerance;
        if rel > worst_tunnel.1 {
            worst_tunnel = (*j, rel);
        }
    }
    o.check(
        tunnels_ok,
        format!(
            "{} tunnels, worst diff/tol {:.3e} at j = {}",
            c.tunnels.len(),
            worst_tunnel.1,
            worst_tunnel.0
        ),
    );
    for (label, ms) in [("many-wells", &c.many), ("cascade", &c.cascade)] {
        for (j, m) in ms {
            if let Member::Decorated(d) = m {
                for (i, w) in d.inserts.iter().enumerate() {
                    o.check(
                        w.summary.checks.cross.passes(),
                        format!("{label} j = {j} insert {i}"),
                    );
                }
            }
        }
    }
    for (j, m) in &c.sewn {
        if let Member::Sewn(s) = m {
            o.check(
                s.tunnel.cross_oracle(CROSS_TOL).passes(),
                format!("sewn j = {j} tunnel"),
            );
        }
    }
    // Order under step halving: RK4 and fourth-order differences predict 4.
    let bg = BackgroundSpace::unit_sphere(3);
    let errs: Vec<f64> = (1..=3)
        .map(|refine| {
            let opts = BuildOptions {
                refine,
                ..BuildOptions::default()
            };
            let b = build_well(well_params(0.1, 0.5, 6.0, 10.0), &bg, &opts).expect("refined well");
            blend_discrepancy(&b)
        })
        .collect();
    for w in errs.windows(2) {
        let order = (w[0] / w[1]).log2();
        o.check(
            order >= 3.5,
            format!(
                "blend discrepancy {:.3e} -> {:.3e}, order {order:.2}",
                w[0], w[1]
            ),
        );
    }
    o
}

fn ledgers(c: &Corpus) -> Vec<(String, ArcLedger, f64)> {
    let mut out = Vec::new();
    let mut push = |label: String, l: Option<&ArcLedger>, delta: f64| {
        if let Some(l) = l {
            out.push((label, l.clone(), delta));
        }
    };
    for (j, b, _) in &c.wells {
        push(
            format!("well j = {j}"),
            b.raw.ledger.as_ref(),
            b.params.delta,
        );
    }
    push(
        "half tunnel".into(),
        c.half_tunnel.raw.ledger.as_ref(),
        c.half_tunnel.params.delta,
    );
    for (j, g) in &c.tunnels {
        for s in &g.builds {
            push(format!("tunnel j = {j}"), s.ledger.as_ref(), s.params.delta);
        }
    }
    for (label, ms) in [("many-wells", &c.many), ("cascade", &c.cascade)] {
        for (j, m) in ms {
            if let Member::Decorated(d) = m {
                for w in &d.inserts {
                    push(
                        format!("{label} j = {j}"),
                        w.summary.ledger.as_ref(),
                        w.summary.params.delta,
                    );
                }
            }
        }
    }
    out
}

fn arcs_criterion(c: &Corpus) -> Outcome {
    let mut o = Outcome::new();
    let all = ledgers(c);
    let mut worst_ratio = 0.0f64;
    let mut worst_len = 0.0f64;
    for (label, l, delta) in &all {
        let ratio = l.max_contraction();
        if ratio > 21.0 / 26.0 {
            o.check(false, format!("{label}: r_i/r_(i-1) = {ratio}"));
        }
        if l.s_m > 28.0 * delta / 5.0 {
            o.check(false, format!("{label}: s_m = {} > 28 delta/5", l.s_m));
        }
        worst_ratio = worst_ratio.max(ratio);
        worst_len = worst_len.max(l.s_m / delta);
    }
    o.check(!all.is_empty(), format!("{} arc ledgers", all.len()));
    o.check(
        worst_ratio <= 21.0 / 26.0,
        format!("max r_i/r_(i-1) = {worst_ratio:.6} <= {:.6}", 21.0 / 26.0),
    );
    o.check(
        worst_len <= 28.0 / 5.0,
        format!("max s_m/delta = {worst_len:.6} <= 5.6"),
    );
    o
}

fn mollifier_criterion() -> Outcome {
    let mut o = Outcome::new();
    let h = LinearCorner {
        value: 0.0,
        slope_minus: 1.0,
        slope_plus: -1.0,
    };
    let mut pts = Vec::new();
    for k in 4..=8 {
        let eps = 0.5f64.powi(k);
        let m = mollify_lipschitz(&h, MollifierSpec::new(eps, 1.0).expect("valid scale"))
            .expect("mollifies");
        let dev = measure_deviation(&m, 4096);
        o.check(
            dev.max_abs_slope <= 1.0,
            format!("eps = 2^-{k}: max |h'| = {:.15}", dev.max_abs_slope),
        );
        pts.push((eps.ln(), dev.value.ln()));
    }
    let n = pts.len() as f64;
    let (mx, my) = (
        pts.iter().map(|p| p.0).sum::<f64>() / n,
        pts.iter().map(|p| p.1).sum::<f64>() / n,
    );
    let rate = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
        / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    o.check(
        rate >= 2.5,
        format!("sup deviation rate exponent {rate:.3}"),
    );
    o
}

fn tunnel_criterion(c: &Corpus) -> Outcome {
    let mut o = Outcome::new();
    // vol(S³) = 2π² independently of the library.
    let round = 2.0 * PI * PI;
    let mut gaps = Vec::new();
    for (j, g) in &c.tunnels {
        let m = Member::Glued(g.clone());
        let claims = member_claims(&c.tunnel_spec, *j, &m);
        let keep: Vec<&Claim> = claims
            .iter()
            .filter(|c| {
                c.tag.starts_with("tunnel.volume")
                    || c.tag == "tunnel.diameter"
                    || c.tag == "tunnel.scalar-floor"
            })
            .collect();
        o.claims(&format!("j = {j}"), keep);
        o.check(
            g.diameter_bounds().1 <= 4.0 * PI + 30.0,
            format!("j = {j}: diameter {:.6}", g.diameter_bounds().1),
        );
        gaps.push((*j, (g.volume() - 2.0 * round).abs()));
    }
    let first = gaps.first().unwrap();
    let last = gaps.last().unwrap();
    o.check(
        last.1 < first.1,
        format!(
            "|vol - 2 vol(S^3)|: {:.3e} at j = {} -> {:.3e} at j = {}",
            first.1, first.0, last.1, last.0
        ),
    );
    let ms: Vec<(u32, Member)> = c
        .tunnels
        .iter()
        .map(|(j, g)| (*j, Member::Glued(g.clone())))
        .collect();
    let refs: Vec<(u32, &Member)> = ms.iter().map(|(j, m)| (*j, m)).collect();
    let seq = sequence_claims(&c.tunnel_spec, &refs);
    for cl in &seq {
        o.check(
            cl.pass,
            format!("{} = {:.4} ({})", cl.tag, cl.measured, cl.evidence),
        );
    }
    o.check(
        seq.len() == 3,
        "flat-bound, inverse-law and neck claims present",
    );
    o
}

fn certificate_criterion(c: &Corpus) -> Outcome {
    let mut o = Outcome::new();
    let mut min_samples = usize::MAX;
    for (j, g) in &c.tunnels {
        match build_axial_map(g) {
            Ok(map) => {
                let cert = certify_lipschitz(&map, g);
                min_samples = min_samples.min(cert.samples);
                if !cert.passes() {
                    o.check(false, format!("j = {j}: {:?}", cert.violation));
                }
                if certify_width(&cert, g).ok() != Some(4.0 * PI) {
                    o.check(false, format!("j = {j}: width not certified"));
                }
            }
            Err(e) => o.check(false, format!("j = {j}: {e}")),
        }
    }
    o.check(
        min_samples >= CERT_SAMPLES,
        format!(
            "{} maps, at least {min_samples} samples each",
            c.tunnels.len()
        ),
    );
    let g = &c.tunnels[0].1;
    let steep = build_axial_map_with_slope(g, 1.1).expect("steep map builds");
    let cert = certify_lipschitz(&steep, g);
    o.check(
        !cert.passes(),
        format!(
            "slope 1.1 control rejected: {:?}",
            cert.violation.map(|v| v.check)
        ),
    );
    o.check(
        certify_width(&cert, g).is_err(),
        "slope 1.1 control emits no width",
    );
    o
}

fn many_wells_criterion(c: &Corpus) -> Outcome {
    let mut o = Outcome::new();
    for (j, m) in &c.many {
        let claims = member_claims(&c.many_spec, *j, m);
        o.claims(&format!("j = {j}"), &claims);
        let p = packing_count(m, 0.25);
        o.check(p >= *j as usize, format!("j = {j}: packing(1/4) = {p}"));
    }
    o
}

fn cascade_criterion(c: &Corpus) -> Outcome {
    let mut o = Outcome::new();
    for (j, m) in &c.cascade {
        let claims = member_claims(&c.cascade_spec, *j, m);
        o.claims(&format!("i = {j}"), &claims);
        if let Member::Decorated(d) = m {
            o.check(
                d.tip_count() == *j as usize,
                format!("i = {j}: {} well tips", d.tip_count()),
            );
            for (k, w) in d.inserts.iter().enumerate() {
                let i = (k + 1) as f64;
                let floor = 6.0 * (1.0 - 1.0 / (10.0 * i));
                if w.min_scalar() <= floor {
                    o.check(
                        false,
                        format!("i = {j}: well {k} min R {} <= {floor}", w.min_scalar()),
                    );
                }
            }
        }
    }
    o
}

fn sewing_criterion(c: &Corpus) -> Outcome {
    let mut o = Outcome::new();
    let bg = BackgroundSpace::unit_sphere(3);
    // Tube about a great circle in S³: 2π² sin² r.
    let mut worst = 0.0f64;
    for k in 0..=20 {
        let r = 10f64.powf(-3.0 + 2.0 * k as f64 / 20.0);
        worst = worst.max((tube_volume(&bg, 1, r) / (2.0 * PI * PI * r.sin().powi(2)) - 1.0).abs());
    }
    o.check(
        worst < 1e-12,
        format!("tube volume against 2 pi^2 sin^2 r: {worst:.2e}"),
    );
    let radii: Vec<f64> = (0..=20)
        .map(|k| 10f64.powf(-3.0 + 2.0 * k as f64 / 20.0))
        .collect();
    let e = tube_exponent(&bg, 1, &radii);
    o.check(
        (e - 2.0).abs() <= 0.02 * 2.0,
        format!("tube exponent {e:.5} against n - m = 2"),
    );
    let ladder: Vec<f64> = WR_LADDER
        .iter()
        .map(|&r| generalized_scalar_ratio(3, 1, 1.0, r).unwrap())
        .collect();
    o.check(
        ladder.windows(2).all(|w| w[1] < w[0]),
        format!("wR ladder {ladder:?}"),
    );
    o.check(
        ladder[1] < -1e3,
        format!("wR at r = 1e-2: {:.4e}", ladder[1]),
    );
    let smooth = smooth_point_ratio(3, 1.0, 1e-3).unwrap();
    o.check(
        (smooth - 6.0).abs() <= 0.06,
        format!("smooth point ratio at r = 1e-3: {smooth:.6}"),
    );
    for (j, m) in &c.sewn {
        o.claims(
            &format!("sewn j = {j}"),
            &member_claims(&c.sewn_spec, *j, m),
        );
    }
    o
}

/// Artifacts of one run: profile texts and report JSON of a tunnel, a well and a family member.
fn artifacts() -> Vec<String> {
    let bg = BackgroundSpace::unit_sphere(3);
    let opts = BuildOptions::default();
    let mut out = Vec::new();
    for (kind, params) in [
        (AssemblyKind::Tunnel, well_params(0.2, 30.0, 6.0, 10.0)),
        (AssemblyKind::Well, well_params(0.1, 0.5, 6.0, 10.0)),
    ] {
        let (file, m) = ProfileFile::build(kind, &bg, params, &opts).expect("assembly builds");
        out.push(sha256_hex(file.to_text().as_bytes()));
        let mut r = VerificationReport::new(kind.name(), "acceptance");
        r.claims = assembly_claims(kind, &m);
        out.push(sha256_hex(r.to_json().as_bytes()));
    }
    let spec = SequenceSpec::new(Family::ManyWells, 3, 6.0, vec![4]);
    let m = generate(&spec, 4).expect("member builds");
    let mut r = VerificationReport::new("many-wells", "acceptance");
    r.claims = member_claims(&spec, 4, &m);
    out.push(sha256_hex(r.to_json().as_bytes()));
    out
}

fn determinism_criterion() -> Outcome {
    let mut o = Outcome::new();
    let a = artifacts();
    let b = artifacts();
    for (i, (x, y)) in a.iter().zip(&b).enumerate() {
        o.check(x == y, format!("artifact {i}: {}", &x[..16]));
    }
    o
}

type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

fn main() {
    let t = Instant::now();
    let c = corpus();
    println!("corpus built in {:.1} s", t.elapsed().as_secs_f64());
    let criteria: Vec<Criterion> = vec![
        ("well construction", Box::new(|| wells_criterion(&c))),
        ("cross-oracle curvature", Box::new(|| cross_criterion(&c))),
        ("arc recursion constants", Box::new(|| arcs_criterion(&c))),
        ("mollifier", Box::new(mollifier_criterion)),
        (
            "two-sphere tunnel family",
            Box::new(|| tunnel_criterion(&c)),
        ),
        (
            "Lipschitz and width certificates",
            Box::new(|| certificate_criterion(&c)),
        ),
        ("many-wells family", Box::new(|| many_wells_criterion(&c))),
        ("cascade family", Box::new(|| cascade_criterion(&c))),
        ("sewing and wR", Box::new(|| sewing_criterion(&c))),
        ("determinism", Box::new(determinism_criterion)),
    ];
    let verbose = std::env::var_os("ACCEPTANCE_VERBOSE").is_some();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let out = run();
        println!(
            "{} criterion {:>2}: {name}",
            if out.pass { "PASS" } else { "FAIL" },
            i + 1
        );
        for l in out
            .lines
            .iter()
            .filter(|l| verbose || l.starts_with("  fail"))
        {
            println!("{l}");
        }
        if !out.pass {
            failed += 1;
        }
    }
    println!(
        "{} of {} criteria pass",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
