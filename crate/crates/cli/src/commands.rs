//! Subcommand bodies. Each writes its artifacts and a report and returns the run status.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use scalarforge::build::well_params;
use scalarforge::convergence::{convergence_row, ConvergenceRow};
use scalarforge::profile_io::{verify_profile, AssemblyKind, ProfileFile};
use scalarforge::report::{
    assembly_claims, member_claims, samples_csv, sequence_claims, sha256_hex, Claim, ErrorRecord,
    Relation, VerificationReport,
};
use scalarforge::sequences::{generate_all, Family, SequenceSpec};
use scalarforge::space_form::BackgroundSpace;
use scalarforge::ForgeError;
use serde::{Deserialize, Serialize};

use crate::config::{Format, RunConfig};
use crate::plot::profile_svg;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Error,
}

impl Status {
    pub fn code(self) -> u8 {
        match self {
            Self::Pass => 0,
            Self::Fail => 1,
            Self::Error => 2,
        }
    }

    fn worst(self, other: Status) -> Status {
        if self.code() >= other.code() {
            self
        } else {
            other
        }
    }

    fn of(report: &VerificationReport) -> Status {
        if report.error.is_some() {
            Self::Error
        } else if report.all_pass() {
            Self::Pass
        } else {
            Self::Fail
        }
    }
}

pub fn error_record(e: &ForgeError) -> ErrorRecord {
    let kind = format!("{e:?}");
    ErrorRecord {
        kind: kind
            .split(['(', ' ', '{'])
            .next()
            .unwrap_or("Error")
            .to_string(),
        message: e.to_string(),
    }
}

fn write(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    std::fs::write(path, contents).with_context(|| format!("writing {}", path.display()))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn print_failures(r: &VerificationReport) {
    for c in r.failed() {
        println!(
            "FAIL {} measured {:e} threshold {:e} ({})",
            c.tag, c.measured, c.threshold, c.evidence
        );
    }
    if let Some(e) = &r.error {
        println!("ERROR {}: {}", e.kind, e.message);
    }
}

/// Writes `<stem>.report.json` and/or `<stem>.report.csv`; JSON is always written.
fn write_report(
    dir: &Path,
    stem: &str,
    r: &VerificationReport,
    formats: &[Format],
) -> Result<String> {
    let name = format!("{stem}.report.json");
    write(&dir.join(&name), &r.to_json())?;
    if formats.contains(&Format::Csv) {
        write(&dir.join(format!("{stem}.report.csv")), &r.to_csv())?;
    }
    print_failures(r);
    Ok(name)
}

fn background(cfg: &RunConfig, family: Option<Family>) -> Result<BackgroundSpace, ForgeError> {
    let nn = (cfg.n * (cfg.n - 1)) as f64;
    let scale = if family == Some(Family::WellCascade) {
        2.0
    } else {
        1.0
    };
    BackgroundSpace::new(cfg.n, scale * cfg.kappa / nn)
}

/// build-well, build-tunnel and build-sphere.
pub fn build_single(kind: AssemblyKind, cfg: &RunConfig) -> Result<Status> {
    let j = cfg.single_j()?;
    let jf = j as f64;
    let params = match kind {
        AssemblyKind::Tunnel => well_params(
            cfg.delta.unwrap_or(2.0 / jf),
            cfg.d.unwrap_or(30.0),
            cfg.kappa,
            jf,
        ),
        _ => well_params(
            cfg.delta.unwrap_or(1.0 / jf),
            cfg.d.unwrap_or(0.5),
            cfg.kappa,
            jf,
        ),
    };
    let stem = match kind {
        AssemblyKind::Sphere => format!("sphere-n{}", cfg.n),
        _ => format!("{}-j{j}", kind.name()),
    };
    let mut report = VerificationReport::new(&stem, cfg.hash());
    let built =
        background(cfg, None).and_then(|bg| ProfileFile::build(kind, &bg, params, &cfg.opts()));
    match built {
        Ok((file, m)) => {
            write(&cfg.out.join(format!("{stem}.profile")), &file.to_text())?;
            report.claims = assembly_claims(kind, &m);
            if cfg.wants(Format::Csv) {
                write(
                    &cfg.out.join(format!("{stem}.samples.csv")),
                    &samples_csv(&m),
                )?;
            }
            if cfg.wants(Format::Svg) {
                write(&cfg.out.join(format!("{stem}.svg")), &profile_svg(&m))?;
            }
        }
        Err(e) => report.error = Some(error_record(&e)),
    }
    write_report(&cfg.out, &stem, &report, &cfg.formats)?;
    Ok(Status::of(&report))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub j: u32,
    pub report: String,
    pub profile: Option<String>,
    pub pass: bool,
    pub error: Option<ErrorRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema: String,
    pub config_hash: String,
    pub spec: SequenceSpec,
    pub members: Vec<ManifestEntry>,
    pub sequence_report: String,
    pub convergence: Vec<ConvergenceRow>,
}

pub const MANIFEST_SCHEMA: &str = "scalarforge.manifest/1";
/// Packing scale recorded in the convergence rows.
pub const PACKING_EPSILON: f64 = 0.25;

pub fn build_sequence(cfg: &RunConfig) -> Result<Status> {
    let family = cfg.family.context("build-sequence needs a family")?;
    let spec = SequenceSpec {
        family,
        n: cfg.n,
        kappa: cfg.kappa,
        j_list: cfg.j.clone(),
        delta: cfg.delta,
        d: cfg.d,
        opts: cfg.opts(),
    };
    let hash = cfg.hash();
    let name = family.name();
    let members = generate_all(&spec);
    let mut status = Status::Pass;
    let mut entries = Vec::new();
    let mut rows = Vec::new();
    let mut built = Vec::new();
    for (j, m) in &members {
        let stem = format!("{name}-j{j}");
        let mut report = VerificationReport::new(&stem, &hash);
        let mut profile = None;
        match m {
            Ok(member) => {
                report.claims = member_claims(&spec, *j, member);
                if let scalarforge::sequences::Member::Glued(g) = member {
                    let file = ProfileFile::from_glued(AssemblyKind::Tunnel, g, &spec.opts);
                    let p = format!("{stem}.profile");
                    write(&cfg.out.join(&p), &file.to_text())?;
                    profile = Some(p);
                }
                rows.push(convergence_row(name, *j, member, PACKING_EPSILON));
                built.push((*j, member));
            }
            Err(e) => report.error = Some(error_record(e)),
        }
        let file = write_report(&cfg.out, &stem, &report, &cfg.formats)?;
        status = status.worst(Status::of(&report));
        entries.push(ManifestEntry {
            j: *j,
            report: file,
            profile,
            pass: report.all_pass(),
            error: report.error.clone(),
        });
    }
    let mut seq = VerificationReport::new(format!("{name}-sequence"), &hash);
    seq.claims = sequence_claims(&spec, &built);
    let seq_file = write_report(&cfg.out, &format!("{name}-sequence"), &seq, &cfg.formats)?;
    status = status.worst(Status::of(&seq));
    let manifest = Manifest {
        schema: MANIFEST_SCHEMA.to_string(),
        config_hash: hash,
        spec,
        members: entries,
        sequence_report: seq_file,
        convergence: rows,
    };
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    write(&cfg.out.join("manifest.json"), &text)?;
    Ok(status)
}

fn output_dir(explicit: Option<&Path>, input: &Path) -> PathBuf {
    explicit
        .map(Path::to_path_buf)
        .unwrap_or_else(|| input.parent().map(Path::to_path_buf).unwrap_or_default())
}

fn stem_of(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "profile".into())
}

pub fn verify(path: &Path, out: Option<&Path>) -> Result<Status> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let stem = format!("{}.verify", stem_of(path));
    let mut report = VerificationReport::new(&stem, sha256_hex(text.as_bytes()));
    match ProfileFile::parse(&text) {
        Ok(file) => {
            let v = verify_profile(&file);
            let broken = v.broken.map_or("none".to_string(), |b| {
                format!("first break at s = {:e}", b.s)
            });
            report.claims = vec![
                Claim::flag("profile.interface-continuity", v.continuity_ok(), broken),
                Claim::new(
                    "profile.interface-w",
                    v.worst_rel_w,
                    Relation::Le,
                    1e-8,
                    format!("{} interfaces", v.interfaces),
                ),
                Claim::new(
                    "profile.interface-dw",
                    v.worst_dw,
                    Relation::Le,
                    1e-8,
                    format!("{} interfaces", v.interfaces),
                ),
                Claim::new(
                    "profile.recipe-match",
                    v.recipe_deviation.unwrap_or(f64::INFINITY),
                    Relation::Le,
                    1e-12,
                    "stored w against a rebuild from the recipe",
                ),
            ];
        }
        Err(e) => report.error = Some(error_record(&e)),
    }
    write_report(&output_dir(out, path), &stem, &report, &[Format::Json])?;
    Ok(Status::of(&report))
}

pub fn plot(path: &Path, out: Option<&Path>) -> Result<Status> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let stem = format!("{}.plot", stem_of(path));
    let mut report = VerificationReport::new(&stem, sha256_hex(text.as_bytes()));
    let dir = output_dir(out, path);
    match ProfileFile::parse(&text).and_then(|f| f.rebuild()) {
        Ok(m) => {
            write(
                &dir.join(format!("{}.svg", stem_of(path))),
                &profile_svg(&m),
            )?;
            report
                .claims
                .push(Claim::flag("plumbing.figure-written", true, "svg"));
        }
        Err(e) => report.error = Some(error_record(&e)),
    }
    write_report(&dir, &stem, &report, &[Format::Json])?;
    Ok(Status::of(&report))
}

pub fn report(manifest_path: &Path, out: Option<&Path>) -> Result<Status> {
    let text = std::fs::read_to_string(manifest_path)
        .with_context(|| format!("reading {}", manifest_path.display()))?;
    let manifest: Manifest = serde_json::from_str(&text).context("parsing manifest")?;
    let base = manifest_path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_default();
    let dir = output_dir(out, manifest_path);
    let mut summary = VerificationReport::new(
        format!("{}-summary", manifest.spec.family.name()),
        &manifest.config_hash,
    );
    let mut files: Vec<(String, String)> = manifest
        .members
        .iter()
        .map(|m| (format!("j{}", m.j), m.report.clone()))
        .collect();
    files.push(("sequence".into(), manifest.sequence_report.clone()));
    let mut errors = Vec::new();
    for (prefix, file) in files {
        let r: VerificationReport = serde_json::from_str(
            &std::fs::read_to_string(base.join(&file))
                .with_context(|| format!("reading {file}"))?,
        )
        .with_context(|| format!("parsing {file}"))?;
        for mut c in r.claims {
            c.tag = format!("{prefix}.{}", c.tag);
            summary.claims.push(c);
        }
        if let Some(e) = r.error {
            errors.push(format!("{prefix}: {}", e.message));
        }
    }
    if !errors.is_empty() {
        summary.error = Some(ErrorRecord {
            kind: "MemberError".into(),
            message: errors.join("; "),
        });
    }
    let mut table = String::from("family,j,flat_bound,packing,wr_ladder\n");
    for row in &manifest.convergence {
        let wr: Vec<String> = row
            .wr_ladder
            .iter()
            .map(|(r, v)| format!("{r:e}:{v:.16e}"))
            .collect();
        table.push_str(&format!(
            "{},{},{},{},{}\n",
            row.family,
            row.j,
            row.flat_bound
                .map_or(String::new(), |b| format!("{b:.16e}")),
            row.packing,
            wr.join(" ")
        ));
    }
    write(&dir.join("convergence.csv"), &table)?;
    write_report(&dir, "summary", &summary, &[Format::Json, Format::Csv])?;
    Ok(Status::of(&summary))
}
