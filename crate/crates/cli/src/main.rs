//! `forge`: build, verify, report and plot scalar-curvature profiles.
//!
//! Exit status is 0 when every claim passes, 1 when a claim fails and 2 on a
//! configuration or build error.

mod commands;
mod config;
mod plot;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use scalarforge::profile_io::AssemblyKind;
use scalarforge::sequences::Family;

use commands::Status;
use config::{parse_j, Format, RunConfig};

#[derive(Parser)]
#[command(
    name = "forge",
    version,
    about = "Scalar-curvature wells, tunnels and sequences"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Default)]
struct RunArgs {
    /// TOML file with defaults for every flag below
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    kappa: Option<f64>,
    /// Index, inclusive range "10..64" or list "2,4,8"
    #[arg(long)]
    j: Option<String>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    d: Option<f64>,
    #[arg(long)]
    family: Option<Family>,
    /// Base integration step
    #[arg(long)]
    step: Option<f64>,
    /// Uniform refinement levels (each halves every step)
    #[arg(long)]
    refine: Option<u32>,
    /// Cap on retry halvings during construction
    #[arg(long = "refine-max")]
    refine_max: Option<u32>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, value_delimiter = ',')]
    format: Vec<Format>,
}

#[derive(Subcommand)]
enum Command {
    /// Round sphere with one well
    BuildWell(RunArgs),
    /// Two round spheres joined by a tunnel
    BuildTunnel(RunArgs),
    /// The round sphere itself
    BuildSphere(RunArgs),
    /// Every member of a family
    BuildSequence {
        /// two-sphere-tunnel, many-wells, well-cascade or sewn
        #[arg(id = "family_name", value_name = "FAMILY")]
        family: Option<Family>,
        #[command(flatten)]
        args: RunArgs,
    },
    /// Check a stored profile for interface continuity and against its recipe
    Verify {
        profile: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Summarize the reports listed in a manifest
    Report {
        manifest: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// SVG of a stored profile
    Plot {
        profile: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn resolve(a: RunArgs, family: Option<Family>) -> Result<RunConfig> {
    let mut c = match &a.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(x) = a.n {
        c.n = x;
    }
    if let Some(x) = a.kappa {
        c.kappa = x;
    }
    if let Some(x) = &a.j {
        c.j = parse_j(x).with_context(|| format!("--j {x}"))?;
    }
    c.delta = a.delta.or(c.delta);
    c.d = a.d.or(c.d);
    c.family = family.or(a.family).or(c.family);
    c.step = a.step.or(c.step);
    if let Some(x) = a.refine {
        c.refine = x;
    }
    if let Some(x) = a.refine_max {
        c.refine_max = x;
    }
    if let Some(x) = a.out {
        c.out = x;
    }
    if !a.format.is_empty() {
        c.formats = a.format;
    }
    c.validate()?;
    Ok(c)
}

fn init_threads() -> Result<()> {
    if let Ok(v) = std::env::var("FORGE_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .with_context(|| format!("FORGE_THREADS={v}"))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .context("configuring the thread pool")?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<Status> {
    init_threads()?;
    match cli.command {
        Command::BuildWell(a) => commands::build_single(AssemblyKind::Well, &resolve(a, None)?),
        Command::BuildTunnel(a) => commands::build_single(AssemblyKind::Tunnel, &resolve(a, None)?),
        Command::BuildSphere(a) => commands::build_single(AssemblyKind::Sphere, &resolve(a, None)?),
        Command::BuildSequence { family, args } => {
            commands::build_sequence(&resolve(args, family)?)
        }
        Command::Verify { profile, out } => commands::verify(&profile, out.as_deref()),
        Command::Report { manifest, out } => commands::report(&manifest, out.as_deref()),
        Command::Plot { profile, out } => commands::plot(&profile, out.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(status) => {
            println!(
                "status: {}",
                match status {
                    Status::Pass => "pass",
                    Status::Fail => "fail",
                    Status::Error => "error",
                }
            );
            ExitCode::from(status.code())
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

#[cfg(test)]
mod tests {
    use clap::CommandFactory;

    use super::*;

    #[test]
    fn command_line_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn positional_family_wins() {
        let cli = Cli::try_parse_from([
            "forge",
            "build-sequence",
            "sewn",
            "--family",
            "many-wells",
            "--j",
            "2",
        ])
        .unwrap();
        let Command::BuildSequence { family, args } = cli.command else {
            panic!("wrong subcommand");
        };
        let cfg = resolve(args, family).unwrap();
        assert_eq!(cfg.family, Some(Family::Sewn));
    }
}
