//! Run configuration: TOML file defaults overridden by command-line flags.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use scalarforge::build::BuildOptions;
use scalarforge::report::sha256_hex;
use scalarforge::sequences::Family;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub n: usize,
    pub kappa: f64,
    pub j: Vec<u32>,
    pub delta: Option<f64>,
    pub d: Option<f64>,
    pub family: Option<Family>,
    /// Base integration step; None keeps δ₀/8192.
    pub step: Option<f64>,
    pub refine: u32,
    /// Cap on the retry halvings of δ₀ and α.
    pub refine_max: u32,
    pub out: PathBuf,
    pub formats: Vec<Format>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            n: 3,
            kappa: 6.0,
            j: vec![10],
            delta: None,
            d: None,
            family: None,
            step: None,
            refine: 0,
            refine_max: 8,
            out: PathBuf::from("forge-out"),
            formats: vec![Format::Json],
        }
    }
}

/// Parses "10", "10..64" (inclusive) or "2,4,8".
pub fn parse_j(s: &str) -> Result<Vec<u32>> {
    let s = s.trim();
    let out: Vec<u32> = if let Some((a, b)) = s.split_once("..") {
        let b = b.trim_start_matches('=');
        let (a, b): (u32, u32) = (a.trim().parse()?, b.trim().parse()?);
        if a > b {
            bail!("empty range {s}");
        }
        (a..=b).collect()
    } else {
        s.split(',')
            .map(|x| x.trim().parse::<u32>())
            .collect::<Result<_, _>>()?
    };
    if out.is_empty() {
        bail!("no indices in {s}");
    }
    Ok(out)
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 3 {
            bail!("--n must be at least 3");
        }
        if !(self.kappa.is_finite() && self.kappa > 0.0) {
            bail!("--kappa must be positive");
        }
        if self.j.is_empty() || self.j.contains(&0) {
            bail!("--j needs positive indices");
        }
        if self.step.is_some_and(|h| !(h.is_finite() && h > 0.0)) {
            bail!("--step must be positive");
        }
        if self.delta.is_some_and(|x| !(x.is_finite() && x > 0.0)) {
            bail!("--delta must be positive");
        }
        if self.d.is_some_and(|x| !(x.is_finite() && x >= 0.0)) {
            bail!("--d must be nonnegative");
        }
        if self.refine_max < 1 {
            bail!("--refine-max must be at least 1");
        }
        if self.formats.is_empty() {
            bail!("at least one --format is needed");
        }
        Ok(())
    }

    pub fn opts(&self) -> BuildOptions {
        BuildOptions {
            refine: self.refine,
            max_delta0_halvings: self.refine_max,
            max_alpha_halvings: self.refine_max,
            base_step: self.step,
        }
    }

    pub fn single_j(&self) -> Result<u32> {
        match self.j.as_slice() {
            [j] => Ok(*j),
            _ => bail!("this command takes a single --j"),
        }
    }

    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }

    /// Hash of everything that affects results (the output directory does not).
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.out = PathBuf::new();
        sha256_hex(&serde_json::to_vec(&c).expect("config serializes"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn j_forms() {
        assert_eq!(parse_j("10").unwrap(), vec![10]);
        assert_eq!(parse_j("10..12").unwrap(), vec![10, 11, 12]);
        assert_eq!(parse_j("2,4, 8").unwrap(), vec![2, 4, 8]);
        assert!(parse_j("5..2").is_err());
        assert!(parse_j("x").is_err());
    }

    #[test]
    fn hash_ignores_output_directory() {
        let a = RunConfig::default();
        let b = RunConfig {
            out: "elsewhere".into(),
            ..a.clone()
        };
        assert_eq!(a.hash(), b.hash());
        let c = RunConfig {
            kappa: 5.0,
            ..a.clone()
        };
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn toml_round_trip() {
        let c = RunConfig {
            family: Some(Family::ManyWells),
            j: vec![2, 4],
            ..RunConfig::default()
        };
        let text = toml::to_string(&c).unwrap();
        assert_eq!(toml::from_str::<RunConfig>(&text).unwrap(), c);
        assert!(toml::from_str::<RunConfig>("bogus = 1").is_err());
    }
}
