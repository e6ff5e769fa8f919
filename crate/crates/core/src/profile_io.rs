//! Versioned text format for assembled profiles.
//!
//! Scalars are written with 17 significant digits so parsing restores every
//! bit. The header carries the recipe; `rebuild` reproduces the assembly from it.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::build::BuildOptions;
use crate::curve::{Role, WellParams};
use crate::error::ForgeError;
use crate::gluing::{
    all_interfaces, attach_tunnel, attach_well, round_sphere, GluedManifold, GluedPiece,
    InterfaceJump, PieceKind,
};
use crate::space_form::BackgroundSpace;
use crate::warped::{Cap, WarpCell, WarpedManifold};

pub const SCHEMA: &str = "scalarforge.profile/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AssemblyKind {
    Sphere,
    Well,
    Tunnel,
}

impl AssemblyKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Sphere => "sphere",
            Self::Well => "well",
            Self::Tunnel => "tunnel",
        }
    }
}

impl FromStr for AssemblyKind {
    type Err = ForgeError;
    fn from_str(s: &str) -> Result<Self, ForgeError> {
        match s {
            "sphere" => Ok(Self::Sphere),
            "well" => Ok(Self::Well),
            "tunnel" => Ok(Self::Tunnel),
            _ => Err(ForgeError::Format(format!("unknown kind {s}"))),
        }
    }
}

/// A stored assembly: recipe plus atlas and sampled warp.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileFile {
    pub kind: AssemblyKind,
    pub bg: BackgroundSpace,
    pub params: WellParams,
    pub opts: BuildOptions,
    pub pieces: Vec<GluedPiece>,
    pub cells: Vec<WarpCell>,
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn role_token(r: Role) -> String {
    match r {
        Role::Inductive(i) => format!("inductive:{i}"),
        other => format!("{other:?}").to_lowercase(),
    }
}

fn parse_role(s: &str) -> Result<Role, ForgeError> {
    if let Some(i) = s.strip_prefix("inductive:") {
        return i
            .parse()
            .map(Role::Inductive)
            .map_err(|_| ForgeError::Format(format!("bad role {s}")));
    }
    Ok(match s {
        "background" => Role::Background,
        "initialline" => Role::InitialLine,
        "unitarc" => Role::UnitArc,
        "approach" => Role::Approach,
        "straight" => Role::Straight,
        "closing" => Role::Closing,
        "tip" => Role::Tip,
        "plateau" => Role::Plateau,
        "cylinder" => Role::Cylinder,
        "blend" => Role::Blend,
        "corrective" => Role::Corrective,
        _ => return Err(ForgeError::Format(format!("bad role {s}"))),
    })
}

fn kind_token(k: PieceKind) -> &'static str {
    match k {
        PieceKind::Background => "background",
        PieceKind::Well => "well",
        PieceKind::HalfTunnel => "half-tunnel",
        PieceKind::Cylinder => "cylinder",
        PieceKind::MirroredHalfTunnel => "mirrored-half-tunnel",
        PieceKind::MirroredBackground => "mirrored-background",
    }
}

fn parse_kind(s: &str) -> Result<PieceKind, ForgeError> {
    Ok(match s {
        "background" => PieceKind::Background,
        "well" => PieceKind::Well,
        "half-tunnel" => PieceKind::HalfTunnel,
        "cylinder" => PieceKind::Cylinder,
        "mirrored-half-tunnel" => PieceKind::MirroredHalfTunnel,
        "mirrored-background" => PieceKind::MirroredBackground,
        _ => return Err(ForgeError::Format(format!("bad piece kind {s}"))),
    })
}

impl ProfileFile {
    pub fn from_glued(kind: AssemblyKind, m: &GluedManifold, opts: &BuildOptions) -> Self {
        Self {
            kind,
            bg: m.bg,
            params: m.params,
            opts: *opts,
            pieces: m.pieces.clone(),
            cells: m.manifold.cells.clone(),
        }
    }

    /// Builds the assembly described by `kind` and stores it.
    pub fn build(
        kind: AssemblyKind,
        bg: &BackgroundSpace,
        params: WellParams,
        opts: &BuildOptions,
    ) -> Result<(Self, GluedManifold), ForgeError> {
        let m = assemble(kind, bg, params, opts)?;
        Ok((Self::from_glued(kind, &m, opts), m))
    }

    pub fn to_text(&self) -> String {
        let mut o = String::new();
        let p = &self.params;
        let _ = writeln!(o, "schema {SCHEMA}");
        let _ = writeln!(o, "kind {}", self.kind.name());
        let _ = writeln!(o, "n {}", self.bg.n);
        let _ = writeln!(o, "k0 {}", num(self.bg.k0));
        for (k, v) in [
            ("delta", p.delta),
            ("delta0", p.delta0),
            ("d", p.d),
            ("kappa", p.kappa),
            ("j", p.j),
        ] {
            let _ = writeln!(o, "{k} {}", num(v));
        }
        let _ = writeln!(o, "refine {}", self.opts.refine);
        let _ = writeln!(o, "max_delta0_halvings {}", self.opts.max_delta0_halvings);
        let _ = writeln!(o, "max_alpha_halvings {}", self.opts.max_alpha_halvings);
        let _ = writeln!(
            o,
            "base_step {}",
            self.opts.base_step.map_or("none".to_string(), num)
        );
        let _ = writeln!(o, "pieces {}", self.pieces.len());
        for g in &self.pieces {
            let _ = writeln!(
                o,
                "piece {} {} {} {} {} {} {} {}",
                kind_token(g.kind),
                u8::from(g.reversed),
                g.cells.0,
                g.cells.1,
                num(g.s_offset),
                num(g.length),
                num(g.r_start),
                num(g.r_end)
            );
        }
        let _ = writeln!(o, "cells {}", self.cells.len());
        for c in &self.cells {
            let _ = writeln!(
                o,
                "cell {} {} {} {} {}",
                role_token(c.role),
                num(c.s_start),
                num(c.length),
                num(c.slope0),
                c.w.len()
            );
            for (tag, v) in [("w", &c.w), ("rem", &c.rem)] {
                o.push_str(tag);
                for x in v {
                    o.push(' ');
                    o.push_str(&num(*x));
                }
                o.push('\n');
            }
        }
        o.push_str("end\n");
        o
    }

    pub fn parse(text: &str) -> Result<Self, ForgeError> {
        let mut lines = text.lines();
        let mut next = |want: &str| -> Result<Vec<&str>, ForgeError> {
            let line = lines
                .next()
                .ok_or_else(|| ForgeError::Format(format!("missing {want}")))?;
            let mut parts: Vec<&str> = line.split_whitespace().collect();
            if parts.first() != Some(&want) {
                return Err(ForgeError::Format(format!(
                    "expected {want}, found {line:?}"
                )));
            }
            parts.remove(0);
            Ok(parts)
        };
        let f = |s: &str| -> Result<f64, ForgeError> {
            s.parse()
                .map_err(|_| ForgeError::Format(format!("bad number {s}")))
        };
        let u = |s: &str| -> Result<usize, ForgeError> {
            s.parse()
                .map_err(|_| ForgeError::Format(format!("bad integer {s}")))
        };
        let one = |v: Vec<&str>| -> Result<String, ForgeError> {
            match v.as_slice() {
                [x] => Ok(x.to_string()),
                _ => Err(ForgeError::Format("expected one value".into())),
            }
        };
        if one(next("schema")?)? != SCHEMA {
            return Err(ForgeError::Format("unsupported schema".into()));
        }
        let kind: AssemblyKind = one(next("kind")?)?.parse()?;
        let n = u(&one(next("n")?)?)?;
        let k0 = f(&one(next("k0")?)?)?;
        let bg = BackgroundSpace::new(n, k0)?;
        let mut vals = [0.0; 5];
        for (slot, key) in vals.iter_mut().zip(["delta", "delta0", "d", "kappa", "j"]) {
            *slot = f(&one(next(key)?)?)?;
        }
        let params = WellParams {
            delta: vals[0],
            delta0: vals[1],
            d: vals[2],
            kappa: vals[3],
            j: vals[4],
        };
        let refine = u(&one(next("refine")?)?)? as u32;
        let max_delta0_halvings = u(&one(next("max_delta0_halvings")?)?)? as u32;
        let max_alpha_halvings = u(&one(next("max_alpha_halvings")?)?)? as u32;
        let bs = one(next("base_step")?)?;
        let base_step = if bs == "none" { None } else { Some(f(&bs)?) };
        let opts = BuildOptions {
            refine,
            max_delta0_halvings,
            max_alpha_halvings,
            base_step,
        };
        let np = u(&one(next("pieces")?)?)?;
        let mut pieces = Vec::with_capacity(np);
        for _ in 0..np {
            let v = next("piece")?;
            if v.len() != 8 {
                return Err(ForgeError::Format("piece needs 8 fields".into()));
            }
            pieces.push(GluedPiece {
                kind: parse_kind(v[0])?,
                reversed: v[1] == "1",
                cells: (u(v[2])?, u(v[3])?),
                s_offset: f(v[4])?,
                length: f(v[5])?,
                r_start: f(v[6])?,
                r_end: f(v[7])?,
            });
        }
        let nc = u(&one(next("cells")?)?)?;
        let mut cells = Vec::with_capacity(nc);
        for _ in 0..nc {
            let v = next("cell")?;
            if v.len() != 5 {
                return Err(ForgeError::Format("cell needs 5 fields".into()));
            }
            let count = u(v[4])?;
            let w = next("w")?
                .into_iter()
                .map(f)
                .collect::<Result<Vec<_>, _>>()?;
            let rem = next("rem")?
                .into_iter()
                .map(f)
                .collect::<Result<Vec<_>, _>>()?;
            if w.len() != count || rem.len() != count || count < 6 {
                return Err(ForgeError::Format("sample count mismatch".into()));
            }
            cells.push(WarpCell {
                role: parse_role(v[0])?,
                s_start: f(v[1])?,
                length: f(v[2])?,
                slope0: f(v[3])?,
                w,
                rem,
            });
        }
        next("end")?;
        if pieces
            .iter()
            .any(|p| p.cells.0 >= p.cells.1 || p.cells.1 > cells.len())
        {
            return Err(ForgeError::Format("piece cell range out of bounds".into()));
        }
        Ok(Self {
            kind,
            bg,
            params,
            opts,
            pieces,
            cells,
        })
    }

    /// The stored warp as a manifold.
    pub fn manifold(&self) -> WarpedManifold {
        let cap = |w: f64| {
            if w == 0.0 {
                Cap::Pole
            } else {
                Cap::Boundary { radius: w }
            }
        };
        WarpedManifold {
            bg: self.bg,
            caps: (
                cap(self.cells[0].w[0]),
                cap(*self.cells.last().unwrap().w.last().unwrap()),
            ),
            cells: self.cells.clone(),
        }
    }

    pub fn rebuild(&self) -> Result<GluedManifold, ForgeError> {
        assemble(self.kind, &self.bg, self.params, &self.opts)
    }
}

/// Builds a round sphere, a sphere with one well, or two spheres joined by a tunnel.
pub fn assemble(
    kind: AssemblyKind,
    bg: &BackgroundSpace,
    params: WellParams,
    opts: &BuildOptions,
) -> Result<GluedManifold, ForgeError> {
    match kind {
        AssemblyKind::Sphere => round_sphere(bg),
        AssemblyKind::Well => attach_well(bg, params, opts),
        AssemblyKind::Tunnel => attach_tunnel(bg, bg, params, opts),
    }
}

/// Outcome of checking a stored profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileVerification {
    pub interfaces: usize,
    pub worst_rel_w: f64,
    pub worst_dw: f64,
    /// First interface failing C¹ continuity.
    pub broken: Option<InterfaceJump>,
    /// Largest |w_stored − w_rebuilt| / max w, or None if the recipe failed to rebuild.
    pub recipe_deviation: Option<f64>,
}

impl ProfileVerification {
    pub fn continuity_ok(&self) -> bool {
        self.broken.is_none()
    }

    pub fn recipe_ok(&self) -> bool {
        self.recipe_deviation.is_some_and(|d| d <= 1e-12)
    }
}

pub fn verify_profile(p: &ProfileFile) -> ProfileVerification {
    let m = p.manifold();
    let jumps = all_interfaces(&m);
    let broken = jumps.iter().find(|j| !j.c1_ok()).copied();
    let recipe_deviation = p.rebuild().ok().and_then(|g| {
        let cells = &g.manifold.cells;
        if cells.len() != p.cells.len()
            || cells
                .iter()
                .zip(&p.cells)
                .any(|(a, b)| a.w.len() != b.w.len())
        {
            return None;
        }
        let wmax = cells
            .iter()
            .flat_map(|c| c.w.iter())
            .fold(0.0f64, |a, &b| a.max(b));
        Some(
            cells
                .iter()
                .zip(&p.cells)
                .flat_map(|(a, b)| a.w.iter().zip(&b.w))
                .map(|(x, y)| (x - y).abs() / wmax)
                .fold(0.0, f64::max),
        )
    });
    ProfileVerification {
        interfaces: jumps.len(),
        worst_rel_w: jumps.iter().map(|j| j.rel_w).fold(0.0, f64::max),
        worst_dw: jumps.iter().map(|j| j.dw).fold(0.0, f64::max),
        broken,
        recipe_deviation,
    }
}
