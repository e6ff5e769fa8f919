//! End-to-end construction of wells and half tunnels with admissibility checks.

use serde::{Deserialize, Serialize};

use crate::curve::{
    build_half_tunnel_arcs, build_well_arcs, integrate_profile, CurvatureProfile, Mode,
    ProfileCurve, Sampling, WellParams,
};
use crate::error::ForgeError;
use crate::smoothing::{smooth_curvature, BumpBlend};
use crate::space_form::BackgroundSpace;
use crate::warped::{
    angle_monotone, collar_deviation, cross_oracle, min_scalar, pole_slopes, realize,
    scalpos_margin, CrossOracle, WarpedManifold,
};

/// Relative tolerance of the curvature cross-oracle.
pub const CROSS_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BuildOptions {
    /// Extra sampling refinement levels (each halves every step).
    pub refine: u32,
    pub max_delta0_halvings: u32,
    pub max_alpha_halvings: u32,
    /// Overrides the base step δ₀/8192.
    pub base_step: Option<f64>,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self {
            refine: 0,
            max_delta0_halvings: 8,
            max_alpha_halvings: 8,
            base_step: None,
        }
    }
}

impl BuildOptions {
    pub fn sampling(&self, delta0: f64) -> Sampling {
        let mut s = Sampling::for_delta0(delta0).refined(self.refine);
        if let Some(h) = self.base_step {
            s.base_step = h;
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileChecks {
    pub floor: f64,
    pub min_r: f64,
    pub scalpos: bool,
    pub monotone: bool,
    pub cross: CrossOracle,
    /// Largest deviation of (w, w', w'') from the background on the collar.
    pub collar: (f64, f64, f64),
    /// Largest | |w'| − 1 | over the last 16 samples before a tip.
    pub pole_slope_defect: Option<f64>,
}

impl ProfileChecks {
    pub fn admissible(&self) -> bool {
        self.min_r >= self.floor && self.scalpos && self.monotone
    }

    pub fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.min_r < self.floor {
            out.push(format!("min R {} below floor {}", self.min_r, self.floor));
        }
        if !self.scalpos {
            out.push("sin θ/(4r) − k not positive".into());
        }
        if !self.monotone {
            out.push("θ not monotone on each side of the straight run".into());
        }
        if !self.cross.passes() {
            out.push(format!(
                "cross-oracle difference {:e} exceeds {:e}",
                self.cross.max_diff_derived, self.cross.tolerance
            ));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuiltProfile {
    pub params: WellParams,
    pub raw: CurvatureProfile,
    pub smooth: CurvatureProfile,
    pub curve: ProfileCurve,
    pub manifold: WarpedManifold,
    pub checks: ProfileChecks,
    pub alpha: f64,
    pub beta: f64,
    pub sampling: Sampling,
}

/// Runs every check on a realized profile.
pub fn check_profile(
    curve: &ProfileCurve,
    m: &WarpedManifold,
    params: &WellParams,
) -> ProfileChecks {
    let (scalpos, _) = scalpos_margin(curve);
    let pole_slope_defect = match curve.mode {
        Mode::Well => Some(
            pole_slopes(m, 16)
                .iter()
                .map(|s| (s - 1.0).abs())
                .fold(0.0, f64::max),
        ),
        _ => None,
    };
    ProfileChecks {
        floor: params.floor(),
        min_r: min_scalar(curve, &m.bg),
        scalpos,
        monotone: angle_monotone(curve),
        cross: cross_oracle(curve, m, CROSS_TOL),
        collar: collar_deviation(m, 2.0 * params.delta).unwrap_or((0.0, 0.0, 0.0)),
        pole_slope_defect,
    }
}

fn attempt(
    raw: &CurvatureProfile,
    bg: &BackgroundSpace,
    opts: &BuildOptions,
) -> Result<BuiltProfile, ForgeError> {
    let sampling = opts.sampling(raw.params.delta0);
    let mut blend = BumpBlend::initial_for(raw);
    let mut last = ForgeError::AlphaTooLarge("no attempt".into());
    for _ in 0..=opts.max_alpha_halvings {
        let outcome = smooth_curvature(raw, blend).and_then(|smooth| {
            let curve = integrate_profile(&smooth, &sampling)?;
            let manifold = realize(&curve, bg)?;
            Ok((smooth, curve, manifold))
        });
        match outcome {
            Ok((smooth, curve, manifold)) => {
                let checks = check_profile(&curve, &manifold, &raw.params);
                if checks.admissible() {
                    let (alpha, beta) = smooth.blend.unwrap();
                    return Ok(BuiltProfile {
                        params: raw.params,
                        raw: raw.clone(),
                        smooth,
                        curve,
                        manifold,
                        checks,
                        alpha,
                        beta,
                        sampling,
                    });
                }
                last = ForgeError::AlphaTooLarge(checks.failures().join("; "));
            }
            Err(e @ (ForgeError::AlphaTooLarge(_) | ForgeError::NonPositiveRadius { .. })) => {
                last = e
            }
            Err(e) => return Err(e),
        }
        blend = BumpBlend::new(blend.alpha / 2.0);
    }
    Err(match last {
        ForgeError::AlphaTooLarge(msg) => ForgeError::AlphaTooLarge(msg),
        other => ForgeError::AlphaTooLarge(other.to_string()),
    })
}

fn build(
    params: WellParams,
    bg: &BackgroundSpace,
    opts: &BuildOptions,
    arcs: fn(WellParams, &BackgroundSpace) -> Result<CurvatureProfile, ForgeError>,
) -> Result<BuiltProfile, ForgeError> {
    let mut p = params;
    let mut last = None;
    for _ in 0..=opts.max_delta0_halvings {
        let result = arcs(p, bg).and_then(|raw| attempt(&raw, bg, opts));
        match result {
            Ok(b) => return Ok(b),
            Err(e @ (ForgeError::InvalidInput(_) | ForgeError::RadiusExceedsBall { .. })) => {
                return Err(e)
            }
            Err(e) => last = Some(e),
        }
        p.delta0 /= 2.0;
    }
    Err(last.unwrap())
}

/// Builds, smooths, integrates and realizes a well.
pub fn build_well(
    params: WellParams,
    bg: &BackgroundSpace,
    opts: &BuildOptions,
) -> Result<BuiltProfile, ForgeError> {
    build(params, bg, opts, build_well_arcs)
}

/// Builds, smooths, integrates and realizes a half tunnel.
pub fn build_half_tunnel(
    params: WellParams,
    bg: &BackgroundSpace,
    opts: &BuildOptions,
) -> Result<BuiltProfile, ForgeError> {
    build(params, bg, opts, build_half_tunnel_arcs)
}

/// Well parameters with δ₀ = δ/2.
pub fn well_params(delta: f64, d: f64, kappa: f64, j: f64) -> WellParams {
    WellParams {
        delta,
        delta0: delta / 2.0,
        d,
        kappa,
        j,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wells_admissible_across_j() {
        let bg = BackgroundSpace::unit_sphere(3);
        for j in [10.0, 20.0, 40.0] {
            let b = build_well(
                well_params(1.0 / j, 0.5, 6.0, j),
                &bg,
                &BuildOptions::default(),
            )
            .unwrap();
            assert!(b.checks.admissible(), "{:?}", b.checks.failures());
            assert!(b.checks.cross.passes());
            assert!(b.checks.pole_slope_defect.unwrap() < 1e-6);
            let (w, dw, ddw) = b.checks.collar;
            assert!(w < 1e-8 && dw < 1e-8 && ddw < 1e-6);
        }
    }

    #[test]
    fn half_tunnel_admissible() {
        let bg = BackgroundSpace::unit_sphere(3);
        let b = build_half_tunnel(
            well_params(0.1, 0.5, 6.0, 10.0),
            &bg,
            &BuildOptions::default(),
        )
        .unwrap();
        assert!(b.checks.admissible());
        assert!(b.checks.cross.passes());
        assert!(b.checks.pole_slope_defect.is_none());
    }

    #[test]
    fn ball_too_large_is_rejected() {
        let bg = BackgroundSpace::unit_sphere(3);
        let err = build_well(
            well_params(2.0, 0.5, 6.0, 10.0),
            &bg,
            &BuildOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(
            err,
            ForgeError::InvalidInput(_) | ForgeError::RadiusExceedsBall { .. }
        ));
    }
}
