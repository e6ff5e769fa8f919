use serde::{Deserialize, Serialize};

use super::angle::Angle;
use crate::smoothing::transition;

/// Geodesic curvature law on one segment, in the segment's local arclength σ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CurvatureLaw {
    Constant {
        k: f64,
    },
    /// k(σ) = from + (to − from)·g(σ/width).
    Blend {
        from: f64,
        to: f64,
        width: f64,
    },
}

impl CurvatureLaw {
    pub fn k_at(&self, sigma: f64) -> f64 {
        match *self {
            CurvatureLaw::Constant { k } => k,
            CurvatureLaw::Blend { from, to, width } => {
                from + (to - from) * transition::g(sigma / width)
            }
        }
    }

    /// ∫ k over a segment of the given length.
    pub fn total_turn(&self, length: f64) -> f64 {
        match *self {
            CurvatureLaw::Constant { k } => k * length,
            CurvatureLaw::Blend { from, to, width } => {
                debug_assert!((length - width).abs() <= 1e-12 * width);
                width * (from + (to - from) * transition::G_INTEGRAL)
            }
        }
    }

    pub fn max_abs_k(&self) -> f64 {
        match *self {
            CurvatureLaw::Constant { k } => k.abs(),
            CurvatureLaw::Blend { from, to, .. } => from.abs().max(to.abs()),
        }
    }

    pub fn is_blend(&self) -> bool {
        matches!(self, CurvatureLaw::Blend { .. })
    }
}

/// What a segment is in the construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Role {
    /// Vertical run of a round background down to the ball boundary.
    Background,
    /// Vertical line from r = 2δ to r = δ₀.
    InitialLine,
    /// Unit-curvature arc on [0, s₀].
    UnitArc,
    /// Arc i of the inductive construction (1 ≤ i ≤ m).
    Inductive(u32),
    /// Arc m+1, from θ̄ towards π/2.
    Approach,
    /// Straight run of length d.
    Straight,
    /// Negative-curvature arc m+3 back to θ = 0.
    Closing,
    /// Vertical run to the axis.
    Tip,
    /// θ ≡ π/2 end of a half tunnel.
    Plateau,
    /// Round cylinder inserted between two half tunnels.
    Cylinder,
    /// Smoothing blend of width α.
    Blend,
    /// Smoothing blend of width β restoring the terminal angle.
    Corrective,
}

/// Length of a segment: given, or "until the curve reaches the axis".
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Extent {
    Length(f64),
    ToAxis,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub role: Role,
    pub law: CurvatureLaw,
    pub extent: Extent,
    /// Exact tangent angle at the end of the segment.
    pub end: Angle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    Well,
    HalfTunnel,
    Background,
    Cylinder,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveState {
    pub t: f64,
    pub r: f64,
    pub angle: Angle,
}

/// Construction parameters of a well or half tunnel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WellParams {
    pub delta: f64,
    pub delta0: f64,
    pub d: f64,
    pub kappa: f64,
    pub j: f64,
}

impl WellParams {
    pub fn floor(&self) -> f64 {
        self.kappa - 1.0 / self.j
    }
}

/// Pre-smoothing arc data of the inductive construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArcLedger {
    pub s0: f64,
    /// r_i for 0 ≤ i ≤ m.
    pub radii: Vec<f64>,
    /// θ_i for 0 ≤ i ≤ m.
    pub thetas: Vec<f64>,
    /// k_i for 1 ≤ i ≤ m (index i − 1).
    pub curvatures: Vec<f64>,
    /// Δs_i for 1 ≤ i ≤ m (index i − 1).
    pub lengths: Vec<f64>,
    pub m: usize,
    pub theta_bar: f64,
    pub k_approach: f64,
    /// Radius the approach arc would reach at θ = π/2.
    pub r_full: f64,
    /// π/2 − θ̂ for wells.
    pub phi_hat: Option<f64>,
    pub k_closing: Option<f64>,
    /// Arclength from r = 2δ to s_m.
    pub s_m: f64,
    /// Arclength of everything but the straight run.
    pub length_without_straight: f64,
    pub total_length: f64,
}

impl ArcLedger {
    /// max r_i / r_{i−1} over 1 ≤ i ≤ m − 1.
    pub fn max_contraction(&self) -> f64 {
        (1..self.m)
            .map(|i| self.radii[i] / self.radii[i - 1])
            .fold(0.0, f64::max)
    }
}

/// Piecewise description of the geodesic curvature of a generating curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureProfile {
    pub mode: Mode,
    pub params: WellParams,
    /// Arclength coordinate of the curve start (s = 0 is the start of the unit arc).
    pub s_origin: f64,
    pub start: CurveState,
    pub segments: Vec<Segment>,
    pub ledger: Option<ArcLedger>,
    /// Blend widths (α, β) once smoothed.
    pub blend: Option<(f64, f64)>,
    /// Radius at the end of each segment, when known independently of integration.
    /// Pieces are then integrated from the declared radius of their predecessor,
    /// which keeps the exponentially contracting arcs well conditioned.
    #[serde(default)]
    pub end_radii: Vec<f64>,
}

impl CurvatureProfile {
    /// Shortest segment with a given length.
    pub fn shortest_segment(&self) -> f64 {
        self.segments
            .iter()
            .filter_map(|s| match s.extent {
                Extent::Length(l) => Some(l),
                Extent::ToAxis => None,
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Vertical background line from the antipodal pole (r = π/√K0) down to `r_end`.
    pub fn background_line(r_start: f64, r_end: f64, params: WellParams) -> Self {
        Self {
            mode: Mode::Background,
            params,
            s_origin: 0.0,
            start: CurveState {
                t: 0.0,
                r: r_start,
                angle: Angle::ZERO,
            },
            segments: vec![Segment {
                role: Role::Background,
                law: CurvatureLaw::Constant { k: 0.0 },
                extent: Extent::Length(r_start - r_end),
                end: Angle::ZERO,
            }],
            ledger: None,
            blend: None,
            end_radii: vec![r_end],
        }
    }

    /// Round cylinder θ ≡ π/2 of radius c and length d.
    pub fn cylinder(c: f64, d: f64, t_start: f64, params: WellParams) -> Self {
        Self {
            mode: Mode::Cylinder,
            params,
            s_origin: 0.0,
            start: CurveState {
                t: t_start,
                r: c,
                angle: Angle::RIGHT,
            },
            segments: vec![Segment {
                role: Role::Cylinder,
                law: CurvatureLaw::Constant { k: 0.0 },
                extent: Extent::Length(d),
                end: Angle::RIGHT,
            }],
            ledger: None,
            blend: None,
            end_radii: vec![c],
        }
    }
}
