use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ForgeError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("no admissible s0 below delta0/2 (delta0 = {delta0:e})")]
    NoAdmissibleS0 { delta0: f64 },
    #[error("stop-angle interval is empty")]
    StopAngleInfeasible,
    #[error("radius became non-positive at s = {s:e} before the terminal segment")]
    NonPositiveRadius { s: f64 },
    #[error("unit-speed defect {defect:e} exceeds tolerance {tol:e}")]
    StepTooCoarse { defect: f64, tol: f64 },
    #[error("smoothing admissibility failed after 8 halvings of alpha: {0}")]
    AlphaTooLarge(String),
    #[error("mollification scale {epsilon:e} is not below epsilon0/10 = {limit:e}")]
    ScaleTooLarge { epsilon: f64, limit: f64 },
    #[error("curve radius {r:e} exceeds the background ball {limit:e}")]
    RadiusExceedsBall { r: f64, limit: f64 },
    #[error("warp vanishes at s = {s:e}")]
    PoleSingularity { s: f64 },
    #[error("half-tunnel radii disagree: {c1:e} vs {c2:e}")]
    RadiusMismatch { c1: f64, c2: f64 },
    #[error("sewing schedule infeasible: {0}")]
    ScheduleInfeasible(String),
    #[error("manifold has no neck")]
    NoNeck,
    #[error("map is not certified")]
    CertificationMissing,
    #[error("parameter a cannot satisfy the strict lower bound")]
    InfeasibleA,
    #[error("verification failed after retries: {0}")]
    VerificationFailed(String),
    #[error("profile format error: {0}")]
    Format(String),
}
