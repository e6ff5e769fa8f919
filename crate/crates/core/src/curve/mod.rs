//! Generating curves γ(s) = (t(s), r(s)) with dγ/ds = (sin θ, −cos θ), dθ/ds = k.

mod angle;
mod arcs;
mod integrate;
mod profile;

pub use angle::Angle;
pub use arcs::*;
pub use integrate::*;
pub use profile::*;
