//! Bump-blend curvature smoothing and variable-width mollification.

mod blend;
mod mollifier;
pub mod transition;

pub use blend::*;
pub use mollifier::*;
