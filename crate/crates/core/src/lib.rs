//! Warped-product manifolds with scalar curvature bounded below: wells,
//! tunnels, glued sequences and their convergence diagnostics.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod build;
pub mod convergence;
pub mod curve;
pub mod error;
pub mod gluing;
pub mod profile_io;
pub mod quad;
pub mod report;
pub mod sequences;
pub mod smoothing;
pub mod space_form;
pub mod sphere_maps;
pub mod warped;

pub use error::ForgeError;
