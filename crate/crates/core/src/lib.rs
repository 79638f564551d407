//! HDG+ projections and the HDG+ hybridizable discontinuous Galerkin method
//! for diffusion on general polygonal meshes.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod elasticity;
pub mod error;
pub mod fields;
pub mod linalg;
pub mod mesh;
pub mod polyquad;
pub mod projection;
pub mod rates;
pub mod solver;
pub mod sparse;

pub use error::{Error, Result};
