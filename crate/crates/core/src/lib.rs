//! Mimetic finite element solvers for the rotating shallow-water equations on
//! doubly-periodic planar meshes.

pub mod error;
pub mod linalg;
pub mod mesh;
pub mod poly;
pub mod femspaces;
pub mod feec_ops;
pub mod swe_primal;
pub mod advect_dg;
pub mod swe_dual;
pub mod driver;

pub use error::{Error, Result};
