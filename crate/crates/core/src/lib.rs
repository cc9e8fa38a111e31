//! Directional fields with optimized singularities on triangle meshes with
//! boundary, computed as minimal sections of a circle bundle.

pub mod bundle;
pub mod cli;
pub mod error;
pub mod extract;
pub mod mesh;
pub mod meshgen;
pub mod operators;
pub mod reduced;
pub mod solver;
pub mod sparse;

pub use num_complex::Complex64;
