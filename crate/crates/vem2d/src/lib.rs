//! Divergence-free virtual elements for the 2D steady Navier-Stokes
//! equations on general polygonal meshes.
//!
//! The crate provides the velocity-pressure scheme, the equivalent curl
//! (stream-potential) scheme built on the discrete Stokes complex, and a C1
//! stream-function scheme, together with the mesh tooling, exactness checks,
//! and convergence harness used to validate them.

pub mod dofmap;
pub mod element;
pub mod geometry;
pub mod jet;
pub mod mesh;
pub mod poly;
pub mod problems;
pub mod quad;
pub mod sparse;
pub mod assemble;
