//! Certification of simple multiple roots of square polynomial systems.
//!
//! The crate computes the local multiplicity structure of an isolated zero,
//! decides whether one deflation step regularizes it, evaluates separation
//! bounds around it and certifies that a ball around an approximate root
//! holds at least `2^κ` zeros.
//!
//! Module map:
//! - [`poly`]: parsing, evaluation and derivative tensors of polynomial systems.
//! - [`numlin`]: complex SVD, numerical kernels, norms.
//! - [`dualspace`]: breadth, depth and multiplicity from Macaulay matrices.
//! - [`deflate`]: one-step deflation and the characterization matrix.
//! - [`certify`]: the operators, `γ` bounds, universal constant and criteria.
//! - [`commands`]: the pipelines behind the `singcert` binary and its reports.

pub mod certify;
pub mod commands;
pub mod deflate;
pub mod dualspace;
pub mod numlin;
pub mod poly;

pub use num_complex::Complex64;
