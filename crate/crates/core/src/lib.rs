//! High-order Green operators on the disk and the polydisc.
//!
//! The crate evaluates the Cauchy/Pompeiu transform `T`, its conjugate `T̄`,
//! the boundary operators `S`, `S̄`, and iterated compositions `T^μ T̄^ν`
//! through single-integral closed-form kernels. Those kernels are used to
//! build every solution of `∂^μ ∂̄^ν u = A` on a disk from holomorphic free
//! data. Each closed form is paired with an independent brute-force
//! reference in [`oracle`].
//!
//! Conventions used throughout:
//!
//! * `∂ = (∂_x − i∂_y)/2`, `∂̄ = (∂_x + i∂_y)/2`, so `Δ = 4∂∂̄`.
//! * `dζ̄∧dζ = 2i dx dy`; area quadrature weights carry the `2i`.
//! * Boundary circles are traversed counterclockwise.

pub mod config;
pub mod expr;
pub mod geometry;
pub mod kernels;
pub mod operators;
pub mod oracle;
pub mod quadrature;
pub mod solver;
pub mod suites;

pub use geometry::{ComplexScalar, DiskDomain, MultiIndex, PolydiscDomain};
pub use num_complex::Complex64;
