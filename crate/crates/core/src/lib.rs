//! Numerical toolkit for the orbit geometry of the extended future tube.
//!
//! The crate models the future tube in its 2×2 matrix picture, the actions of
//! the Lorentz group SL₂(ℂ) and of its complexification SL₂(ℂ) × SL₂(ℂ), the
//! invariant plurisubharmonic exhaustion `φ = Σ 1 / det Im Zʲ` with its moment
//! map, orbit minimization of `φ`, the Gram-matrix invariant quotient, and the
//! boundary estimates that make `φ` an exhaustion. The [`experiments`] module
//! bundles these into seeded, reproducible verification suites.

pub mod boundary;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod lie;
pub mod psh;
pub mod quotient;
pub mod reduction;
pub mod rng;

pub use error::{Error, Result};
pub use geometry::{
    hermitian_im, in_tube, lorentz_product, matrix_lorentz_product, FourVector, HermitianMatrix,
    Mat2, MatrixPoint, TuplePoint, C64, I, ONE, ZERO,
};
pub use lie::{AlgebraVector, GroupPair, TangentVector};
