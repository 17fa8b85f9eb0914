//! Numerical verification toolkit for Fourier extension operators on complex
//! hypersurfaces.
//!
//! A complex hypersurface is the graph of a holomorphic polynomial
//! `φ: ℂ^{n-1} → ℂ`, viewed as a codimension-2 real submanifold of `ℝ^{2n}`.
//! The crate is split by concern:
//!
//! - [`linalg`]: pairing, realification, determinants, wedge transversality,
//!   Takagi factorization.
//! - [`surface`]: holomorphic polynomials, derivatives, normals, normalization.
//! - [`bl`]: Brascamp–Lieb data built from surface points and their checks.
//! - [`extension`]: oscillatory quadrature for the extension operator.
//! - [`kakeya`]: Monte-Carlo overlap integrals of complex-line tubes.
//! - [`bg`]: cap/box decomposition with broad/narrow classification.
//! - [`acs`]: almost complex structures on `ℝ^{2m}`.
//! - [`sample`]: seeded random instances for experiments and tests.
//!
//! Real coordinates of a point `z ∈ ℂ^m` are always interleaved:
//! `(x₁, y₁, x₂, y₂, …)` with `z_j = x_j + i y_j`.

// `!(x > 0.0)` style range checks are deliberate: NaN must fail them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acs;
pub mod bg;
pub mod bl;
mod error;
pub mod extension;
pub mod kakeya;
pub mod linalg;
pub mod rng;
pub mod sample;
pub mod surface;

pub use error::{LabError, Result};
pub use num_complex::Complex64 as C64;

/// Complex column vector.
pub type ComplexVector = nalgebra::DVector<C64>;
/// Dense complex matrix.
pub type ComplexMatrix = nalgebra::DMatrix<C64>;
/// Dense real matrix.
pub type RealMatrix = nalgebra::DMatrix<f64>;
/// Real column vector.
pub type RealVector = nalgebra::DVector<f64>;
