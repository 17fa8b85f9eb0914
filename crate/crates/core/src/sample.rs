//! Seeded random instances shared by the harness and the test suites.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::surface::HolomorphicPolynomial;
use crate::{ComplexMatrix, ComplexVector, RealMatrix, C64};

pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

pub fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> RealMatrix {
    RealMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

pub fn complex_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| complex_normal(rng))
}

/// `(G + Gᵗ)/2` for a complex Gaussian `G`.
pub fn symmetric_complex<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    let g = complex_matrix(n, n, rng);
    (&g + g.transpose()) * C64::new(0.5, 0.0)
}

pub fn unit_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexVector {
    loop {
        let v = ComplexVector::from_fn(n, |_, _| complex_normal(rng));
        let norm = v.norm();
        if norm > 1e-8 {
            return v / C64::new(norm, 0.0);
        }
    }
}

/// Uniform point of the cube of side `side` centered at the origin.
pub fn point<R: Rng + ?Sized>(nvars: usize, side: f64, rng: &mut R) -> ComplexVector {
    let h = side / 2.0;
    ComplexVector::from_fn(nvars, |_, _| {
        C64::new(rng.random_range(-h..=h), rng.random_range(-h..=h))
    })
}

/// `½ z·z` plus Gaussian coefficients of size `scale` on every monomial of
/// degree `3..=degree`.
pub fn polynomial<R: Rng + ?Sized>(nvars: usize, degree: u32, scale: f64, rng: &mut R) -> HolomorphicPolynomial {
    let mut p = HolomorphicPolynomial::half_dot(nvars);
    for alpha in crate::surface::multi_indices(nvars, 3, degree) {
        p.add_term(alpha, complex_normal(rng) * scale)
            .expect("degree within cap");
    }
    p
}

/// Random polynomial with every coefficient of degree `2..=degree` Gaussian.
pub fn generic_polynomial<R: Rng + ?Sized>(nvars: usize, degree: u32, rng: &mut R) -> HolomorphicPolynomial {
    let mut p = HolomorphicPolynomial::zero(nvars);
    for alpha in crate::surface::multi_indices(nvars, 2, degree) {
        p.add_term(alpha, complex_normal(rng)).expect("degree within cap");
    }
    p
}
