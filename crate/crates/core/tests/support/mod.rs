//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

pub mod fock;

use nhtdse_core::linalg::{c, ComplexMatrix, ComplexVector};
use rand::Rng;

/// Random hermitian positive-definite matrix with eigenvalues in `[lo, hi]`.
pub fn random_pd<R: Rng>(dim: usize, lo: f64, hi: f64, rng: &mut R) -> ComplexMatrix {
    let a = ComplexMatrix::from_fn(dim, dim, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    let q = a.qr().q();
    let d = ComplexMatrix::from_diagonal(&ComplexVector::from_fn(dim, |_, _| c(rng.random_range(lo..hi), 0.0)));
    let m = &q * d * q.adjoint();
    (&m + m.adjoint()) * c(0.5, 0.0)
}

pub fn random_vector<R: Rng>(dim: usize, rng: &mut R) -> ComplexVector {
    ComplexVector::from_fn(dim, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

/// Random non-defective matrix `S diag(E) S⁻¹` with well-separated eigenvalues.
pub fn random_nh<R: Rng>(dim: usize, rng: &mut R) -> ComplexMatrix {
    let s = ComplexMatrix::identity(dim, dim)
        + ComplexMatrix::from_fn(dim, dim, |_, _| c(rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3)));
    let e = ComplexVector::from_fn(dim, |n, _| c(n as f64 + rng.random_range(-0.2..0.2), rng.random_range(-0.5..0.5)));
    &s * ComplexMatrix::from_diagonal(&e) * s.clone().try_inverse().unwrap()
}
