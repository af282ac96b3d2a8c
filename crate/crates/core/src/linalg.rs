//! Dense complex matrix helpers shared by the physics modules.
//!
//! Matrices are `nalgebra` dynamic matrices over `Complex<f64>`. The
//! routines here cover what the rest of the crate needs and nothing more:
//! hermitian square roots, polar factors, conditioning estimates and a JSON
//! encoding used by fixtures (`[[ [re, im], ... ], ...]`, row-major).

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde_json::Value;

use crate::error::{Error, Result};

pub type ComplexMatrix = DMatrix<Complex64>;
pub type ComplexVector = DVector<Complex64>;

pub const I: Complex64 = Complex64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(n: usize) -> ComplexMatrix {
    ComplexMatrix::identity(n, n)
}

/// Builds a square matrix from row-major `(re, im)` pairs.
pub fn from_rows(rows: &[&[(f64, f64)]]) -> ComplexMatrix {
    let n = rows.len();
    ComplexMatrix::from_fn(n, rows.first().map_or(0, |r| r.len()), |i, j| {
        let (re, im) = rows[i][j];
        c(re, im)
    })
}

pub fn from_real_rows(rows: &[&[f64]]) -> ComplexMatrix {
    let n = rows.len();
    ComplexMatrix::from_fn(n, rows.first().map_or(0, |r| r.len()), |i, j| {
        c(rows[i][j], 0.0)
    })
}

pub fn diag(entries: &[Complex64]) -> ComplexMatrix {
    ComplexMatrix::from_diagonal(&ComplexVector::from_column_slice(entries))
}

pub fn is_finite(m: &ComplexMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub fn is_square(m: &ComplexMatrix) -> bool {
    m.nrows() == m.ncols()
}

/// Frobenius norm of `m - m†`.
pub fn hermitian_defect(m: &ComplexMatrix) -> f64 {
    (m - m.adjoint()).norm()
}

pub fn is_hermitian(m: &ComplexMatrix, tol: f64) -> bool {
    is_square(m) && hermitian_defect(m) <= tol * m.norm().max(1.0)
}

/// `⟨a|b⟩ = a†b`.
pub fn inner(a: &ComplexVector, b: &ComplexVector) -> Complex64 {
    a.dotc(b)
}

/// `⟨psi|m|psi⟩`.
pub fn expectation(psi: &ComplexVector, m: &ComplexMatrix) -> Complex64 {
    psi.dotc(&(m * psi))
}

/// Symmetrizes an (almost) hermitian matrix: `(m + m†)/2`.
pub fn hermitian_part(m: &ComplexMatrix) -> ComplexMatrix {
    (m + m.adjoint()) * c(0.5, 0.0)
}

fn hermitian_eigen(m: &ComplexMatrix) -> Result<(Vec<f64>, ComplexMatrix)> {
    if !is_finite(m) {
        return Err(Error::NonFinite);
    }
    if !is_square(m) {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            found: m.ncols(),
        });
    }
    if !is_hermitian(m, 1e-10) {
        return Err(Error::NotPositiveDefinite {
            reason: format!("hermitian defect {:e}", hermitian_defect(m)),
        });
    }
    let eig = hermitian_part(m)
        .try_symmetric_eigen(f64::EPSILON, 0)
        .ok_or(Error::NoConvergence)?;
    Ok((eig.eigenvalues.iter().copied().collect(), eig.eigenvectors))
}

fn spectral_map(values: &[f64], vectors: &ComplexMatrix, f: impl Fn(f64) -> f64) -> ComplexMatrix {
    let mapped: Vec<Complex64> = values.iter().map(|&v| c(f(v), 0.0)).collect();
    let out = vectors * diag(&mapped) * vectors.adjoint();
    hermitian_part(&out)
}

fn require_positive(values: &[f64]) -> Result<()> {
    match values.iter().copied().fold(f64::INFINITY, f64::min) {
        min if min > 0.0 => Ok(()),
        min => Err(Error::NotPositiveDefinite {
            reason: format!("smallest eigenvalue {min:e}"),
        }),
    }
}

/// Hermitian square root of a hermitian positive-definite matrix, taken
/// through its spectral decomposition.
pub fn matrix_sqrt_pd(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let (values, vectors) = hermitian_eigen(m)?;
    require_positive(&values)?;
    Ok(spectral_map(&values, &vectors, f64::sqrt))
}

/// `(√M, (√M)⁻¹)` from a single spectral decomposition.
pub fn matrix_sqrt_and_inverse_pd(m: &ComplexMatrix) -> Result<(ComplexMatrix, ComplexMatrix)> {
    let (values, vectors) = hermitian_eigen(m)?;
    require_positive(&values)?;
    Ok((
        spectral_map(&values, &vectors, f64::sqrt),
        spectral_map(&values, &vectors, |v| 1.0 / v.sqrt()),
    ))
}

/// Extreme eigenvalues `(min, max)` of a hermitian matrix.
pub fn hermitian_spectrum_bounds(m: &ComplexMatrix) -> Result<(f64, f64)> {
    let (values, _) = hermitian_eigen(m)?;
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok((min, max))
}

/// Polar decomposition `m = u·p` with `u` unitary and `p` hermitian
/// positive semi-definite, computed from the SVD `m = X Σ Y†` as
/// `u = X Y†`, `p = Y Σ Y†`. `u` does not depend on how a degenerate
/// singular subspace is split, so the result is deterministic.
pub fn polar(m: &ComplexMatrix) -> Result<(ComplexMatrix, ComplexMatrix)> {
    if !is_finite(m) {
        return Err(Error::NonFinite);
    }
    let svd = m
        .clone()
        .try_svd(true, true, f64::EPSILON, 0)
        .ok_or(Error::NoConvergence)?;
    let x = svd.u.ok_or(Error::NoConvergence)?;
    let y_adj = svd.v_t.ok_or(Error::NoConvergence)?;
    let sigma: Vec<Complex64> = svd.singular_values.iter().map(|&s| c(s, 0.0)).collect();
    let u = &x * &y_adj;
    let p = hermitian_part(&(y_adj.adjoint() * diag(&sigma) * &y_adj));
    Ok((u, p))
}

pub fn singular_value_bounds(m: &ComplexMatrix) -> (f64, f64) {
    let sv = m.singular_values();
    let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
    let max = sv.iter().copied().fold(0.0, f64::max);
    (min, max)
}

/// 2-norm condition number; infinite for singular input.
pub fn condition_number(m: &ComplexMatrix) -> f64 {
    let (min, max) = singular_value_bounds(m);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

pub fn try_inverse(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    m.clone()
        .try_inverse()
        .ok_or_else(|| Error::InvalidInput("matrix is singular".into()))
}

/// Distance between two states after removing their relative global phase,
/// `min_θ ‖a − e^{iθ} b‖` for unit-normalized `a`, `b`.
pub fn phase_insensitive_distance(a: &ComplexVector, b: &ComplexVector) -> f64 {
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 || nb == 0.0 {
        return (na - nb).abs();
    }
    let a = a / c(na, 0.0);
    let b = b / c(nb, 0.0);
    let overlap = b.dotc(&a);
    let phase = if overlap.norm() > 0.0 {
        overlap / overlap.norm()
    } else {
        c(1.0, 0.0)
    };
    (a - b * phase).norm()
}

/// JSON encoding of complex matrices as nested `[re, im]` pairs.
pub mod json {
    use super::*;

    pub fn to_value(m: &ComplexMatrix) -> Value {
        Value::Array(
            m.row_iter()
                .map(|row| {
                    Value::Array(
                        row.iter()
                            .map(|z| serde_json::json!([z.re, z.im]))
                            .collect(),
                    )
                })
                .collect(),
        )
    }

    pub fn from_value(value: &Value) -> Result<ComplexMatrix> {
        let bad = |what: &str| Error::InvalidInput(format!("matrix JSON: {what}"));
        let rows = value.as_array().ok_or_else(|| bad("expected array of rows"))?;
        let mut entries = Vec::new();
        let mut ncols = None;
        for row in rows {
            let row = row.as_array().ok_or_else(|| bad("row is not an array"))?;
            match ncols {
                None => ncols = Some(row.len()),
                Some(n) if n != row.len() => return Err(bad("ragged rows")),
                _ => {}
            }
            for pair in row {
                let pair = pair.as_array().ok_or_else(|| bad("entry is not [re, im]"))?;
                if pair.len() != 2 {
                    return Err(bad("entry is not [re, im]"));
                }
                let re = pair[0].as_f64().ok_or_else(|| bad("non-numeric re"))?;
                let im = pair[1].as_f64().ok_or_else(|| bad("non-numeric im"))?;
                entries.push(c(re, im));
            }
        }
        let ncols = ncols.unwrap_or(0);
        let m = ComplexMatrix::from_row_slice(rows.len(), ncols, &entries);
        if !is_finite(&m) {
            return Err(Error::NonFinite);
        }
        Ok(m)
    }

    /// Parses rows of `[re, im]` pairs already deserialized from config files.
    pub fn from_pairs(rows: &[Vec<[f64; 2]>]) -> Result<ComplexMatrix> {
        let ncols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(Error::InvalidInput("matrix rows have unequal length".into()));
        }
        let entries: Vec<Complex64> = rows.iter().flatten().map(|&[re, im]| c(re, im)).collect();
        let m = ComplexMatrix::from_row_slice(rows.len(), ncols, &entries);
        if !is_finite(&m) {
            return Err(Error::NonFinite);
        }
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sqrt_of_identity_and_diagonal() {
        let id = identity(3);
        assert!((matrix_sqrt_pd(&id).unwrap() - &id).norm() < 1e-14);
        let d = diag(&[c(4.0, 0.0), c(9.0, 0.0)]);
        let r = matrix_sqrt_pd(&d).unwrap();
        assert!((r - diag(&[c(2.0, 0.0), c(3.0, 0.0)])).norm() < 1e-14);
    }

    #[test]
    fn sqrt_reconstructs_pd_input() {
        // Fixed 4x4 PD matrix B†B + I.
        let b = ComplexMatrix::from_fn(4, 4, |i, j| c((i * 3 + j) as f64 * 0.37 - 1.1, (i as f64 - j as f64) * 0.21));
        let m = b.adjoint() * &b + identity(4);
        let r = matrix_sqrt_pd(&m).unwrap();
        assert!(hermitian_defect(&r) < 1e-12);
        assert!((&r * &r - &m).norm() < 1e-10 * m.norm());
    }

    #[test]
    fn sqrt_rejects_indefinite_and_non_hermitian() {
        let m = diag(&[c(1.0, 0.0), c(-1.0, 0.0)]);
        assert!(matches!(matrix_sqrt_pd(&m), Err(Error::NotPositiveDefinite { .. })));
        let m = from_real_rows(&[&[1.0, 1.0], &[0.0, 1.0]]);
        assert!(matches!(matrix_sqrt_pd(&m), Err(Error::NotPositiveDefinite { .. })));
    }

    #[test]
    fn polar_factors_multiply_back() {
        let m = ComplexMatrix::from_fn(3, 3, |i, j| c(1.0 + i as f64 - 0.5 * j as f64, 0.3 * (i * j) as f64));
        let (u, p) = polar(&m).unwrap();
        assert!((u.adjoint() * &u - identity(3)).norm() < 1e-12);
        assert!(hermitian_defect(&p) < 1e-12);
        assert!((&u * &p - &m).norm() < 1e-12 * m.norm());
    }

    #[test]
    fn json_round_trip_and_rejection() {
        let m = from_rows(&[&[(1.0, -2.0), (0.5, 0.0)], &[(0.0, 3.0), (-1.0, 0.25)]]);
        let v = json::to_value(&m);
        assert_eq!(v.to_string(), "[[[1.0,-2.0],[0.5,0.0]],[[0.0,3.0],[-1.0,0.25]]]");
        assert_eq!(json::from_value(&v).unwrap(), m);
        assert!(json::from_value(&serde_json::json!([[[1.0]]])).is_err());
        assert!(json::from_value(&serde_json::json!([[[1.0, 0.0]], []])).is_err());
    }

    #[test]
    fn distance_ignores_global_phase() {
        let a = ComplexVector::from_vec(vec![c(1.0, 0.0), c(0.0, 1.0)]);
        let b = &a * c(0.0, 1.0) * c(3.0, 0.0);
        assert!(phase_insensitive_distance(&a, &b) < 1e-15);
    }
}
