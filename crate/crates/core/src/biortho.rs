//! Biorthogonal eigensystems of non-hermitian matrices.
//!
//! For a non-defective `H` the right eigenvectors `|n⟩` are the columns of
//! `R`, and the left covectors `⟨⟨n|` are the rows of `R⁻¹`, so the pairing
//! `⟨⟨n|m⟩ = δ_nm` holds by construction. The remaining freedom (one complex
//! scale per pair) is fixed by `⟨n|n⟩ = 1` and a real, positive first
//! non-negligible component of `|n⟩`.

use std::cmp::Ordering;

use nalgebra::Schur;
use num_complex::Complex64;

use crate::error::{check_dim, Error, Result};
use crate::linalg::{c, is_finite, is_square, singular_value_bounds, ComplexMatrix, ComplexVector};

/// Default threshold on the smallest singular value of the (column
/// normalized) right eigenvector matrix below which `H` counts as defective.
pub const DEFAULT_DEFECT_TOL: f64 = 1e-8;

/// Minimum overlap accepted when matching eigenstates between neighbouring
/// parameter points.
pub const TRACKING_THRESHOLD: f64 = 0.5;

/// Components below this magnitude are skipped when choosing the phase gauge.
const PHASE_GAUGE_CUTOFF: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct BiorthoBasis {
    eigenvalues: Vec<Complex64>,
    /// Columns are the right eigenvectors `|n⟩`.
    right: ComplexMatrix,
    /// Rows are the left covectors `⟨⟨n|`.
    left: ComplexMatrix,
}

impl BiorthoBasis {
    /// Assembles a basis from explicit right vectors (columns) and left
    /// covectors (rows). No gauge is imposed; biorthonormality is checked.
    pub fn from_parts(
        eigenvalues: Vec<Complex64>,
        right: ComplexMatrix,
        left: ComplexMatrix,
    ) -> Result<Self> {
        let n = eigenvalues.len();
        check_dim(n, right.nrows())?;
        check_dim(n, right.ncols())?;
        check_dim(n, left.nrows())?;
        check_dim(n, left.ncols())?;
        let basis = Self {
            eigenvalues,
            right,
            left,
        };
        let defect = basis.biorthonormality_defect();
        if defect > 1e-8 {
            return Err(Error::InvalidInput(format!(
                "left/right vectors are not biorthonormal (defect {defect:e})"
            )));
        }
        Ok(basis)
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[Complex64] {
        &self.eigenvalues
    }

    pub fn right_matrix(&self) -> &ComplexMatrix {
        &self.right
    }

    pub fn left_matrix(&self) -> &ComplexMatrix {
        &self.left
    }

    /// `|n⟩`
    pub fn right(&self, n: usize) -> ComplexVector {
        self.right.column(n).into_owned()
    }

    /// `|n⟩⟩`, the hermitian conjugate of the left covector `⟨⟨n|`.
    pub fn left_ket(&self, n: usize) -> ComplexVector {
        self.left.row(n).adjoint()
    }

    /// `⟨⟨n|v⟩`
    pub fn left_apply(&self, n: usize, v: &ComplexVector) -> Complex64 {
        (self.left.row(n) * v)[(0, 0)]
    }

    /// `‖L·R − I‖_F`
    pub fn biorthonormality_defect(&self) -> f64 {
        let n = self.dim();
        (&self.left * &self.right - ComplexMatrix::identity(n, n)).norm()
    }

    /// `‖H|n⟩ − E_n|n⟩‖` maximized over `n`.
    pub fn residual(&self, h: &ComplexMatrix) -> f64 {
        (0..self.dim())
            .map(|n| {
                let v = self.right(n);
                (h * &v - v * self.eigenvalues[n]).norm()
            })
            .fold(0.0, f64::max)
    }

    /// Relabels the states: entry `k` of the result is state `perm[k]` of
    /// `self`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let n = self.dim();
        let right = ComplexMatrix::from_fn(n, n, |i, k| self.right[(i, perm[k])]);
        let left = ComplexMatrix::from_fn(n, n, |k, j| self.left[(perm[k], j)]);
        Self {
            eigenvalues: perm.iter().map(|&p| self.eigenvalues[p]).collect(),
            right,
            left,
        }
    }

    /// Multiplies `|n⟩` by `phase` and `⟨⟨n|` by its inverse.
    pub fn rephased(&self, n: usize, phase: Complex64) -> Self {
        let mut out = self.clone();
        out.right.column_mut(n).scale_mut_complex(phase);
        out.left.row_mut(n).scale_mut_complex(phase.inv());
        out
    }
}

trait ScaleComplex {
    fn scale_mut_complex(&mut self, s: Complex64);
}

impl<R: nalgebra::Dim, C: nalgebra::Dim, S: nalgebra::StorageMut<Complex64, R, C>> ScaleComplex
    for nalgebra::Matrix<Complex64, R, C, S>
{
    fn scale_mut_complex(&mut self, s: Complex64) {
        for z in self.iter_mut() {
            *z *= s;
        }
    }
}

/// Biorthogonal eigendecomposition with the crate's gauge convention.
///
/// Eigenvalues are sorted by `(Re, Im)` ascending. Use [`track_states`] to
/// keep labels continuous along a parameter path.
pub fn eig_biortho(h: &ComplexMatrix, tol: f64) -> Result<BiorthoBasis> {
    if !is_square(h) {
        return Err(Error::DimensionMismatch {
            expected: h.nrows(),
            found: h.ncols(),
        });
    }
    if !is_finite(h) {
        return Err(Error::NonFinite);
    }
    let n = h.nrows();
    if n == 0 {
        return Err(Error::InvalidInput("empty matrix".into()));
    }

    let schur = Schur::try_new(h.clone(), f64::EPSILON, 0).ok_or(Error::NoConvergence)?;
    let (q, t) = schur.unpack();
    let scale = t.norm().max(f64::MIN_POSITIVE);
    let small = f64::EPSILON * scale;

    let mut pairs: Vec<(Complex64, ComplexVector)> = (0..n)
        .map(|k| {
            let lambda = t[(k, k)];
            // Back substitution on the upper triangular factor.
            let mut y = ComplexVector::zeros(n);
            y[k] = c(1.0, 0.0);
            for i in (0..k).rev() {
                let mut acc = c(0.0, 0.0);
                for j in i + 1..=k {
                    acc += t[(i, j)] * y[j];
                }
                let mut denom = t[(i, i)] - lambda;
                if denom.norm() < small {
                    denom = c(small, 0.0);
                }
                y[i] = -acc / denom;
            }
            let mut v = &q * y;
            normalize_with_gauge(&mut v);
            (lambda, v)
        })
        .collect();

    pairs.sort_by(|a, b| {
        a.0.re
            .partial_cmp(&b.0.re)
            .unwrap_or(Ordering::Equal)
            .then(a.0.im.partial_cmp(&b.0.im).unwrap_or(Ordering::Equal))
    });

    let eigenvalues: Vec<Complex64> = pairs.iter().map(|p| p.0).collect();
    let right = ComplexMatrix::from_columns(&pairs.iter().map(|p| p.1.clone()).collect::<Vec<_>>());

    let (sigma_min, _) = singular_value_bounds(&right);
    if !(sigma_min > tol) {
        return Err(Error::Defective { sigma_min, tol });
    }
    let left = right
        .clone()
        .try_inverse()
        .ok_or(Error::Defective { sigma_min, tol })?;

    Ok(BiorthoBasis {
        eigenvalues,
        right,
        left,
    })
}

fn normalize_with_gauge(v: &mut ComplexVector) {
    let norm = v.norm();
    if norm == 0.0 || !norm.is_finite() {
        return;
    }
    let first = v
        .iter()
        .copied()
        .find(|z| z.norm() > PHASE_GAUGE_CUTOFF * norm)
        .unwrap_or(c(1.0, 0.0));
    let phase = first.conj() / first.norm();
    let factor = phase / norm;
    for z in v.iter_mut() {
        *z *= factor;
    }
    // Pin the gauge component to exactly real.
    if let Some(z) = v.iter_mut().find(|z| z.norm() > PHASE_GAUGE_CUTOFF) {
        z.im = 0.0;
    }
}

/// Matches the states of `next` to those of `prev` by greedy best overlap
/// `|⟨⟨n_prev|m_next⟩|`. Entry `k` of the returned permutation is the index
/// in `next` of the state continuing `prev`'s state `k`, so
/// `next.permuted(&perm)` carries `prev`'s labels.
pub fn track_states(prev: &BiorthoBasis, next: &BiorthoBasis) -> Result<Vec<usize>> {
    check_dim(prev.dim(), next.dim())?;
    let n = prev.dim();
    let overlaps = &prev.left * &next.right;
    let mut candidates: Vec<(f64, usize, usize)> = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| (overlaps[(i, j)].norm(), i, j))
        .collect();
    candidates.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(Ordering::Equal).then((a.1, a.2).cmp(&(b.1, b.2))));

    let mut perm = vec![usize::MAX; n];
    let mut taken = vec![false; n];
    let mut worst = f64::INFINITY;
    for (overlap, i, j) in candidates {
        if perm[i] != usize::MAX || taken[j] {
            continue;
        }
        perm[i] = j;
        taken[j] = true;
        worst = worst.min(overlap);
    }
    if !(worst >= TRACKING_THRESHOLD) {
        return Err(Error::TrackingLost {
            overlap: worst,
            threshold: TRACKING_THRESHOLD,
        });
    }
    Ok(perm)
}

/// Eigendecomposes `h` and relabels the result to continue `prev`.
pub fn eig_tracked(h: &ComplexMatrix, prev: &BiorthoBasis, tol: f64) -> Result<BiorthoBasis> {
    let next = eig_biortho(h, tol)?;
    let perm = track_states(prev, &next)?;
    Ok(next.permuted(&perm))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{diag, from_real_rows, identity};

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() < tol
    }

    #[test]
    fn diagonal_matrix_gives_standard_basis() {
        let h = diag(&[c(1.0, 0.0), c(0.0, 2.0)]);
        let b = eig_biortho(&h, DEFAULT_DEFECT_TOL).unwrap();
        // (Re, Im) ordering puts 2i first.
        assert_eq!(b.eigenvalues(), &[c(0.0, 2.0), c(1.0, 0.0)]);
        let expected = from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        assert!((b.right_matrix() - &expected).norm() < 1e-14);
        assert!((b.left_matrix() - expected.transpose()).norm() < 1e-14);
    }

    #[test]
    fn upper_triangular_two_by_two() {
        let h = from_real_rows(&[&[1.0, 1.0], &[0.0, 2.0]]);
        let b = eig_biortho(&h, DEFAULT_DEFECT_TOL).unwrap();
        assert!(close(b.eigenvalues()[0], c(1.0, 0.0), 1e-14));
        assert!(close(b.eigenvalues()[1], c(2.0, 0.0), 1e-14));
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let right = from_real_rows(&[&[1.0, s], &[0.0, s]]);
        let left = from_real_rows(&[&[1.0, -1.0], &[0.0, 2f64.sqrt()]]);
        assert!((b.right_matrix() - right).norm() < 1e-14);
        assert!((b.left_matrix() - left).norm() < 1e-13);
        assert!(b.residual(&h) < 1e-12);
    }

    #[test]
    fn jordan_block_is_defective() {
        let h = from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]);
        assert!(matches!(eig_biortho(&h, DEFAULT_DEFECT_TOL), Err(Error::Defective { .. })));
    }

    #[test]
    fn non_finite_and_non_square_are_rejected() {
        let mut h = identity(2);
        h[(0, 1)] = c(f64::NAN, 0.0);
        assert_eq!(eig_biortho(&h, 1e-8), Err(Error::NonFinite));
        let h = ComplexMatrix::zeros(2, 3);
        assert!(matches!(eig_biortho(&h, 1e-8), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn degenerate_hermitian_is_not_defective() {
        let b = eig_biortho(&identity(3), DEFAULT_DEFECT_TOL).unwrap();
        assert!(b.biorthonormality_defect() < 1e-14);
        assert!((b.right_matrix() - identity(3)).norm() < 1e-14);
    }

    #[test]
    fn gauge_is_unit_norm_with_real_first_component() {
        let h = ComplexMatrix::from_fn(4, 4, |i, j| c((i + 2 * j) as f64 * 0.3 - 0.7, (i as f64) * 0.4 - (j as f64) * 0.1));
        let b = eig_biortho(&h, DEFAULT_DEFECT_TOL).unwrap();
        for n in 0..4 {
            let v = b.right(n);
            assert!((v.norm() - 1.0).abs() < 1e-14);
            let first = v.iter().find(|z| z.norm() > 1e-10).unwrap();
            assert_eq!(first.im, 0.0);
            assert!(first.re > 0.0);
        }
        assert!(b.biorthonormality_defect() < 1e-10);
        assert!(b.residual(&h) < 1e-12);
    }

    #[test]
    fn tracking_identity_and_swap() {
        let h = from_real_rows(&[&[1.0, 0.3], &[0.1, -1.0]]);
        let b = eig_biortho(&h, DEFAULT_DEFECT_TOL).unwrap();
        assert_eq!(track_states(&b, &b).unwrap(), vec![0, 1]);
        let swapped = b.permuted(&[1, 0]);
        assert_eq!(track_states(&b, &swapped).unwrap(), vec![1, 0]);
    }

    #[test]
    fn tracking_slow_rotation() {
        let rot = |a: f64| {
            let (s, co) = a.sin_cos();
            let r = from_real_rows(&[&[co, -s], &[s, co]]);
            &r * diag(&[c(1.0, 0.5), c(-1.0, -0.2)]) * r.transpose()
        };
        let b0 = eig_biortho(&rot(0.0), DEFAULT_DEFECT_TOL).unwrap();
        let b1 = eig_biortho(&rot(0.01), DEFAULT_DEFECT_TOL).unwrap();
        assert_eq!(track_states(&b0, &b1).unwrap(), vec![0, 1]);
    }

    #[test]
    fn tracking_lost_for_unrelated_bases() {
        let b0 = eig_biortho(&identity(2), DEFAULT_DEFECT_TOL).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let v = from_real_rows(&[&[s, s], &[s, -s]]);
        // Rotated basis with a left/right mismatch small enough to fail.
        let right = &v * diag(&[c(1.0, 0.0), c(1.0, 0.0)]);
        let b1 = BiorthoBasis::from_parts(vec![c(0.0, 0.0), c(1.0, 0.0)], right, v.transpose()).unwrap();
        let mixed = BiorthoBasis::from_parts(
            vec![c(0.0, 0.0), c(1.0, 0.0)],
            b1.right_matrix() * c(0.4, 0.0),
            b1.left_matrix() * c(2.5, 0.0),
        )
        .unwrap();
        assert!(matches!(track_states(&b0, &mixed), Err(Error::TrackingLost { .. })));
    }

    #[test]
    fn rephasing_preserves_biorthonormality() {
        let h = from_real_rows(&[&[1.0, 1.0], &[0.0, 2.0]]);
        let b = eig_biortho(&h, DEFAULT_DEFECT_TOL).unwrap();
        let r = b.rephased(1, Complex64::from_polar(1.0, 0.7));
        assert!(r.biorthonormality_defect() < 1e-14);
        assert!(r.residual(&h) < 1e-12);
    }
}
