//! Metric operators built from a biorthogonal basis.
//!
//! The instantaneous metric is `W̃ = Σ_n |n⟩⟩⟨⟨n|`. The metric connection
//! weights each projector by the damping accumulated since the reference
//! time, `W = Σ_n W̃_n · exp(D_n)` with `D_n = ∫ 2 Im E_n dt`, and
//! `η = √W` is its hermitian square root.

use num_complex::Complex64;

use crate::biortho::{track_states, BiorthoBasis};
use crate::error::{check_dim, Error, Result};
use crate::linalg::{c, hermitian_part, matrix_sqrt_pd, ComplexMatrix, ComplexVector};

/// A state vector stamped with its time.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveState {
    pub psi: ComplexVector,
    pub t: f64,
}

impl WaveState {
    pub fn new(psi: ComplexVector, t: f64) -> Self {
        Self { psi, t }
    }

    pub fn dim(&self) -> usize {
        self.psi.len()
    }
}

#[derive(Debug, Clone)]
pub struct MetricState {
    basis: BiorthoBasis,
    damping: Vec<f64>,
    w_tilde: ComplexMatrix,
    w: ComplexMatrix,
    eta: ComplexMatrix,
}

impl MetricState {
    /// Metric objects for `basis` with accumulated damping integrals
    /// `damping[n] = D_n`.
    pub fn new(basis: BiorthoBasis, damping: Vec<f64>) -> Result<Self> {
        check_dim(basis.dim(), damping.len())?;
        if damping.iter().any(|d| !d.is_finite()) {
            return Err(Error::NonFinite);
        }
        let left = basis.left_matrix();
        let w_tilde = hermitian_part(&(left.adjoint() * left));
        let weights: Vec<Complex64> = damping.iter().map(|d| c(d.exp(), 0.0)).collect();
        let weighted = ComplexMatrix::from_fn(left.nrows(), left.ncols(), |n, j| left[(n, j)] * weights[n]);
        let w = hermitian_part(&(left.adjoint() * weighted));
        let eta = matrix_sqrt_pd(&w)?;
        Ok(Self {
            basis,
            damping,
            w_tilde,
            w,
            eta,
        })
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn basis(&self) -> &BiorthoBasis {
        &self.basis
    }

    pub fn damping(&self) -> &[f64] {
        &self.damping
    }

    /// Instantaneous metric `W̃`.
    pub fn w_tilde(&self) -> &ComplexMatrix {
        &self.w_tilde
    }

    /// Metric connection `W`.
    pub fn w(&self) -> &ComplexMatrix {
        &self.w
    }

    /// Hermitian square root of `W`.
    pub fn eta(&self) -> &ComplexMatrix {
        &self.eta
    }

    /// `W̃_n = |n⟩⟩⟨⟨n|`
    pub fn projector(&self, n: usize) -> ComplexMatrix {
        let ket = self.basis.left_ket(n);
        &ket * ket.adjoint()
    }

    /// `W_n = W̃_n · exp(D_n)`
    pub fn weighted_projector(&self, n: usize) -> ComplexMatrix {
        self.projector(n) * c(self.damping[n].exp(), 0.0)
    }

    /// `⟨Ψ|W_n|Ψ⟩` for every `n`.
    pub fn weighted_populations(&self, psi: &ComplexVector) -> Result<Vec<f64>> {
        check_dim(self.dim(), psi.len())?;
        Ok((0..self.dim())
            .map(|n| self.basis.left_apply(n, psi).norm_sqr() * self.damping[n].exp())
            .collect())
    }
}

/// `W̃` and its projectors, with zero accumulated damping (so `W = W̃`).
pub fn instantaneous_metric(basis: &BiorthoBasis) -> Result<MetricState> {
    MetricState::new(basis.clone(), vec![0.0; basis.dim()])
}

/// Trapezoidal accumulator for the damping integrals `D_n`, carrying
/// continuous state labels from sample to sample.
#[derive(Debug, Clone)]
pub struct DampingAccumulator {
    t: f64,
    basis: BiorthoBasis,
    integrals: Vec<f64>,
}

impl DampingAccumulator {
    pub fn new(t0: f64, basis: BiorthoBasis) -> Self {
        let n = basis.dim();
        Self {
            t: t0,
            basis,
            integrals: vec![0.0; n],
        }
    }

    /// Adds one trapezoid panel ending at `t` and returns the relabelled
    /// basis at `t`.
    pub fn advance(&mut self, t: f64, next: &BiorthoBasis) -> Result<&BiorthoBasis> {
        if !(t > self.t) {
            return Err(Error::InvalidInput(format!(
                "damping samples must increase in time ({} after {})",
                t, self.t
            )));
        }
        let perm = track_states(&self.basis, next)?;
        let next = next.permuted(&perm);
        let dt = t - self.t;
        for (n, d) in self.integrals.iter_mut().enumerate() {
            *d += dt * (self.basis.eigenvalues()[n].im + next.eigenvalues()[n].im);
        }
        self.t = t;
        self.basis = next;
        Ok(&self.basis)
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn basis(&self) -> &BiorthoBasis {
        &self.basis
    }

    pub fn integrals(&self) -> &[f64] {
        &self.integrals
    }

    pub fn metric_state(&self) -> Result<MetricState> {
        MetricState::new(self.basis.clone(), self.integrals.clone())
    }
}

/// Metric connection at the last sample of `samples`, integrating
/// `2 Im E_n` by the trapezoidal rule over the given time grid. Labels follow
/// the first basis.
pub fn metric_connection(samples: &[(f64, BiorthoBasis)]) -> Result<MetricState> {
    let ((t0, first), rest) = samples
        .split_first()
        .ok_or_else(|| Error::InvalidInput("no basis samples".into()))?;
    let mut acc = DampingAccumulator::new(*t0, first.clone());
    for (t, basis) in rest {
        acc.advance(*t, basis)?;
    }
    acc.metric_state()
}

/// Normalized components `|c_n|² = ⟨Ψ|W_n|Ψ⟩ / A` and the normalizer
/// `A = Σ_n ⟨Ψ|W_n|Ψ⟩`.
pub fn components(psi: &ComplexVector, metric: &MetricState) -> Result<(Vec<f64>, f64)> {
    if psi.norm() == 0.0 {
        return Err(Error::ZeroState);
    }
    let pops = metric.weighted_populations(psi)?;
    let a: f64 = pops.iter().sum();
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::ZeroState);
    }
    Ok((pops.into_iter().map(|p| p / a).collect(), a))
}

/// Components from a left-space state `|Ψ⟩⟩ = W̃|Ψ⟩`, using the right
/// vectors as its dual basis: `|c_n|² ∝ exp(D_n)|⟨n|Ψ⟩⟩|²`.
pub fn left_components(phi: &ComplexVector, metric: &MetricState) -> Result<(Vec<f64>, f64)> {
    check_dim(metric.dim(), phi.len())?;
    if phi.norm() == 0.0 {
        return Err(Error::ZeroState);
    }
    let pops: Vec<f64> = (0..metric.dim())
        .map(|n| metric.basis().right(n).dotc(phi).norm_sqr() * metric.damping()[n].exp())
        .collect();
    let a: f64 = pops.iter().sum();
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::ZeroState);
    }
    Ok((pops.into_iter().map(|p| p / a).collect(), a))
}

/// `(1/A)⟨Ψ|η†Oη|Ψ⟩` with `η = √W`.
pub fn observable(psi: &ComplexVector, o: &ComplexMatrix, metric: &MetricState) -> Result<Complex64> {
    let (_, a) = components(psi, metric)?;
    let v = expectation_in_frame(psi, o, metric.eta())?;
    Ok(v / a)
}

/// `⟨Ψ|η†Oη|Ψ⟩ / ⟨Ψ|η†η|Ψ⟩` for an arbitrary factorization `W = η†η`.
pub fn observable_in_frame(psi: &ComplexVector, o: &ComplexMatrix, eta: &ComplexMatrix) -> Result<Complex64> {
    let phi = eta * psi;
    let a = phi.norm_squared();
    if !(a > 0.0) {
        return Err(Error::ZeroState);
    }
    Ok(expectation_in_frame(psi, o, eta)? / a)
}

fn expectation_in_frame(psi: &ComplexVector, o: &ComplexMatrix, eta: &ComplexMatrix) -> Result<Complex64> {
    check_dim(eta.ncols(), psi.len())?;
    check_dim(eta.nrows(), o.ncols())?;
    check_dim(o.ncols(), o.nrows())?;
    let phi = eta * psi;
    Ok(phi.dotc(&(o * &phi)))
}
