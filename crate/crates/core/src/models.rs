//! Ready-made schedules used by the CLI, the tests and the benchmarks.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, diag, identity, ComplexMatrix, ComplexVector};
use crate::schedule::{HamiltonianFn, HamiltonianSchedule};

/// `H(t) = S(t) D(t) S(t)⁻¹` with `S(t) = I + s·(A cos t + B sin ωt)` and a
/// diagonal `D(t)` whose real parts stay one unit apart, so the spectrum
/// never becomes degenerate and `S` stays invertible (`‖A‖, ‖B‖ ≤ 1`,
/// `s < 0.5`).
#[derive(Debug, Clone, PartialEq)]
pub struct SimilaritySchedule {
    pub a: ComplexMatrix,
    pub b: ComplexMatrix,
    pub omega: f64,
    pub strength: f64,
    /// Per level: (real offset, real amplitude, real frequency, real phase,
    /// imaginary amplitude, imaginary frequency, imaginary phase).
    pub levels: Vec<[f64; 7]>,
}

impl SimilaritySchedule {
    pub fn random<R: Rng>(dim: usize, rng: &mut R) -> Self {
        let unit_ball = |rng: &mut R| {
            let m = ComplexMatrix::from_fn(dim, dim, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
            let norm = m.norm();
            m / c(norm.max(1.0), 0.0)
        };
        let a = unit_ball(rng);
        let b = unit_ball(rng);
        let levels = (0..dim)
            .map(|n| {
                [
                    n as f64 - 0.5 * (dim as f64 - 1.0),
                    rng.random_range(0.0..0.3),
                    rng.random_range(0.3..1.5),
                    rng.random_range(0.0..2.0 * PI),
                    rng.random_range(-0.5..0.5),
                    rng.random_range(0.3..1.5),
                    rng.random_range(0.0..2.0 * PI),
                ]
            })
            .collect();
        Self {
            a,
            b,
            omega: rng.random_range(0.5..1.5),
            strength: 0.4,
            levels,
        }
    }

    pub fn seeded(dim: usize, seed: u64) -> Self {
        Self::random(dim, &mut ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn dim(&self) -> usize {
        self.levels.len()
    }

    pub fn similarity(&self, t: f64) -> ComplexMatrix {
        identity(self.dim()) + (&self.a * c(t.cos(), 0.0) + &self.b * c((self.omega * t).sin(), 0.0)) * c(self.strength, 0.0)
    }

    pub fn eigenvalues(&self, t: f64) -> Vec<Complex64> {
        self.levels
            .iter()
            .map(|l| c(l[0] + l[1] * (l[2] * t + l[3]).sin(), l[4] * (l[5] * t + l[6]).sin()))
            .collect()
    }

    pub fn hamiltonian(&self, t: f64) -> ComplexMatrix {
        let s = self.similarity(t);
        let s_inv = s.clone().try_inverse().expect("similarity stays invertible by construction");
        s * diag(&self.eigenvalues(t)) * s_inv
    }

    pub fn schedule(&self, t_span: (f64, f64)) -> Result<HamiltonianSchedule> {
        let model = self.clone();
        HamiltonianSchedule::smooth(self.dim(), t_span, move |t| model.hamiltonian(t))
    }
}

/// Random normalized initial state.
pub fn random_state<R: Rng>(dim: usize, rng: &mut R) -> ComplexVector {
    let v = ComplexVector::from_fn(dim, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    let n = v.norm();
    v / c(n, 0.0)
}

/// Diagonal Hamiltonian `E_n(t) = ε_n + i(γ_n + β_n t)`: its eigenvectors
/// are the unit vectors, so `W̃ = I` at all times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagonalDecayModel {
    pub energies: Vec<f64>,
    pub rates: Vec<f64>,
    #[serde(default)]
    pub rate_slopes: Vec<f64>,
}

impl DiagonalDecayModel {
    pub fn validate(&self) -> Result<()> {
        let n = self.energies.len();
        if n == 0 || self.rates.len() != n || !(self.rate_slopes.is_empty() || self.rate_slopes.len() == n) {
            return Err(Error::InvalidInput(
                "energies, rates and rate_slopes must be non-empty and of equal length".into(),
            ));
        }
        Ok(())
    }

    fn slope(&self, n: usize) -> f64 {
        self.rate_slopes.get(n).copied().unwrap_or(0.0)
    }

    pub fn hamiltonian(&self, t: f64) -> ComplexMatrix {
        let entries: Vec<Complex64> = (0..self.energies.len())
            .map(|n| c(self.energies[n], self.rates[n] + self.slope(n) * t))
            .collect();
        diag(&entries)
    }

    pub fn schedule(&self, t_span: (f64, f64)) -> Result<HamiltonianSchedule> {
        self.validate()?;
        let model = self.clone();
        HamiltonianSchedule::smooth(self.energies.len(), t_span, move |t| model.hamiltonian(t))
    }

    /// `D_n(t) = ∫ 2 Im E_n` from `t0` to `t`.
    pub fn damping(&self, n: usize, t0: f64, t: f64) -> f64 {
        2.0 * (self.rates[n] * (t - t0) + 0.5 * self.slope(n) * (t * t - t0 * t0))
    }

    /// Closed-form `|c_n(t)|² = |c_n(t0)|² e^{D_n(t)} / A(t)`.
    pub fn closed_form_components(&self, psi0: &ComplexVector, t0: f64, t: f64) -> Vec<f64> {
        let w: Vec<f64> = (0..self.energies.len())
            .map(|n| psi0[n].norm_sqr() * self.damping(n, t0, t).exp())
            .collect();
        let a: f64 = w.iter().sum();
        w.into_iter().map(|x| x / a).collect()
    }
}

/// Balanced gain/loss dimer `[[iγ, κ(t)], [κ(t), −iγ]]` with
/// `κ(t) = κ₀ + δ sin(ωt)`; the spectrum `±√(κ² − γ²)` is real while
/// `κ > γ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainLossDimer {
    pub gain: f64,
    pub coupling: f64,
    #[serde(default)]
    pub modulation: f64,
    #[serde(default = "default_frequency")]
    pub frequency: f64,
}

fn default_frequency() -> f64 {
    1.0
}

impl GainLossDimer {
    pub fn validate(&self) -> Result<()> {
        if !(self.coupling - self.modulation.abs() > self.gain.abs()) {
            return Err(Error::InvalidInput(
                "gain/loss dimer must keep coupling above gain (unbroken phase)".into(),
            ));
        }
        Ok(())
    }

    pub fn hamiltonian(&self, t: f64) -> ComplexMatrix {
        let k = c(self.coupling + self.modulation * (self.frequency * t).sin(), 0.0);
        let g = c(0.0, self.gain);
        ComplexMatrix::from_row_slice(2, 2, &[g, k, k, -g])
    }

    pub fn schedule(&self, t_span: (f64, f64)) -> Result<HamiltonianSchedule> {
        self.validate()?;
        let model = *self;
        HamiltonianSchedule::smooth(2, t_span, move |t| model.hamiltonian(t))
    }
}

/// Piecewise-constant schedule switching between `matrices` at `quench_times`.
pub fn piecewise_constant(
    matrices: Vec<ComplexMatrix>,
    t_span: (f64, f64),
    quench_times: Vec<f64>,
) -> Result<HamiltonianSchedule> {
    let dim = matrices
        .first()
        .ok_or_else(|| Error::InvalidInput("no Hamiltonians given".into()))?
        .nrows();
    let pieces = matrices
        .into_iter()
        .map(|m| Arc::new(move |_t: f64| m.clone()) as HamiltonianFn)
        .collect();
    HamiltonianSchedule::piecewise(dim, t_span, quench_times, pieces)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::biortho::{eig_biortho, DEFAULT_DEFECT_TOL};

    #[test]
    fn similarity_schedule_has_prescribed_spectrum() {
        let m = SimilaritySchedule::seeded(4, 7);
        for &t in &[0.0, 2.3, 7.9] {
            let basis = eig_biortho(&m.hamiltonian(t), DEFAULT_DEFECT_TOL).unwrap();
            let mut expected = m.eigenvalues(t);
            expected.sort_by(|a, b| a.re.total_cmp(&b.re));
            for (got, want) in basis.eigenvalues().iter().zip(&expected) {
                assert!((got - want).norm() < 1e-10);
            }
        }
        assert_eq!(m, SimilaritySchedule::seeded(4, 7));
    }

    #[test]
    fn dimer_spectrum_is_real() {
        let d = GainLossDimer {
            gain: 0.5,
            coupling: 1.0,
            modulation: 0.2,
            frequency: 1.0,
        };
        let basis = eig_biortho(&d.hamiltonian(0.7), DEFAULT_DEFECT_TOL).unwrap();
        assert!(basis.eigenvalues().iter().all(|e| e.im.abs() < 1e-12));
        let broken = GainLossDimer { gain: 1.5, ..d };
        assert!(broken.validate().is_err());
    }

    #[test]
    fn diagonal_closed_form_normalizes() {
        let m = DiagonalDecayModel {
            energies: vec![0.0, 1.0],
            rates: vec![-0.1, 0.2],
            rate_slopes: vec![0.05, 0.0],
        };
        let psi = ComplexVector::from_vec(vec![c(0.6, 0.0), c(0.0, 0.8)]);
        let p = m.closed_form_components(&psi, 0.0, 3.0);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        assert!((m.damping(0, 0.0, 2.0) - 2.0 * (-0.2 + 0.1)).abs() < 1e-14);
    }
}
