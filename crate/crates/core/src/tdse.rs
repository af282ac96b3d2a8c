//! Right-hand sides of the time-dependent Schrödinger equation variants.
//!
//! Units: ħ = 1. Every variant is written as `∂_t ψ = −i K ψ` with a
//! generator `K` that depends on the variant:
//!
//! | variant    | generator `K`                                            |
//! |------------|----------------------------------------------------------|
//! | `Standard` | `H`                                                      |
//! | `NewNH`    | `(W̃⁻¹H†W̃ + H)/2 − (i/2) W̃⁻¹ dW̃/dt`                     |
//! | `LeftNH`   | `(W̃HW̃⁻¹ + H†)/2 − (i/2) W̃ d(W̃⁻¹)/dt`, acting on `W̃ψ`    |
//! | `Wieser`   | `H + ⟨ψ|(H†−H)/2|ψ⟩/⟨ψ|ψ⟩`                                |
//! | `Gong`     | `H − (i/2) W̃⁻¹ dW̃/dt`                                    |

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::biortho::{eig_biortho, BiorthoBasis, DEFAULT_DEFECT_TOL};
use crate::error::{check_dim, Error, Result};
use crate::linalg::{c, hermitian_part, singular_value_bounds, ComplexMatrix, ComplexVector, I};
use crate::schedule::HamiltonianSchedule;

/// Largest accepted condition number of `W̃`.
pub const MAX_METRIC_CONDITION: f64 = 1e12;

/// Default finite-difference step for `dW̃/dt`.
pub const DEFAULT_DERIVATIVE_STEP: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TdseVariant {
    Standard,
    #[default]
    #[serde(rename = "new-nh")]
    NewNH,
    #[serde(rename = "left-nh")]
    LeftNH,
    Wieser,
    Gong,
}

impl TdseVariant {
    pub const ALL: [TdseVariant; 5] = [
        TdseVariant::Standard,
        TdseVariant::NewNH,
        TdseVariant::LeftNH,
        TdseVariant::Wieser,
        TdseVariant::Gong,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TdseVariant::Standard => "standard",
            TdseVariant::NewNH => "new-nh",
            TdseVariant::LeftNH => "left-nh",
            TdseVariant::Wieser => "wieser",
            TdseVariant::Gong => "gong",
        }
    }

    /// Whether the generator involves the instantaneous metric.
    pub fn uses_metric(self) -> bool {
        matches!(self, TdseVariant::NewNH | TdseVariant::LeftNH | TdseVariant::Gong)
    }

    /// Whether the integrated vector lives in the left space (`|Ψ⟩⟩ = W̃|Ψ⟩`).
    pub fn is_left_space(self) -> bool {
        self == TdseVariant::LeftNH
    }
}

impl fmt::Display for TdseVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TdseVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TdseVariant::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown TDSE variant '{s}'")))
    }
}

/// Central difference with one Richardson extrapolation:
/// `D(h) = [f(t+h) − f(t−h)]/2h`, result `(4D(h/2) − D(h))/3`, error
/// estimate `‖result − D(h/2)‖`.
pub fn richardson_derivative<F>(f: F, t: f64, h: f64) -> Result<(ComplexMatrix, f64)>
where
    F: Fn(f64) -> Result<ComplexMatrix>,
{
    if !(h > 0.0) {
        return Err(Error::InvalidInput(format!("derivative step must be positive (got {h})")));
    }
    let coarse = (f(t + h)? - f(t - h)?) / c(2.0 * h, 0.0);
    let fine = (f(t + 0.5 * h)? - f(t - 0.5 * h)?) / c(h, 0.0);
    let value = (&fine * c(4.0, 0.0) - coarse) / c(3.0, 0.0);
    let err = (&value - fine).norm();
    Ok((value, err))
}

/// `W̃ = L†L` from the left covectors.
pub fn w_tilde_of(basis: &BiorthoBasis) -> ComplexMatrix {
    let l = basis.left_matrix();
    hermitian_part(&(l.adjoint() * l))
}

/// `W̃⁻¹ = RR†` from the right vectors, without a matrix inversion.
pub fn w_tilde_inverse_of(basis: &BiorthoBasis) -> ComplexMatrix {
    let r = basis.right_matrix();
    hermitian_part(&(r * r.adjoint()))
}

fn metric_of(h: &ComplexMatrix, defect_tol: f64) -> Result<ComplexMatrix> {
    Ok(w_tilde_of(&eig_biortho(h, defect_tol)?))
}

fn metric_inverse_of(h: &ComplexMatrix, defect_tol: f64) -> Result<ComplexMatrix> {
    Ok(w_tilde_inverse_of(&eig_biortho(h, defect_tol)?))
}

#[derive(Debug, Clone)]
pub struct MetricDerivative {
    pub value: ComplexMatrix,
    pub error_estimate: f64,
}

/// `dW̃/dt` at `t` by Richardson-extrapolated central differences.
///
/// `W̃` does not depend on how the eigenstates are labelled, so no tracking is
/// needed between the stencil points. Fails with `QuenchAdjacent` when the
/// stencil would straddle a declared quench.
pub fn metric_derivative(schedule: &HamiltonianSchedule, t: f64, h: f64) -> Result<MetricDerivative> {
    if let Some(&q) = schedule.quench_times().iter().find(|&&q| (t - q).abs() <= h) {
        return Err(Error::QuenchAdjacent { t, h, t_quench: q });
    }
    let piece = schedule.piece_index(t);
    piece_metric_derivative(schedule, piece, t, h, DEFAULT_DEFECT_TOL)
}

pub(crate) fn piece_metric_derivative(
    schedule: &HamiltonianSchedule,
    piece: usize,
    t: f64,
    h: f64,
    defect_tol: f64,
) -> Result<MetricDerivative> {
    let (value, error_estimate) =
        richardson_derivative(|s| metric_of(&schedule.piece_hamiltonian(piece, s)?, defect_tol), t, h)?;
    Ok(MetricDerivative { value, error_estimate })
}

/// Everything a right-hand side needs at one instant.
#[derive(Debug, Clone)]
pub struct MetricSnapshot {
    pub t: f64,
    pub hamiltonian: ComplexMatrix,
    pub basis: BiorthoBasis,
    pub w_tilde: ComplexMatrix,
    pub w_tilde_inv: ComplexMatrix,
    /// `dW̃/dt`; zero for variants that ignore the metric.
    pub w_tilde_dot: ComplexMatrix,
    /// `d(W̃⁻¹)/dt`, differentiated independently of `dW̃/dt`; only filled
    /// for the left-space variant.
    pub w_tilde_inv_dot: Option<ComplexMatrix>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnapshotOptions {
    pub derivative_step: f64,
    pub defect_tol: f64,
}

impl Default for SnapshotOptions {
    fn default() -> Self {
        Self {
            derivative_step: DEFAULT_DERIVATIVE_STEP,
            defect_tol: DEFAULT_DEFECT_TOL,
        }
    }
}

impl MetricSnapshot {
    /// Evaluates piece `piece` of `schedule` at `t`, computing only the
    /// derivatives `variant` needs.
    pub fn for_piece(
        variant: TdseVariant,
        schedule: &HamiltonianSchedule,
        piece: usize,
        t: f64,
        opts: SnapshotOptions,
    ) -> Result<Self> {
        let hamiltonian = schedule.piece_hamiltonian(piece, t)?;
        let basis = eig_biortho(&hamiltonian, opts.defect_tol)?;
        let (s_min, s_max) = singular_value_bounds(basis.right_matrix());
        let condition = (s_max / s_min).powi(2);
        if !(condition < MAX_METRIC_CONDITION) {
            return Err(Error::IllConditionedMetric { condition });
        }
        let w_tilde = w_tilde_of(&basis);
        let w_tilde_inv = w_tilde_inverse_of(&basis);
        let n = schedule.dim();
        let h = opts.derivative_step;
        let w_tilde_dot = match variant {
            TdseVariant::NewNH | TdseVariant::Gong => {
                piece_metric_derivative(schedule, piece, t, h, opts.defect_tol)?.value
            }
            _ => ComplexMatrix::zeros(n, n),
        };
        let w_tilde_inv_dot = if variant == TdseVariant::LeftNH {
            let (d, _) = richardson_derivative(
                |s| metric_inverse_of(&schedule.piece_hamiltonian(piece, s)?, opts.defect_tol),
                t,
                h,
            )?;
            Some(d)
        } else {
            None
        };
        Ok(Self {
            t,
            hamiltonian,
            basis,
            w_tilde,
            w_tilde_inv,
            w_tilde_dot,
            w_tilde_inv_dot,
        })
    }

    /// Snapshot at `t` using the piece active there.
    pub fn at(variant: TdseVariant, schedule: &HamiltonianSchedule, t: f64, opts: SnapshotOptions) -> Result<Self> {
        Self::for_piece(variant, schedule, schedule.piece_index(t), t, opts)
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.nrows()
    }

    /// `W̃⁻¹H†W̃`
    pub fn pseudo_adjoint(&self) -> ComplexMatrix {
        &self.w_tilde_inv * self.hamiltonian.adjoint() * &self.w_tilde
    }

    /// `(W̃⁻¹H†W̃ + H)/2 − (i/2) W̃⁻¹ dW̃/dt`
    pub fn new_nh_generator(&self) -> ComplexMatrix {
        (self.pseudo_adjoint() + &self.hamiltonian) * c(0.5, 0.0)
            - &self.w_tilde_inv * &self.w_tilde_dot * (I * 0.5)
    }

    /// The extra operator `Λ` of the right-space equation, `K_NewNH − H`.
    pub fn lambda(&self) -> ComplexMatrix {
        self.new_nh_generator() - &self.hamiltonian
    }

    /// `(W̃HW̃⁻¹ + H†)/2 − (i/2) W̃ d(W̃⁻¹)/dt`
    pub fn left_nh_generator(&self) -> Result<ComplexMatrix> {
        let inv_dot = self.w_tilde_inv_dot.as_ref().ok_or_else(|| {
            Error::InvalidInput("snapshot lacks d(W̃⁻¹)/dt; build it for the left-space variant".into())
        })?;
        Ok(
            (&self.w_tilde * &self.hamiltonian * &self.w_tilde_inv + self.hamiltonian.adjoint()) * c(0.5, 0.0)
                - &self.w_tilde * inv_dot * (I * 0.5),
        )
    }

    /// `H − (i/2) W̃⁻¹ dW̃/dt`
    pub fn gong_generator(&self) -> ComplexMatrix {
        &self.hamiltonian - &self.w_tilde_inv * &self.w_tilde_dot * (I * 0.5)
    }
}

/// `∂_t ψ` for `variant` at the snapshot's time.
pub fn rhs(variant: TdseVariant, snap: &MetricSnapshot, psi: &ComplexVector) -> Result<ComplexVector> {
    check_dim(snap.dim(), psi.len())?;
    let minus_i = -I;
    let out = match variant {
        TdseVariant::Standard => &snap.hamiltonian * psi * minus_i,
        TdseVariant::NewNH => snap.new_nh_generator() * psi * minus_i,
        TdseVariant::LeftNH => snap.left_nh_generator()? * psi * minus_i,
        TdseVariant::Gong => snap.gong_generator() * psi * minus_i,
        TdseVariant::Wieser => {
            let norm2 = psi.norm_squared();
            if norm2 == 0.0 {
                return Err(Error::ZeroState);
            }
            let h = &snap.hamiltonian;
            let anti = (h.adjoint() - h) * c(0.5, 0.0);
            let shift = psi.dotc(&(anti * psi)) / norm2;
            (h * psi + psi * shift) * minus_i
        }
    };
    Ok(out)
}

/// Convenience wrapper: builds the snapshot at `t` and evaluates [`rhs`].
pub fn rhs_at(
    variant: TdseVariant,
    schedule: &HamiltonianSchedule,
    t: f64,
    psi: &ComplexVector,
    opts: SnapshotOptions,
) -> Result<ComplexVector> {
    let snap = MetricSnapshot::at(variant, schedule, t, opts)?;
    rhs(variant, &snap, psi)
}
