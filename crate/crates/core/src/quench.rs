//! Discontinuous evolution across a sudden change of the metric.
//!
//! Conservation of `⟨Ψ|W̃|Ψ⟩` across the jump gives
//! `L = (√W̃₊)⁻¹ U √W̃₋` for some unitary `U`. We take `U` as the adjoint of
//! the unitary polar factor of `√W̃₋ (√W̃₊)⁻¹`, which makes `W̃₊L` hermitian
//! (`W̃₊L = L†W̃₊`) and gives `L = I` when the metric does not jump.

use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::biortho::{eig_biortho, DEFAULT_DEFECT_TOL};
use crate::error::{check_dim, Error, Result};
use crate::evolve::{evolve, EvolveOptions};
use crate::linalg::{identity, matrix_sqrt_and_inverse_pd, polar, ComplexMatrix, ComplexVector};
use crate::metric::WaveState;
use crate::schedule::HamiltonianSchedule;
use crate::tdse::{w_tilde_of, TdseVariant};

#[derive(Debug, Clone)]
pub struct QuenchEvent {
    pub t_q: f64,
    pub w_minus: ComplexMatrix,
    pub w_plus: ComplexMatrix,
    pub l: ComplexMatrix,
    pub u: ComplexMatrix,
}

/// Frobenius norms of the residuals of the defining identities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuenchDefects {
    /// `‖L†W̃₊L − W̃₋‖`
    pub conservation: f64,
    /// `‖W̃₊L − L†W̃₊‖`
    pub exchange: f64,
    /// `‖U†U − I‖`
    pub unitarity: f64,
}

impl QuenchEvent {
    pub fn dim(&self) -> usize {
        self.l.nrows()
    }

    pub fn defects(&self) -> QuenchDefects {
        let l_adj = self.l.adjoint();
        QuenchDefects {
            conservation: (&l_adj * &self.w_plus * &self.l - &self.w_minus).norm(),
            exchange: (&self.w_plus * &self.l - &l_adj * &self.w_plus).norm(),
            unitarity: (self.u.adjoint() * &self.u - identity(self.dim())).norm(),
        }
    }
}

pub fn quench_operator(w_minus: &ComplexMatrix, w_plus: &ComplexMatrix) -> Result<QuenchEvent> {
    quench_operator_at(0.0, w_minus, w_plus)
}

pub fn quench_operator_at(t_q: f64, w_minus: &ComplexMatrix, w_plus: &ComplexMatrix) -> Result<QuenchEvent> {
    check_dim(w_minus.nrows(), w_plus.nrows())?;
    check_dim(w_minus.ncols(), w_plus.ncols())?;
    let (sqrt_minus, _) = matrix_sqrt_and_inverse_pd(w_minus)?;
    let (_, inv_sqrt_plus) = matrix_sqrt_and_inverse_pd(w_plus)?;
    let (u_polar, _) = polar(&(&sqrt_minus * &inv_sqrt_plus))?;
    let u = u_polar.adjoint();
    let l = &inv_sqrt_plus * &u * &sqrt_minus;
    Ok(QuenchEvent {
        t_q,
        w_minus: w_minus.clone(),
        w_plus: w_plus.clone(),
        l,
        u,
    })
}

/// `|Ψ(t_q⁺)⟩ = L|Ψ(t_q⁻)⟩`
pub fn apply_quench(psi: &WaveState, event: &QuenchEvent) -> Result<WaveState> {
    check_dim(event.dim(), psi.dim())?;
    Ok(WaveState::new(&event.l * &psi.psi, psi.t))
}

/// Nearest-neighbour hopping on bond `(i, i+1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BondHopping {
    /// Amplitude for `i → i+1`, stored at `H[i+1][i]`.
    pub right: Complex64,
    /// Amplitude for `i+1 → i`, stored at `H[i][i+1]`.
    pub left: Complex64,
}

impl BondHopping {
    pub fn symmetric(t: f64) -> Self {
        Self {
            right: Complex64::new(t, 0.0),
            left: Complex64::new(t, 0.0),
        }
    }

    pub fn asymmetric(right: f64, left: f64) -> Self {
        Self {
            right: Complex64::new(right, 0.0),
            left: Complex64::new(left, 0.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum QuenchEdit {
    Onsite { site: usize, value: Complex64 },
    Bond { bond: usize, hopping: BondHopping },
}

/// Open chain with one local edit applied at the quench.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeModelSpec {
    pub sites: usize,
    pub onsite: Vec<Complex64>,
    pub hoppings: Vec<BondHopping>,
    pub quench_edit: QuenchEdit,
}

impl LatticeModelSpec {
    /// Uniform chain with hoppings `(right, left)` and zero onsite energy,
    /// quenched by cutting the centre bond.
    pub fn uniform_with_center_cut(sites: usize, right: f64, left: f64) -> Self {
        Self {
            sites,
            onsite: vec![Complex64::new(0.0, 0.0); sites],
            hoppings: vec![BondHopping::asymmetric(right, left); sites.saturating_sub(1)],
            quench_edit: QuenchEdit::Bond {
                bond: sites / 2 - 1,
                hopping: BondHopping::symmetric(0.0),
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sites < 4 {
            return Err(Error::InvalidInput(format!("lattice needs at least 4 sites, got {}", self.sites)));
        }
        check_dim(self.sites, self.onsite.len())?;
        check_dim(self.sites - 1, self.hoppings.len())?;
        match self.quench_edit {
            QuenchEdit::Onsite { site, .. } if site >= self.sites => {
                Err(Error::InvalidInput(format!("edited site {site} out of range")))
            }
            QuenchEdit::Bond { bond, .. } if bond + 1 >= self.sites => {
                Err(Error::InvalidInput(format!("edited bond {bond} out of range")))
            }
            _ => Ok(()),
        }
    }

    fn build(&self, onsite: &[Complex64], hoppings: &[BondHopping]) -> ComplexMatrix {
        let n = self.sites;
        let mut h = ComplexMatrix::zeros(n, n);
        for (i, &e) in onsite.iter().enumerate() {
            h[(i, i)] = e;
        }
        for (i, b) in hoppings.iter().enumerate() {
            h[(i + 1, i)] = b.right;
            h[(i, i + 1)] = b.left;
        }
        h
    }

    pub fn pre_hamiltonian(&self) -> ComplexMatrix {
        self.build(&self.onsite, &self.hoppings)
    }

    pub fn post_hamiltonian(&self) -> ComplexMatrix {
        let mut onsite = self.onsite.clone();
        let mut hoppings = self.hoppings.clone();
        match self.quench_edit {
            QuenchEdit::Onsite { site, value } => onsite[site] = value,
            QuenchEdit::Bond { bond, hopping } => hoppings[bond] = hopping,
        }
        self.build(&onsite, &hoppings)
    }

    /// Lattice distance from `site` to the edited site or bond.
    pub fn distance_to_edit(&self, site: usize) -> usize {
        match self.quench_edit {
            QuenchEdit::Onsite { site: s, .. } => site.abs_diff(s),
            QuenchEdit::Bond { bond, .. } => site.abs_diff(bond).min(site.abs_diff(bond + 1)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LrbSite {
    pub site: usize,
    pub distance: usize,
    /// `|ψ_i(t_q⁺) − ψ_i(t_q⁻)|`
    pub delta_psi: f64,
    /// Change of the metric-weighted site density `|(√W̃ ψ)_i|² / ⟨ψ|W̃|ψ⟩`.
    pub delta_density: f64,
}

#[derive(Debug, Clone)]
pub struct LrbProfile {
    pub sites: Vec<LrbSite>,
    pub event: QuenchEvent,
    pub psi_minus: ComplexVector,
    pub psi_plus: ComplexVector,
}

impl LrbProfile {
    /// Largest `|Δψ_i|` over sites at distance at least `min_distance`.
    pub fn max_delta_psi_beyond(&self, min_distance: usize) -> f64 {
        self.sites
            .iter()
            .filter(|s| s.distance >= min_distance)
            .map(|s| s.delta_psi)
            .fold(0.0, f64::max)
    }

    pub fn max_delta_psi(&self) -> f64 {
        self.max_delta_psi_beyond(0)
    }

    pub fn max_delta_density(&self) -> f64 {
        self.sites.iter().map(|s| s.delta_density.abs()).fold(0.0, f64::max)
    }

    /// CSV with header `site,distance,delta_psi,delta_density`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::InvalidInput(format!("CSV write failed: {e}"));
        w.write_record(["site", "distance", "delta_psi", "delta_density"]).map_err(io)?;
        for s in &self.sites {
            w.write_record([
                s.site.to_string(),
                s.distance.to_string(),
                format!("{:e}", s.delta_psi),
                format!("{:e}", s.delta_density),
            ])
            .map_err(io)?;
        }
        w.flush().map_err(|e| Error::InvalidInput(format!("CSV write failed: {e}")))?;
        Ok(())
    }
}

fn site_densities(psi: &ComplexVector, w_tilde: &ComplexMatrix) -> Result<Vec<f64>> {
    let (sqrt_w, _) = matrix_sqrt_and_inverse_pd(w_tilde)?;
    let phi = sqrt_w * psi;
    let total = phi.norm_squared();
    if !(total > 0.0) {
        return Err(Error::ZeroState);
    }
    Ok(phi.iter().map(|z| z.norm_sqr() / total).collect())
}

/// Evolves `psi0` under the pre-quench chain up to `t_q` (right-space
/// metric-aware equation), applies the quench, and reports the per-site
/// change of the wavefunction and of the metric-weighted density.
pub fn lrb_probe(
    spec: &LatticeModelSpec,
    psi0: &ComplexVector,
    t_q: f64,
    opts: &EvolveOptions,
) -> Result<LrbProfile> {
    spec.validate()?;
    check_dim(spec.sites, psi0.len())?;
    if !(t_q >= 0.0 && t_q.is_finite()) {
        return Err(Error::InvalidInput(format!("quench time must be non-negative (got {t_q})")));
    }
    let h_minus = spec.pre_hamiltonian();
    let h_plus = spec.post_hamiltonian();
    let w_minus = w_tilde_of(&eig_biortho(&h_minus, DEFAULT_DEFECT_TOL)?);
    let w_plus = w_tilde_of(&eig_biortho(&h_plus, DEFAULT_DEFECT_TOL)?);

    let psi_minus = if t_q > 0.0 {
        let schedule = HamiltonianSchedule::constant(h_minus, (0.0, t_q))?;
        let opts = EvolveOptions {
            output_times: vec![t_q],
            ..opts.clone()
        };
        let traj = evolve(TdseVariant::NewNH, &schedule, psi0, &opts)?;
        traj.final_state().psi.clone()
    } else {
        psi0.clone()
    };

    let event = quench_operator_at(t_q, &w_minus, &w_plus)?;
    let psi_plus = &event.l * &psi_minus;
    let before = site_densities(&psi_minus, &w_minus)?;
    let after = site_densities(&psi_plus, &w_plus)?;
    let sites = (0..spec.sites)
        .map(|i| LrbSite {
            site: i,
            distance: spec.distance_to_edit(i),
            delta_psi: (psi_plus[i] - psi_minus[i]).norm(),
            delta_density: after[i] - before[i],
        })
        .collect();
    Ok(LrbProfile {
        sites,
        event,
        psi_minus,
        psi_plus,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, diag, from_real_rows, hermitian_part};

    #[test]
    fn equal_metrics_give_identity() {
        let w = from_real_rows(&[&[2.0, -0.5], &[-0.5, 1.0]]);
        let e = quench_operator(&w, &w).unwrap();
        assert!((&e.l - identity(2)).norm() < 1e-12);
        assert!((&e.u - identity(2)).norm() < 1e-12);
    }

    #[test]
    fn diagonal_to_identity_closed_form() {
        let (a, b) = (2.5, 0.4);
        let e = quench_operator(&diag(&[c(a, 0.0), c(b, 0.0)]), &identity(2)).unwrap();
        let expected = diag(&[c(a.sqrt(), 0.0), c(b.sqrt(), 0.0)]);
        assert!((&e.l - expected).norm() < 1e-12);
        let d = e.defects();
        assert!(d.conservation < 1e-12 && d.exchange < 1e-12 && d.unitarity < 1e-12);

        let psi = WaveState::new(ComplexVector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)]), 0.0);
        let out = apply_quench(&psi, &e).unwrap();
        assert!((out.psi[0] - c(a.sqrt(), 0.0)).norm() < 1e-12);
        assert!(out.psi[1].norm() < 1e-12);
    }

    #[test]
    fn general_pair_satisfies_identities() {
        let m1 = ComplexMatrix::from_fn(3, 3, |i, j| c(0.2 * (i + j) as f64 - 0.3, 0.1 * i as f64 - 0.25 * j as f64));
        let m2 = ComplexMatrix::from_fn(3, 3, |i, j| c(0.5 - 0.15 * (i * j) as f64, 0.3 * (i as f64 - j as f64)));
        let w_minus = hermitian_part(&(m1.adjoint() * &m1 + identity(3) * c(0.5, 0.0)));
        let w_plus = hermitian_part(&(m2.adjoint() * &m2 + identity(3) * c(0.2, 0.0)));
        let e = quench_operator(&w_minus, &w_plus).unwrap();
        let d = e.defects();
        assert!(d.conservation < 1e-10, "{d:?}");
        assert!(d.exchange < 1e-10, "{d:?}");
        assert!(d.unitarity < 1e-12, "{d:?}");
    }

    #[test]
    fn rejects_mismatched_or_indefinite_metrics() {
        assert!(matches!(
            quench_operator(&identity(2), &identity(3)),
            Err(Error::DimensionMismatch { .. })
        ));
        let bad = diag(&[c(1.0, 0.0), c(-1.0, 0.0)]);
        assert!(matches!(quench_operator(&bad, &identity(2)), Err(Error::NotPositiveDefinite { .. })));
        let e = quench_operator(&identity(2), &identity(2)).unwrap();
        let psi = WaveState::new(ComplexVector::zeros(3), 0.0);
        assert!(matches!(apply_quench(&psi, &e), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn lattice_spec_validation_and_distances() {
        let spec = LatticeModelSpec::uniform_with_center_cut(12, 1.0, 0.5);
        spec.validate().unwrap();
        // Centre bond joins sites 5 and 6.
        assert_eq!(spec.distance_to_edit(5), 0);
        assert_eq!(spec.distance_to_edit(6), 0);
        assert_eq!(spec.distance_to_edit(0), 5);
        assert_eq!(spec.distance_to_edit(11), 5);
        let post = spec.post_hamiltonian();
        assert_eq!(post[(6, 5)], c(0.0, 0.0));
        assert_eq!(spec.pre_hamiltonian()[(6, 5)], c(1.0, 0.0));
        assert_eq!(spec.pre_hamiltonian()[(5, 6)], c(0.5, 0.0));
        let small = LatticeModelSpec::uniform_with_center_cut(2, 1.0, 1.0);
        assert!(small.validate().is_err());
    }
}
