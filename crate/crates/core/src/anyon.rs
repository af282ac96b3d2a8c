//! Hard-core anyons on an open chain through a generalized Jordan-Wigner
//! map.
//!
//! Convention: `a_l = exp(i(κ+π) N_{<l}) f_l`, so `κ = π` is the fermion
//! point and `κ = 0` gives hard-core bosons. For real nearest-neighbour
//! hoppings the chain Hamiltonian `Σ t_l a†_{l+1} a_l + h.c.` maps onto the
//! same quadratic fermion form for every `κ`, so the statistics only enter
//! through the strings attached to correlators.
//!
//! After a bond is cut the strings restart at the first site of each
//! disconnected segment.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, ComplexMatrix};

/// Smallest accepted gap between the highest filled and lowest empty level.
pub const FERMI_GAP_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnyonChainSpec {
    pub sites: usize,
    /// Hopping on bond `(l, l+1)`, length `sites − 1`.
    pub hoppings: Vec<f64>,
    /// Statistics angle in `[0, π]`.
    pub kappa: f64,
    pub filling: usize,
    pub quench_bond: usize,
    /// Hopping on `quench_bond` after the quench.
    #[serde(default)]
    pub quench_value: f64,
}

impl AnyonChainSpec {
    /// Uniform chain with its centre bond cut by the quench.
    pub fn uniform(sites: usize, hopping: f64, kappa: f64, filling: usize) -> Self {
        Self {
            sites,
            hoppings: vec![hopping; sites.saturating_sub(1)],
            kappa,
            filling,
            quench_bond: (sites / 2).saturating_sub(1),
            quench_value: 0.0,
        }
    }

    pub fn half_filled(sites: usize, kappa: f64) -> Self {
        Self::uniform(sites, 1.0, kappa, sites / 2)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.sites;
        if !n.is_multiple_of(2) || !(4..=64).contains(&n) {
            return Err(Error::InvalidInput(format!("site count must be even and in [4, 64] (got {n})")));
        }
        if self.hoppings.len() != n - 1 {
            return Err(Error::DimensionMismatch {
                expected: n - 1,
                found: self.hoppings.len(),
            });
        }
        if self.hoppings.iter().chain([&self.quench_value]).any(|t| !t.is_finite()) {
            return Err(Error::NonFinite);
        }
        if !(0.0..=PI).contains(&self.kappa) {
            return Err(Error::InvalidInput(format!("kappa must lie in [0, π] (got {})", self.kappa)));
        }
        if self.filling > n {
            return Err(Error::InvalidInput(format!("filling {} exceeds {n} sites", self.filling)));
        }
        if self.quench_bond + 1 >= n {
            return Err(Error::InvalidInput(format!("quench bond {} out of range", self.quench_bond)));
        }
        Ok(())
    }

    pub fn post_hoppings(&self) -> Vec<f64> {
        let mut t = self.hoppings.clone();
        t[self.quench_bond] = self.quench_value;
        t
    }

    /// Distance from site `l` to the quenched bond.
    pub fn distance_to_quench(&self, l: usize) -> usize {
        l.abs_diff(self.quench_bond).min(l.abs_diff(self.quench_bond + 1))
    }
}

/// Single-particle hopping matrix `h[l+1][l] = h[l][l+1] = t_l`.
pub fn hopping_matrix(hoppings: &[f64]) -> nalgebra::DMatrix<f64> {
    let n = hoppings.len() + 1;
    let mut h = nalgebra::DMatrix::zeros(n, n);
    for (l, &t) in hoppings.iter().enumerate() {
        h[(l + 1, l)] = t;
        h[(l, l + 1)] = t;
    }
    h
}

/// `G_lm = ⟨f†_l f_m⟩` in the ground state with `filling` fermions.
pub fn ground_state_correlations_for(hoppings: &[f64], filling: usize) -> Result<ComplexMatrix> {
    let h = hopping_matrix(hoppings);
    let n = h.nrows();
    if filling > n {
        return Err(Error::InvalidInput(format!("filling {filling} exceeds {n} sites")));
    }
    let eig = h.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    if filling > 0 && filling < n {
        let gap = eig.eigenvalues[order[filling]] - eig.eigenvalues[order[filling - 1]];
        if gap < FERMI_GAP_TOL {
            return Err(Error::DegenerateFermiLevel { gap });
        }
    }
    let occupied = &order[..filling];
    Ok(ComplexMatrix::from_fn(n, n, |l, m| {
        let v: f64 = occupied.iter().map(|&a| eig.eigenvectors[(l, a)] * eig.eigenvectors[(m, a)]).sum();
        c(v, 0.0)
    }))
}

pub fn ground_state_correlations(spec: &AnyonChainSpec) -> Result<ComplexMatrix> {
    spec.validate()?;
    ground_state_correlations_for(&spec.hoppings, spec.filling)
}

/// `⟨f†_l Π_j (1 + c_j n_j) f_m⟩` for `l ≠ m` and sites `j ∉ {l, m}`, as the
/// determinant of `M·diag(1, c) + diag(0, 1, …, 1)` with `M` the block of
/// `G` on rows `(l, S)` and columns `(m, S)`.
pub fn dressed_correlator(g: &ComplexMatrix, l: usize, m: usize, string: &[(usize, Complex64)]) -> Complex64 {
    let k = string.len() + 1;
    let rows: Vec<usize> = std::iter::once(l).chain(string.iter().map(|s| s.0)).collect();
    let cols: Vec<usize> = std::iter::once(m).chain(string.iter().map(|s| s.0)).collect();
    let weight = |b: usize| if b == 0 { c(1.0, 0.0) } else { string[b - 1].1 };
    let mat = ComplexMatrix::from_fn(k, k, |a, b| {
        let base = g[(rows[a], cols[b])] * weight(b);
        if a == b && a > 0 {
            base + c(1.0, 0.0)
        } else {
            base
        }
    });
    if k == 1 {
        mat[(0, 0)]
    } else {
        mat.determinant()
    }
}

/// First site of the segment containing each site; segments are separated
/// by bonds with zero hopping.
pub fn segment_starts(hoppings: &[f64]) -> Vec<usize> {
    let mut starts = vec![0; hoppings.len() + 1];
    for l in 1..starts.len() {
        starts[l] = if hoppings[l - 1] == 0.0 { l } else { starts[l - 1] };
    }
    starts
}

/// `⟨a†_l a_m⟩` with strings starting at `starts[site]`.
pub fn anyon_correlations_with_strings(g: &ComplexMatrix, kappa: f64, starts: &[usize]) -> ComplexMatrix {
    let n = g.nrows();
    // exp(i(κ+π)) = −exp(iκ)
    let phase = -Complex64::from_polar(1.0, kappa);
    let factor = |w: i32| match w {
        0 => c(0.0, 0.0),
        1 => phase - c(1.0, 0.0),
        -1 => phase.conj() - c(1.0, 0.0),
        _ => phase.powi(w) - c(1.0, 0.0),
    };
    ComplexMatrix::from_fn(n, n, |l, m| {
        if l == m {
            return g[(l, l)];
        }
        // a†_l a_m = f†_l exp(−iχN_A) exp(iχN_B) f_m with A = [s(l), l),
        // B = [s(m), m); sites l and m drop out.
        let string: Vec<(usize, Complex64)> = (0..n)
            .filter(|&j| j != l && j != m)
            .filter_map(|j| {
                let w = i32::from(j >= starts[m] && j < m) - i32::from(j >= starts[l] && j < l);
                (w != 0).then(|| (j, factor(w)))
            })
            .collect();
        dressed_correlator(g, l, m, &string)
    })
}

/// `⟨a†_l a_m⟩` with strings running over the whole chain.
pub fn anyon_correlations(fermion_g: &ComplexMatrix, kappa: f64) -> ComplexMatrix {
    anyon_correlations_with_strings(fermion_g, kappa, &vec![0; fermion_g.nrows()])
}

/// `n(k) = (1/N) Σ_{l,m} e^{ik(l−m)} ⟨a†_l a_m⟩` at `k = 2πj/N`.
pub fn momentum_distribution(anyon_g: &ComplexMatrix) -> Vec<f64> {
    let n = anyon_g.nrows();
    (0..n)
        .map(|j| {
            let k = 2.0 * PI * j as f64 / n as f64;
            let mut sum = c(0.0, 0.0);
            for l in 0..n {
                for m in 0..n {
                    sum += Complex64::from_polar(1.0, k * (l as f64 - m as f64)) * anyon_g[(l, m)];
                }
            }
            sum.re / n as f64
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct CorrelationSet {
    pub fermion_g: ComplexMatrix,
    pub anyon_g: ComplexMatrix,
    pub nk: Vec<f64>,
}

impl CorrelationSet {
    pub fn new(fermion_g: ComplexMatrix, kappa: f64, starts: &[usize]) -> Self {
        let anyon_g = anyon_correlations_with_strings(&fermion_g, kappa, starts);
        let nk = momentum_distribution(&anyon_g);
        Self { fermion_g, anyon_g, nk }
    }
}

#[derive(Debug, Clone)]
pub struct QuenchComparison {
    pub spec: AnyonChainSpec,
    pub pre: CorrelationSet,
    pub post: CorrelationSet,
    /// `anyon_G(0⁺) − anyon_G(0⁻)`
    pub delta_g: ComplexMatrix,
    pub delta_nk: Vec<f64>,
}

impl QuenchComparison {
    pub fn max_change(&self) -> f64 {
        self.delta_g.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest `|ΔG_lm|` with both sites at least `N/4` from the cut bond.
    pub fn max_far_field_change(&self) -> f64 {
        let n = self.spec.sites;
        let far = |l: usize| self.spec.distance_to_quench(l) >= n / 4;
        let mut worst: f64 = 0.0;
        for l in (0..n).filter(|&l| far(l)) {
            for m in (0..n).filter(|&m| far(m)) {
                worst = worst.max(self.delta_g[(l, m)].norm());
            }
        }
        worst
    }

    pub fn max_density_change(&self) -> f64 {
        (0..self.spec.sites).map(|l| self.delta_g[(l, l)].norm()).fold(0.0, f64::max)
    }

    pub fn max_nk_change(&self) -> f64 {
        self.delta_nk.iter().map(|x| x.abs()).fold(0.0, f64::max)
    }

    /// CSV with header `l,m,re_pre,im_pre,re_post,im_post,abs_delta`.
    pub fn write_correlation_csv<W: Write>(&self, out: W) -> Result<()> {
        let io = |e: csv::Error| Error::InvalidInput(format!("CSV write failed: {e}"));
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["l", "m", "re_pre", "im_pre", "re_post", "im_post", "abs_delta"]).map_err(io)?;
        let n = self.spec.sites;
        for l in 0..n {
            for m in 0..n {
                let (a, b) = (self.pre.anyon_g[(l, m)], self.post.anyon_g[(l, m)]);
                w.write_record([
                    l.to_string(),
                    m.to_string(),
                    format!("{:.15e}", a.re),
                    format!("{:.15e}", a.im),
                    format!("{:.15e}", b.re),
                    format!("{:.15e}", b.im),
                    format!("{:.6e}", self.delta_g[(l, m)].norm()),
                ])
                .map_err(io)?;
            }
        }
        w.flush().map_err(|e| Error::InvalidInput(format!("CSV write failed: {e}")))?;
        Ok(())
    }

    /// CSV with header `k,nk_pre,nk_post,delta`.
    pub fn write_momentum_csv<W: Write>(&self, out: W) -> Result<()> {
        let io = |e: csv::Error| Error::InvalidInput(format!("CSV write failed: {e}"));
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["k", "nk_pre", "nk_post", "delta"]).map_err(io)?;
        let n = self.spec.sites;
        for j in 0..n {
            w.write_record([
                format!("{:.15e}", 2.0 * PI * j as f64 / n as f64),
                format!("{:.15e}", self.pre.nk[j]),
                format!("{:.15e}", self.post.nk[j]),
                format!("{:.6e}", self.delta_nk[j]),
            ])
            .map_err(io)?;
        }
        w.flush().map_err(|e| Error::InvalidInput(format!("CSV write failed: {e}")))?;
        Ok(())
    }
}

/// Correlators just before and just after the cut, evaluated on the same
/// pre-quench fermionic ground state.
pub fn quench_compare(spec: &AnyonChainSpec) -> Result<QuenchComparison> {
    let g = ground_state_correlations(spec)?;
    let pre = CorrelationSet::new(g.clone(), spec.kappa, &segment_starts(&spec.hoppings));
    let post = CorrelationSet::new(g, spec.kappa, &segment_starts(&spec.post_hoppings()));
    let delta_g = &post.anyon_g - &pre.anyon_g;
    let delta_nk = post.nk.iter().zip(&pre.nk).map(|(a, b)| a - b).collect();
    Ok(QuenchComparison {
        spec: spec.clone(),
        pre,
        post,
        delta_g,
        delta_nk,
    })
}
