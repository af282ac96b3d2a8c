//! Brute-force many-body reference: fermions on bit strings.
//!
//! Occupations are bits of a `u32`. Fermion operators carry the sign
//! `(−1)^{N_{<l}}`; anyon operators are built by attaching explicit string
//! phases to them, with no use of Wick's theorem.

use nhtdse_core::linalg::c;
use num_complex::Complex64;

pub struct Sector {
    pub sites: usize,
    pub states: Vec<u32>,
}

impl Sector {
    pub fn new(sites: usize, particles: usize) -> Self {
        let states = (0u32..1 << sites).filter(|s| s.count_ones() as usize == particles).collect();
        Self { sites, states }
    }

    pub fn index(&self, state: u32) -> Option<usize> {
        self.states.binary_search(&state).ok()
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }
}

fn below(state: u32, l: usize) -> u32 {
    (state & ((1u32 << l) - 1)).count_ones()
}

/// `f_l|s⟩ = (−1)^{N_{<l}} |s − e_l⟩`
pub fn annihilate(state: u32, l: usize) -> Option<(f64, u32)> {
    if state & (1 << l) == 0 {
        return None;
    }
    let sign = if below(state, l).is_multiple_of(2) { 1.0 } else { -1.0 };
    Some((sign, state & !(1 << l)))
}

/// `f†_l|s⟩ = (−1)^{N_{<l}} |s + e_l⟩`
pub fn create(state: u32, l: usize) -> Option<(f64, u32)> {
    if state & (1 << l) != 0 {
        return None;
    }
    let sign = if below(state, l).is_multiple_of(2) { 1.0 } else { -1.0 };
    Some((sign, state | (1 << l)))
}

/// Ground state of `Σ t_l (f†_{l+1} f_l + h.c.)` in the given sector.
pub fn ground_state(sector: &Sector, hoppings: &[f64]) -> Vec<f64> {
    let n = sector.dim();
    let mut h = nalgebra::DMatrix::<f64>::zeros(n, n);
    for (col, &s) in sector.states.iter().enumerate() {
        for (l, &t) in hoppings.iter().enumerate() {
            for (from, to) in [(l, l + 1), (l + 1, l)] {
                if let Some((s1, mid)) = annihilate(s, from) {
                    if let Some((s2, out)) = create(mid, to) {
                        let row = sector.index(out).unwrap();
                        h[(row, col)] += t * s1 * s2;
                    }
                }
            }
        }
    }
    let eig = h.symmetric_eigen();
    let k = (0..n).min_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b])).unwrap();
    eig.eigenvectors.column(k).iter().copied().collect()
}

/// `⟨f†_l f_m⟩`
pub fn fermion_correlations(sector: &Sector, psi: &[f64]) -> Vec<Vec<Complex64>> {
    let n = sector.sites;
    let mut g = vec![vec![c(0.0, 0.0); n]; n];
    for (l, row) in g.iter_mut().enumerate() {
        for (m, entry) in row.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (i, &s) in sector.states.iter().enumerate() {
                if let Some((s1, mid)) = annihilate(s, m) {
                    if let Some((s2, out)) = create(mid, l) {
                        acc += psi[sector.index(out).unwrap()] * psi[i] * s1 * s2;
                    }
                }
            }
            *entry = c(acc, 0.0);
        }
    }
    g
}

/// `a_m|s⟩ = exp(i(κ+π) N_{[start_m, m)}) f_m|s⟩`
fn anyon_annihilate(state: u32, m: usize, kappa: f64, start: usize) -> Option<(Complex64, u32)> {
    let (sign, out) = annihilate(state, m)?;
    let string = (start..m).filter(|&j| state & (1 << j) != 0).count() as f64;
    Some((Complex64::from_polar(sign, (kappa + std::f64::consts::PI) * string), out))
}

/// `⟨a†_l a_m⟩ = ⟨a_l ψ | a_m ψ⟩` with explicit strings starting at
/// `starts[site]`.
pub fn anyon_correlations(sector: &Sector, psi: &[f64], kappa: f64, starts: &[usize]) -> Vec<Vec<Complex64>> {
    let n = sector.sites;
    let apply = |m: usize| -> std::collections::BTreeMap<u32, Complex64> {
        let mut out = std::collections::BTreeMap::new();
        for (i, &s) in sector.states.iter().enumerate() {
            if let Some((amp, t)) = anyon_annihilate(s, m, kappa, starts[m]) {
                *out.entry(t).or_insert(c(0.0, 0.0)) += amp * psi[i];
            }
        }
        out
    };
    let images: Vec<_> = (0..n).map(apply).collect();
    let mut g = vec![vec![c(0.0, 0.0); n]; n];
    for l in 0..n {
        for m in 0..n {
            g[l][m] = images[l]
                .iter()
                .filter_map(|(s, a)| images[m].get(s).map(|b| a.conj() * b))
                .sum();
        }
    }
    g
}
