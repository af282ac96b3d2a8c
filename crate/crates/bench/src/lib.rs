//! Fixed inputs shared by the benchmarks.

use nhtdse_core::models::{random_state, SimilaritySchedule};
use nhtdse_core::{ComplexMatrix, ComplexVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Seeded non-hermitian matrix with a well-separated spectrum.
pub fn nh_matrix(dim: usize, seed: u64) -> ComplexMatrix {
    SimilaritySchedule::seeded(dim, seed).hamiltonian(0.3)
}

/// Seeded normalized state.
pub fn state(dim: usize, seed: u64) -> ComplexVector {
    random_state(dim, &mut ChaCha8Rng::seed_from_u64(seed))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inputs_are_reproducible() {
        assert_eq!(nh_matrix(4, 7), nh_matrix(4, 7));
        assert_eq!(state(5, 1), state(5, 1));
        assert!((state(5, 1).norm() - 1.0).abs() < 1e-12);
    }
}
