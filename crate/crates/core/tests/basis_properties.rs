mod support;

use nhtdse_core::biortho::{eig_biortho, DEFAULT_DEFECT_TOL};
use nhtdse_core::linalg::{c, identity, is_hermitian, ComplexMatrix};
use nhtdse_core::metric::{components, instantaneous_metric, observable, observable_in_frame, MetricState};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use support::{random_nh, random_vector};

fn random_unitary<R: Rng>(dim: usize, rng: &mut R) -> ComplexMatrix {
    let a = ComplexMatrix::from_fn(dim, dim, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    a.qr().q()
}

fn random_damping<R: Rng>(dim: usize, rng: &mut R) -> Vec<f64> {
    (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn basis_invariants(dim in 2usize..=8, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = random_nh(dim, &mut rng);
        let basis = eig_biortho(&h, DEFAULT_DEFECT_TOL).unwrap();
        prop_assert!(basis.biorthonormality_defect() < 1e-10);
        prop_assert!(basis.residual(&h) < 1e-10 * h.norm().max(1.0));
        for n in 0..dim {
            let r = basis.right(n);
            prop_assert!((r.norm() - 1.0).abs() < 1e-14);
            let first = r.iter().find(|z| z.norm() > 1e-12).unwrap();
            prop_assert!(first.im.abs() < 1e-14);
        }
        let e = basis.eigenvalues();
        prop_assert!(e.windows(2).all(|w| (w[0].re, w[0].im) <= (w[1].re, w[1].im)));
        // Completeness: Σ |n⟩⟨⟨n| = I.
        let completeness = basis.right_matrix() * basis.left_matrix();
        prop_assert!((completeness - identity(dim)).norm() < 1e-10);
    }

    #[test]
    fn metric_is_sum_of_positive_projectors(dim in 2usize..=8, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let basis = eig_biortho(&random_nh(dim, &mut rng), DEFAULT_DEFECT_TOL).unwrap();
        let m = instantaneous_metric(&basis).unwrap();
        let sum = (0..dim).fold(ComplexMatrix::zeros(dim, dim), |acc, n| acc + m.projector(n));
        prop_assert!((&sum - m.w_tilde()).norm() < 1e-12 * sum.norm());
        prop_assert!(is_hermitian(m.w_tilde(), 1e-12));
        prop_assert!(m.w_tilde().clone().cholesky().is_some());
    }

    #[test]
    fn gauge_choice_does_not_change_metric(dim in 2usize..=6, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = random_nh(dim, &mut rng);
        let basis = eig_biortho(&h, DEFAULT_DEFECT_TOL).unwrap();
        let n = rng.random_range(0..dim);
        let phase = c(0.0, rng.random_range(0.0..6.0)).exp();
        let rephased = basis.rephased(n, phase);
        let perm: Vec<usize> = (0..dim).rev().collect();
        let permuted = basis.permuted(&perm);
        let w = instantaneous_metric(&basis).unwrap();
        for other in [rephased, permuted] {
            let w2 = instantaneous_metric(&other).unwrap();
            prop_assert!((w.w_tilde() - w2.w_tilde()).norm() < 1e-12 * w.w_tilde().norm());
        }
    }

    #[test]
    fn unitary_regauging_preserves_observables(dim in 2usize..=6, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let basis = eig_biortho(&random_nh(dim, &mut rng), DEFAULT_DEFECT_TOL).unwrap();
        let metric = MetricState::new(basis, random_damping(dim, &mut rng)).unwrap();
        let u = random_unitary(dim, &mut rng);
        let eta = metric.eta();
        let eta_u = &u * eta;
        prop_assert!((eta_u.adjoint() * &eta_u - metric.w()).norm() < 1e-12 * metric.w().norm());

        let psi = random_vector(dim, &mut rng);
        let o = ComplexMatrix::from_fn(dim, dim, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let o_u = &u * &o * u.adjoint();
        let reference = observable(&psi, &o, &metric).unwrap();
        let framed = observable_in_frame(&psi, &o, eta).unwrap();
        let regauged = observable_in_frame(&psi, &o_u, &eta_u).unwrap();
        prop_assert!((reference - framed).norm() < 1e-12 * reference.norm().max(1.0));
        prop_assert!((framed - regauged).norm() < 1e-12 * framed.norm().max(1.0));
    }

    #[test]
    fn components_sum_to_one(dim in 2usize..=8, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let basis = eig_biortho(&random_nh(dim, &mut rng), DEFAULT_DEFECT_TOL).unwrap();
        let metric = MetricState::new(basis, random_damping(dim, &mut rng)).unwrap();
        let psi = random_vector(dim, &mut rng);
        let (pops, a) = components(&psi, &metric).unwrap();
        prop_assert!(a > 0.0);
        prop_assert!(pops.iter().all(|&p| p >= 0.0));
        prop_assert!((pops.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let weighted: f64 = metric.weighted_populations(&psi).unwrap().iter().sum();
        prop_assert!((weighted - a).abs() < 1e-12 * a);
    }
}

#[test]
fn hermitian_sources_give_unit_metric() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for dim in 2..=8 {
        let a = ComplexMatrix::from_fn(dim, dim, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let h = (&a + a.adjoint()) * c(0.5, 0.0);
        let m = instantaneous_metric(&eig_biortho(&h, DEFAULT_DEFECT_TOL).unwrap()).unwrap();
        assert!((m.w_tilde() - identity(dim)).norm() < 1e-10);
    }
}
