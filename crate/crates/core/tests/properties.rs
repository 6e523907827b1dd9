use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pev::evolution::{
    luders_update, random_density, random_kraus_family, sample_path, transition_prob,
    validate_family,
};
use pev::generators::SpacetimeGrid;
use pev::hilbert::{is_valid_density, spectral_decompose, Operator, Tolerances, C64};
use pev::symmetry::{transform_family, transform_state};
use pev::timeops::{causality_probability, GridWavefunction};

fn random_operator(rng: &mut ChaCha8Rng, n: usize) -> Operator {
    Operator::from_matrix(DMatrix::from_fn(n, n, |_, _| {
        C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
    }))
    .unwrap()
}

fn random_unitary(rng: &mut ChaCha8Rng, n: usize) -> Operator {
    random_operator(rng, n).hermitian_part().exp_i(1.3).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn trace_is_cyclic(seed in any::<u64>(), n in 1usize..10) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_operator(&mut rng, n);
        let b = random_operator(&mut rng, n);
        let d = ((&a * &b).trace() - (&b * &a).trace()).norm();
        prop_assert!(d < 1e-12);
    }

    #[test]
    fn spectral_decomposition_reconstructs(seed in any::<u64>(), n in 1usize..12) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_operator(&mut rng, n).hermitian_part();
        let sd = spectral_decompose(&a, 1e-9).unwrap();
        let mut back = Operator::zeros(n);
        for (v, p) in sd.eigenvalues.iter().zip(&sd.projectors) {
            back = &back + &p.to_operator().scale_real(*v);
        }
        prop_assert!(back.max_abs_diff(&a) < 1e-10);
    }

    #[test]
    fn kraus_probabilities_sum_to_one(seed in any::<u64>(), n in 1usize..10, chans in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let fam = random_kraus_family(&mut rng, 1, n, chans, 2);
        prop_assert!(validate_family(&fam).passed());
        let rho = random_density(&mut rng, n);
        let s: f64 = fam.channels().iter().map(|c| transition_prob(c, &rho).unwrap()).sum();
        prop_assert!((s - 1.0).abs() < 1e-10);
    }

    #[test]
    fn luders_output_is_a_state(seed in any::<u64>(), n in 1usize..10) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let fam = random_kraus_family(&mut rng, 1, n, 3, 1);
        let rho = random_density(&mut rng, n);
        for c in fam.channels() {
            if transition_prob(c, &rho).unwrap() > 1e-9 {
                let out = luders_update(c, &rho).unwrap();
                prop_assert!(is_valid_density(out.op(), &Tolerances::default()).valid);
            }
        }
    }

    #[test]
    fn paths_repeat_for_equal_seeds(seed in any::<u64>(), n in 2usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let fams: Vec<_> = (1..=4).map(|t| random_kraus_family(&mut rng, t, n, 2, 1)).collect();
        let rho = random_density(&mut rng, n);
        let a = sample_path(&fams, &rho, seed).unwrap();
        let b = sample_path(&fams, &rho, seed).unwrap();
        prop_assert_eq!(a.to_csv(), b.to_csv());
    }

    #[test]
    fn unitary_transform_preserves_validation(seed in any::<u64>(), n in 1usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let fam = random_kraus_family(&mut rng, 1, n, 2, 2);
        let g = random_unitary(&mut rng, n);
        let moved = transform_family(&g, &fam).unwrap();
        prop_assert_eq!(validate_family(&fam).passed(), validate_family(&moved).passed());
        // Moving both the family and the state leaves every probability alone.
        let rho = random_density(&mut rng, n);
        let rho_g = transform_state(&g, &rho).unwrap();
        for (c, cg) in fam.channels().iter().zip(moved.channels()) {
            let d = transition_prob(c, &rho).unwrap() - transition_prob(cg, &rho_g).unwrap();
            prop_assert!(d.abs() < 1e-10);
        }
    }

    #[test]
    fn causality_is_translation_invariant(
        shift in 0usize..20,
        t0 in 10.0f64..30.0,
        x0 in -3.0f64..3.0,
        sigma in 1.0f64..4.0,
        vertex in 0.0f64..20.0,
    ) {
        let grid = SpacetimeGrid::with_origin(64, 33, 1.0, 0.5, 0.0, -8.0).unwrap();
        let psi = GridWavefunction::gaussian(grid, [t0, x0], [sigma, sigma], [0.0, 0.0]).unwrap();
        let s = shift as f64 * grid.dt;
        let moved_grid = SpacetimeGrid::with_origin(64, 33, 1.0, 0.5, s, -8.0).unwrap();
        let moved = GridWavefunction::new(moved_grid, psi.amplitudes().to_vec()).unwrap();
        let a = causality_probability(&psi, vertex);
        let b = causality_probability(&moved, vertex + s);
        prop_assert!((a - b).abs() < 1e-12);
    }
}
