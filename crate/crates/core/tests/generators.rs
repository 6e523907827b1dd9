use pev::evolution::validate_family;
use pev::generators::{
    channels_from_generator, dirac_self_test, extended_schrodinger_generator, momentum_1d,
    plane_wave, sample_temporal, schrodinger_generator, GeneratorSpec, SpacetimeGrid,
};
use pev::hilbert::{spectral_decompose, Operator, C64};

fn oscillator(b_t_inv: f64, k: f64) -> (SpacetimeGrid, Operator) {
    let grid = SpacetimeGrid::centered(128, 1, 0.25, 1.0).unwrap();
    let spec = GeneratorSpec {
        b_t_inv,
        v_t: Some(sample_temporal(&grid, |t| 0.5 * k * t * t)),
        ..GeneratorSpec::default()
    };
    let w = extended_schrodinger_generator(&grid, &spec).unwrap();
    (grid, w)
}

#[test]
fn temporal_oscillator_level_spacing() {
    for (b_t_inv, k) in [(1.0, 1.0), (0.5, 2.0), (2.0, 0.5), (1.0, 4.0)] {
        let (_, w) = oscillator(b_t_inv, k);
        let ev = w.hermitian_eigenvalues();
        let omega = (b_t_inv * k).sqrt();
        for n in 0..4 {
            let gap = ev[n + 1] - ev[n];
            assert!((gap / omega - 1.0).abs() < 0.05, "gap {gap} vs {omega}");
        }
    }
}

#[test]
fn stiffer_potential_localizes_in_time() {
    let mut last = f64::INFINITY;
    for k in [0.25, 1.0, 4.0] {
        let (grid, w) = oscillator(1.0, k);
        let sd = spectral_decompose(&w, 1e-9).unwrap();
        let ground = sd.projectors[0].basis();
        let t = grid.times();
        let mean: f64 = (0..t.len()).map(|i| ground[(i, 0)].norm_sqr() * t[i]).sum();
        let var: f64 = (0..t.len())
            .map(|i| ground[(i, 0)].norm_sqr() * (t[i] - mean).powi(2))
            .sum();
        // Ground state of ½B p² + ½K t²: Var(t) = ½√(B/K).
        let expect = 0.5 / k.sqrt();
        assert!(
            (var / expect - 1.0).abs() < 0.02,
            "k = {k}: {var} vs {expect}"
        );
        assert!(var < last);
        last = var;
    }
}

#[test]
fn schrodinger_family_validates_on_16_by_16() {
    let grid = SpacetimeGrid::new(16, 16, 1.0, 1.0).unwrap();
    let p = momentum_1d(16, 1.0);
    let h = (&p * &p).scale_real(0.5);
    let w = schrodinger_generator(&grid, &h).unwrap();
    assert!(w.hermiticity_residual() < 1e-12);
    let fam = channels_from_generator(&w, 1e-9).unwrap();
    let diag = validate_family(&fam);
    assert!(diag.passed(), "{:?}", diag.failed());
}

#[test]
fn plane_wave_phase_carries_the_energy() {
    // With H = E·1, η_k ⊗ φ is an eigenvector of p̂₀ − H with eigenvalue k − E;
    // the stationary state k = E lies in the null space.
    let grid = SpacetimeGrid::new(32, 1, 0.5, 1.0).unwrap();
    let e = 2.0 * std::f64::consts::PI * 3.0 / (32.0 * 0.5);
    let w = schrodinger_generator(&grid, &Operator::identity(1).scale_real(e)).unwrap();
    let v = plane_wave(32, 0.5, 0.0, e);
    let r: f64 = w.apply(&v).iter().map(C64::norm_sqr).sum();
    assert!(r.sqrt() < 1e-10);
    // The time dependence is e^{−iEt}.
    let step = v[1] / v[0];
    assert!((step - C64::from_polar(1.0, -e * 0.5)).norm() < 1e-12);
}

#[test]
fn dirac_generator_hermitian_after_gamma0() {
    let rep = dirac_self_test(&SpacetimeGrid::new(8, 4, 1.0, 1.0).unwrap()).unwrap();
    assert!(rep.anticommutator_residual < 1e-15);
    assert!(rep.generator_hermiticity > 0.1);
    assert!(rep.gamma0_generator_hermiticity < 1e-12);
}
