use approx::assert_relative_eq;
use proptest::prelude::*;
use transleak::analytic::{first_excited_populations, qutrit_map_with};
use transleak::bath::BathSpec;
use transleak::cli::sweep_executor;
use transleak::dynamics::{evolve, DensityMatrix, EvolutionSpec, Method};
use transleak::linalg::{CMat, C64};
use transleak::metrics::{cardinal_states, gate_fidelity, not_gate, state_leakage};
use transleak::noise::{NoiseGenerator, NoiseSpectrum};
use transleak::transmon::{TransmonModel, TransmonSpec};

fn random_state(n: usize, amps: &[(f64, f64)]) -> DensityMatrix {
    let psi: Vec<C64> = amps.iter().take(n).map(|&(re, im)| C64::new(re, im)).collect();
    let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let psi: Vec<C64> = psi.iter().map(|z| z / norm).collect();
    DensityMatrix::pure(&psi).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn spectra_obey_detailed_balance(kappa in 1e-4..0.5f64, beta in 0.2..20.0f64, w in 0.01..30.0f64) {
        let bath = BathSpec::new(kappa, beta, 50.0);
        prop_assert!((bath.spectral_density(-w) + bath.spectral_density(w)).abs() < 1e-15);
        let ratio = bath.rate_spectrum(w) / bath.rate_spectrum(-w);
        assert_relative_eq!(ratio, (beta * w).exp(), max_relative = 1e-10);
        let sym = bath.symmetrized_spectrum(w);
        assert_relative_eq!(sym, bath.rate_spectrum(w) + bath.rate_spectrum(-w), max_relative = 1e-10);
        prop_assert!(bath.quantum_spectrum(w) >= 0.0 && bath.quantum_spectrum(w) <= sym);
    }

    #[test]
    fn transmon_levels_are_ordered_and_anharmonic(ej in 20.0..400.0f64, n in 2usize..8) {
        // the default cutoff covers N <= 5
        let spec = if n <= 5 { TransmonSpec::new(ej, n) } else { TransmonSpec::new(ej, n).with_charge_cutoff(25) };
        let m = TransmonModel::build(&spec).unwrap();
        prop_assert_eq!(m.omega.len(), n);
        prop_assert_eq!(m.omega[0], 0.0);
        assert_relative_eq!(m.omega01(), 1.0, epsilon = 1e-12);
        prop_assert!(m.omega.windows(2).all(|w| w[1] > w[0]));
        prop_assert!(m.anharmonicity < 0.0);
        let q = m.coupling();
        prop_assert!(q.hermiticity_defect() < 1e-12);
        assert_relative_eq!(q[(0, 1)].norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn weak_coupling_generators_keep_a_physical_state(
        kappa in 0.0..0.05f64,
        beta in 0.5..10.0f64,
        amps in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 4),
        redfield in any::<bool>(),
    ) {
        prop_assume!(amps.iter().any(|&(a, b)| a.abs() + b.abs() > 0.1));
        let m = TransmonModel::build(&TransmonSpec::new(60.0, 4)).unwrap();
        let bath = BathSpec::new(kappa, beta, 50.0);
        let method = if redfield { Method::Redfield } else { Method::Lindblad };
        let spec = EvolutionSpec::new(method, 3.0, 0.01).with_save_every(100);
        let traj = evolve(&m, &bath, None, &random_state(4, &amps), &spec).unwrap();
        for rho in &traj.states {
            prop_assert!((rho.trace().re - 1.0).abs() < 1e-10);
            prop_assert!(rho.trace().im.abs() < 1e-12);
            prop_assert!(rho.hermiticity_defect() < 1e-10);
            prop_assert!(rho.diag_real().iter().all(|&p| p > -1e-9 && p < 1.0 + 1e-9));
            let l = state_leakage(rho);
            prop_assert!((0.0..=1.0).contains(&l));
        }
    }

    #[test]
    fn analytic_map_is_trace_preserving(f in 0.0..1e3f64, phi in -50.0..50.0f64, kappa in 1e-3..0.5f64) {
        let rho = qutrit_map_with(&CMat::basis_projector(3, 1), f, phi, kappa).unwrap();
        assert_relative_eq!(rho.trace().re, 1.0, epsilon = 1e-12);
        let p = first_excited_populations(f, kappa);
        assert_relative_eq!(p.iter().sum::<f64>(), 1.0, epsilon = 1e-14);
        for k in 0..3 {
            assert_relative_eq!(rho[(k, k)].re, p[k], epsilon = 1e-12);
        }
        // rho_00 : rho_22 stays 1 : 2
        assert_relative_eq!(2.0 * p[0], p[2], epsilon = 1e-14);
    }

    #[test]
    fn fidelity_ignores_global_phase(phase in 0.0..6.3f64, n in 2usize..5) {
        let u = not_gate(n);
        let init = cardinal_states(n);
        let finals: Vec<CMat> = init.iter().map(|r| u.matmul(r.matrix()).matmul(&u.adjoint())).collect();
        let res = gate_fidelity(&finals, &u.scaled(C64::from_polar(1.0, phase)), &init, 1.0);
        assert_relative_eq!(res.fidelity, 1.0, epsilon = 1e-13);
    }

    #[test]
    fn noise_paths_are_reproducible_per_stream(seed in any::<u64>(), stream in 0u64..1000) {
        let bath = BathSpec::new(0.1, 3.0, 50.0);
        let g = NoiseGenerator::new(&bath, 64, 0.01, NoiseSpectrum::Full, true, seed).unwrap();
        let (a, b) = (g.sample(stream), g.sample(stream));
        prop_assert_eq!(&a.xi, &b.xi);
        prop_assert_eq!(&a.nu, &b.nu);
        let c = g.sample(stream + 1);
        prop_assert_ne!(&a.xi, &c.xi);
    }

    #[test]
    fn sweep_results_follow_grid_order(grid in prop::collection::vec(-1e3..1e3f64, 1..40)) {
        let out = sweep_executor(&grid, |&x| Ok(2.0 * x)).unwrap();
        prop_assert_eq!(out, grid.iter().map(|x| 2.0 * x).collect::<Vec<_>>());
    }
}

#[test]
fn stochastic_ensembles_do_not_depend_on_thread_count() {
    let m = TransmonModel::build(&TransmonSpec::new(100.0, 3)).unwrap();
    let bath = BathSpec::new(0.05, 5.0, 50.0);
    let spec = EvolutionSpec::new(Method::Sled, 0.3, 0.01)
        .with_trajectories(150, 77)
        .with_save_every(10);
    let rho0 = DensityMatrix::basis_state(3, 1);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| evolve(&m, &bath, None, &rho0, &spec).unwrap())
    };
    let (a, b) = (run(1), run(3));
    for (x, y) in a.states.iter().zip(&b.states) {
        assert_eq!(x.as_slice(), y.as_slice());
    }
}
