use fragkit::analytics::{gamma_z, rho_moments};
use fragkit::laws::{arithmetic_check, ReproductionLaw};
use fragkit::rng::{Domain, StreamFactory};
use fragkit::simulator::{run, SimulationConfig};
use num_complex::Complex64;
use proptest::prelude::*;

fn sampled_laws() -> Vec<ReproductionLaw> {
    vec![
        ReproductionLaw::binary_uniform_conservative(),
        ReproductionLaw::stick_breaking_lossy(),
        ReproductionLaw::stick_breaking_conservative(),
        ReproductionLaw::filippov(2.5, 0.7).unwrap(),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn offspring_are_sorted_and_in_unit_interval(seed in any::<u64>(), idx in 0usize..4, floor in 1e-12f64..1e-3) {
        let law = &sampled_laws()[idx];
        let mut rng = StreamFactory::new(seed).stream(Domain::Offspring, 0, 0);
        let o = law.sample_offspring(&mut rng, floor).unwrap();
        prop_assert!(o.sizes.windows(2).all(|w| w[0] >= w[1]));
        prop_assert!(o.sizes.iter().all(|&x| x >= floor && x <= 1.0));
        prop_assert!(o.truncated_beta_mass_bound >= 0.0);
    }

    #[test]
    fn gamma_functional_equation(beta in 1.2f64..3.0, zr in 0.0f64..2.0, zi in -1.0f64..1.0, alpha in 0.5f64..2.0) {
        let law = ReproductionLaw::filippov(2.0, 1.0).unwrap();
        let b = Complex64::new(beta, 0.0);
        let z = Complex64::new(zr, zi);
        let g0 = gamma_z(&law, alpha, z, b, 1e-13).unwrap().value;
        let g1 = gamma_z(&law, alpha, z + 1.0, b, 1e-13).unwrap().value;
        let psi = law.psi(b + alpha * z).unwrap();
        prop_assert!((g1 - psi * g0).norm() <= 1e-9 * g1.norm());
    }

    #[test]
    fn rho_moments_are_log_convex(lambda in 1.1f64..4.0, theta_frac in 0.1f64..0.9, alpha in 0.3f64..2.0) {
        let theta = theta_frac * lambda;
        let law = ReproductionLaw::filippov(lambda, theta).unwrap();
        let m = rho_moments(&law, alpha, 8).unwrap();
        prop_assert!(m.is_log_convex());
        // (λ/α)_k
        let mut p = 1.0;
        for k in 1..=8u32 {
            p *= lambda / alpha + f64::from(k - 1);
            prop_assert!((m.get(k as usize) / p - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn powers_of_one_ratio_are_arithmetic(r in 0.05f64..0.95, exps in proptest::collection::vec(1i32..12, 1..6)) {
        let locs: Vec<f64> = exps.iter().map(|&k| r.powi(k)).collect();
        prop_assert!(arithmetic_check(&locs));
        prop_assert!(!arithmetic_check(&[r, r.powf(std::f64::consts::SQRT_2)]));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn simulation_is_deterministic(seed in any::<u64>(), rep in 0u64..1000) {
        let law = ReproductionLaw::stick_breaking_lossy();
        let cfg = SimulationConfig::new(1.0, vec![3.0], seed);
        prop_assert_eq!(run(&cfg, &law, rep).unwrap(), run(&cfg, &law, rep).unwrap());
    }
}
