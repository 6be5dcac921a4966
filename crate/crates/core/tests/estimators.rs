use fragkit::analytics::filippov_rho_cdf;
use fragkit::estimators::*;
use fragkit::laws::ReproductionLaw;
use fragkit::rng::{Domain, StreamFactory};
use fragkit::simulator::*;
use rand_distr::{Distribution, Gamma};

fn filippov_snapshots(t: f64, reps: u64, seed: u64) -> Vec<PopulationSnapshot> {
    let law = ReproductionLaw::filippov(2.0, 1.0).unwrap();
    let cfg = SimulationConfig::new(1.0, vec![t], seed);
    run_replicates(&cfg, &law, 0, reps).unwrap().into_iter().map(|r| r.snapshots[0].clone()).collect()
}

#[test]
fn z_test_rules() {
    assert!(Check::z_test("a", 1.0, 1.05, 0.02).pass);
    assert!(!Check::z_test("b", 1.0, 1.07, 0.02).pass);
    let exact = Check::z_test("c", 1.0, 1.0, 0.0);
    assert!(exact.pass && exact.z == 0.0);
    assert!(!Check::z_test("d", 1.0, 1.1, 0.0).pass);
    assert!(Check::with_rule("e", 0.5, 0.0, 0.1, Rule::Positive { sigmas: 2.0 }).pass);
    assert!(!Check::with_rule("f", 0.1, 0.0, 0.1, Rule::Positive { sigmas: 2.0 }).pass);
    assert!(Check::with_rule("g", 1.04, 1.0, 0.0, Rule::RelativeBand { tol: 0.05 }).pass);
    let mut r = ValidationReport::default();
    r.push(Check::z_test("ok", 0.0, 0.0, 1.0));
    assert!(r.all_pass());
    r.push(Check::z_test("bad", 10.0, 0.0, 1.0));
    assert!(!r.all_pass());
    assert_eq!(r.table().lines().count(), 3);
}

#[test]
fn weights_match_power_sums() {
    let snaps = filippov_snapshots(5.0, 100, 3);
    let m = empirical_weighted_measure(&snaps, 1.0, 1.0).unwrap();
    assert_eq!(m.replicates(), 100);
    for (i, s) in snaps.iter().enumerate() {
        assert_eq!(m.replicate_totals[i], s.power_sum(1.0));
    }
    assert!(m.atoms.iter().all(|a| a.0 > 0.0));
    let edges = m.default_edges(20);
    assert_eq!(edges.len(), 21);
    let wide: Vec<f64> = std::iter::once(0.0).chain(edges[1..20].iter().copied()).chain(std::iter::once(f64::MAX)).collect();
    let mass: f64 = m.histogram(&wide).iter().sum();
    let total: f64 = m.atoms.iter().map(|a| a.1).sum::<f64>() / 100.0;
    assert!((mass - total).abs() < 1e-9 * total);
}

#[test]
fn empty_input_is_an_error() {
    assert!(empirical_weighted_measure(&[], 1.0, 1.0).is_err());
}

#[test]
fn early_singleton_is_far_from_the_limit() {
    let snaps = filippov_snapshots(1e-6, 20, 1);
    let m = empirical_weighted_measure(&snaps, 1.0, 1.0).unwrap();
    let d = cdf_distance(&m, |x| filippov_rho_cdf(2.0, 1.0, x)).unwrap();
    assert!(d > 0.99, "{d}");
}

#[test]
fn weighted_measure_is_close_to_rho_at_t50() {
    let snaps = filippov_snapshots(50.0, 10_000, 50);
    let m = empirical_weighted_measure(&snaps, 1.0, 1.0).unwrap();
    let d = cdf_distance(&m, |x| filippov_rho_cdf(2.0, 1.0, x)).unwrap();
    assert!(d < 0.02, "{d}");
}

#[test]
fn kolmogorov_of_exact_draws_respects_dkw() {
    let f = StreamFactory::new(4);
    let g = Gamma::new(2.0, 1.0).unwrap();
    let mut xs: Vec<f64> = (0..20_000u64).map(|i| g.sample(&mut f.stream(Domain::Natural, i, 0))).collect();
    let d = sample_kolmogorov(&mut xs, |x| filippov_rho_cdf(2.0, 1.0, x));
    // DKW at level 1e-3
    assert!(d < ((2.0f64 / 1e-3).ln() / 40_000.0).sqrt(), "{d}");
}

#[test]
fn standard_errors_shrink_like_root_r() {
    let a = empirical_weighted_measure(&filippov_snapshots(10.0, 1000, 8), 1.0, 1.0).unwrap();
    let b = empirical_weighted_measure(&filippov_snapshots(10.0, 4000, 9), 1.0, 1.0).unwrap();
    let ratio = a.moment(1).1 / b.moment(1).1;
    assert!((ratio - 2.0).abs() < 0.5, "{ratio}");
}

#[test]
fn second_moment_oracle() {
    let cons = m_infinity_second_moment_oracle(&ReproductionLaw::stick_breaking_conservative(), 10, 0).unwrap();
    assert_eq!(cons.value, 1.0);
    let fl = m_infinity_second_moment_oracle(&ReproductionLaw::filippov(2.0, 1.0).unwrap(), 10, 0).unwrap();
    assert!(fl.analytic);
    assert!((fl.value - 2.25).abs() < 1e-10, "{}", fl.value);
}

#[test]
fn filippov_integrals() {
    assert!((filippov_rho_integral(TestFunction::ExpNeg, 2.0, 1.0) - 0.25).abs() < 1e-10);
    assert!((filippov_rho_integral(TestFunction::Indicator { a: 0.0, b: f64::INFINITY }, 3.0, 0.5) - 1.0).abs() < 1e-9);
    let tag = ReproductionLaw::filippov(2.0, 1.0).unwrap().tilted_tag_law().unwrap();
    let (m, se) = rho_integral_by_y(TestFunction::ExpNeg, &tag, 1.0, 20_000, 6);
    assert!((m - 0.25).abs() < 3.0 * se, "{m} ± {se}");
}

#[test]
fn functional_pair_sums_weights() {
    let snap = PopulationSnapshot {
        t: 2.0,
        replicate_id: 0,
        master_seed: 0,
        sizes: vec![0.5, 0.25],
        frozen_beta_mass_bound: 0.0,
        child_floor: 0.0,
    };
    let (a, m) = functional_pair(&snap, TestFunction::ExpNeg, 1.0, 1.0);
    assert!((m - 0.75).abs() < 1e-15);
    assert!((a - (0.5 * (-1.0f64).exp() + 0.25 * (-0.5f64).exp())).abs() < 1e-15);
}

#[test]
fn power_sum_test_at_time_zero() {
    let law = ReproductionLaw::stick_breaking_lossy();
    let c = mean_power_sum_test("m(0)", &[1.0, 1.0, 1.0], 0.0, 1.3, &law, 1.0).unwrap();
    assert!(c.pass);
}
