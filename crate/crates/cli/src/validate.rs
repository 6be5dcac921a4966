//! Validation suites: Monte Carlo estimates checked against analytic targets.

use fragkit::analytics::{filippov_lambda, filippov_rho_cdf, homogeneous_m, rho_moment};
use fragkit::estimators::{
    cdf_distance, empirical_weighted_measure, filippov_rho_integral, functional_pair, l2_functional_test,
    m_infinity_second_moment_oracle, mean_power_sum_test, rho_integral_by_y, sample_kolmogorov, Check, Rule,
    TestFunction, ValidationReport,
};
use fragkit::rng::{Domain, StreamFactory};
use fragkit::simulator::{
    estimate_m_infinity_moments, mean_se, run_replicates, sample_y, tagged_size_at, PopulationSnapshot,
    SimulationConfig,
};
use fragkit::{Error, ReproductionLaw, Result};
use num_complex::Complex64;
use rayon::prelude::*;
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Moments,
    Martingale,
    L2,
    Cdf,
    All,
}

impl FromStr for Suite {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "moments" => Ok(Suite::Moments),
            "martingale" => Ok(Suite::Martingale),
            "l2" => Ok(Suite::L2),
            "cdf" => Ok(Suite::Cdf),
            "all" => Ok(Suite::All),
            _ => Err(format!("unknown suite '{s}' (expected moments, martingale, l2, cdf or all)")),
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Suite::Moments => "moments",
            Suite::Martingale => "martingale",
            Suite::L2 => "l2",
            Suite::Cdf => "cdf",
            Suite::All => "all",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone)]
pub struct SuiteConfig {
    pub alpha: f64,
    pub replicates: u64,
    pub seed: u64,
    /// Snapshot time of the moments and cdf suites.
    pub t_max: f64,
    /// Overrides the time ladder of the martingale and l2 suites.
    pub times: Option<Vec<f64>>,
    /// Depth of the generation martingale.
    pub depth: usize,
    pub child_floor: Option<f64>,
    /// Number of Y or tagged-path draws used as independent oracles.
    pub oracle_draws: usize,
    pub ks_limit: f64,
}

impl SuiteConfig {
    pub fn new(alpha: f64, replicates: u64, seed: u64) -> Self {
        Self {
            alpha,
            replicates,
            seed,
            t_max: 30.0,
            times: None,
            depth: 12,
            child_floor: None,
            oracle_draws: 100_000,
            ks_limit: 0.02,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct SuiteOutcome {
    pub report: ValidationReport,
    pub notes: Vec<String>,
}

pub fn run_suite(law: &ReproductionLaw, suite: Suite, cfg: &SuiteConfig) -> Result<SuiteOutcome> {
    let mut out = SuiteOutcome::default();
    let needs_alpha = |name: &str| -> Result<()> {
        if cfg.alpha > 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("the {name} suite needs α > 0")))
        }
    };
    match suite {
        Suite::Moments => {
            needs_alpha("moments")?;
            moments(law, cfg, &mut out)?
        }
        Suite::Martingale => martingale(law, cfg, &mut out)?,
        Suite::L2 => {
            needs_alpha("l2")?;
            l2(law, cfg, &mut out)?
        }
        Suite::Cdf => {
            needs_alpha("cdf")?;
            cdf(law, cfg, &mut out)?
        }
        Suite::All => {
            if cfg.alpha > 0.0 {
                moments(law, cfg, &mut out)?;
            }
            martingale(law, cfg, &mut out)?;
            if cfg.alpha > 0.0 {
                l2(law, cfg, &mut out)?;
                cdf(law, cfg, &mut out)?;
            } else {
                out.notes.push("α = 0: moments, l2 and cdf suites skipped".into());
            }
        }
    }
    Ok(out)
}

fn simulate(law: &ReproductionLaw, cfg: &SuiteConfig, times: Vec<f64>) -> Result<Vec<Vec<PopulationSnapshot>>> {
    let mut sim = SimulationConfig::new(cfg.alpha, times.clone(), cfg.seed);
    if let Some(f) = cfg.child_floor {
        sim.child_floor = f;
    }
    let runs = run_replicates(&sim, law, 0, cfg.replicates)?;
    if let Some(r) = runs.iter().find(|r| r.cap_exceeded) {
        return Err(Error::InvalidConfig(format!(
            "replicate {} hit the population cap of {}",
            r.replicate_id, sim.max_particles
        )));
    }
    Ok((0..times.len()).map(|i| runs.iter().map(|r| r.snapshots[i].clone()).collect()).collect())
}

fn moments(law: &ReproductionLaw, cfg: &SuiteConfig, out: &mut SuiteOutcome) -> Result<()> {
    let (alpha, t) = (cfg.alpha, cfg.t_max);
    let bs = law.beta_star()?;
    let snaps = simulate(law, cfg, vec![t])?.remove(0);
    let measure = empirical_weighted_measure(&snaps, alpha, bs)?;
    for k in 1..=2u32 {
        let target = rho_moment(law, alpha, k)?;
        let (m, se) = measure.moment(k);
        out.report.push(Check::z_test(format!("weighted moment k={k} vs rho, t={t}"), m, target, se));
        // the same statistic against its exact finite-t mean t^k m(t, β*+αk)
        let scale = t.powi(k as i32);
        let values: Vec<f64> = measure.per_replicate(|x| x.powf(alpha * f64::from(k))).iter().map(|v| v / scale).collect();
        let beta = bs + alpha * f64::from(k);
        out.report.push(mean_power_sum_test(&format!("E M(t,b*+{k}a) vs m(t,.), t={t}"), &values, t, beta, law, alpha)?);
    }
    match law.tilted_tag_law() {
        Ok(tag) => {
            let factory = StreamFactory::new(cfg.seed);
            let ys: Vec<f64> = (0..cfg.oracle_draws as u64)
                .into_par_iter()
                .map(|i| sample_y(&tag, alpha, 1e-12, &mut factory.stream(Domain::Tagged, i, 0)).value)
                .collect();
            for k in 1..=2i32 {
                let v: Vec<f64> = ys.iter().map(|y| y.powi(k)).collect();
                let (m, se) = mean_se(&v);
                out.report.push(Check::z_test(format!("E Y^{k} vs rho moment {k}"), m, rho_moment(law, alpha, k as u32)?, se));
            }
        }
        Err(e) => out.notes.push(format!("Y checks skipped: {e}")),
    }
    Ok(())
}

fn martingale(law: &ReproductionLaw, cfg: &SuiteConfig, out: &mut SuiteOutcome) -> Result<()> {
    let bs = law.beta_star()?;
    let times = cfg.times.clone().unwrap_or_else(|| vec![1.0, 5.0, 20.0]);
    let per_time = simulate(law, cfg, times.clone())?;
    let mut worst = 0.0f64;
    for (t, snaps) in times.iter().zip(&per_time) {
        let v: Vec<f64> = snaps.iter().map(|s| s.power_sum(bs) + s.frozen_beta_mass_bound).collect();
        let (m, se) = mean_se(&v);
        out.report.push(Check::z_test(format!("E M(t,b*) at t={t}"), m, 1.0, se));
        if law.is_conservative() {
            worst = snaps.iter().map(|s| (s.power_sum(1.0) + s.frozen_beta_mass_bound - 1.0).abs()).fold(worst, f64::max);
        }
        if cfg.alpha == 0.0 {
            let beta = bs + 1.0;
            let target = homogeneous_m(law, *t, Complex64::new(beta, 0.0))?.re;
            let v: Vec<f64> = snaps.iter().map(|s| s.power_sum(beta)).collect();
            let (m, se) = mean_se(&v);
            out.report.push(Check::z_test(format!("E M(t,b*+1) vs exp(-t psi) at t={t}"), m, target, se));
        }
    }
    if law.is_conservative() {
        out.report.push(Check::with_rule("max |M(t,1) - 1| per path", worst, 1e-12, 0.0, Rule::Below { limit: 1e-12 }));
    }

    let est = estimate_m_infinity_moments(law, cfg.depth, cfg.replicates as usize, 1e-4, cfg.seed)?;
    let r = est.replicates as f64;
    for (n, &(m1, m2)) in est.per_generation.iter().enumerate().skip(1) {
        let se = ((m2 - m1 * m1).max(0.0) / (r - 1.0)).sqrt();
        out.report.push(Check::z_test(format!("E M_n, generation n={n}"), m1, 1.0, se));
    }
    let oracle = m_infinity_second_moment_oracle(law, 1_000_000, cfg.seed)?;
    let se = (est.second_moment_se.powi(2) + oracle.se.powi(2)).sqrt();
    out.report.push(Check::z_test(format!("E M_inf^2 at depth {}", cfg.depth), est.second_moment, oracle.value, se));
    match est.plateau_depth {
        Some(d) => out.notes.push(format!("Var M_n plateaued by generation {d}")),
        None => out.notes.push(format!("Var M_n had not plateaued by generation {}", cfg.depth)),
    }
    Ok(())
}

/// ∫ f dρ with its standard error: by quadrature when ρ has the gamma-type
/// density, otherwise from Y samples.
fn rho_integral(law: &ReproductionLaw, f: TestFunction, cfg: &SuiteConfig) -> Result<(f64, f64)> {
    if let Some(lambda) = filippov_lambda(law) {
        return Ok((filippov_rho_integral(f, lambda, cfg.alpha), 0.0));
    }
    let tag = law.tilted_tag_law()?;
    Ok(rho_integral_by_y(f, &tag, cfg.alpha, cfg.oracle_draws, cfg.seed))
}

fn l2(law: &ReproductionLaw, cfg: &SuiteConfig, out: &mut SuiteOutcome) -> Result<()> {
    let bs = law.beta_star()?;
    let times = cfg.times.clone().unwrap_or_else(|| vec![10.0, 40.0]);
    let f = TestFunction::ExpNeg;
    let per_time = simulate(law, cfg, times.clone())?;
    let pairs: Vec<Vec<(f64, f64)>> =
        per_time.iter().map(|snaps| snaps.iter().map(|s| functional_pair(s, f, cfg.alpha, bs)).collect()).collect();
    let integral = rho_integral(law, f, cfg)?;
    let oracle = m_infinity_second_moment_oracle(law, 1_000_000, cfg.seed)?;
    out.report.extend(l2_functional_test(&times, &pairs, integral, oracle)?);
    Ok(())
}

/// Target CDF of ρ: closed form for gamma-type laws, else the empirical CDF
/// of Y^{1/α}.
fn rho_cdf(law: &ReproductionLaw, cfg: &SuiteConfig) -> Result<Box<dyn Fn(f64) -> f64 + Sync>> {
    let alpha = cfg.alpha;
    if let Some(lambda) = filippov_lambda(law) {
        return Ok(Box::new(move |x| filippov_rho_cdf(lambda, alpha, x)));
    }
    let tag = law.tilted_tag_law()?;
    let factory = StreamFactory::new(cfg.seed);
    let mut samples: Vec<f64> = (0..cfg.oracle_draws as u64)
        .into_par_iter()
        .map(|i| sample_y(&tag, alpha, 1e-12, &mut factory.stream(Domain::Tagged, i, 3)).value.powf(1.0 / alpha))
        .collect();
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    Ok(Box::new(move |x| samples.partition_point(|&s| s <= x) as f64 / n))
}

fn cdf(law: &ReproductionLaw, cfg: &SuiteConfig, out: &mut SuiteOutcome) -> Result<()> {
    let (alpha, t) = (cfg.alpha, cfg.t_max);
    let bs = law.beta_star()?;
    let target = rho_cdf(law, cfg)?;
    let snaps = simulate(law, cfg, vec![t])?.remove(0);
    let measure = empirical_weighted_measure(&snaps, alpha, bs)?;
    let d = cdf_distance(&measure, &target)?;
    let rule = Rule::Below { limit: cfg.ks_limit };
    out.report.push(Check::with_rule(format!("KS weighted measure vs rho, t={t}"), d, cfg.ks_limit, 0.0, rule));

    let tag = law.tilted_tag_law()?;
    let factory = StreamFactory::new(cfg.seed);
    let scale = t.powf(1.0 / alpha);
    let mut scaled: Vec<f64> = (0..cfg.oracle_draws as u64)
        .into_par_iter()
        .map(|i| scale * tagged_size_at(&tag, alpha, t, &mut factory.stream(Domain::Tagged, i, 4)))
        .collect();
    let d = sample_kolmogorov(&mut scaled, &target);
    out.report.push(Check::with_rule(format!("KS tagged t^(1/a) L_t vs rho, t={t}"), d, cfg.ks_limit, 0.0, rule));
    Ok(())
}
