//! Turning simulation output into estimates of limit objects, with Monte
//! Carlo error bars and z-tests against analytic targets.

use crate::analytics::{asymptotic_coefficient, m_series};
use crate::error::{Error, Result};
use crate::laws::{ReproductionLaw, TaggedLaw, DEFAULT_CHILD_FLOOR};
use crate::quadrature::Quadrature;
use crate::rng::{Domain, StreamFactory};
use crate::simulator::{mean_se, sample_y, PopulationSnapshot};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

/// How a check decides pass/fail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum Rule {
    /// |estimate - target| ≤ limit · se
    ZScore { limit: f64 },
    /// |estimate/target - 1| ≤ tol
    RelativeBand { tol: f64 },
    /// estimate > sigmas · se (a strictly positive difference)
    Positive { sigmas: f64 },
    /// estimate < limit
    Below { limit: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub estimate: f64,
    pub target: f64,
    pub se: f64,
    pub z: f64,
    pub rule: Rule,
    pub pass: bool,
}

impl Check {
    pub fn with_rule(name: impl Into<String>, estimate: f64, target: f64, se: f64, rule: Rule) -> Self {
        let mut diff = estimate - target;
        // agreement to round-off is not evidence either way, whatever the SE
        if diff.abs() <= 1e-12 * target.abs().max(1.0) {
            diff = 0.0;
        }
        let z = if diff == 0.0 {
            0.0
        } else if se > 0.0 {
            diff / se
        } else if matches!(rule, Rule::ZScore { .. }) {
            diff.signum() * f64::INFINITY
        } else {
            0.0
        };
        let pass = match rule {
            Rule::ZScore { limit } => z.abs() <= limit,
            Rule::RelativeBand { tol } => (estimate / target - 1.0).abs() <= tol,
            Rule::Positive { sigmas } => diff > sigmas * se,
            Rule::Below { limit } => estimate < limit,
        };
        Self { name: name.into(), estimate, target, se, z, rule, pass }
    }

    /// Three-standard-error z-test.
    pub fn z_test(name: impl Into<String>, estimate: f64, target: f64, se: f64) -> Self {
        Self::with_rule(name, estimate, target, se, Rule::ZScore { limit: 3.0 })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn push(&mut self, c: Check) {
        self.checks.push(c);
    }

    pub fn extend(&mut self, other: ValidationReport) {
        self.checks.extend(other.checks);
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    /// Fixed-width text table, one line per check.
    pub fn table(&self) -> String {
        let mut out = format!("{:<48} {:>14} {:>14} {:>11} {:>8}  result\n", "check", "estimate", "target", "se", "z");
        for c in &self.checks {
            out.push_str(&format!(
                "{:<48} {:>14.6} {:>14.6} {:>11.3e} {:>8.2}  {}\n",
                c.name,
                c.estimate,
                c.target,
                c.se,
                c.z,
                if c.pass { "pass" } else { "FAIL" }
            ));
        }
        out
    }
}

/// Monte Carlo estimate of the mean measure σ*_t: atoms at t^{1/α} X_j(t)
/// with weights X_j(t)^β*, pooled over replicates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightedEmpiricalMeasure {
    pub t: f64,
    pub alpha: f64,
    pub beta_star: f64,
    /// (location, weight, replicate index)
    pub atoms: Vec<(f64, f64, usize)>,
    /// M(t, β*) of each replicate.
    pub replicate_totals: Vec<f64>,
}

pub fn empirical_weighted_measure(
    snapshots: &[PopulationSnapshot],
    alpha: f64,
    beta_star: f64,
) -> Result<WeightedEmpiricalMeasure> {
    if !(alpha > 0.0) {
        return Err(Error::InvalidConfig("the scaled measure needs α > 0".into()));
    }
    let t = snapshots.first().ok_or(Error::EmptySnapshot)?.t;
    if snapshots.iter().any(|s| s.t != t) {
        return Err(Error::InvalidConfig("snapshots must share one time".into()));
    }
    let scale = t.powf(1.0 / alpha);
    let mut atoms = Vec::new();
    let mut totals = Vec::with_capacity(snapshots.len());
    for (r, s) in snapshots.iter().enumerate() {
        let mut total = 0.0;
        for &x in &s.sizes {
            let w = x.powf(beta_star);
            total += w;
            atoms.push((scale * x, w, r));
        }
        totals.push(total);
    }
    if totals.iter().all(|&w| w == 0.0) {
        return Err(Error::EmptySnapshot);
    }
    Ok(WeightedEmpiricalMeasure { t, alpha, beta_star, atoms, replicate_totals: totals })
}

impl WeightedEmpiricalMeasure {
    pub fn replicates(&self) -> usize {
        self.replicate_totals.len()
    }

    /// Per-replicate values of ∫ g dσ*_t.
    pub fn per_replicate<G: Fn(f64) -> f64>(&self, g: G) -> Vec<f64> {
        let mut v = vec![0.0; self.replicates()];
        for &(x, w, r) in &self.atoms {
            v[r] += w * g(x);
        }
        v
    }

    /// (mean, se) of ∫ x^{αk} dσ*_t over replicates.
    pub fn moment(&self, k: u32) -> (f64, f64) {
        let a = self.alpha * k as f64;
        mean_se(&self.per_replicate(|x| x.powf(a)))
    }

    /// (mean, se) of the total weight M(t, β*).
    pub fn total(&self) -> (f64, f64) {
        mean_se(&self.replicate_totals)
    }

    /// Geometric bin edges spanning the weighted 0.1% and 99.9% quantiles.
    pub fn default_edges(&self, bins: usize) -> Vec<f64> {
        let lo = self.quantile(0.001).max(f64::MIN_POSITIVE);
        let hi = self.quantile(0.999).max(lo * (1.0 + 1e-9));
        let r = (hi / lo).ln();
        (0..=bins).map(|i| lo * (r * i as f64 / bins as f64).exp()).collect()
    }

    fn sorted(&self) -> (Vec<(f64, f64)>, f64) {
        let mut v: Vec<(f64, f64)> = self.atoms.iter().map(|&(x, w, _)| (x, w)).collect();
        v.sort_by(|a, b| a.0.total_cmp(&b.0));
        let total = v.iter().map(|a| a.1).sum();
        (v, total)
    }

    /// Weighted quantile of the pooled, weight-normalised measure.
    pub fn quantile(&self, p: f64) -> f64 {
        let (v, total) = self.sorted();
        let mut acc = 0.0;
        for (x, w) in &v {
            acc += w;
            if acc >= p * total {
                return *x;
            }
        }
        v.last().map_or(0.0, |a| a.0)
    }

    /// Mass per bin, averaged over replicates (so the masses sum to the mean
    /// of M(t, β*) restricted to the bin range).
    pub fn histogram(&self, edges: &[f64]) -> Vec<f64> {
        let mut mass = vec![0.0; edges.len().saturating_sub(1)];
        let n = self.replicates() as f64;
        for &(x, w, _) in &self.atoms {
            let i = edges.partition_point(|&e| e <= x);
            if i >= 1 && i < edges.len() {
                mass[i - 1] += w / n;
            }
        }
        mass
    }
}

/// Kolmogorov distance between the weight-normalised pooled CDF and `target`.
pub fn cdf_distance<F: Fn(f64) -> f64>(measure: &WeightedEmpiricalMeasure, target: F) -> Result<f64> {
    let (v, total) = measure.sorted();
    if total <= 0.0 {
        return Err(Error::EmptySnapshot);
    }
    Ok(kolmogorov(&v, total, target))
}

/// sup_x |F_n(x) - F(x)| for weighted atoms sorted by location.
pub fn kolmogorov<F: Fn(f64) -> f64>(sorted: &[(f64, f64)], total: f64, target: F) -> f64 {
    let mut acc = 0.0;
    let mut d = 0.0f64;
    let mut i = 0;
    while i < sorted.len() {
        let x = sorted[i].0;
        let f = target(x);
        d = d.max((acc / total - f).abs());
        while i < sorted.len() && sorted[i].0 == x {
            acc += sorted[i].1;
            i += 1;
        }
        d = d.max((acc / total - f).abs());
    }
    d
}

/// Unweighted sample version of [`kolmogorov`].
pub fn sample_kolmogorov<F: Fn(f64) -> f64>(samples: &mut [f64], target: F) -> f64 {
    samples.sort_by(|a, b| a.total_cmp(b));
    let v: Vec<(f64, f64)> = samples.iter().map(|&x| (x, 1.0)).collect();
    kolmogorov(&v, samples.len() as f64, target)
}

/// z-test of the Monte Carlo mean of M(t, β) against m_series(t, β). When the
/// series is out of precision reach, t^{(β-β*)/α}·mean is compared with C(β)
/// inside a 5% band instead.
pub fn mean_power_sum_test(
    name: &str,
    values: &[f64],
    t: f64,
    beta: f64,
    law: &ReproductionLaw,
    alpha: f64,
) -> Result<Check> {
    let (mean, se) = mean_se(values);
    if t == 0.0 {
        return Ok(Check::z_test(name, mean, 1.0, se));
    }
    match m_series(law, alpha, t, Complex64::new(beta, 0.0), 1e-10) {
        Ok(s) => Ok(Check::z_test(name, mean, s.re(), se)),
        Err(Error::PrecisionExhausted { .. }) => {
            let bs = law.beta_star()?;
            let c = asymptotic_coefficient(law, alpha, Complex64::new(beta, 0.0))?.re;
            let scale = t.powf((beta - bs) / alpha);
            Ok(Check::with_rule(name, scale * mean, c, scale * se, Rule::RelativeBand { tol: 0.05 }))
        }
        Err(e) => Err(e),
    }
}

/// E M∞² from squaring the fixed-point equation M∞ = Σ_j ξ_j^β* M∞^{(j)}:
/// (E(Σ ξ^β*)² - φ(2β*)) / (1 - φ(2β*)).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SecondMomentOracle {
    pub value: f64,
    /// Monte Carlo standard error; zero when E(Σ ξ^β*)² is known exactly.
    pub se: f64,
    pub analytic: bool,
}

pub fn m_infinity_second_moment_oracle(law: &ReproductionLaw, mc_draws: usize, seed: u64) -> Result<SecondMomentOracle> {
    if law.is_conservative() {
        return Ok(SecondMomentOracle { value: 1.0, se: 0.0, analytic: true });
    }
    let bs = law.beta_star()?;
    let phi2 = law.phi_real(2.0 * bs)?;
    if let Some(es2) = law.second_moment_of_power_sum(bs) {
        return Ok(SecondMomentOracle { value: (es2 - phi2) / (1.0 - phi2), se: 0.0, analytic: true });
    }
    let factory = StreamFactory::new(seed);
    let sq: Vec<f64> = (0..mc_draws as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = factory.stream(Domain::Offspring, i, 0);
            law.sample_offspring(&mut rng, DEFAULT_CHILD_FLOOR).map(|o| {
                let s: f64 = o.sizes.iter().map(|x| x.powf(bs)).sum::<f64>() + o.truncated_beta_mass_bound;
                s * s
            })
        })
        .collect::<Result<_>>()?;
    let total: f64 = sq.iter().sum();
    let largest = sq.iter().copied().fold(0.0, f64::max);
    if !total.is_finite() || largest > 0.25 * total {
        return Err(Error::SecondMomentInfinite(format!("one draw carries {:.0}% of Σ S²", 100.0 * largest / total)));
    }
    let (es2, se) = mean_se(&sq);
    Ok(SecondMomentOracle { value: (es2 - phi2) / (1.0 - phi2), se: se / (1.0 - phi2), analytic: false })
}

/// Bounded test functions f for the L² statistic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TestFunction {
    Indicator { a: f64, b: f64 },
    ExpNeg,
    /// min(x^α, c)
    PowerCap { c: f64 },
}

impl TestFunction {
    pub fn eval(&self, x: f64, alpha: f64) -> f64 {
        match *self {
            TestFunction::Indicator { a, b } => f64::from(u8::from((a..=b).contains(&x))),
            TestFunction::ExpNeg => (-x).exp(),
            TestFunction::PowerCap { c } => x.powf(alpha).min(c),
        }
    }
}

/// ∫ f dρ for the Filippov law by quadrature against the closed-form density.
pub fn filippov_rho_integral(f: TestFunction, lambda: f64, alpha: f64) -> f64 {
    let q = Quadrature::with_tol(1e-14, 1e-12);
    let top = 80f64.powf(1.0 / alpha);
    let dens = |x: f64| crate::analytics::filippov_rho_density(lambda, alpha, x);
    // split at 1 to separate the x^{λ-1} endpoint behaviour from the tail
    match f {
        TestFunction::Indicator { a, b } => q.integrate(dens, a.max(0.0), b.min(top)).value,
        _ => {
            q.integrate(|x| f.eval(x, alpha) * dens(x), 0.0, 1.0).value
                + q.integrate(|x| f.eval(x, alpha) * dens(x), 1.0, top).value
        }
    }
}

/// ∫ f dρ as E f(Y^{1/α}) with Y from the tagged-fragment representation.
pub fn rho_integral_by_y(f: TestFunction, tag: &TaggedLaw, alpha: f64, samples: usize, seed: u64) -> (f64, f64) {
    let factory = StreamFactory::new(seed);
    let v: Vec<f64> = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = factory.stream(Domain::Tagged, i, 1);
            let y = sample_y(tag, alpha, 1e-12, &mut rng).value;
            f.eval(y.powf(1.0 / alpha), alpha)
        })
        .collect();
    mean_se(&v)
}

/// Per-replicate pair (A_t, M(t, β*)) with A_t = Σ X_j^β* f(t^{1/α} X_j).
pub fn functional_pair(snapshot: &PopulationSnapshot, f: TestFunction, alpha: f64, beta_star: f64) -> (f64, f64) {
    let scale = snapshot.t.powf(1.0 / alpha);
    snapshot.sizes.iter().fold((0.0, 0.0), |(a, m), &x| {
        let w = x.powf(beta_star);
        (a + w * f.eval(scale * x, alpha), m + w)
    })
}

/// The L² statistic along a t-ladder. `pairs[i]` holds the (A_t, M_t) of every
/// replicate at the i-th time; the same replicates appear at every time.
///
/// Reports E A_t against ∫f dρ and E[A_t M_t] against E M∞² ∫f dρ at the last
/// time, and the drop of Var(A_t - M_t ∫f dρ) from the first to the last time.
pub fn l2_functional_test(
    times: &[f64],
    pairs: &[Vec<(f64, f64)>],
    f_integral: (f64, f64),
    second_moment: SecondMomentOracle,
) -> Result<ValidationReport> {
    if times.len() < 2 || pairs.len() != times.len() || pairs.iter().any(|p| p.len() != pairs[0].len()) {
        return Err(Error::InvalidConfig("need ≥ 2 times with the same replicates".into()));
    }
    let (i_f, i_se) = f_integral;
    let last = pairs.len() - 1;
    let t_last = times[last];
    let mut report = ValidationReport::default();

    let a: Vec<f64> = pairs[last].iter().map(|p| p.0).collect();
    let (am, ase) = mean_se(&a);
    report.push(Check::z_test(format!("E A_t at t={t_last}"), am, i_f, (ase * ase + i_se * i_se).sqrt()));

    let am_prod: Vec<f64> = pairs[last].iter().map(|p| p.0 * p.1).collect();
    let (pm, pse) = mean_se(&am_prod);
    let target = second_moment.value * i_f;
    let tse = ((second_moment.se * i_f).powi(2) + (second_moment.value * i_se).powi(2)).sqrt();
    report.push(Check::z_test(format!("E[A_t M_t] at t={t_last}"), pm, target, (pse * pse + tse * tse).sqrt()));

    let centred = |k: usize| -> Vec<f64> {
        let d: Vec<f64> = pairs[k].iter().map(|p| p.0 - p.1 * i_f).collect();
        let m = d.iter().sum::<f64>() / d.len() as f64;
        d.iter().map(|x| (x - m).powi(2)).collect()
    };
    let (first, lastv) = (centred(0), centred(last));
    let diff: Vec<f64> = first.iter().zip(&lastv).map(|(x, y)| x - y).collect();
    let (dm, dse) = mean_se(&diff);
    report.push(Check::with_rule(
        format!("Var drop t={} -> t={t_last}", times[0]),
        dm,
        0.0,
        dse,
        Rule::Positive { sigmas: 2.0 },
    ));
    Ok(report)
}
