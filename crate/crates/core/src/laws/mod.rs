//! Reproduction laws: structural measure, characteristic function φ,
//! Malthusian exponent, offspring samplers and derived laws.

mod measure;
mod sampler;
mod spec;
mod tilt;

pub use measure::{Abscissa, Atom, Density, PowerTerm, StructuralMeasure};
pub use sampler::{AtomicOutcome, Component, IntensityTerm, MixtureTerm, OffspringSample, PoissonConstruction};
pub use spec::{parse_law, DirichletTerm, LawParams, LawSpec, Overrides};
pub use tilt::TaggedLaw;

use crate::error::{Error, Result};
use crate::mp::MpComplex;
use crate::quadrature::Quadrature;
use crate::rng::Stream;
use crate::roots::brent;
use num_complex::Complex64;
use sampler::Sampler;
use serde::Serialize;
use tilt::{TiltPiece, TiltSampler};

/// Default discard floor for laws with infinitely many children per split.
pub const DEFAULT_CHILD_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LawKind {
    /// ξ = (U, 1-U).
    BinaryUniformConservative,
    /// Uniform stick-breaking with the first piece lost.
    StickBreakingLossy,
    /// Uniform stick-breaking, σ(dx) = x^{-1} dx.
    StickBreakingConservative,
    /// σ(dx) = λ x^{θ-1} dx.
    FilippovPower { lambda: f64, theta: f64 },
    /// σ(dx) = Σ λ_j x^{θ_j-1} dx.
    DirichletPolynomial { terms: Vec<PowerTerm> },
    UserAtomic { outcomes: Vec<AtomicOutcome> },
    UserPoisson { first: Component, intensity: Vec<IntensityTerm> },
    /// σ(dx) = c 1{x<1/2} x^{-3/2} ln^{-2}x dx; has no Malthusian exponent when c < ln 2.
    LogSquaredPower { c: f64 },
}

#[derive(Debug, Clone)]
pub struct ReproductionLaw {
    kind: LawKind,
    measure: StructuralMeasure,
    abscissa: Abscissa,
    arithmetic: bool,
    sampler: Option<Sampler>,
    beta_star: Option<f64>,
    quad: Quadrature,
}

/// Tolerance used for the cached Malthusian exponent.
const BETA_STAR_TOL: f64 = 1e-14;

impl ReproductionLaw {
    fn build(kind: LawKind, measure: StructuralMeasure, sampler: Option<Sampler>) -> Result<Self> {
        let abscissa = measure.analytic_abscissa();
        let mut law = Self {
            kind,
            measure,
            abscissa,
            arithmetic: false,
            sampler,
            beta_star: None,
            quad: Quadrature::with_tol(1e-14, 1e-12),
        };
        law.beta_star = law.malthusian_exponent(BETA_STAR_TOL).ok();
        if law.sampler.is_some() && law.beta_star.is_none() {
            return Err(Error::InvalidLaw("sampler-backed law without a Malthusian exponent".into()));
        }
        Ok(law)
    }

    pub fn binary_uniform_conservative() -> Self {
        Self::build(
            LawKind::BinaryUniformConservative,
            StructuralMeasure::power(vec![PowerTerm::new(2.0, 1.0)]),
            Some(Sampler::BinaryUniform),
        )
        .expect("built-in law")
    }

    pub fn stick_breaking_lossy() -> Self {
        Self::build(
            LawKind::StickBreakingLossy,
            // x^{-1} - 1 = (1-x)/x
            StructuralMeasure::power(vec![PowerTerm::new(1.0, 0.0), PowerTerm::new(-1.0, 1.0)]),
            Some(Sampler::StickBreaking { lossy: true }),
        )
        .expect("built-in law")
    }

    pub fn stick_breaking_conservative() -> Self {
        Self::build(
            LawKind::StickBreakingConservative,
            StructuralMeasure::power(vec![PowerTerm::new(1.0, 0.0)]),
            Some(Sampler::StickBreaking { lossy: false }),
        )
        .expect("built-in law")
    }

    /// σ(dx) = λ x^{θ-1} dx. A sampler (one Beta(θ,1) child plus a
    /// Poisson((λ-θ)/θ) number of further ones) exists when θ > 0 and λ > θ.
    pub fn filippov(lambda: f64, theta: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda > theta.min(0.0)) || !theta.is_finite() {
            return Err(Error::InvalidLaw(format!("Filippov law needs λ > max(min(θ,0), 0); got λ={lambda}, θ={theta}")));
        }
        let sampler = if theta > 0.0 && lambda > theta {
            let pc = PoissonConstruction::new(
                Component::Power { theta },
                vec![IntensityTerm::Power { lambda: lambda - theta, theta, floor: None }],
            )?;
            Some(Sampler::Poisson(pc))
        } else {
            None
        };
        Self::build(
            LawKind::FilippovPower { lambda, theta },
            StructuralMeasure::power(vec![PowerTerm::new(lambda, theta)]),
            sampler,
        )
    }

    /// σ(dx) = Σ λ_j x^{θ_j-1} dx, nonnegative on ]0,1].
    pub fn dirichlet_polynomial(terms: Vec<(f64, f64)>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::InvalidLaw("empty Dirichlet polynomial".into()));
        }
        let terms: Vec<PowerTerm> = terms.into_iter().map(|(l, t)| PowerTerm::new(l, t)).collect();
        let density = |x: f64| terms.iter().map(|t| t.lambda * x.powf(t.theta - 1.0)).sum::<f64>();
        for i in 0..=400 {
            let x = 10f64.powf(-12.0 * i as f64 / 400.0);
            if density(x) < -1e-12 * terms.iter().map(|t| (t.lambda * x.powf(t.theta - 1.0)).abs()).sum::<f64>() {
                return Err(Error::InvalidLaw(format!("Dirichlet polynomial is negative at x = {x}")));
            }
        }
        if terms.iter().all(|t| t.theta > 0.0) {
            let mass: f64 = terms.iter().map(|t| t.lambda / t.theta).sum();
            if mass <= 1.0 {
                return Err(Error::InvalidLaw(format!("Σ λ_j/θ_j = {mass} must exceed 1")));
            }
        }
        let sampler = if terms.iter().all(|t| t.lambda >= 0.0 && t.theta > 0.0) {
            let mass: f64 = terms.iter().map(|t| t.lambda / t.theta).sum();
            let mixture = Component::PowerMixture {
                terms: terms.iter().map(|t| MixtureTerm { weight: t.lambda / t.theta / mass, theta: t.theta }).collect(),
            };
            let rest = terms
                .iter()
                .map(|t| IntensityTerm::Power { lambda: t.lambda * (1.0 - 1.0 / mass), theta: t.theta, floor: None })
                .collect();
            Some(Sampler::Poisson(PoissonConstruction::new(mixture, rest)?))
        } else {
            None
        };
        Self::build(LawKind::DirichletPolynomial { terms: terms.clone() }, StructuralMeasure::power(terms), sampler)
    }

    /// Finite atomic law given by outcomes and their probabilities.
    pub fn atomic(outcomes: Vec<AtomicOutcome>) -> Result<Self> {
        if outcomes.is_empty() {
            return Err(Error::InvalidLaw("no outcomes".into()));
        }
        let total: f64 = outcomes.iter().map(|o| o.probability).sum();
        if outcomes.iter().any(|o| o.probability < 0.0) || (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidLaw(format!("outcome probabilities must be ≥ 0 and sum to 1 (sum {total})")));
        }
        if outcomes.iter().flat_map(|o| &o.sizes).any(|&x| !(0.0..=1.0).contains(&x)) {
            return Err(Error::InvalidLaw("atomic child sizes must lie in [0,1]".into()));
        }
        let mut atoms: Vec<Atom> = Vec::new();
        for o in &outcomes {
            for &x in o.sizes.iter().filter(|&&x| x > 0.0) {
                match atoms.iter_mut().find(|a| a.location == x) {
                    Some(a) => a.mass += o.probability,
                    None => atoms.push(Atom { location: x, mass: o.probability }),
                }
            }
        }
        atoms.sort_by(|a, b| b.location.total_cmp(&a.location));
        let mass: f64 = atoms.iter().map(|a| a.mass).sum();
        let at_one: f64 = atoms.iter().filter(|a| a.location == 1.0).map(|a| a.mass).sum();
        if mass <= 1.0 || at_one >= 1.0 {
            return Err(Error::InvalidLaw(format!("need σ]0,1] > 1 and σ{{1}} < 1; got {mass} and {at_one}")));
        }
        let locations: Vec<f64> = atoms.iter().map(|a| a.location).collect();
        let measure = StructuralMeasure { atoms, ..Default::default() };
        let mut law = Self::build(LawKind::UserAtomic { outcomes: outcomes.clone() }, measure, Some(Sampler::Atomic(outcomes)))?;
        law.arithmetic = arithmetic_check(&locations);
        Ok(law)
    }

    /// Poisson construction: one child from σ1 plus a Poisson point process
    /// of intensity σ2. The structural measure is σ1 + σ2.
    pub fn poisson_reproduction(first: Component, intensity: Vec<IntensityTerm>) -> Result<Self> {
        let pc = PoissonConstruction::new(first.clone(), intensity.clone())?;
        let measure = pc.measure();
        let quad = Quadrature::with_tol(1e-14, 1e-12);
        let total = 1.0 + pc.intensity_mass();
        if total <= 1.0 {
            return Err(Error::InvalidIntensity("σ2 must carry positive mass so that σ]0,1] > 1".into()));
        }
        if measure.mass_at_one() >= 1.0 {
            return Err(Error::InvalidLaw("σ{1} must be < 1".into()));
        }
        let (lo, hi) = measure.probe_abscissa(&quad)?;
        let kind = LawKind::UserPoisson { first, intensity };
        let mut law = Self {
            kind,
            measure,
            abscissa: Abscissa { value: hi, closed: false, estimated: Some((lo, hi)) },
            arithmetic: false,
            sampler: Some(Sampler::Poisson(pc)),
            beta_star: None,
            quad,
        };
        law.beta_star = Some(law.malthusian_exponent(BETA_STAR_TOL)?);
        Ok(law)
    }

    pub fn log_squared_power(c: f64) -> Result<Self> {
        if !(c > 0.0) {
            return Err(Error::InvalidLaw("c must be positive".into()));
        }
        Self::build(
            LawKind::LogSquaredPower { c },
            StructuralMeasure { densities: vec![Density::LogSquaredPower { c }], ..Default::default() },
            None,
        )
    }

    pub fn with_overrides(mut self, arithmetic: Option<bool>, beta_a: Option<f64>) -> Self {
        if let Some(a) = arithmetic {
            self.arithmetic = a;
        }
        if let Some(b) = beta_a {
            self.abscissa = Abscissa { value: b, closed: false, estimated: None };
            self.beta_star = self.malthusian_exponent(BETA_STAR_TOL).ok();
        }
        self
    }

    pub fn kind(&self) -> &LawKind {
        &self.kind
    }

    pub fn name(&self) -> String {
        match &self.kind {
            LawKind::BinaryUniformConservative => "binary_uniform_conservative".into(),
            LawKind::StickBreakingLossy => "stick_breaking_lossy".into(),
            LawKind::StickBreakingConservative => "stick_breaking_conservative".into(),
            LawKind::FilippovPower { lambda, theta } => format!("filippov_power({lambda},{theta})"),
            LawKind::DirichletPolynomial { terms } => format!("dirichlet_polynomial[{}]", terms.len()),
            LawKind::UserAtomic { .. } => "atomic".into(),
            LawKind::UserPoisson { .. } => "poisson".into(),
            LawKind::LogSquaredPower { c } => format!("log_squared_power({c})"),
        }
    }

    pub fn measure(&self) -> &StructuralMeasure {
        &self.measure
    }

    pub fn abscissa(&self) -> Abscissa {
        self.abscissa
    }

    pub fn is_arithmetic(&self) -> bool {
        self.arithmetic
    }

    pub fn atom_mass_at_one(&self) -> f64 {
        self.measure.mass_at_one()
    }

    pub fn has_closed_form(&self) -> bool {
        self.measure.has_exact_transform()
    }

    /// Σ ξ_j = 1 almost surely.
    pub fn is_conservative(&self) -> bool {
        match &self.kind {
            LawKind::BinaryUniformConservative | LawKind::StickBreakingConservative => true,
            LawKind::UserAtomic { outcomes } => {
                outcomes.iter().all(|o| o.probability == 0.0 || (o.sizes.iter().sum::<f64>() - 1.0).abs() < 1e-12)
            }
            _ => false,
        }
    }

    pub fn has_sampler(&self) -> bool {
        self.sampler.is_some()
    }

    pub fn quadrature(&self) -> &Quadrature {
        &self.quad
    }

    pub(crate) fn check_domain(&self, re_beta: f64) -> Result<()> {
        if self.abscissa.admits(re_beta) {
            Ok(())
        } else {
            Err(Error::Domain { value: re_beta, abscissa: self.abscissa.value })
        }
    }

    /// φ(β) = ∫ x^β σ(dx).
    pub fn phi(&self, beta: Complex64) -> Result<Complex64> {
        self.check_domain(beta.re)?;
        Ok(self.measure.mellin(beta, &self.quad))
    }

    pub fn phi_real(&self, beta: f64) -> Result<f64> {
        self.phi(Complex64::new(beta, 0.0)).map(|z| z.re)
    }

    /// ψ(β) = 1 - φ(β).
    pub fn psi(&self, beta: Complex64) -> Result<Complex64> {
        self.phi(beta).map(|p| 1.0 - p)
    }

    pub fn psi_real(&self, beta: f64) -> Result<f64> {
        self.phi_real(beta).map(|p| 1.0 - p)
    }

    /// ψ in MPFR precision. `None` when φ has no exact transform.
    pub fn psi_mp(&self, beta: &MpComplex) -> Option<MpComplex> {
        let phi = self.measure.mellin_mp(beta)?;
        let one = MpComplex::from_f64(beta.prec(), 1.0, 0.0);
        Some(&one - &phi)
    }

    /// ψ'(β) on the real axis: analytic where the closed form allows,
    /// otherwise Richardson-extrapolated central differences refined until
    /// two successive estimates agree to 1e-8.
    pub fn psi_derivative(&self, beta: f64) -> Result<f64> {
        self.check_domain(beta)?;
        if let Some(d) = self.measure.mellin_derivative(beta) {
            return Ok(-d);
        }
        let room = if self.abscissa.value.is_finite() { (beta - self.abscissa.value) / 4.0 } else { 0.1 };
        let mut h = room.min(0.1);
        if !(h > 0.0) {
            return Err(Error::Domain { value: beta, abscissa: self.abscissa.value });
        }
        let psi = |x: f64| self.psi_real(x);
        let mut prev: Option<f64> = None;
        for _ in 0..12 {
            let est = richardson_central(&psi, beta, h)?;
            if let Some(p) = prev {
                if (est - p).abs() <= 1e-8 * est.abs().max(1e-300) {
                    return Ok(est);
                }
            }
            prev = Some(est);
            h /= 4.0;
        }
        prev.ok_or(Error::NoClosedForm)
    }

    /// Unique real root β* of φ(β) = 1 right of the abscissa, to absolute
    /// tolerance `tol`.
    pub fn malthusian_exponent(&self, tol: f64) -> Result<f64> {
        if !(tol > 0.0) {
            return Err(Error::InvalidConfig("tolerance must be positive".into()));
        }
        let f = |b: f64| self.measure.mellin(Complex64::new(b, 0.0), &self.quad).re - 1.0;
        let ab = self.abscissa;
        let left = if ab.value == f64::NEG_INFINITY {
            None
        } else if ab.closed {
            Some(ab.value)
        } else {
            Some(ab.value + 1e-10 * ab.value.abs().max(1.0))
        };
        if let Some(l) = left {
            let v = f(l) + 1.0;
            if v < 1.0 {
                return Err(Error::NoMalthusianExponent { phi_at_abscissa: v });
            }
        }
        let mut lo = left.map_or(0.0, |l| l.max(0.0));
        if f(lo) < 0.0 {
            match left {
                Some(l) => lo = l,
                None => {
                    let mut step = 1.0;
                    while f(lo) < 0.0 {
                        lo -= step;
                        step *= 2.0;
                        if step > 1e6 {
                            return Err(Error::RootFindingFailure("φ < 1 on every probed β".into()));
                        }
                    }
                }
            }
        }
        let mut width = 1.0;
        let mut hi = lo + width;
        while f(hi) >= 0.0 {
            width *= 2.0;
            hi = lo + width;
            if width > 1e8 {
                return Err(Error::RootFindingFailure(format!(
                    "φ stays ≥ 1 up to β = {hi}; σ{{1}} = {}",
                    self.atom_mass_at_one()
                )));
            }
        }
        brent(f, lo, hi, tol, tol)
    }

    /// Cached Malthusian exponent (absolute accuracy 1e-14).
    pub fn beta_star(&self) -> Result<f64> {
        match self.beta_star {
            Some(b) => Ok(b),
            None => self.malthusian_exponent(BETA_STAR_TOL),
        }
    }

    /// One offspring collection of a unit particle. Children below `floor`
    /// are discarded; their β*-mass is reported in the sample.
    pub fn sample_offspring(&self, rng: &mut Stream, floor: f64) -> Result<OffspringSample> {
        let sampler = self.sampler.as_ref().ok_or_else(|| {
            Error::UnsupportedSampler(format!("{} exposes φ only", self.name()))
        })?;
        Ok(sampler.draw(rng, floor, self.beta_star()?))
    }

    /// E(Σ_j ξ_j^β)² when it has a closed form.
    pub fn second_moment_of_power_sum(&self, beta: f64) -> Option<f64> {
        let g = |x: f64| crate::special::gamma_real(x);
        match (&self.kind, &self.sampler) {
            (LawKind::BinaryUniformConservative, _) => {
                Some(2.0 / (2.0 * beta + 1.0) + 2.0 * g(beta + 1.0).powi(2) / g(2.0 * beta + 2.0))
            }
            (LawKind::StickBreakingConservative | LawKind::StickBreakingLossy, _) => {
                // T = (1-U)^β + U^β T' for the conservative stick
                let b2 = 1.0 / (2.0 * beta + 1.0);
                let cross = g(beta + 1.0).powi(2) / g(2.0 * beta + 2.0);
                let et2 = (b2 + 2.0 * cross / beta) / (1.0 - b2);
                if matches!(self.kind, LawKind::StickBreakingLossy) {
                    Some(b2 * et2)
                } else {
                    Some(et2)
                }
            }
            (_, Some(Sampler::Poisson(pc))) => {
                if !self.measure.has_exact_transform() {
                    return None;
                }
                let (m1, m2) = pc.split_mellin(beta, &self.quad);
                let phi2 = self.phi_real(2.0 * beta).ok()?;
                Some(phi2 + 2.0 * m1 * m2 + m2 * m2)
            }
            (LawKind::UserAtomic { outcomes }, _) => Some(
                outcomes
                    .iter()
                    .map(|o| o.probability * o.sizes.iter().filter(|&&x| x > 0.0).map(|x| x.powf(beta)).sum::<f64>().powi(2))
                    .sum(),
            ),
            _ => None,
        }
    }

    /// The tagged-fragment law σ̂(dx) = x^β* σ(dx).
    pub fn tilted_tag_law(&self) -> Result<TaggedLaw> {
        let beta_star = self.beta_star()?;
        let sampler = match &self.kind {
            LawKind::StickBreakingLossy => TiltSampler::StickBreakingLossy { beta_star },
            _ => {
                let m = &self.measure;
                if !m.densities.is_empty() {
                    return Err(Error::UnsupportedTilt(format!("{} has a non-power density", self.name())));
                }
                let mut weights = Vec::new();
                let mut pieces = Vec::new();
                for t in &m.power_terms {
                    if t.lower > 0.0 || t.lambda < 0.0 {
                        return Err(Error::UnsupportedTilt(format!(
                            "{}: truncated or signed power terms have no exact tilt sampler",
                            self.name()
                        )));
                    }
                    let a = beta_star + t.theta;
                    weights.push(t.lambda / a);
                    pieces.push(TiltPiece::Beta1 { a });
                }
                for at in &m.atoms {
                    weights.push(at.mass * at.location.powf(beta_star));
                    pieces.push(TiltPiece::Atom { x: at.location });
                }
                TiltSampler::Mixture { weights, pieces }
            }
        };
        Ok(TaggedLaw::new(beta_star, self.measure.clone(), sampler, self.quad))
    }
}

fn richardson_central<F: Fn(f64) -> Result<f64>>(f: &F, x: f64, h: f64) -> Result<f64> {
    let d = |h: f64| -> Result<f64> { Ok((f(x + h)? - f(x - h)?) / (2.0 * h)) };
    let mut t = [[0.0f64; 3]; 3];
    for i in 0..3 {
        t[i][0] = d(h / 2f64.powi(i as i32))?;
        for j in 1..=i {
            let p = 4f64.powi(j as i32);
            t[i][j] = t[i][j - 1] + (t[i][j - 1] - t[i - 1][j - 1]) / (p - 1.0);
        }
    }
    Ok(t[2][2])
}

/// Whether every location is an integer power of one ratio r ∈ ]0,1[,
/// up to relative tolerance 1e-9 with denominators at most 64.
pub fn arithmetic_check(locations: &[f64]) -> bool {
    let logs: Vec<f64> = locations.iter().filter(|&&x| x > 0.0 && x < 1.0).map(|x| x.ln()).collect();
    let Some(&base) = logs.first() else {
        return true;
    };
    logs.iter().all(|&l| {
        let ratio = l / base;
        best_rational(ratio, 64).is_some_and(|(p, q)| (ratio - p as f64 / q as f64).abs() <= 1e-9 * ratio.abs())
    })
}

/// Closest continued-fraction convergent with denominator ≤ `max_den`.
fn best_rational(x: f64, max_den: i64) -> Option<(i64, i64)> {
    let (mut h0, mut h1) = (0i64, 1i64);
    let (mut k0, mut k1) = (1i64, 0i64);
    let mut r = x;
    let mut best = None;
    for _ in 0..40 {
        let a = r.floor();
        if a.abs() > 1e12 {
            break;
        }
        let a = a as i64;
        let h2 = a * h1 + h0;
        let k2 = a * k1 + k0;
        if k2 > max_den {
            break;
        }
        best = Some((h2, k2));
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        let frac = r - a as f64;
        if frac.abs() < 1e-12 {
            break;
        }
        r = 1.0 / frac;
    }
    best
}

#[cfg(test)]
mod tests;
