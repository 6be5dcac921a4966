//! Offspring samplers and the Poisson construction of a reproduction law.

use super::measure::{Atom, Density, PowerTerm, StructuralMeasure};
use crate::error::{Error, Result};
use crate::rng::Stream;
use rand::Rng;
use rand_distr::{Beta, Distribution, Poisson};
use serde::{Deserialize, Serialize};

/// One realised offspring collection of a unit particle.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct OffspringSample {
    /// Child sizes, decreasing, in ]0,1].
    pub sizes: Vec<f64>,
    /// β*-mass of children discarded below the floor. Finite drops enter
    /// exactly; an unresolved stick-breaking remainder of length `R` enters
    /// as `E[Σ pieces^β* | R] = R^β*/β*`, its conditional mean.
    pub truncated_beta_mass_bound: f64,
}

/// A probability law on ]0,1] (the single guaranteed child σ1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Component {
    Dirac { x: f64 },
    Uniform,
    /// density θ x^{θ-1}
    Power { theta: f64 },
    Beta { a: f64, b: f64 },
    /// Σ w_j θ_j x^{θ_j-1}, weights summing to one.
    PowerMixture { terms: Vec<MixtureTerm> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureTerm {
    pub weight: f64,
    pub theta: f64,
}

/// A finite intensity on ]0,1] (the Poisson part σ2).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum IntensityTerm {
    Dirac { x: f64, mass: f64 },
    /// λ x^{θ-1} dx, restricted to `[floor, 1]` when a floor is given.
    Power {
        lambda: f64,
        theta: f64,
        #[serde(default)]
        floor: Option<f64>,
    },
    Beta { mass: f64, a: f64, b: f64 },
}

fn sample_power(rng: &mut Stream, theta: f64) -> f64 {
    let u: f64 = 1.0 - rng.random::<f64>();
    u.powf(1.0 / theta)
}

fn sample_truncated_power(rng: &mut Stream, theta: f64, floor: f64) -> f64 {
    let u: f64 = rng.random();
    if theta.abs() < 1e-12 {
        return (floor.ln() * (1.0 - u)).exp();
    }
    let f = floor.powf(theta);
    (f + u * (1.0 - f)).powf(1.0 / theta)
}

fn sample_beta(rng: &mut Stream, a: f64, b: f64) -> f64 {
    Beta::new(a, b).expect("validated parameters").sample(rng)
}

impl Component {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidLaw(m.to_string()));
        match self {
            Component::Dirac { x } if !(*x > 0.0 && *x <= 1.0) => bad("dirac location must lie in ]0,1]"),
            Component::Power { theta } if !(*theta > 0.0) => bad("power component needs θ > 0"),
            Component::Beta { a, b } if !(*a > 0.0 && *b > 0.0) => bad("beta component needs a, b > 0"),
            Component::PowerMixture { terms } => {
                let total: f64 = terms.iter().map(|t| t.weight).sum();
                if terms.iter().any(|t| !(t.weight >= 0.0 && t.theta > 0.0)) || (total - 1.0).abs() > 1e-9 {
                    bad("power mixture needs nonnegative weights summing to 1 and θ > 0")
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    pub fn measure(&self) -> StructuralMeasure {
        match self {
            Component::Dirac { x } => StructuralMeasure { atoms: vec![Atom { location: *x, mass: 1.0 }], ..Default::default() },
            Component::Uniform => StructuralMeasure::power(vec![PowerTerm::new(1.0, 1.0)]),
            Component::Power { theta } => StructuralMeasure::power(vec![PowerTerm::new(*theta, *theta)]),
            Component::Beta { a, b } => {
                StructuralMeasure { densities: vec![Density::Beta { weight: 1.0, a: *a, b: *b }], ..Default::default() }
            }
            Component::PowerMixture { terms } => StructuralMeasure::power(
                terms.iter().map(|t| PowerTerm::new(t.weight * t.theta, t.theta)).collect(),
            ),
        }
    }

    pub fn sample(&self, rng: &mut Stream) -> f64 {
        match self {
            Component::Dirac { x } => *x,
            Component::Uniform => 1.0 - rng.random::<f64>(),
            Component::Power { theta } => sample_power(rng, *theta),
            Component::Beta { a, b } => sample_beta(rng, *a, *b),
            Component::PowerMixture { terms } => {
                let mut u: f64 = rng.random();
                for t in terms {
                    if u < t.weight {
                        return sample_power(rng, t.theta);
                    }
                    u -= t.weight;
                }
                sample_power(rng, terms.last().expect("nonempty mixture").theta)
            }
        }
    }
}

impl IntensityTerm {
    pub fn mass(&self) -> Result<f64> {
        match *self {
            IntensityTerm::Dirac { x, mass } => {
                if !(x > 0.0 && x <= 1.0 && mass >= 0.0) {
                    return Err(Error::InvalidIntensity("dirac term needs x in ]0,1] and mass ≥ 0".into()));
                }
                Ok(mass)
            }
            IntensityTerm::Power { lambda, theta, floor } => {
                if lambda < 0.0 {
                    return Err(Error::InvalidIntensity("power intensity needs λ ≥ 0".into()));
                }
                match floor {
                    Some(f) if f > 0.0 && f < 1.0 => {
                        let t = PowerTerm::truncated(lambda, theta, f);
                        Ok(t.mellin(num_complex::Complex64::new(0.0, 0.0)).re)
                    }
                    Some(_) => Err(Error::InvalidIntensity("floor must lie in ]0,1[".into())),
                    None if theta > 0.0 => Ok(lambda / theta),
                    None => Err(Error::InvalidIntensity(format!(
                        "λ x^(θ-1) with θ = {theta} has infinite mass near 0; supply a floor"
                    ))),
                }
            }
            IntensityTerm::Beta { mass, a, b } => {
                if !(mass >= 0.0 && a > 0.0 && b > 0.0) {
                    return Err(Error::InvalidIntensity("beta intensity needs mass ≥ 0 and a, b > 0".into()));
                }
                Ok(mass)
            }
        }
    }

    pub fn measure(&self) -> StructuralMeasure {
        match *self {
            IntensityTerm::Dirac { x, mass } => StructuralMeasure { atoms: vec![Atom { location: x, mass }], ..Default::default() },
            IntensityTerm::Power { lambda, theta, floor } => {
                StructuralMeasure::power(vec![PowerTerm::truncated(lambda, theta, floor.unwrap_or(0.0))])
            }
            IntensityTerm::Beta { mass, a, b } => {
                StructuralMeasure { densities: vec![Density::Beta { weight: mass, a, b }], ..Default::default() }
            }
        }
    }

    /// Intensity mass that a floor removed, weighted by `x^β` (infinite when
    /// `β+θ ≤ 0`).
    pub fn discarded_beta_mass(&self, beta: f64) -> f64 {
        match *self {
            IntensityTerm::Power { lambda, theta, floor: Some(f) } => {
                let s = beta + theta;
                if s <= 0.0 {
                    f64::INFINITY
                } else {
                    lambda * f.powf(s) / s
                }
            }
            _ => 0.0,
        }
    }

    fn sample(&self, rng: &mut Stream) -> f64 {
        match *self {
            IntensityTerm::Dirac { x, .. } => x,
            IntensityTerm::Power { theta, floor, .. } => match floor {
                Some(f) => sample_truncated_power(rng, theta, f),
                None => sample_power(rng, theta),
            },
            IntensityTerm::Beta { a, b, .. } => sample_beta(rng, a, b),
        }
    }
}

/// One child from σ1 plus a Poisson point process with intensity σ2.
#[derive(Debug, Clone, PartialEq)]
pub struct PoissonConstruction {
    pub first: Component,
    pub intensity: Vec<IntensityTerm>,
    masses: Vec<f64>,
    total: f64,
}

impl PoissonConstruction {
    pub fn new(first: Component, intensity: Vec<IntensityTerm>) -> Result<Self> {
        first.validate()?;
        let masses = intensity.iter().map(|t| t.mass()).collect::<Result<Vec<_>>>()?;
        let total: f64 = masses.iter().sum();
        if !total.is_finite() {
            return Err(Error::InvalidIntensity("σ2 has infinite total mass".into()));
        }
        Ok(Self { first, intensity, masses, total })
    }

    pub fn intensity_mass(&self) -> f64 {
        self.total
    }

    pub fn measure(&self) -> StructuralMeasure {
        self.intensity.iter().fold(self.first.measure(), |m, t| m.add(t.measure()))
    }

    /// σ1-part and σ2-part Mellin transforms at real β, when both are exact.
    pub fn split_mellin(&self, beta: f64, quad: &crate::quadrature::Quadrature) -> (f64, f64) {
        let b = num_complex::Complex64::new(beta, 0.0);
        let first = self.first.measure().mellin(b, quad).re;
        let rest = self
            .intensity
            .iter()
            .fold(StructuralMeasure::default(), |m, t| m.add(t.measure()))
            .mellin(b, quad)
            .re;
        (first, rest)
    }

    fn draw(&self, rng: &mut Stream, out: &mut Vec<f64>) {
        out.push(self.first.sample(rng));
        if self.total <= 0.0 {
            return;
        }
        let n = Poisson::new(self.total).expect("positive finite mean").sample(rng) as usize;
        for _ in 0..n {
            let mut u = rng.random::<f64>() * self.total;
            let mut pick = self.intensity.len() - 1;
            for (i, m) in self.masses.iter().enumerate() {
                if u < *m {
                    pick = i;
                    break;
                }
                u -= m;
            }
            out.push(self.intensity[pick].sample(rng));
        }
    }
}

/// Finite atomic law: outcome `i` (a list of child sizes) has probability `p_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomicOutcome {
    pub probability: f64,
    pub sizes: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Sampler {
    BinaryUniform,
    StickBreaking { lossy: bool },
    Poisson(PoissonConstruction),
    Atomic(Vec<AtomicOutcome>),
}

impl Sampler {
    /// Draw one offspring collection; children below `floor` are discarded
    /// and their β*-mass reported.
    pub(crate) fn draw(&self, rng: &mut Stream, floor: f64, beta_star: f64) -> OffspringSample {
        let mut sizes = Vec::new();
        let mut dropped = 0.0;
        match self {
            Sampler::BinaryUniform => {
                let u: f64 = rng.random();
                sizes.push(u);
                sizes.push(1.0 - u);
            }
            Sampler::StickBreaking { lossy } => {
                let mut rest = if *lossy { rng.random::<f64>() } else { 1.0 };
                loop {
                    if rest < floor || rest == 0.0 {
                        if rest > 0.0 {
                            // the remaining stick would be broken conservatively:
                            // E Σ pieces^β = rest^β · ∫ x^β x^{-1} dx = rest^β / β
                            dropped += rest.powf(beta_star) / beta_star;
                        }
                        break;
                    }
                    let u: f64 = rng.random();
                    sizes.push(rest * (1.0 - u));
                    rest *= u;
                }
            }
            Sampler::Poisson(pc) => pc.draw(rng, &mut sizes),
            Sampler::Atomic(outcomes) => {
                let mut u: f64 = rng.random();
                let mut chosen = &outcomes[outcomes.len() - 1];
                for o in outcomes {
                    if u < o.probability {
                        chosen = o;
                        break;
                    }
                    u -= o.probability;
                }
                sizes.extend(chosen.sizes.iter().copied().filter(|&x| x > 0.0));
            }
        }
        sizes.retain(|&x| {
            if x < floor {
                if x > 0.0 {
                    dropped += x.powf(beta_star);
                }
                false
            } else {
                x > 0.0
            }
        });
        sizes.sort_by(|a, b| b.total_cmp(a));
        OffspringSample { sizes, truncated_beta_mass_bound: dropped }
    }
}
