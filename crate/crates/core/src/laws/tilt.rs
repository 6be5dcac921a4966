//! The β*-tilted single-child law σ̂(dx) = x^β* σ(dx) that drives the tagged
//! fragment, and the stationary starting law of its log-size.

use super::measure::StructuralMeasure;
use crate::quadrature::Quadrature;
use crate::rng::Stream;
use num_complex::Complex64;
use rand::Rng;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum TiltPiece {
    /// density a x^{a-1} on ]0,1]
    Beta1 { a: f64 },
    /// point mass
    Atom { x: f64 },
}

impl TiltPiece {
    fn sample(&self, rng: &mut Stream) -> f64 {
        match *self {
            TiltPiece::Beta1 { a } => (1.0 - rng.random::<f64>()).powf(1.0 / a),
            TiltPiece::Atom { x } => x,
        }
    }

    /// E(-ln η) under this piece.
    fn mean_log_decrement(&self) -> f64 {
        match *self {
            TiltPiece::Beta1 { a } => 1.0 / a,
            TiltPiece::Atom { x } => -x.ln(),
        }
    }

    /// Draw from `P(dx) ∝ piece(]0,x]) dx / x`.
    fn sample_stationary(&self, rng: &mut Stream) -> f64 {
        match *self {
            TiltPiece::Beta1 { a } => (1.0 - rng.random::<f64>()).powf(1.0 / a),
            TiltPiece::Atom { x } => (rng.random::<f64>() * x.ln()).exp(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum TiltSampler {
    Mixture { weights: Vec<f64>, pieces: Vec<TiltPiece> },
    /// σ̂(dx) = (x^{β*-1} - x^β*) dx, sampled by rejection from Beta(β*, 1).
    StickBreakingLossy { beta_star: f64 },
}

/// Law of the shrink factor η of the tagged fragment.
#[derive(Debug, Clone)]
pub struct TaggedLaw {
    pub beta_star: f64,
    measure: StructuralMeasure,
    sampler: TiltSampler,
    quad: Quadrature,
    mean_log_decrement: f64,
    stationary_weights: Vec<f64>,
}

fn pick(weights: &[f64], rng: &mut Stream) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        if u < *w {
            return i;
        }
        u -= w;
    }
    weights.len() - 1
}

impl TaggedLaw {
    pub(crate) fn new(beta_star: f64, measure: StructuralMeasure, sampler: TiltSampler, quad: Quadrature) -> Self {
        let (mean_log_decrement, stationary_weights) = match &sampler {
            TiltSampler::Mixture { weights, pieces } => {
                let w: Vec<f64> = weights.iter().zip(pieces).map(|(w, p)| w * p.mean_log_decrement()).collect();
                (w.iter().sum(), w)
            }
            TiltSampler::StickBreakingLossy { beta_star } => {
                // E(-ln η) = ∫ (-ln x)(x^{b-1} - x^b) dx = 1/b² - 1/(b+1)²
                let b = *beta_star;
                (1.0 / (b * b) - 1.0 / ((b + 1.0) * (b + 1.0)), vec![])
            }
        };
        Self { beta_star, measure, sampler, quad, mean_log_decrement, stationary_weights }
    }

    /// ψ̂(z) = ψ(z + β*).
    pub fn psi_hat(&self, z: Complex64) -> Complex64 {
        1.0 - self.measure.mellin(z + self.beta_star, &self.quad)
    }

    /// ψ̂'(0+) = E(-ln η) = ψ'(β*).
    pub fn psi_hat_derivative_at_zero(&self) -> f64 {
        self.mean_log_decrement
    }

    /// E η^z.
    pub fn moment(&self, z: f64) -> f64 {
        1.0 - self.psi_hat(Complex64::new(z, 0.0)).re
    }

    pub fn sample(&self, rng: &mut Stream) -> f64 {
        match &self.sampler {
            TiltSampler::Mixture { weights, pieces } => pieces[pick(weights, rng)].sample(rng),
            TiltSampler::StickBreakingLossy { beta_star } => loop {
                let x = (1.0 - rng.random::<f64>()).powf(1.0 / beta_star);
                if rng.random::<f64>() < 1.0 - x {
                    return x;
                }
            },
        }
    }

    /// Starting factor η₀ with `P(η₀ ∈ dx) = σ̂(]0,x]) dx / (ψ̂'(0) x)`.
    pub fn sample_initial(&self, rng: &mut Stream) -> f64 {
        match &self.sampler {
            TiltSampler::Mixture { pieces, .. } => pieces[pick(&self.stationary_weights, rng)].sample_stationary(rng),
            TiltSampler::StickBreakingLossy { beta_star } => {
                // density ∝ x^{b-1}/b - x^b/(b+1); proposal Beta(b,1), acceptance 1 - x b/(b+1)
                let b = *beta_star;
                loop {
                    let x = (1.0 - rng.random::<f64>()).powf(1.0 / b);
                    if rng.random::<f64>() < 1.0 - x * b / (b + 1.0) {
                        return x;
                    }
                }
            }
        }
    }

    /// CDF of η.
    pub fn cdf(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        match &self.sampler {
            TiltSampler::Mixture { weights, pieces } => {
                let total: f64 = weights.iter().sum();
                weights
                    .iter()
                    .zip(pieces)
                    .map(|(w, p)| {
                        w * match *p {
                            TiltPiece::Beta1 { a } => x.powf(a),
                            TiltPiece::Atom { x: loc } => {
                                if x >= loc {
                                    1.0
                                } else {
                                    0.0
                                }
                            }
                        }
                    })
                    .sum::<f64>()
                    / total
            }
            TiltSampler::StickBreakingLossy { beta_star } => {
                let b = *beta_star;
                x.powf(b) / b - x.powf(b + 1.0) / (b + 1.0)
            }
        }
    }
}
