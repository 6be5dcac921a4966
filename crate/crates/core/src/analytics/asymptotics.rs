//! Large-time coefficient of m(t, β), moments of the limit measure ρ, and the
//! Filippov closed forms.

use super::dirichlet::{hypergeometric_coefficient_mp, rational_terms};
use super::gamma::gamma_z;
use crate::error::{Error, Result};
use crate::laws::ReproductionLaw;
use crate::special::{factorial, gamma, gamma_real};
use num_complex::Complex64;
use rug::Float;
use serde::Serialize;

fn require_nonarithmetic(law: &ReproductionLaw) -> Result<()> {
    if law.is_arithmetic() {
        Err(Error::ArithmeticLaw)
    } else {
        Ok(())
    }
}

/// ψ'(β*), required finite and positive.
pub fn psi_prime_at_malthus(law: &ReproductionLaw) -> Result<f64> {
    let b = law.beta_star()?;
    let d = law.psi_derivative(b)?;
    if !(d.is_finite() && d > 0.0) {
        return Err(Error::Domain { value: b, abscissa: law.abscissa().value });
    }
    Ok(d)
}

/// C(β) with m(t, β) ~ C(β) t^{(β*-β)/α}, through
/// C(β) = Γ((β-β*)/α) ψ(β) / (α ψ'(β*)) / γ((β-β*)/α, α+β*).
///
/// With z = (β-β*)/α a negative integer both Γ(z) and 1/γ(z, α+β*) blow up.
/// Shifting by N with Re(z+N) > 0 gives the regular form
/// C(β) = Γ(z+N+1) / γ(z+N, α+β*) · Π_{j=0}^{N} h(z+j) / (α ψ'(β*)),
/// h(u) = ψ(β* + αu)/u, h(0) = α ψ'(β*).
pub fn asymptotic_coefficient(law: &ReproductionLaw, alpha: f64, beta: Complex64) -> Result<Complex64> {
    require_nonarithmetic(law)?;
    if !(alpha > 0.0) {
        return Err(Error::InvalidConfig("the power-law asymptotics need α > 0".into()));
    }
    law.check_domain(beta.re)?;
    let bs = law.beta_star()?;
    if (beta - bs).norm() < 1e-12 {
        return Err(Error::Pole { at: bs });
    }
    let z = (beta - bs) / alpha;
    let dpsi = psi_prime_at_malthus(law)?;
    let shift = if z.re > 0.0 { 0 } else { (-z.re).floor() as u32 + 1 };
    let h = |u: Complex64| -> Result<Complex64> {
        if u.norm() < 1e-8 {
            Ok(Complex64::new(alpha * dpsi, 0.0))
        } else {
            Ok(law.psi(bs + alpha * u)? / u)
        }
    };
    let mut prod = Complex64::new(1.0, 0.0);
    for j in 0..=shift {
        prod *= h(z + j as f64)?;
    }
    let zs = z + shift as f64;
    let g = gamma_z(law, alpha, zs, Complex64::new(alpha + bs, 0.0), 1e-13)?;
    Ok(gamma(zs + 1.0) / g.value * prod / (alpha * dpsi))
}

/// C(β) for real β in MPFR precision, available when φ is a finite sum of
/// power terms (the Γ-product form of the residue).
pub fn asymptotic_coefficient_mp(law: &ReproductionLaw, alpha: f64, beta: f64, bits: u32) -> Result<Float> {
    require_nonarithmetic(law)?;
    law.check_domain(beta)?;
    let terms = rational_terms(law).ok_or(Error::UnsupportedRepresentation)?;
    hypergeometric_coefficient_mp(&terms, alpha, beta, bits)
}

/// Power moments ∫ x^{αk} ρ(dx), k = 1..=k_max.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RhoMoments {
    pub alpha: f64,
    pub beta_star: f64,
    pub moments: Vec<f64>,
}

impl RhoMoments {
    /// Moment of order k (k ≥ 1); k = 0 gives 1.
    pub fn get(&self, k: usize) -> f64 {
        if k == 0 {
            1.0
        } else {
            self.moments[k - 1]
        }
    }

    /// Whether m_k² ≤ m_{k-1} m_{k+1} for every interior k, with m_0 = 1.
    pub fn is_log_convex(&self) -> bool {
        (1..self.moments.len()).all(|k| self.get(k).powi(2) <= self.get(k - 1) * self.get(k + 1) * (1.0 + 1e-12))
    }
}

/// (k-1)!/(α ψ'(β*)) Π_{j=1}^{k-1} 1/ψ(β* + αj).
pub fn rho_moment(law: &ReproductionLaw, alpha: f64, k: u32) -> Result<f64> {
    if k == 0 {
        return Ok(1.0);
    }
    if !(alpha > 0.0) {
        return Err(Error::InvalidConfig("ρ is defined for α > 0".into()));
    }
    let bs = law.beta_star()?;
    let mut acc = factorial(k - 1) / (alpha * psi_prime_at_malthus(law)?);
    for j in 1..k {
        acc /= law.psi_real(bs + alpha * j as f64)?;
    }
    Ok(acc)
}

pub fn rho_moments(law: &ReproductionLaw, alpha: f64, k_max: u32) -> Result<RhoMoments> {
    let moments = (1..=k_max).map(|k| rho_moment(law, alpha, k)).collect::<Result<Vec<_>>>()?;
    Ok(RhoMoments { alpha, beta_star: law.beta_star()?, moments })
}

/// λ when σ(dx) = λ x^{θ-1} dx on ]0,1[, the case where ρ has the gamma-type
/// density of [`filippov_rho_density`].
pub fn filippov_lambda(law: &ReproductionLaw) -> Option<f64> {
    match rational_terms(law)?.as_slice() {
        [(lambda, theta)] if *lambda > 0.0 && *theta > 0.0 => Some(*lambda),
        _ => None,
    }
}

/// ρ(dx) = α / Γ(λ/α) x^{λ-1} e^{-x^α} dx for the Filippov law.
pub fn filippov_rho_density(lambda: f64, alpha: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    alpha / gamma_real(lambda / alpha) * x.powf(lambda - 1.0) * (-x.powf(alpha)).exp()
}

/// CDF of the Filippov ρ: the regularised lower incomplete gamma P(λ/α, x^α).
pub fn filippov_rho_cdf(lambda: f64, alpha: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    statrs::function::gamma::gamma_lr(lambda / alpha, x.powf(alpha))
}

/// exp(-t ψ(β)), the value of m(t, β) when α = 0.
pub fn homogeneous_m(law: &ReproductionLaw, t: f64, beta: Complex64) -> Result<Complex64> {
    Ok((-t * law.psi(beta)?).exp())
}

/// Comparison of the tagged-fragment moments E Y^k with the ρ moments.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct YMomentReport {
    /// (k, E Y^k, ∫ x^{αk} ρ(dx))
    pub rows: Vec<(u32, f64, f64)>,
    pub max_relative_difference: f64,
}

/// E Y^k = (k-1)!/(α ψ̂'(0+)) Π_{j<k} 1/ψ̂(αj), with ψ̂ from the tilted law.
pub fn y_moments_consistency(law: &ReproductionLaw, alpha: f64, k_max: u32) -> Result<YMomentReport> {
    let tag = law.tilted_tag_law()?;
    let d = tag.psi_hat_derivative_at_zero();
    let mut rows = Vec::new();
    let mut worst = 0.0f64;
    for k in 1..=k_max {
        let mut y = factorial(k - 1) / (alpha * d);
        for j in 1..k {
            y /= tag.psi_hat(Complex64::new(alpha * j as f64, 0.0)).re;
        }
        let r = rho_moment(law, alpha, k)?;
        worst = worst.max(((y - r) / r).abs());
        rows.push((k, y, r));
    }
    Ok(YMomentReport { rows, max_relative_difference: worst })
}
