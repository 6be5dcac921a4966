//! Closed forms for rational characteristic functions φ(β) = Σ_j λ_j / (θ_j + β).
//!
//! With P(β) = Π_j (β + θ_j) - Σ_j λ_j Π_{i≠j} (β + θ_i) one has
//! ψ(β) = P(β) / Π_j (β + θ_j) = Π_j (β - β_j) / Π_j (β + θ_j), where β_j are
//! the p roots of φ = 1, and every object built from ψ reduces to Γ functions.

use crate::error::{Error, Result};
use crate::laws::{PowerTerm, ReproductionLaw};
use crate::special::{factorial, ln_gamma};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rug::Float;

/// Terms with equal θ merged, zero weights dropped.
pub fn normalise_terms(terms: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = Vec::new();
    for &(l, t) in terms {
        match out.iter_mut().find(|(_, th)| *th == t) {
            Some(e) => e.0 += l,
            None => out.push((l, t)),
        }
    }
    out.retain(|&(l, _)| l != 0.0);
    out
}

/// (λ_j, θ_j) of a law whose structural measure is a finite sum of
/// untruncated power densities.
pub fn rational_terms(law: &ReproductionLaw) -> Option<Vec<(f64, f64)>> {
    let m = law.measure();
    if !m.atoms.is_empty() || !m.densities.is_empty() || m.power_terms.is_empty() {
        return None;
    }
    if m.power_terms.iter().any(|t: &PowerTerm| t.lower > 0.0) {
        return None;
    }
    Some(normalise_terms(&m.power_terms.iter().map(|t| (t.lambda, t.theta)).collect::<Vec<_>>()))
}

/// Coefficients of P, lowest degree first; P is monic of degree p.
fn cleared_polynomial(terms: &[(f64, f64)]) -> Vec<f64> {
    let mul_linear = |poly: &[f64], c: f64| -> Vec<f64> {
        // poly · (β + c)
        let mut out = vec![0.0; poly.len() + 1];
        for (i, &a) in poly.iter().enumerate() {
            out[i] += a * c;
            out[i + 1] += a;
        }
        out
    };
    let mut full = vec![1.0];
    for &(_, t) in terms {
        full = mul_linear(&full, t);
    }
    for (j, &(l, _)) in terms.iter().enumerate() {
        let mut part = vec![1.0];
        for (i, &(_, t)) in terms.iter().enumerate() {
            if i != j {
                part = mul_linear(&part, t);
            }
        }
        for (i, a) in part.iter().enumerate() {
            full[i] -= l * a;
        }
    }
    full
}

fn horner(coeffs: &[f64], x: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for &c in coeffs.iter().rev() {
        dp = dp * x + p;
        p = p * x + c;
    }
    (p, dp)
}

/// All p roots of φ(β) = 1, by companion-matrix eigenvalues polished with
/// Newton steps on P. The Malthusian exponent comes first.
pub fn dirichlet_roots(terms: &[(f64, f64)], beta_star: f64) -> Result<Vec<Complex64>> {
    let terms = normalise_terms(terms);
    let coeffs = cleared_polynomial(&terms);
    let p = coeffs.len() - 1;
    if p == 0 {
        return Err(Error::RootFindingFailure("empty Dirichlet polynomial".into()));
    }
    let mut companion = DMatrix::<f64>::zeros(p, p);
    for i in 1..p {
        companion[(i, i - 1)] = 1.0;
    }
    for i in 0..p {
        companion[(i, p - 1)] = -coeffs[i];
    }
    let eig = companion.complex_eigenvalues();
    let mut roots: Vec<Complex64> = Vec::with_capacity(p);
    for &r0 in eig.iter() {
        let mut r = Complex64::new(r0.re, r0.im);
        for _ in 0..50 {
            let (v, dv) = horner(&coeffs, r);
            if dv.norm() == 0.0 {
                break;
            }
            let step = v / dv;
            r -= step;
            if step.norm() <= 1e-16 * r.norm().max(1.0) {
                break;
            }
        }
        let (v, _) = horner(&coeffs, r);
        let scale = coeffs.iter().map(|c| c.abs()).sum::<f64>() * r.norm().max(1.0).powi(p as i32);
        if v.norm() > 1e-9 * scale {
            return Err(Error::RootFindingFailure(format!("root {r} not isolated (|P| = {:e})", v.norm())));
        }
        roots.push(r);
    }
    let pos = roots
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - beta_star).norm().total_cmp(&(b.1 - beta_star).norm()))
        .map(|(i, _)| i)
        .unwrap();
    if (roots[pos] - beta_star).norm() > 1e-7 * beta_star.abs().max(1.0) {
        return Err(Error::RootFindingFailure(format!("no root near β* = {beta_star}")));
    }
    roots.swap(0, pos);
    roots[0] = Complex64::new(beta_star, 0.0);
    for i in 1..p {
        for j in 0..i {
            if (roots[i] - roots[j]).norm() < 1e-8 * roots[i].norm().max(1.0) {
                return Err(Error::RootFindingFailure("repeated root".into()));
            }
        }
    }
    Ok(roots)
}

/// Coefficient c(β) with m(t, β) ~ c(β) t^{(β*-β)/α}:
/// Π_{j≥2} Γ((β*-β_j)/α) / Γ((β-β_j)/α) · Π_j Γ((β+θ_j)/α) / Γ((β*+θ_j)/α).
pub fn hypergeometric_coefficient(terms: &[(f64, f64)], alpha: f64, beta: Complex64) -> Result<Complex64> {
    let terms = normalise_terms(terms);
    let beta_star = malthus_of_terms(&terms)?;
    let roots = dirichlet_roots(&terms, beta_star)?;
    let bs = Complex64::new(beta_star, 0.0);
    let mut log = Complex64::new(0.0, 0.0);
    for r in &roots[1..] {
        log += ln_gamma((bs - r) / alpha) - ln_gamma((beta - r) / alpha);
    }
    for &(_, th) in &terms {
        log += ln_gamma((beta + th) / alpha) - ln_gamma((bs + th) / alpha);
    }
    Ok(log.exp())
}

/// ∫ x^{αk} ρ(dx) = (k-1)!/(αψ'(β*)) Π_j ((β*+θ_j)/α + 1)_{k-1} / ((β*-β_j)/α + 1)_{k-1},
/// the product running over all roots including β_1 = β*.
pub fn hypergeometric_rho_moment(terms: &[(f64, f64)], alpha: f64, k: u32) -> Result<f64> {
    if k == 0 {
        return Ok(1.0);
    }
    let terms = normalise_terms(terms);
    let beta_star = malthus_of_terms(&terms)?;
    let roots = dirichlet_roots(&terms, beta_star)?;
    let psi_prime: f64 = terms.iter().map(|&(l, t)| l / (beta_star + t).powi(2)).sum();
    let mut acc = Complex64::new(factorial(k - 1) / (alpha * psi_prime), 0.0);
    for i in 0..(k - 1) {
        let i = i as f64;
        for &(_, th) in &terms {
            acc *= (beta_star + th) / alpha + 1.0 + i;
        }
        for r in &roots {
            acc /= (beta_star - r) / alpha + 1.0 + i;
        }
    }
    Ok(acc.re)
}

fn malthus_of_terms(terms: &[(f64, f64)]) -> Result<f64> {
    ReproductionLaw::dirichlet_polynomial(terms.to_vec())?.beta_star()
}

/// c(β) for real β in MPFR precision. The roots are refined by Newton steps
/// on P in `bits` precision; complex roots other than β* are not supported.
pub fn hypergeometric_coefficient_mp(terms: &[(f64, f64)], alpha: f64, beta: f64, bits: u32) -> Result<Float> {
    let terms = normalise_terms(terms);
    let beta_star = malthus_of_terms(&terms)?;
    let roots = dirichlet_roots(&terms, beta_star)?;
    if roots.iter().any(|r| r.im.abs() > 1e-12 * r.norm().max(1.0)) {
        return Err(Error::UnsupportedRepresentation);
    }
    let coeffs = mp_polynomial(&terms, bits);
    let polish = |r0: f64| polish_root(&coeffs, r0, bits);
    let bs = polish(beta_star);
    let b = Float::with_val(bits, beta);
    let a = Float::with_val(bits, alpha);
    let lgam = |x: Float| -> (Float, i32) {
        let (v, sign) = x.ln_abs_gamma();
        (v, if sign == std::cmp::Ordering::Less { -1 } else { 1 })
    };
    let mut log = Float::with_val(bits, 0);
    let mut sign = 1;
    let mut add = |x: Float, s: i32| {
        let (v, sg) = lgam(x);
        if s > 0 {
            log += &v;
        } else {
            log -= &v;
        }
        sign *= sg;
    };
    for r in &roots[1..] {
        let rj = polish(r.re);
        add(Float::with_val(bits, &bs - &rj) / &a, 1);
        add(Float::with_val(bits, &b - &rj) / &a, -1);
    }
    for &(_, th) in &terms {
        let th = Float::with_val(bits, th);
        add(Float::with_val(bits, &b + &th) / &a, 1);
        add(Float::with_val(bits, &bs + &th) / &a, -1);
    }
    let v = log.exp();
    Ok(if sign < 0 { -v } else { v })
}

/// Newton iteration on the polynomial `coeffs` (lowest degree first) in
/// `bits` precision, from the f64 root estimate `r0`.
fn polish_root(coeffs: &[Float], r0: f64, bits: u32) -> Float {
    let mut r = Float::with_val(bits, r0);
    let tiny = Float::with_val(bits, Float::i_exp(1, -(bits as i32) + 4));
    for _ in 0..200 {
        let mut p = Float::with_val(bits, 0);
        let mut dp = Float::with_val(bits, 0);
        for c in coeffs.iter().rev() {
            dp = Float::with_val(bits, &dp * &r) + &p;
            p = Float::with_val(bits, &p * &r) + c;
        }
        if dp.is_zero() {
            break;
        }
        let step = Float::with_val(bits, &p / &dp);
        r -= &step;
        if step.abs() <= Float::with_val(bits, &tiny * r.clone().abs().max(&Float::with_val(bits, 1))) {
            break;
        }
    }
    r
}

/// β* in MPFR precision when φ is a finite sum of power terms.
pub fn malthusian_exponent_mp(law: &ReproductionLaw, bits: u32) -> Result<Float> {
    let terms = normalise_terms(&rational_terms(law).ok_or(Error::UnsupportedRepresentation)?);
    let beta_star = law.beta_star()?;
    Ok(polish_root(&mp_polynomial(&terms, bits), beta_star, bits))
}

fn mp_polynomial(terms: &[(f64, f64)], bits: u32) -> Vec<Float> {
    let mul_linear = |poly: &[Float], c: &Float| -> Vec<Float> {
        let mut out: Vec<Float> = (0..=poly.len()).map(|_| Float::with_val(bits, 0)).collect();
        for (i, a) in poly.iter().enumerate() {
            out[i] += Float::with_val(bits, a * c);
            out[i + 1] += a;
        }
        out
    };
    let one = vec![Float::with_val(bits, 1)];
    let mut full = one.clone();
    for &(_, t) in terms {
        full = mul_linear(&full, &Float::with_val(bits, t));
    }
    for (j, &(l, _)) in terms.iter().enumerate() {
        let mut part = one.clone();
        for (i, &(_, t)) in terms.iter().enumerate() {
            if i != j {
                part = mul_linear(&part, &Float::with_val(bits, t));
            }
        }
        for (i, a) in part.iter().enumerate() {
            full[i] -= Float::with_val(bits, a * l);
        }
    }
    full
}
