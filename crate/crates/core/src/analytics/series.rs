//! The entire series m(t, β) = Σ_n (-t)^n γ(n, β) / n!.
//!
//! For large t the terms reach e^t while the sum decays polynomially, so the
//! sum is formed in MPFR arithmetic at a working precision that doubles until
//! two consecutive evaluations agree.

use crate::error::{Error, Result};
use crate::laws::ReproductionLaw;
use crate::mp::MpComplex;
use num_complex::Complex64;
use rug::ops::Pow;
use rug::Float;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesOptions {
    pub rel_tol: f64,
    pub start_bits: u32,
    pub max_bits: u32,
}

impl Default for SeriesOptions {
    fn default() -> Self {
        Self { rel_tol: 1e-12, start_bits: 128, max_bits: 4096 }
    }
}

impl SeriesOptions {
    pub fn with_rel_tol(rel_tol: f64) -> Self {
        Self { rel_tol, ..Self::default() }
    }
}

/// Value of m(t, β) with precision diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct SeriesEvaluation {
    #[serde(serialize_with = "ser_c64")]
    pub value: Complex64,
    #[serde(skip)]
    pub value_mp: MpComplex,
    pub working_precision_bits: u32,
    pub terms_used: usize,
    pub max_term_magnitude: f64,
    pub cancellation_digits_lost: f64,
}

fn ser_c64<S: serde::Serializer>(z: &Complex64, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeStruct;
    let mut st = s.serialize_struct("Complex", 2)?;
    st.serialize_field("re", &z.re)?;
    st.serialize_field("im", &z.im)?;
    st.end()
}

impl SeriesEvaluation {
    pub fn re(&self) -> f64 {
        self.value.re
    }
}

/// m(t, β) for t ≥ 0 and Re β inside the domain of φ.
pub fn m_series(law: &ReproductionLaw, alpha: f64, t: f64, beta: Complex64, rel_tol: f64) -> Result<SeriesEvaluation> {
    m_series_with(law, alpha, t, beta, SeriesOptions::with_rel_tol(rel_tol))
}

pub fn m_series_with(
    law: &ReproductionLaw,
    alpha: f64,
    t: f64,
    beta: Complex64,
    opts: SeriesOptions,
) -> Result<SeriesEvaluation> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::InvalidConfig(format!("t must be finite and ≥ 0, got {t}")));
    }
    series_any_t(law, alpha, t, beta, opts)
}

/// Same as [`m_series_with`] without the sign restriction on t (the series
/// is entire, and finite differences straddle t = 0).
pub(crate) fn series_any_t(
    law: &ReproductionLaw,
    alpha: f64,
    t: f64,
    beta: Complex64,
    opts: SeriesOptions,
) -> Result<SeriesEvaluation> {
    if !(alpha >= 0.0) {
        return Err(Error::InvalidConfig(format!("α must be ≥ 0, got {alpha}")));
    }
    law.check_domain(beta.re)?;
    if t == 0.0 {
        return Ok(SeriesEvaluation {
            value: Complex64::new(1.0, 0.0),
            value_mp: MpComplex::from_f64(opts.start_bits, 1.0, 0.0),
            working_precision_bits: opts.start_bits,
            terms_used: 1,
            max_term_magnitude: 1.0,
            cancellation_digits_lost: 0.0,
        });
    }
    if !law.has_closed_form() {
        return series_f64(law, alpha, t, beta, opts);
    }
    let mut bits = opts.start_bits.max(64);
    let mut prev = sum_at(law, alpha, t, beta, bits);
    let mut gap = f64::INFINITY;
    loop {
        let next_bits = bits * 2;
        if next_bits > opts.max_bits {
            return Err(Error::PrecisionExhausted { bits, digits_lost: prev.cancellation_digits_lost, discrepancy: gap });
        }
        let next = sum_at(law, alpha, t, beta, next_bits);
        gap = relative_gap(&prev.value_mp, &next.value_mp);
        if gap <= opts.rel_tol {
            return Ok(next);
        }
        bits = next_bits;
        prev = next;
    }
}

fn relative_gap(a: &MpComplex, b: &MpComplex) -> f64 {
    let diff = (a - b).abs();
    let scale = b.abs();
    if scale.is_zero() {
        return diff.to_f64();
    }
    Float::with_val(64, &diff / &scale).to_f64()
}

fn sum_at(law: &ReproductionLaw, alpha: f64, t: f64, beta: Complex64, bits: u32) -> SeriesEvaluation {
    let beta_mp = MpComplex::from_c64(bits, beta);
    let alpha_mp = Float::with_val(bits, alpha);
    let minus_t = Float::with_val(bits, -t);
    let mut term = MpComplex::from_f64(bits, 1.0, 0.0);
    let mut sum = term.clone();
    let mut max_term = Float::with_val(bits, 1.0);
    let eps = Float::with_val(bits, Float::i_exp(1, -(bits as i32)));
    let mut quiet = 0;
    let mut n: u32 = 0;
    // terms only start shrinking after n ≈ t·sup|ψ|, so the stop rule is not
    // consulted before that
    let sup_psi = 1.0 + law.measure().mellin(Complex64::new(beta.re, 0.0), law.quadrature()).re.abs();
    let warmup = (t * sup_psi).ceil() as u32 + 2;
    loop {
        let arg = beta_mp.add_real(&Float::with_val(bits, &alpha_mp * n));
        let psi = law.psi_mp(&arg).expect("exact transform");
        n += 1;
        term = (&term * &psi).scale(&Float::with_val(bits, &minus_t / n));
        sum = &sum + &term;
        let mag = term.abs();
        if mag > max_term {
            max_term = mag.clone();
        }
        let threshold = Float::with_val(bits, &max_term * &eps);
        if mag < threshold {
            quiet += 1;
        } else {
            quiet = 0;
        }
        if quiet >= 10 && n > warmup {
            break;
        }
        if n > 1_000_000 {
            break;
        }
    }
    let value = sum.to_c64();
    let max_f = max_term.to_f64();
    let abs_v = sum.abs().to_f64();
    let lost = if abs_v > 0.0 { (max_f / abs_v).log10().max(0.0) } else { f64::INFINITY };
    SeriesEvaluation {
        value,
        value_mp: sum,
        working_precision_bits: bits,
        terms_used: n as usize + 1,
        max_term_magnitude: max_f,
        cancellation_digits_lost: lost,
    }
}

/// Double-precision summation for laws whose φ is only known by quadrature.
/// Refused once cancellation would eat the requested accuracy.
fn series_f64(law: &ReproductionLaw, alpha: f64, t: f64, beta: Complex64, opts: SeriesOptions) -> Result<SeriesEvaluation> {
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = term;
    let mut max_term = 1.0f64;
    let mut n = 0u32;
    let mut quiet = 0;
    loop {
        let psi = law.psi(beta + alpha * n as f64)?;
        n += 1;
        term *= psi * (-t / n as f64);
        sum += term;
        max_term = max_term.max(term.norm());
        if term.norm() < max_term * f64::EPSILON {
            quiet += 1;
        } else {
            quiet = 0;
        }
        if (quiet >= 10 && n as f64 > t) || n > 100_000 {
            break;
        }
    }
    let lost = (max_term / sum.norm()).log10().max(0.0);
    // quadrature values carry ~1e-12 relative error, amplified by the cancellation
    let achievable = 1e-12 * 10f64.powf(lost);
    if achievable > opts.rel_tol {
        return Err(Error::PrecisionExhausted { bits: 53, digits_lost: lost, discrepancy: achievable });
    }
    Ok(SeriesEvaluation {
        value: sum,
        value_mp: MpComplex::from_c64(53, sum),
        working_precision_bits: 53,
        terms_used: n as usize + 1,
        max_term_magnitude: max_term,
        cancellation_digits_lost: lost,
    })
}

/// Residual of ∂_t^k m(t, β) = (-1)^k γ(k, β) m(t, β + kα), with the left side
/// from central finite differences of the high-precision series. Returned
/// relative to max(|right side|, 1e-300).
pub fn derivative_identity_check(law: &ReproductionLaw, alpha: f64, t: f64, beta: Complex64, k: u32) -> Result<f64> {
    if k == 0 {
        return Ok(0.0);
    }
    let opts = SeriesOptions::with_rel_tol(1e-40);
    let bits = 512;
    // dyadic step keeps t ± jh/2 exact in double precision
    let h = 2f64.powi(-20);
    // k-th central difference Σ_i (-1)^i C(k,i) m(t + (k/2 - i)h) / h^k, formed
    // in MPFR so that the h^-k amplification only sees the series error
    let mut acc = MpComplex::zero(bits);
    let mut binom = Float::with_val(bits, 1);
    for i in 0..=k {
        let s = t + (k as f64 / 2.0 - i as f64) * h;
        let v = series_any_t(law, alpha, s, beta, opts)?.value_mp;
        let v = MpComplex { re: Float::with_val(bits, &v.re), im: Float::with_val(bits, &v.im) };
        let w = if i % 2 == 0 { binom.clone() } else { Float::with_val(bits, -&binom) };
        acc = &acc + &v.scale(&w);
        binom = Float::with_val(bits, &binom * (k - i)) / (i + 1);
    }
    let hk = Float::with_val(bits, h).pow(k);
    let lhs = acc.scale(&Float::with_val(bits, hk.recip_ref())).to_c64();
    let gamma_k = super::gamma_n(law, alpha, k, beta)?;
    let shifted = series_any_t(law, alpha, t, beta + alpha * k as f64, opts)?.value;
    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
    let rhs = sign * gamma_k * shifted;
    Ok((lhs - rhs).norm() / rhs.norm().max(1e-300))
}
