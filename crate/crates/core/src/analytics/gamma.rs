//! The extrapolated product γ(z, β) = Π_{k≥0} ψ(β + αk) / ψ(β + α(k + z)).

use crate::error::{Error, Result};
use crate::laws::ReproductionLaw;
use crate::quadrature::Quadrature;
use num_complex::Complex64;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GammaExtrapolation {
    pub z: Complex64,
    pub beta: Complex64,
    pub value: Complex64,
    /// Number of factors multiplied explicitly.
    pub truncation_k: usize,
    /// Magnitude of the log-tail added for the factors k ≥ K.
    pub tail_estimate: f64,
}

/// γ(n, β) = Π_{k<n} ψ(β + αk).
pub fn gamma_n(law: &ReproductionLaw, alpha: f64, n: u32, beta: Complex64) -> Result<Complex64> {
    let mut acc = Complex64::new(1.0, 0.0);
    for k in 0..n {
        acc *= law.psi(beta + alpha * k as f64)?;
    }
    Ok(acc)
}

const ZERO_PSI: f64 = 1e-13;

struct LogFactors<'a> {
    law: &'a ReproductionLaw,
    alpha: f64,
    beta: Complex64,
    z: Complex64,
}

impl LogFactors<'_> {
    fn g(&self, x: Complex64) -> Result<Complex64> {
        Ok(self.law.psi(self.beta + self.alpha * x)?.ln())
    }

    /// log of the k-th factor, as the principal log of the ratio
    fn f(&self, k: f64) -> Result<Complex64> {
        let num = self.law.psi(self.beta + self.alpha * k)?;
        let den = self.law.psi(self.beta + self.alpha * (k + self.z))?;
        if den.norm() < ZERO_PSI {
            return Err(Error::Pole { at: (self.beta + self.alpha * (k + self.z)).re });
        }
        Ok((num / den).ln())
    }

    /// Σ_{k≥K} f(k) by Euler–Maclaurin:
    /// ∫_K^∞ f = z ∫_0^1 (g(K + sz) - g∞) ds, plus f(K)/2 - f'(K)/12.
    fn tail(&self, k: usize, g_inf: f64, quad: &Quadrature) -> Result<Complex64> {
        let kf = k as f64;
        let mut failure = None;
        let integral = quad.integrate_complex(
            |s| match self.g(Complex64::new(kf, 0.0) + s * self.z) {
                Ok(v) => v - g_inf,
                Err(e) => {
                    failure.get_or_insert(e);
                    Complex64::new(0.0, 0.0)
                }
            },
            0.0,
            1.0,
        );
        if let Some(e) = failure {
            return Err(e);
        }
        let h = 0.25;
        let fd = (self.f(kf + h)? - self.f(kf - h)?) / (2.0 * h);
        Ok(self.z * integral.value + 0.5 * self.f(kf)? - fd / 12.0)
    }
}

/// γ(z, β) for α > 0. The explicit product runs to K, the remaining factors
/// enter through an Euler–Maclaurin estimate of their log-sum, and K doubles
/// until two estimates agree to `tol`.
pub fn gamma_z(law: &ReproductionLaw, alpha: f64, z: Complex64, beta: Complex64, tol: f64) -> Result<GammaExtrapolation> {
    if !(alpha > 0.0) {
        return Err(Error::InvalidConfig("γ(z, β) is defined through α > 0".into()));
    }
    law.check_domain(beta.re)?;
    law.check_domain((beta + alpha * z).re)?;
    let zero = Complex64::new(0.0, 0.0);
    if z == zero {
        return Ok(GammaExtrapolation { z, beta, value: Complex64::new(1.0, 0.0), truncation_k: 0, tail_estimate: 0.0 });
    }
    let at_one = law.atom_mass_at_one();
    let g_inf = (1.0 - at_one).ln();
    let lf = LogFactors { law, alpha, beta, z };
    let quad = Quadrature::with_tol(1e-15, 1e-13);

    let mut head = zero;
    let mut k = 0usize;
    let mut k_target = 32usize.max((4.0 * z.norm()).ceil() as usize);
    let mut prev: Option<Complex64> = None;
    loop {
        while k < k_target {
            let num = law.psi(beta + alpha * k as f64)?;
            if num.norm() < ZERO_PSI {
                // singular β: a vanishing numerator makes the product vanish
                return Ok(GammaExtrapolation { z, beta, value: zero, truncation_k: k, tail_estimate: 0.0 });
            }
            head += lf.f(k as f64)?;
            k += 1;
        }
        let tail = lf.tail(k, g_inf, &quad)?;
        let total = head + tail;
        if let Some(p) = prev {
            if (total - p).norm() <= tol.max(1e-15) {
                return Ok(GammaExtrapolation { z, beta, value: total.exp(), truncation_k: k, tail_estimate: tail.norm() });
            }
        }
        if k_target > 1 << 16 {
            let diff = prev.map_or(f64::INFINITY, |p| (total - p).norm());
            return Err(Error::RootFindingFailure(format!("γ tail did not settle; last change {diff:e} at K = {k}")));
        }
        prev = Some(total);
        k_target *= 2;
    }
}
