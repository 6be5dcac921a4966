//! Independent solver for ∂_t m(t, β) = -m(t, β) + ∫ m(x^α t, β) x^β σ(dx), m(0, β) = 1.
//!
//! Since x^α t ≤ t the right side only looks back in time. Each step is a
//! three-stage Lobatto IIIA (Simpson) collocation iterated to a fixed point;
//! the history is a cubic Hermite interpolant through the stored values and
//! slopes, the slopes being known exactly from the equation.

use crate::error::{Error, Result};
use crate::laws::ReproductionLaw;
use crate::quadrature::Quadrature;
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntegroSolution {
    pub step: f64,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub slopes: Vec<f64>,
}

fn hermite(h: f64, t: f64, values: &[f64], slopes: &[f64]) -> f64 {
    let last = values.len() - 1;
    let i = ((t / h).floor() as usize).min(last.saturating_sub(1));
    if last == 0 {
        return values[0];
    }
    let s = (t - i as f64 * h) / h;
    let (y0, y1, d0, d1) = (values[i], values[i + 1], slopes[i] * h, slopes[i + 1] * h);
    let s2 = s * s;
    let s3 = s2 * s;
    (2.0 * s3 - 3.0 * s2 + 1.0) * y0 + (s3 - 2.0 * s2 + s) * d0 + (-2.0 * s3 + 3.0 * s2) * y1 + (s3 - s2) * d1
}

impl IntegroSolution {
    /// Interpolated m(t, β) for t within the solved range.
    pub fn value_at(&self, t: f64) -> f64 {
        hermite(self.step, t.clamp(0.0, *self.times.last().unwrap()), &self.values, &self.slopes)
    }
}

/// Solve on [0, t_max] with step close to `h` (adjusted to divide t_max).
pub fn m_integro(law: &ReproductionLaw, alpha: f64, t_max: f64, beta: f64, h: f64) -> Result<IntegroSolution> {
    law.check_domain(beta)?;
    if !(alpha >= 0.0 && t_max >= 0.0 && h > 0.0) {
        return Err(Error::InvalidConfig("need α ≥ 0, t_max ≥ 0 and h > 0".into()));
    }
    let m = law.measure();
    if m.power_terms.is_empty() && m.atoms.is_empty() && m.densities.is_empty() {
        return Err(Error::UnsupportedRepresentation);
    }
    let n_steps = ((t_max / h).ceil() as usize).max(1);
    let h = t_max / n_steps as f64;
    let quad = Quadrature::with_tol(1e-14, 1e-10);
    let psi0 = law.psi_real(beta)?;

    let mut values = vec![1.0];
    let mut slopes = vec![-psi0];
    if t_max == 0.0 {
        return Ok(IntegroSolution { step: 0.0, times: vec![0.0], values, slopes });
    }
    // ∫ m(x^α τ) x^β σ(dx) using the interpolant on [0, τ]
    let lookback = |tau: f64, values: &[f64], slopes: &[f64]| -> f64 {
        m.integrate_against(beta, |x| hermite(h, x.powf(alpha) * tau, values, slopes), &quad)
    };

    for n in 0..n_steps {
        let t0 = n as f64 * h;
        let (m0, f0) = (values[n], slopes[n]);
        values.push(m0 + h * f0);
        slopes.push(f0);
        let mut f_mid = f0;
        for iter in 0..50 {
            let m1 = values[n + 1];
            let f1 = slopes[n + 1];
            let m_mid = m0 + h / 24.0 * (5.0 * f0 + 8.0 * f_mid - f1);
            f_mid = -m_mid + lookback(t0 + 0.5 * h, &values, &slopes);
            let f1_new = -m1 + lookback(t0 + h, &values, &slopes);
            let m1_new = m0 + h / 6.0 * (f0 + 4.0 * f_mid + f1_new);
            values[n + 1] = m1_new;
            slopes[n + 1] = f1_new;
            let change = (m1_new - m1).abs() + h * (f1_new - f1).abs();
            if iter > 0 && change <= 1e-15 * m1_new.abs().max(1e-300) {
                break;
            }
        }
    }
    let times = (0..=n_steps).map(|i| i as f64 * h).collect();
    Ok(IntegroSolution { step: h, times, values, slopes })
}
