//! Structural measures σ on ]0,1] and their Mellin transforms φ.
//!
//! Every law in the crate is reduced to a sum of three kinds of pieces:
//! power densities `λ x^{θ-1} dx` (optionally restricted to `[lower, 1]`),
//! point masses, and a small set of densities whose transforms need
//! quadrature or special functions. Power terms and atoms admit exact
//! transforms in any precision; the rest are evaluated in `f64`.

use crate::error::{Error, Result};
use crate::mp::MpComplex;
use crate::quadrature::Quadrature;
use crate::special::ln_gamma;
use num_complex::Complex64;
use rug::Float;
use serde::{Deserialize, Serialize};

/// `λ x^{θ-1} dx` on `[lower, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerTerm {
    pub lambda: f64,
    pub theta: f64,
    #[serde(default)]
    pub lower: f64,
}

impl PowerTerm {
    pub fn new(lambda: f64, theta: f64) -> Self {
        Self { lambda, theta, lower: 0.0 }
    }

    pub fn truncated(lambda: f64, theta: f64, lower: f64) -> Self {
        Self { lambda, theta, lower }
    }

    pub fn abscissa(&self) -> f64 {
        if self.lambda == 0.0 || self.lower > 0.0 {
            f64::NEG_INFINITY
        } else {
            -self.theta
        }
    }

    pub fn mellin(&self, beta: Complex64) -> Complex64 {
        let s = beta + self.theta;
        if self.lower == 0.0 {
            return self.lambda / s;
        }
        let ln_lower = self.lower.ln();
        if s.norm() < 1e-12 {
            // limit s → 0 of (1 - lower^s)/s, two terms
            return self.lambda * (-ln_lower) * (1.0 + 0.5 * s * ln_lower);
        }
        self.lambda * (1.0 - (s * ln_lower).exp()) / s
    }

    pub fn mellin_derivative(&self, beta: f64) -> f64 {
        let s = beta + self.theta;
        if self.lower == 0.0 {
            return -self.lambda / (s * s);
        }
        let l = self.lower.ln();
        if s.abs() < 1e-8 {
            return self.lambda * (-0.5 * l * l);
        }
        let e = (s * l).exp();
        self.lambda * (-l * e * s - (1.0 - e)) / (s * s)
    }

    fn mellin_mp(&self, beta: &MpComplex) -> MpComplex {
        let p = beta.prec();
        let s = beta.add_real(&Float::with_val(p, self.theta));
        let lam = MpComplex::real(Float::with_val(p, self.lambda));
        if self.lower == 0.0 {
            return lam.div(&s);
        }
        let ln_lower = Float::with_val(p, self.lower).ln();
        let pow = s.real_base_pow(&ln_lower);
        let one = MpComplex::from_f64(p, 1.0, 0.0);
        (&lam * &(&one - &pow)).div(&s)
    }
}

/// A point mass of `mass` at `location`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub location: f64,
    pub mass: f64,
}

/// Densities without an exact finite-precision-free transform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Density {
    /// `weight · x^{a-1}(1-x)^{b-1} / B(a,b)`
    Beta { weight: f64, a: f64, b: f64 },
    /// `c · 1{x<1/2} x^{-3/2} (ln x)^{-2}`: finite at its abscissa 1/2.
    LogSquaredPower { c: f64 },
}

impl Density {
    pub fn abscissa(&self) -> (f64, bool) {
        match *self {
            Density::Beta { a, .. } => (-a, false),
            Density::LogSquaredPower { .. } => (0.5, true),
        }
    }

    fn mellin(&self, beta: Complex64, quad: &Quadrature) -> Complex64 {
        match *self {
            Density::Beta { weight, a, b } => {
                let ab = Complex64::new(a + b, 0.0);
                let la = ln_gamma(beta + a) + ln_gamma(ab)
                    - ln_gamma(Complex64::new(a, 0.0))
                    - ln_gamma(beta + a + b);
                weight * la.exp()
            }
            Density::LogSquaredPower { c } => {
                // u = -ln x, then u = ln2 / v:  φ = c/ln2 ∫_0^1 exp(-(β-1/2) ln2 / v) dv
                let ln2 = std::f64::consts::LN_2;
                let s = beta - 0.5;
                let r = quad.integrate_complex(
                    |v| if v <= 0.0 { Complex64::new(0.0, 0.0) } else { (-s * ln2 / v).exp() },
                    0.0,
                    1.0,
                );
                c / ln2 * r.value
            }
        }
    }

    fn density(&self, x: f64) -> f64 {
        match *self {
            Density::Beta { weight, a, b } => {
                if x <= 0.0 || x >= 1.0 {
                    return 0.0;
                }
                let lb = ln_gamma(Complex64::new(a, 0.0)).re + ln_gamma(Complex64::new(b, 0.0)).re
                    - ln_gamma(Complex64::new(a + b, 0.0)).re;
                weight * ((a - 1.0) * x.ln() + (b - 1.0) * (1.0 - x).ln() - lb).exp()
            }
            Density::LogSquaredPower { c } => {
                if x <= 0.0 || x >= 0.5 {
                    return 0.0;
                }
                let l = x.ln();
                c * x.powf(-1.5) / (l * l)
            }
        }
    }
}

/// Abscissa of convergence of φ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Abscissa {
    pub value: f64,
    /// φ is finite at `value` itself.
    pub closed: bool,
    /// Probing interval when the abscissa was located numerically.
    pub estimated: Option<(f64, f64)>,
}

impl Abscissa {
    pub fn admits(&self, re_beta: f64) -> bool {
        if self.value == f64::NEG_INFINITY {
            return re_beta.is_finite();
        }
        re_beta > self.value || (self.closed && re_beta == self.value)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct StructuralMeasure {
    pub power_terms: Vec<PowerTerm>,
    pub atoms: Vec<Atom>,
    pub densities: Vec<Density>,
}

impl StructuralMeasure {
    pub fn power(terms: Vec<PowerTerm>) -> Self {
        Self { power_terms: terms, ..Self::default() }
    }

    pub fn add(mut self, other: StructuralMeasure) -> Self {
        self.power_terms.extend(other.power_terms);
        self.atoms.extend(other.atoms);
        self.densities.extend(other.densities);
        self
    }

    /// Abscissa implied by the components.
    pub fn analytic_abscissa(&self) -> Abscissa {
        let mut value = f64::NEG_INFINITY;
        let mut closed = true;
        for t in &self.power_terms {
            let a = t.abscissa();
            if a > value {
                value = a;
                closed = false;
            } else if a == value && a.is_finite() {
                closed = false;
            }
        }
        for d in &self.densities {
            let (a, c) = d.abscissa();
            if a > value {
                value = a;
                closed = c;
            } else if a == value {
                closed &= c;
            }
        }
        Abscissa { value, closed: closed && value.is_finite(), estimated: None }
    }

    pub fn has_exact_transform(&self) -> bool {
        self.densities.is_empty()
    }

    pub fn mass_at_one(&self) -> f64 {
        self.atoms.iter().filter(|a| a.location == 1.0).map(|a| a.mass).sum()
    }

    /// φ(β) without a domain check.
    pub fn mellin(&self, beta: Complex64, quad: &Quadrature) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for t in &self.power_terms {
            acc += t.mellin(beta);
        }
        for a in &self.atoms {
            if a.location > 0.0 {
                acc += a.mass * (beta * a.location.ln()).exp();
            }
        }
        for d in &self.densities {
            acc += d.mellin(beta, quad);
        }
        acc
    }

    /// φ(β) in MPFR precision; `None` when a component lacks an exact transform.
    pub fn mellin_mp(&self, beta: &MpComplex) -> Option<MpComplex> {
        if !self.has_exact_transform() {
            return None;
        }
        let p = beta.prec();
        let mut acc = MpComplex::zero(p);
        for t in &self.power_terms {
            acc = &acc + &t.mellin_mp(beta);
        }
        for a in &self.atoms {
            if a.location > 0.0 {
                let ln_x = Float::with_val(p, a.location).ln();
                let term = beta.real_base_pow(&ln_x).scale(&Float::with_val(p, a.mass));
                acc = &acc + &term;
            }
        }
        Some(acc)
    }

    /// dφ/dβ on the real axis, when every component has an exact derivative.
    pub fn mellin_derivative(&self, beta: f64) -> Option<f64> {
        if !self.has_exact_transform() {
            return None;
        }
        let mut acc = 0.0;
        for t in &self.power_terms {
            acc += t.mellin_derivative(beta);
        }
        for a in &self.atoms {
            if a.location > 0.0 && a.location < 1.0 {
                let l = a.location.ln();
                acc += a.mass * l * (beta * l).exp();
            }
        }
        Some(acc)
    }

    /// `∫ g(x) x^β σ(dx)` for real β inside the domain. Power terms are
    /// integrated after the substitution `y = x^{β+θ}`, which removes the
    /// endpoint singularity at 0.
    pub fn integrate_against<G: Fn(f64) -> f64>(&self, beta: f64, g: G, quad: &Quadrature) -> f64 {
        let mut acc = 0.0;
        for t in &self.power_terms {
            let s = beta + t.theta;
            let y0 = if t.lower > 0.0 { t.lower.powf(s) } else { 0.0 };
            let inv = 1.0 / s;
            let r = quad.integrate(|y| if y <= 0.0 { g(0.0) } else { g(y.powf(inv)) }, y0, 1.0);
            acc += t.lambda * inv * r.value;
        }
        for a in &self.atoms {
            if a.location > 0.0 {
                acc += a.mass * a.location.powf(beta) * g(a.location);
            }
        }
        for d in &self.densities {
            match *d {
                Density::LogSquaredPower { c } => {
                    // same substitution as for φ: x = exp(-ln2/v)
                    let ln2 = std::f64::consts::LN_2;
                    let s = beta - 0.5;
                    let r = quad.integrate(
                        |v| {
                            if v <= 0.0 {
                                0.0
                            } else {
                                let u = ln2 / v;
                                (-s * u).exp() * g((-u).exp())
                            }
                        },
                        0.0,
                        1.0,
                    );
                    acc += c / ln2 * r.value;
                }
                Density::Beta { a, .. } => {
                    let s = beta + a;
                    let inv = 1.0 / s;
                    // x = y^{1/s}: x^{β} f(x) dx = (1/s) x^{β+1-s} f(x) dy with f the Beta density
                    let r = quad.integrate(
                        |y| {
                            if y <= 0.0 || y >= 1.0 {
                                return 0.0;
                            }
                            let x = y.powf(inv);
                            let w = d.density(x) * x.powf(beta + 1.0 - s);
                            w * g(x)
                        },
                        0.0,
                        1.0,
                    );
                    acc += inv * r.value;
                }
            }
        }
        acc
    }

    /// `∫_{[lo,hi[} x^β σ(dx)` for real β, computed without analytic
    /// continuation so that it stays meaningful left of the abscissa.
    pub fn band_mellin(&self, beta: f64, lo: f64, hi: f64, quad: &Quadrature) -> f64 {
        let mut acc = 0.0;
        for t in &self.power_terms {
            let a = lo.max(t.lower);
            if a >= hi {
                continue;
            }
            let s = beta + t.theta;
            let log_ratio = (a / hi).ln();
            // (hi^s - a^s)/s = -hi^s expm1(s ln(a/hi)) / s
            let v = if s.abs() < 1e-14 { -log_ratio } else { -hi.powf(s) * (s * log_ratio).exp_m1() / s };
            acc += t.lambda * v;
        }
        for a in &self.atoms {
            if a.location >= lo && a.location < hi {
                acc += a.mass * a.location.powf(beta);
            }
        }
        for d in &self.densities {
            // x = e^{-u}
            let r = quad.integrate(
                |u| {
                    let x = (-u).exp();
                    d.density(x) * (-(beta + 1.0) * u).exp()
                },
                -hi.ln(),
                -lo.ln(),
            );
            acc += r.value;
        }
        acc
    }

    /// Locate the abscissa by probing the decay of `∫ x^β σ(dx)` over the
    /// bands `[e^{-(k+1)L}, e^{-kL}[` deep near zero: the integral converges
    /// iff consecutive band contributions shrink. Returns a bracketing
    /// interval `(lo, hi)` of width below 1e-6.
    pub fn probe_abscissa(&self, quad: &Quadrature) -> Result<(f64, f64)> {
        const L: f64 = 69.077_552_789_821_37; // ln 1e30
        let band = |beta: f64, k: f64| self.band_mellin(beta, (-(k + 1.0) * L).exp(), (-k * L).exp(), quad);
        let diverges = |beta: f64| -> bool {
            let d1 = band(beta, 8.0);
            let d2 = band(beta, 9.0);
            if d1 == 0.0 && d2 == 0.0 {
                return false;
            }
            !(d1.is_finite() && d2.is_finite()) || d2 >= d1
        };
        let mut hi = 1.0;
        let mut k = 0;
        while diverges(hi) {
            hi += 2f64.powi(k);
            k += 1;
            if k > 40 {
                return Err(Error::InvalidLaw("φ diverges at every probed β".into()));
            }
        }
        let mut lo = hi - 1.0;
        k = 0;
        while !diverges(lo) {
            lo -= 2f64.powi(k);
            k += 1;
            if k > 12 {
                return Ok((f64::NEG_INFINITY, f64::NEG_INFINITY));
            }
        }
        while hi - lo > 1e-7 {
            let mid = 0.5 * (lo + hi);
            if diverges(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok((lo, hi))
    }
}
