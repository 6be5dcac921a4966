//! Minimal complex arithmetic over MPFR floats.
//!
//! Only what the alternating power series and the high-precision Mellin
//! transforms need: ring operations, division, and `x^β` for real `x > 0`.

use num_complex::Complex64;
use rug::Float;
use std::ops::{Add, Mul, Sub};

#[derive(Debug, Clone)]
pub struct MpComplex {
    pub re: Float,
    pub im: Float,
}

impl MpComplex {
    pub fn zero(prec: u32) -> Self {
        Self { re: Float::new(prec), im: Float::new(prec) }
    }

    pub fn from_f64(prec: u32, re: f64, im: f64) -> Self {
        Self { re: Float::with_val(prec, re), im: Float::with_val(prec, im) }
    }

    pub fn from_c64(prec: u32, z: Complex64) -> Self {
        Self::from_f64(prec, z.re, z.im)
    }

    pub fn real(x: Float) -> Self {
        let prec = x.prec();
        Self { re: x, im: Float::new(prec) }
    }

    pub fn prec(&self) -> u32 {
        self.re.prec()
    }

    pub fn to_c64(&self) -> Complex64 {
        Complex64::new(self.re.to_f64(), self.im.to_f64())
    }

    pub fn is_real(&self) -> bool {
        self.im.is_zero()
    }

    pub fn abs(&self) -> Float {
        Float::with_val(self.prec(), self.re.hypot_ref(&self.im))
    }

    pub fn scale(&self, s: &Float) -> Self {
        let p = self.prec();
        Self { re: Float::with_val(p, &self.re * s), im: Float::with_val(p, &self.im * s) }
    }

    pub fn add_real(&self, s: &Float) -> Self {
        let p = self.prec();
        Self { re: Float::with_val(p, &self.re + s), im: self.im.clone() }
    }

    pub fn recip(&self) -> Self {
        let p = self.prec();
        let den = Float::with_val(p, self.re.square_ref()) + Float::with_val(p, self.im.square_ref());
        Self {
            re: Float::with_val(p, &self.re / &den),
            im: -Float::with_val(p, &self.im / &den),
        }
    }

    pub fn div(&self, rhs: &MpComplex) -> Self {
        self * &rhs.recip()
    }

    /// `x^self` for real `x > 0`, i.e. `exp(self · ln x)`.
    pub fn real_base_pow(&self, ln_x: &Float) -> Self {
        let p = self.prec();
        let mag = Float::with_val(p, &self.re * ln_x).exp();
        if self.im.is_zero() {
            return Self::real(mag);
        }
        let arg = Float::with_val(p, &self.im * ln_x);
        let (s, c) = arg.sin_cos(Float::new(p));
        Self { re: Float::with_val(p, &mag * &c), im: Float::with_val(p, &mag * &s) }
    }
}

impl<'a> Add<&'a MpComplex> for &'a MpComplex {
    type Output = MpComplex;
    fn add(self, rhs: &MpComplex) -> MpComplex {
        let p = self.prec();
        MpComplex { re: Float::with_val(p, &self.re + &rhs.re), im: Float::with_val(p, &self.im + &rhs.im) }
    }
}

impl<'a> Sub<&'a MpComplex> for &'a MpComplex {
    type Output = MpComplex;
    fn sub(self, rhs: &MpComplex) -> MpComplex {
        let p = self.prec();
        MpComplex { re: Float::with_val(p, &self.re - &rhs.re), im: Float::with_val(p, &self.im - &rhs.im) }
    }
}

impl<'a> Mul<&'a MpComplex> for &'a MpComplex {
    type Output = MpComplex;
    fn mul(self, rhs: &MpComplex) -> MpComplex {
        let p = self.prec();
        if self.im.is_zero() && rhs.im.is_zero() {
            return MpComplex::real(Float::with_val(p, &self.re * &rhs.re));
        }
        let rr = Float::with_val(p, &self.re * &rhs.re);
        let ii = Float::with_val(p, &self.im * &rhs.im);
        let ri = Float::with_val(p, &self.re * &rhs.im);
        let ir = Float::with_val(p, &self.im * &rhs.re);
        MpComplex { re: rr - ii, im: ri + ir }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn division_round_trip() {
        let a = MpComplex::from_f64(200, 1.5, -2.0);
        let b = MpComplex::from_f64(200, 0.25, 3.0);
        let q = a.div(&b);
        let back = &q * &b;
        assert!((back.to_c64() - a.to_c64()).norm() < 1e-15);
    }

    #[test]
    fn real_power_matches_f64() {
        let beta = MpComplex::from_f64(128, 0.7, 1.3);
        let ln_x = Float::with_val(128, 0.3f64.ln());
        let v = beta.real_base_pow(&ln_x).to_c64();
        let expect = (Complex64::new(0.7, 1.3) * 0.3f64.ln()).exp();
        assert!((v - expect).norm() < 1e-14);
    }
}
