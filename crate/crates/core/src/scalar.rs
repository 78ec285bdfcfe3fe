//! Complex arithmetic backends.
//!
//! Every numeric routine in the crate is generic over [`Scalar`]. Two
//! backends ship: `Complex64` (hardware double) and [`Mp`], an
//! arbitrary-precision complex number built on MPC.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_complex::Complex64;
use rug::float::Constant;
use rug::{Complex, Float};

/// A complex field element with the handful of transcendental operations the
/// q-series need.
pub trait Scalar:
    Clone
    + fmt::Debug
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + for<'a> Add<&'a Self, Output = Self>
    + for<'a> Sub<&'a Self, Output = Self>
    + for<'a> Mul<&'a Self, Output = Self>
    + for<'a> Div<&'a Self, Output = Self>
{
    /// Construction context (working precision).
    type Ctx: Copy + fmt::Debug + PartialEq + Send + Sync;

    fn ctx(&self) -> Self::Ctx;
    fn from_c64(ctx: Self::Ctx, z: Complex64) -> Self;
    /// Exact `num/den`, rounded once to the working precision.
    fn from_ratio(ctx: Self::Ctx, num: i64, den: i64) -> Self;
    fn pi(ctx: Self::Ctx) -> Self;
    /// Unit roundoff of the backend.
    fn epsilon(ctx: Self::Ctx) -> f64;
    /// `ln` of [`Scalar::epsilon`], finite even where the epsilon underflows.
    fn ln_epsilon(ctx: Self::Ctx) -> f64;
    /// Highest recursion level trusted by default at this precision.
    fn level_cap(ctx: Self::Ctx) -> usize;

    fn to_c64(&self) -> Complex64;
    fn norm(&self) -> f64;
    /// `ln|z|`; `-inf` at zero. Never underflows.
    fn ln_norm(&self) -> f64;
    fn arg(&self) -> f64;
    fn exp(&self) -> Self;
    /// Principal logarithm.
    fn ln(&self) -> Self;
    /// Principal square root.
    fn sqrt(&self) -> Self;
    fn conj(&self) -> Self;
    /// `self * 2^k`, exact.
    fn mul_pow2(&self, k: i32) -> Self;
    /// Binary exponent of `|z|` (so `|z| < 2^e`), `None` at zero.
    fn exponent(&self) -> Option<i32>;

    fn from_f64(ctx: Self::Ctx, x: f64) -> Self {
        Self::from_c64(ctx, Complex64::new(x, 0.0))
    }

    fn zero(ctx: Self::Ctx) -> Self {
        Self::from_ratio(ctx, 0, 1)
    }

    fn one(ctx: Self::Ctx) -> Self {
        Self::from_ratio(ctx, 1, 1)
    }

    fn i(ctx: Self::Ctx) -> Self {
        Self::from_c64(ctx, Complex64::new(0.0, 1.0))
    }

    fn re(&self) -> f64 {
        self.to_c64().re
    }

    fn im(&self) -> f64 {
        self.to_c64().im
    }

    fn is_zero(&self) -> bool {
        self.exponent().is_none()
    }

    fn scale(&self, k: f64) -> Self {
        self.clone() * Self::from_f64(self.ctx(), k)
    }

    fn powi(&self, k: i64) -> Self {
        let mut base = if k < 0 {
            Self::one(self.ctx()) / self
        } else {
            self.clone()
        };
        let mut e = k.unsigned_abs();
        let mut acc = Self::one(self.ctx());
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * &base;
            }
            e >>= 1;
            if e > 0 {
                base = base.clone() * &base;
            }
        }
        acc
    }

    /// Principal power `z^w`.
    fn powc(&self, w: &Self) -> Self {
        (self.ln() * w).exp()
    }
}

impl Scalar for Complex64 {
    type Ctx = ();

    fn ctx(&self) {}

    fn from_c64(_: (), z: Complex64) -> Self {
        z
    }

    fn from_ratio(_: (), num: i64, den: i64) -> Self {
        Complex64::new(num as f64 / den as f64, 0.0)
    }

    fn pi(_: ()) -> Self {
        Complex64::new(std::f64::consts::PI, 0.0)
    }

    fn epsilon(_: ()) -> f64 {
        f64::EPSILON
    }

    fn ln_epsilon(_: ()) -> f64 {
        f64::EPSILON.ln()
    }

    fn level_cap(_: ()) -> usize {
        8
    }

    fn to_c64(&self) -> Complex64 {
        *self
    }

    fn norm(&self) -> f64 {
        Complex64::norm(*self)
    }

    fn ln_norm(&self) -> f64 {
        Complex64::norm(*self).ln()
    }

    fn arg(&self) -> f64 {
        Complex64::arg(*self)
    }

    fn exp(&self) -> Self {
        Complex64::exp(*self)
    }

    fn ln(&self) -> Self {
        Complex64::ln(*self)
    }

    fn sqrt(&self) -> Self {
        Complex64::sqrt(*self)
    }

    fn conj(&self) -> Self {
        Complex64::conj(self)
    }

    fn mul_pow2(&self, k: i32) -> Self {
        let f = |x: f64| {
            // split so that 2^k itself never overflows
            let mut x = x;
            let mut k = k;
            while k > 1000 {
                x *= 2f64.powi(1000);
                k -= 1000;
            }
            while k < -1000 {
                x *= 2f64.powi(-1000);
                k += 1000;
            }
            x * 2f64.powi(k)
        };
        Complex64::new(f(self.re), f(self.im))
    }

    fn exponent(&self) -> Option<i32> {
        let m = self.re.abs().max(self.im.abs());
        if m == 0.0 || !m.is_finite() {
            return None;
        }
        Some(m.log2().floor() as i32 + 2)
    }
}

/// Arbitrary-precision complex number. All values taking part in one
/// computation share the precision of the first operand.
#[derive(Clone, Debug, PartialEq)]
pub struct Mp(pub Complex);

impl Mp {
    pub fn new(bits: u32, z: Complex64) -> Self {
        Mp(Complex::with_val(bits, (z.re, z.im)))
    }

    pub fn bits(&self) -> u32 {
        self.0.prec().0
    }
}

macro_rules! mp_binop {
    ($tr:ident, $f:ident) => {
        impl $tr for Mp {
            type Output = Mp;
            fn $f(self, rhs: Mp) -> Mp {
                Mp($tr::$f(self.0, rhs.0))
            }
        }
        impl<'a> $tr<&'a Mp> for Mp {
            type Output = Mp;
            fn $f(self, rhs: &'a Mp) -> Mp {
                Mp($tr::$f(self.0, &rhs.0))
            }
        }
    };
}

mp_binop!(Add, add);
mp_binop!(Sub, sub);
mp_binop!(Mul, mul);
mp_binop!(Div, div);

impl Neg for Mp {
    type Output = Mp;
    fn neg(self) -> Mp {
        Mp(-self.0)
    }
}

impl Scalar for Mp {
    /// Working precision in bits.
    type Ctx = u32;

    fn ctx(&self) -> u32 {
        self.bits()
    }

    fn from_c64(bits: u32, z: Complex64) -> Self {
        Mp::new(bits, z)
    }

    fn from_ratio(bits: u32, num: i64, den: i64) -> Self {
        let q = rug::Rational::from((num, den));
        Mp(Complex::with_val(bits, (Float::with_val(bits, &q), 0)))
    }

    fn pi(bits: u32) -> Self {
        Mp(Complex::with_val(bits, (Float::with_val(bits, Constant::Pi), 0)))
    }

    fn epsilon(bits: u32) -> f64 {
        2f64.powi(1 - bits as i32)
    }

    fn ln_epsilon(bits: u32) -> f64 {
        (1.0 - bits as f64) * std::f64::consts::LN_2
    }

    fn level_cap(bits: u32) -> usize {
        // roughly one level per 40 bits beyond double
        8 + (bits.saturating_sub(53) / 40) as usize
    }

    fn to_c64(&self) -> Complex64 {
        Complex64::new(self.0.real().to_f64(), self.0.imag().to_f64())
    }

    fn norm(&self) -> f64 {
        Float::with_val(self.bits(), self.0.abs_ref()).to_f64()
    }

    fn ln_norm(&self) -> f64 {
        Float::with_val(self.bits(), self.0.abs_ref()).ln().to_f64()
    }

    fn arg(&self) -> f64 {
        Float::with_val(self.bits(), self.0.arg_ref()).to_f64()
    }

    fn exp(&self) -> Self {
        Mp(self.0.clone().exp())
    }

    fn ln(&self) -> Self {
        Mp(self.0.clone().ln())
    }

    fn sqrt(&self) -> Self {
        Mp(self.0.clone().sqrt())
    }

    fn conj(&self) -> Self {
        Mp(self.0.clone().conj())
    }

    fn mul_pow2(&self, k: i32) -> Self {
        Mp(self.0.clone() << k)
    }

    fn exponent(&self) -> Option<i32> {
        let er = self.0.real().get_exp();
        let ei = self.0.imag().get_exp();
        match (er, ei) {
            (None, None) => None,
            (a, b) => Some(a.unwrap_or(i32::MIN).max(b.unwrap_or(i32::MIN)) + 1),
        }
    }
}

/// Precision needed to resolve a value of size `|q|^order` next to terms of
/// size one at `Im tau = im_tau`, with `guard` extra bits.
pub fn bits_for_order(im_tau: f64, order: f64, guard: u32) -> u32 {
    let lost = 2.0 * std::f64::consts::PI * im_tau * order / std::f64::consts::LN_2;
    guard + lost.ceil().max(0.0) as u32
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mp_agrees_with_double() {
        let z = Complex64::new(0.3, -1.7);
        let w = Complex64::new(-2.5, 0.25);
        let a = Mp::new(200, z);
        let b = Mp::new(200, w);
        let got = ((a.clone() * &b) / (a.clone() - &b)).exp().to_c64();
        let want = ((z * w) / (z - w)).exp();
        assert!((got - want).norm() < 1e-13 * want.norm());
        assert!((Mp::pi(300).re() - std::f64::consts::PI).abs() < 1e-16);
        let third = Mp::from_ratio(300, 1, 3) * Mp::from_ratio(300, 3, 1) - Mp::one(300);
        assert!(third.norm() < 1e-85);
    }

    #[test]
    fn powi_and_pow2() {
        let z = Complex64::new(1.1, 0.4);
        assert!((z.powi(7) - Complex64::powi(&z, 7)).norm() < 1e-13);
        assert!((z.powi(-3) - Complex64::powi(&z, -3)).norm() < 1e-13);
        assert_eq!(z.mul_pow2(3), z * 8.0);
        let m = Mp::new(128, z);
        assert!((m.mul_pow2(-5).to_c64() - z / 32.0).norm() < 1e-16);
        assert!(Complex64::new(0.0, 0.0).exponent().is_none());
        let e = Complex64::new(5.0, -3.0).exponent().unwrap();
        assert!(5.0 < 2f64.powi(e));
        assert!(Mp::zero(64).is_zero());
        assert!(Mp::new(64, z).exponent().is_some());
    }

    #[test]
    fn tiny_values_keep_their_logarithm() {
        let tiny = Mp::from_f64(256, 1e-300).powi(3);
        let l = tiny.ln_norm();
        assert!((l - (-900.0 * std::f64::consts::LN_10)).abs() < 1e-9);
    }
}
