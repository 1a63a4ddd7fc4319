//! Scalar precision layer.
//!
//! Every closed-form field in this crate is written once, generic over [`Real`],
//! and evaluated either in plain `f64` or in double-double ([`Dd`], about 32
//! significant digits). Finite-difference stencils with `h = 1e-3` lose nine
//! digits to cancellation on third derivatives, so the stencil paths sample in
//! [`Dd`] and round the derivative back to `f64` at the end.

use std::cmp::Ordering;
use std::fmt;
use std::num::ParseFloatError;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Rem, Sub, SubAssign};

use num_complex::Complex;
use num_traits::{Num, One, Zero};

/// Real scalar type a field can be evaluated in.
pub trait Real: Copy + Send + Sync + fmt::Debug + PartialOrd + Num + Neg<Output = Self> + 'static {
    fn from_f64(v: f64) -> Self;
    fn to_f64(self) -> f64;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn sqrt(self) -> Self;
    fn abs(self) -> Self;
    fn atan2(self, x: Self) -> Self;
    fn is_finite(self) -> bool;

    fn from_i64(v: i64) -> Self {
        Self::from_f64(v as f64)
    }
}

impl Real for f64 {
    fn from_f64(v: f64) -> Self {
        v
    }
    fn to_f64(self) -> f64 {
        self
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn abs(self) -> Self {
        f64::abs(self)
    }
    fn atan2(self, x: Self) -> Self {
        f64::atan2(self, x)
    }
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
}

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi) / 2`.
#[derive(Clone, Copy, Default, PartialEq)]
pub struct Dd {
    hi: f64,
    lo: f64,
}

const PI: Dd = Dd::from_parts(std::f64::consts::PI, 1.2246467991473532e-16);
const TWO_PI: Dd = Dd::from_parts(std::f64::consts::TAU, 2.4492935982947064e-16);
const HALF_PI: Dd = Dd::from_parts(std::f64::consts::FRAC_PI_2, 6.123233995736766e-17);
const LN_2: Dd = Dd::from_parts(std::f64::consts::LN_2, 2.3190468138462996e-17);

// exp argument reduction: r / 2^EXP_HALVINGS, then square back up
const EXP_HALVINGS: i32 = 10;
const SERIES_EPS: f64 = 1e-34;

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    pub const fn from_parts(hi: f64, lo: f64) -> Self {
        Dd { hi, lo }
    }

    #[inline]
    fn norm(hi: f64, lo: f64) -> Self {
        if !hi.is_finite() {
            return Dd { hi, lo: 0.0 };
        }
        let (hi, lo) = quick_two_sum(hi, lo);
        Dd { hi, lo }
    }

    pub fn hi(self) -> f64 {
        self.hi
    }

    pub fn lo(self) -> f64 {
        self.lo
    }

    #[inline]
    fn mul_f64(self, b: f64) -> Self {
        let (p1, p2) = two_prod(self.hi, b);
        Dd::norm(p1, p2 + self.lo * b)
    }

    #[inline]
    fn scale_pow2(self, k: i32) -> Self {
        // exact for |k| within the exponent range; split to avoid overflowing 2^k itself
        let mut out = self;
        let mut k = k;
        while k > 1000 {
            out = Dd::from_parts(out.hi * 2f64.powi(1000), out.lo * 2f64.powi(1000));
            k -= 1000;
        }
        while k < -1000 {
            out = Dd::from_parts(out.hi * 2f64.powi(-1000), out.lo * 2f64.powi(-1000));
            k += 1000;
        }
        let f = 2f64.powi(k);
        Dd::from_parts(out.hi * f, out.lo * f)
    }

    fn round(self) -> Self {
        let hi = self.hi.round();
        if hi == self.hi {
            // hi already integral: lo decides
            let lo = self.lo.round();
            Dd::norm(hi, lo)
        } else if (hi - self.hi).abs() == 0.5 {
            // tie on hi; lo breaks it
            let lo_adj = if self.lo < 0.0 && hi > self.hi {
                -1.0
            } else if self.lo > 0.0 && hi < self.hi {
                1.0
            } else {
                0.0
            };
            Dd::from(hi + lo_adj)
        } else {
            Dd::from(hi)
        }
    }

    fn trunc(self) -> Self {
        let hi = self.hi.trunc();
        if hi == self.hi {
            Dd::norm(hi, self.lo.trunc())
        } else {
            Dd::from(hi)
        }
    }

    fn expm1_reduced(r: Dd) -> Dd {
        let mut sum = r;
        let mut term = r;
        for i in 2..40 {
            term = term * r / Dd::from(i as f64);
            sum += term;
            if term.hi.abs() <= SERIES_EPS * sum.hi.abs() {
                break;
            }
        }
        sum
    }

    fn sin_cos_reduced(t: Dd) -> (Dd, Dd) {
        let t2 = t * t;
        let mut sin = t;
        let mut term = t;
        let mut k = 1.0;
        loop {
            term = -term * t2 / Dd::from((k + 1.0) * (k + 2.0));
            sin += term;
            k += 2.0;
            if term.hi.abs() <= SERIES_EPS || k > 60.0 {
                break;
            }
        }
        let mut cos = Dd::one();
        let mut term = Dd::one();
        let mut k = 0.0;
        loop {
            term = -term * t2 / Dd::from((k + 1.0) * (k + 2.0));
            cos += term;
            k += 2.0;
            if term.hi.abs() <= SERIES_EPS || k > 60.0 {
                break;
            }
        }
        (sin, cos)
    }

    fn sin_cos(self) -> (Dd, Dd) {
        if !self.hi.is_finite() {
            return (Dd::from(f64::NAN), Dd::from(f64::NAN));
        }
        let k = (self / TWO_PI).round();
        let r = self - TWO_PI * k;
        let j = (r / HALF_PI).round();
        let t = r - HALF_PI * j;
        let (s, c) = Dd::sin_cos_reduced(t);
        match (j.hi as i64).rem_euclid(4) {
            0 => (s, c),
            1 => (c, -s),
            2 => (-s, -c),
            _ => (-c, s),
        }
    }
}

impl From<f64> for Dd {
    fn from(v: f64) -> Self {
        Dd { hi: v, lo: 0.0 }
    }
}

impl fmt::Debug for Dd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Dd({:e} + {:e})", self.hi, self.lo)
    }
}

impl fmt::Display for Dd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&(self.hi + self.lo), f)
    }
}

impl PartialOrd for Dd {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match self.hi.partial_cmp(&other.hi) {
            Some(Ordering::Equal) => self.lo.partial_cmp(&other.lo),
            ord => ord,
        }
    }
}

impl Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd::from_parts(-self.hi, -self.lo)
    }
}

impl Add for Dd {
    type Output = Dd;
    #[inline]
    fn add(self, b: Dd) -> Dd {
        let (s1, s2) = two_sum(self.hi, b.hi);
        if !s1.is_finite() {
            return Dd::from(s1);
        }
        let (t1, t2) = two_sum(self.lo, b.lo);
        let (s1, s2) = quick_two_sum(s1, s2 + t1);
        Dd::norm(s1, s2 + t2)
    }
}

impl Sub for Dd {
    type Output = Dd;
    #[inline]
    fn sub(self, b: Dd) -> Dd {
        self + (-b)
    }
}

impl Mul for Dd {
    type Output = Dd;
    #[inline]
    fn mul(self, b: Dd) -> Dd {
        let (p1, p2) = two_prod(self.hi, b.hi);
        Dd::norm(p1, p2 + (self.hi * b.lo + self.lo * b.hi))
    }
}

impl Div for Dd {
    type Output = Dd;
    #[inline]
    fn div(self, b: Dd) -> Dd {
        let q1 = self.hi / b.hi;
        if !q1.is_finite() {
            return Dd::from(q1);
        }
        let r = self - b.mul_f64(q1);
        let q2 = r.hi / b.hi;
        let r = r - b.mul_f64(q2);
        let q3 = r.hi / b.hi;
        let (q1, q2) = quick_two_sum(q1, q2);
        Dd::from_parts(q1, q2) + Dd::from(q3)
    }
}

impl Rem for Dd {
    type Output = Dd;
    fn rem(self, b: Dd) -> Dd {
        self - b * (self / b).trunc()
    }
}

impl AddAssign for Dd {
    fn add_assign(&mut self, b: Dd) {
        *self = *self + b;
    }
}

impl SubAssign for Dd {
    fn sub_assign(&mut self, b: Dd) {
        *self = *self - b;
    }
}

impl MulAssign for Dd {
    fn mul_assign(&mut self, b: Dd) {
        *self = *self * b;
    }
}

impl Zero for Dd {
    fn zero() -> Self {
        Dd::from(0.0)
    }
    fn is_zero(&self) -> bool {
        self.hi == 0.0
    }
}

impl One for Dd {
    fn one() -> Self {
        Dd::from(1.0)
    }
}

impl Num for Dd {
    type FromStrRadixErr = ParseFloatError;
    fn from_str_radix(s: &str, _radix: u32) -> Result<Self, Self::FromStrRadixErr> {
        s.parse::<f64>().map(Dd::from)
    }
}

impl Real for Dd {
    fn from_f64(v: f64) -> Self {
        Dd::from(v)
    }

    fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    fn exp(self) -> Self {
        if self.hi > 709.79 {
            return Dd::from(f64::INFINITY);
        }
        if self.hi < -745.2 {
            return Dd::zero();
        }
        if self.hi.is_nan() {
            return self;
        }
        let k = (self.hi / LN_2.hi).round();
        let r = (self - LN_2 * Dd::from(k)).scale_pow2(-EXP_HALVINGS);
        let mut s = Dd::expm1_reduced(r);
        for _ in 0..EXP_HALVINGS {
            s = s.mul_f64(2.0) + s * s;
        }
        (s + Dd::one()).scale_pow2(k as i32)
    }

    fn ln(self) -> Self {
        if self.hi <= 0.0 || self.hi.is_nan() {
            return Dd::from(if self.hi == 0.0 { f64::NEG_INFINITY } else { f64::NAN });
        }
        if self.hi.is_infinite() {
            return self;
        }
        // one Newton step on exp(x) = a doubles the f64 seed's precision
        let x = Dd::from(self.hi.ln());
        x + self * (-x).exp() - Dd::one()
    }

    fn sin(self) -> Self {
        self.sin_cos().0
    }

    fn cos(self) -> Self {
        self.sin_cos().1
    }

    fn sqrt(self) -> Self {
        if self.hi <= 0.0 {
            return Dd::from(if self.hi == 0.0 { 0.0 } else { f64::NAN });
        }
        let x = self.hi.sqrt();
        let s = Dd::from(x);
        s + (self - s * s) / Dd::from(2.0 * x)
    }

    fn abs(self) -> Self {
        if self.hi < 0.0 {
            -self
        } else {
            self
        }
    }

    fn atan2(self, x: Self) -> Self {
        let theta = self.hi.atan2(x.hi);
        if !theta.is_finite() || (self.hi == 0.0 && x.hi == 0.0) {
            return Dd::from(theta);
        }
        let t = Dd::from(theta);
        let (s, c) = t.sin_cos();
        // tan of the residual angle; cubic error is below double-double resolution
        let delta = (self * c - x * s) / (x * c + self * s);
        t + delta
    }

    fn is_finite(self) -> bool {
        self.hi.is_finite() && self.lo.is_finite()
    }
}

impl Dd {
    pub fn pi() -> Self {
        PI
    }
}

/// Complex elementary functions over any [`Real`].
pub mod cx {
    use super::Real;
    use num_complex::Complex;
    use num_traits::One;

    pub fn re<T: Real>(v: f64) -> Complex<T> {
        Complex::new(T::from_f64(v), T::zero())
    }

    pub fn lift<T: Real>(z: Complex<f64>) -> Complex<T> {
        Complex::new(T::from_f64(z.re), T::from_f64(z.im))
    }

    pub fn lower<T: Real>(z: Complex<T>) -> Complex<f64> {
        Complex::new(z.re.to_f64(), z.im.to_f64())
    }

    pub fn is_finite<T: Real>(z: Complex<T>) -> bool {
        z.re.is_finite() && z.im.is_finite()
    }

    pub fn abs<T: Real>(z: Complex<T>) -> T {
        let a = z.re.abs();
        let b = z.im.abs();
        let (big, small) = if a >= b { (a, b) } else { (b, a) };
        if big.is_zero() {
            return big;
        }
        let r = small / big;
        big * (T::one() + r * r).sqrt()
    }

    pub fn exp<T: Real>(z: Complex<T>) -> Complex<T> {
        let m = z.re.exp();
        if z.im.is_zero() {
            return Complex::new(m, T::zero());
        }
        Complex::new(m * z.im.cos(), m * z.im.sin())
    }

    /// Principal branch.
    pub fn ln<T: Real>(z: Complex<T>) -> Complex<T> {
        if z.im.is_zero() && z.re > T::zero() {
            return Complex::new(z.re.ln(), T::zero());
        }
        Complex::new(abs(z).ln(), z.im.atan2(z.re))
    }

    /// `z^w` on the principal branch of `ln z`.
    pub fn pow<T: Real>(z: Complex<T>, w: Complex<T>) -> Complex<T> {
        exp(w * ln(z))
    }

    pub fn powi<T: Real>(z: Complex<T>, n: i64) -> Complex<T> {
        let mut base = if n < 0 { Complex::<T>::one() / z } else { z };
        let mut k = n.unsigned_abs();
        let mut acc = Complex::<T>::one();
        while k > 0 {
            if k & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            k >>= 1;
        }
        acc
    }

    pub fn cosh<T: Real>(z: Complex<T>) -> Complex<T> {
        let half = T::from_f64(0.5);
        (exp(z) + exp(-z)) * half
    }

    /// `sech²(z)` without overflow for large `|Re z|`.
    ///
    /// Returns the denominator `(1 + e^{-2|z|})²` alongside so callers can
    /// detect the complex poles of `sech`.
    pub fn sech2<T: Real>(z: Complex<T>) -> (Complex<T>, Complex<T>) {
        let s = if z.re >= T::zero() { -z } else { z };
        let two = T::from_f64(2.0);
        let e = exp(s * two);
        let den = (Complex::<T>::one() + e) * (Complex::<T>::one() + e);
        (e * T::from_f64(4.0) / den, den)
    }
}

/// Convenience alias for the complex scalar at precision `T`.
pub type C<T> = Complex<T>;
