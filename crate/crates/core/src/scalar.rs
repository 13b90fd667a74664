//! Truncated Taylor numbers for forward-mode differentiation.
//!
//! A [`Dual<T>`] carries a value and one first-order tangent, `val + eps·ε`
//! with `ε² = 0`. Nesting `Dual<Dual<T>>` gives mixed second derivatives,
//! and so on: every level adds one independent infinitesimal. All geometric
//! code in this crate is written against the [`Scalar`] trait so the same
//! routine can be evaluated on plain `f64` or on any nesting depth of duals.

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

/// Field-like numeric type with the elementary functions used by Finsler
/// functions.
pub trait Scalar:
    Copy
    + Debug
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
{
    fn from_f64(v: f64) -> Self;
    /// Real (lowest-order) part.
    fn re(&self) -> f64;
    /// True when every infinitesimal component is exactly zero.
    fn is_real(&self) -> bool;
    fn all_finite(&self) -> bool;
    fn sqrt(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn powi(self, n: i32) -> Self;
    /// Power with a constant real exponent. Integer exponents go through
    /// [`Scalar::powi`] so negative bases are allowed.
    fn powf(self, c: f64) -> Self;

    fn zero() -> Self {
        Self::from_f64(0.0)
    }
    fn one() -> Self {
        Self::from_f64(1.0)
    }
    /// General power `self^e` for a non-constant exponent.
    fn pow(self, e: Self) -> Self {
        if e.is_real() && e.re().fract() == 0.0 && e.re().abs() < i32::MAX as f64 {
            return self.powi(e.re() as i32);
        }
        (e * self.ln()).exp()
    }
}

impl Scalar for f64 {
    #[inline]
    fn from_f64(v: f64) -> Self {
        v
    }
    #[inline]
    fn re(&self) -> f64 {
        *self
    }
    #[inline]
    fn is_real(&self) -> bool {
        true
    }
    #[inline]
    fn all_finite(&self) -> bool {
        self.is_finite()
    }
    #[inline]
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    #[inline]
    fn sin(self) -> Self {
        f64::sin(self)
    }
    #[inline]
    fn cos(self) -> Self {
        f64::cos(self)
    }
    #[inline]
    fn exp(self) -> Self {
        f64::exp(self)
    }
    #[inline]
    fn ln(self) -> Self {
        f64::ln(self)
    }
    #[inline]
    fn powi(self, n: i32) -> Self {
        f64::powi(self, n)
    }
    #[inline]
    fn powf(self, c: f64) -> Self {
        if c.fract() == 0.0 && c.abs() < i32::MAX as f64 {
            f64::powi(self, c as i32)
        } else {
            f64::powf(self, c)
        }
    }
}

/// First-order truncated Taylor number `val + eps·ε`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual<T> {
    pub val: T,
    pub eps: T,
}

impl<T: Scalar> Dual<T> {
    pub fn new(val: T, eps: T) -> Self {
        Dual { val, eps }
    }

    /// A constant: zero tangent.
    pub fn constant(val: T) -> Self {
        Dual {
            val,
            eps: T::zero(),
        }
    }

    /// An independent variable seeded with unit tangent.
    pub fn variable(val: T) -> Self {
        Dual { val, eps: T::one() }
    }
}

impl<T: Scalar> Add for Dual<T> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Dual::new(self.val + o.val, self.eps + o.eps)
    }
}

impl<T: Scalar> Sub for Dual<T> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Dual::new(self.val - o.val, self.eps - o.eps)
    }
}

impl<T: Scalar> Mul for Dual<T> {
    type Output = Self;
    #[inline]
    fn mul(self, o: Self) -> Self {
        Dual::new(self.val * o.val, self.val * o.eps + self.eps * o.val)
    }
}

impl<T: Scalar> Div for Dual<T> {
    type Output = Self;
    #[inline]
    fn div(self, o: Self) -> Self {
        let q = self.val / o.val;
        Dual::new(q, (self.eps - q * o.eps) / o.val)
    }
}

impl<T: Scalar> Neg for Dual<T> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Dual::new(-self.val, -self.eps)
    }
}

impl<T: Scalar> AddAssign for Dual<T> {
    #[inline]
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl<T: Scalar> SubAssign for Dual<T> {
    #[inline]
    fn sub_assign(&mut self, o: Self) {
        *self = *self - o;
    }
}

impl<T: Scalar> MulAssign for Dual<T> {
    #[inline]
    fn mul_assign(&mut self, o: Self) {
        *self = *self * o;
    }
}

impl<T: Scalar> Add<f64> for Dual<T> {
    type Output = Self;
    #[inline]
    fn add(self, c: f64) -> Self {
        Dual::new(self.val + c, self.eps)
    }
}

impl<T: Scalar> Sub<f64> for Dual<T> {
    type Output = Self;
    #[inline]
    fn sub(self, c: f64) -> Self {
        Dual::new(self.val - c, self.eps)
    }
}

impl<T: Scalar> Mul<f64> for Dual<T> {
    type Output = Self;
    #[inline]
    fn mul(self, c: f64) -> Self {
        Dual::new(self.val * c, self.eps * c)
    }
}

impl<T: Scalar> Div<f64> for Dual<T> {
    type Output = Self;
    #[inline]
    fn div(self, c: f64) -> Self {
        Dual::new(self.val / c, self.eps / c)
    }
}

impl<T: Scalar> Scalar for Dual<T> {
    #[inline]
    fn from_f64(v: f64) -> Self {
        Dual::constant(T::from_f64(v))
    }
    #[inline]
    fn re(&self) -> f64 {
        self.val.re()
    }
    fn is_real(&self) -> bool {
        self.val.is_real() && self.eps.re() == 0.0 && self.eps.is_real()
    }
    fn all_finite(&self) -> bool {
        self.val.all_finite() && self.eps.all_finite()
    }
    #[inline]
    fn sqrt(self) -> Self {
        let s = self.val.sqrt();
        Dual::new(s, self.eps / (s * 2.0))
    }
    #[inline]
    fn sin(self) -> Self {
        Dual::new(self.val.sin(), self.eps * self.val.cos())
    }
    #[inline]
    fn cos(self) -> Self {
        Dual::new(self.val.cos(), -(self.eps * self.val.sin()))
    }
    #[inline]
    fn exp(self) -> Self {
        let e = self.val.exp();
        Dual::new(e, self.eps * e)
    }
    #[inline]
    fn ln(self) -> Self {
        Dual::new(self.val.ln(), self.eps / self.val)
    }
    fn powi(self, n: i32) -> Self {
        match n {
            0 => Self::one(),
            1 => self,
            2 => self * self,
            _ => Dual::new(
                self.val.powi(n),
                self.eps * self.val.powi(n - 1) * (n as f64),
            ),
        }
    }
    fn powf(self, c: f64) -> Self {
        if c.fract() == 0.0 && c.abs() < i32::MAX as f64 {
            return self.powi(c as i32);
        }
        Dual::new(self.val.powf(c), self.eps * self.val.powf(c - 1.0) * c)
    }
}

/// Seeds a vector with one dual direction: `v[k] + [k == seed]·ε`.
pub fn seed<T: Scalar>(v: &[T], seed: Option<usize>) -> Vec<Dual<T>> {
    v.iter()
        .enumerate()
        .map(|(k, &c)| {
            if Some(k) == seed {
                Dual::variable(c)
            } else {
                Dual::constant(c)
            }
        })
        .collect()
}

/// Lifts a slice into dual numbers with zero tangent.
pub fn lift<T: Scalar>(v: &[T]) -> Vec<Dual<T>> {
    seed(v, None)
}

/// Lifts plain `f64` coordinates into an arbitrary scalar type.
pub fn lift_f64<S: Scalar>(v: &[f64]) -> Vec<S> {
    v.iter().map(|&c| S::from_f64(c)).collect()
}
