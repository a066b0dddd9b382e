//! Scalars for residual code that is evaluated both in plain `f64` and with
//! forward-mode derivatives (to assemble exact Jacobians).

use core::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

pub trait Scalar:
    Copy
    + core::fmt::Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign<f64>
{
    fn cst(v: f64) -> Self;
    fn re(self) -> f64;
    /// Applies a scalar function given its value and slope at `self.re()`.
    fn chain(self, value: f64, slope: f64) -> Self;
}

impl Scalar for f64 {
    #[inline]
    fn cst(v: f64) -> Self {
        v
    }
    #[inline]
    fn re(self) -> f64 {
        self
    }
    #[inline]
    fn chain(self, value: f64, _slope: f64) -> Self {
        value
    }
}

/// Value with one directional derivative.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Dual {
    pub re: f64,
    pub du: f64,
}

impl Dual {
    pub fn var(re: f64, du: f64) -> Self {
        Self { re, du }
    }
}

impl Scalar for Dual {
    #[inline]
    fn cst(v: f64) -> Self {
        Self { re: v, du: 0.0 }
    }
    #[inline]
    fn re(self) -> f64 {
        self.re
    }
    #[inline]
    fn chain(self, value: f64, slope: f64) -> Self {
        Self {
            re: value,
            du: slope * self.du,
        }
    }
}

impl Add for Dual {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Self::var(self.re + o.re, self.du + o.du)
    }
}
impl Sub for Dual {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Self::var(self.re - o.re, self.du - o.du)
    }
}
impl Mul for Dual {
    type Output = Self;
    #[inline]
    fn mul(self, o: Self) -> Self {
        Self::var(self.re * o.re, self.du * o.re + self.re * o.du)
    }
}
impl Div for Dual {
    type Output = Self;
    #[inline]
    fn div(self, o: Self) -> Self {
        let q = self.re / o.re;
        Self::var(q, (self.du - q * o.du) / o.re)
    }
}
impl Neg for Dual {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self::var(-self.re, -self.du)
    }
}
impl Add<f64> for Dual {
    type Output = Self;
    #[inline]
    fn add(self, o: f64) -> Self {
        Self::var(self.re + o, self.du)
    }
}
impl Sub<f64> for Dual {
    type Output = Self;
    #[inline]
    fn sub(self, o: f64) -> Self {
        Self::var(self.re - o, self.du)
    }
}
impl Mul<f64> for Dual {
    type Output = Self;
    #[inline]
    fn mul(self, o: f64) -> Self {
        Self::var(self.re * o, self.du * o)
    }
}
impl Div<f64> for Dual {
    type Output = Self;
    #[inline]
    fn div(self, o: f64) -> Self {
        Self::var(self.re / o, self.du / o)
    }
}
impl AddAssign for Dual {
    #[inline]
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}
impl SubAssign for Dual {
    #[inline]
    fn sub_assign(&mut self, o: Self) {
        *self = *self - o;
    }
}
impl MulAssign<f64> for Dual {
    #[inline]
    fn mul_assign(&mut self, o: f64) {
        *self = *self * o;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly<S: Scalar>(x: S) -> S {
        let sq = x * x;
        (sq * x - x * 2.0 + 1.0) / (sq + 1.0)
    }

    #[test]
    fn derivative_matches_fd() {
        let x = 0.7;
        let d = poly(Dual::var(x, 1.0));
        let h = 1e-6;
        let fd = (poly(x + h) - poly(x - h)) / (2.0 * h);
        assert!((d.re - poly(x)).abs() < 1e-15);
        assert!((d.du - fd).abs() < 1e-8);
    }

    #[test]
    fn chain_rule() {
        let x = Dual::var(2.0, 3.0);
        let y = x.chain(4.0, 5.0);
        assert_eq!(y, Dual::var(4.0, 15.0));
    }
}
