//! Forward-mode dual numbers.
//!
//! `Dual<T>` carries a value and up to [`MAX_DIM`] tangent lanes. Nesting
//! (`Dual<Dual<f64>>`) yields second derivatives, which the variational
//! geodesic equations need for the derivative of the Christoffel symbols.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Largest chart dimension supported by the fixed-size tangent lanes.
pub const MAX_DIM: usize = 4;

/// Scalar type the expression evaluator and the spray are generic over.
pub trait Real:
    Copy
    + fmt::Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn cst(x: f64) -> Self;
    /// The underlying real value (innermost value part).
    fn re(&self) -> f64;
    fn is_finite(&self) -> bool;

    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sqrt(self) -> Self;
    fn abs(self) -> Self;
    fn powi(self, n: i32) -> Self;

    fn scale(self, k: f64) -> Self {
        self * Self::cst(k)
    }

    fn tan(self) -> Self {
        self.sin() / self.cos()
    }
}

impl Real for f64 {
    #[inline]
    fn cst(x: f64) -> Self {
        x
    }
    #[inline]
    fn re(&self) -> f64 {
        *self
    }
    #[inline]
    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
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
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    #[inline]
    fn abs(self) -> Self {
        f64::abs(self)
    }
    #[inline]
    fn powi(self, n: i32) -> Self {
        f64::powi(self, n)
    }
    #[inline]
    fn tan(self) -> Self {
        f64::tan(self)
    }
}

/// Value plus `MAX_DIM` first-order partials.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual<T> {
    pub re: T,
    pub eps: [T; MAX_DIM],
}

impl<T: Real> Dual<T> {
    pub fn constant(re: T) -> Self {
        Dual {
            re,
            eps: [T::cst(0.0); MAX_DIM],
        }
    }

    /// Independent variable seeded along lane `lane`.
    pub fn variable(re: T, lane: usize) -> Self {
        let mut d = Self::constant(re);
        d.eps[lane] = T::cst(1.0);
        d
    }

    /// Chain rule for a unary function with value `f` and derivative `df`.
    #[inline]
    fn chain(self, f: T, df: T) -> Self {
        let mut eps = self.eps;
        for e in eps.iter_mut() {
            *e = *e * df;
        }
        Dual { re: f, eps }
    }
}

impl<T: Real> Add for Dual<T> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        let mut eps = self.eps;
        for (e, b) in eps.iter_mut().zip(o.eps) {
            *e = *e + b;
        }
        Dual {
            re: self.re + o.re,
            eps,
        }
    }
}

impl<T: Real> Sub for Dual<T> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        let mut eps = self.eps;
        for (e, b) in eps.iter_mut().zip(o.eps) {
            *e = *e - b;
        }
        Dual {
            re: self.re - o.re,
            eps,
        }
    }
}

impl<T: Real> Mul for Dual<T> {
    type Output = Self;
    #[inline]
    fn mul(self, o: Self) -> Self {
        let mut eps = self.eps;
        for (e, b) in eps.iter_mut().zip(o.eps) {
            *e = *e * o.re + self.re * b;
        }
        Dual {
            re: self.re * o.re,
            eps,
        }
    }
}

impl<T: Real> Div for Dual<T> {
    type Output = Self;
    #[inline]
    fn div(self, o: Self) -> Self {
        let inv = T::cst(1.0) / o.re;
        let q = self.re * inv;
        let mut eps = self.eps;
        for (e, b) in eps.iter_mut().zip(o.eps) {
            *e = (*e - q * b) * inv;
        }
        Dual { re: q, eps }
    }
}

impl<T: Real> Neg for Dual<T> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        let mut eps = self.eps;
        for e in eps.iter_mut() {
            *e = -*e;
        }
        Dual { re: -self.re, eps }
    }
}

impl<T: Real> Real for Dual<T> {
    fn cst(x: f64) -> Self {
        Dual::constant(T::cst(x))
    }
    fn re(&self) -> f64 {
        self.re.re()
    }
    fn is_finite(&self) -> bool {
        self.re.is_finite() && self.eps.iter().all(|e| e.is_finite())
    }
    fn sin(self) -> Self {
        self.chain(self.re.sin(), self.re.cos())
    }
    fn cos(self) -> Self {
        self.chain(self.re.cos(), -self.re.sin())
    }
    fn tan(self) -> Self {
        let t = self.re.tan();
        self.chain(t, T::cst(1.0) + t * t)
    }
    fn exp(self) -> Self {
        let e = self.re.exp();
        self.chain(e, e)
    }
    fn ln(self) -> Self {
        self.chain(self.re.ln(), T::cst(1.0) / self.re)
    }
    fn sqrt(self) -> Self {
        let s = self.re.sqrt();
        self.chain(s, T::cst(0.5) / s)
    }
    fn abs(self) -> Self {
        // d|x| at 0 taken as 0
        let r = self.re.re();
        let sign = if r > 0.0 {
            1.0
        } else if r < 0.0 {
            -1.0
        } else {
            0.0
        };
        self.chain(self.re.abs(), T::cst(sign))
    }
    fn powi(self, n: i32) -> Self {
        if n == 0 {
            return Self::cst(1.0);
        }
        let f = self.re.powi(n);
        let df = self.re.powi(n - 1).scale(n as f64);
        self.chain(f, df)
    }
}
