//! Forward-mode automatic differentiation with gradient-carrying dual numbers.
//!
//! [`Dual<S, N>`] carries a value together with its `N` partial derivatives.
//! The component type `S` is itself a [`Scalar`], so duals nest: evaluating a
//! function on `Dual<Dual<f64, N>, N>` yields exact second derivatives. That
//! nesting is what lets a Poisson bracket `{f, g}` be treated as an ordinary
//! observable and bracketed again, e.g. for Jacobi-identity checks.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Numeric type that observables are evaluated over.
///
/// Implemented for `f64` and recursively for [`Dual`].
pub trait Scalar:
    Copy
    + Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
{
    /// Lift a constant (all derivatives zero).
    fn constant(value: f64) -> Self;
    /// Innermost real part.
    fn real(&self) -> f64;
    fn sqrt(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn exp(self) -> Self;
    /// True when the value and every carried derivative are finite.
    fn is_finite(&self) -> bool;

    fn zero() -> Self {
        Self::constant(0.0)
    }

    fn one() -> Self {
        Self::constant(1.0)
    }

    fn powi(self, n: u32) -> Self {
        let mut acc = Self::one();
        for _ in 0..n {
            acc = acc * self;
        }
        acc
    }

    fn recip(self) -> Self {
        Self::one() / self
    }
}

impl Scalar for f64 {
    fn constant(value: f64) -> Self {
        value
    }
    fn real(&self) -> f64 {
        *self
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }
    fn powi(self, n: u32) -> Self {
        f64::powi(self, n as i32)
    }
}

/// Value plus gradient with respect to `N` seeded variables.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual<S, const N: usize> {
    pub re: S,
    pub eps: [S; N],
}

impl<S: Scalar, const N: usize> Dual<S, N> {
    pub fn new(re: S, eps: [S; N]) -> Self {
        Self { re, eps }
    }

    /// The `index`-th independent variable with value `re`.
    pub fn variable(re: S, index: usize) -> Self {
        let mut eps = [S::zero(); N];
        eps[index] = S::one();
        Self { re, eps }
    }

    fn chain(self, re: S, slope: S) -> Self {
        Self {
            re,
            eps: self.eps.map(|d| d * slope),
        }
    }
}

/// Seed every component of `point` as an independent variable.
pub fn seed<S: Scalar, const N: usize>(point: &[S; N]) -> [Dual<S, N>; N] {
    std::array::from_fn(|i| Dual::variable(point[i], i))
}

/// Evaluate `f` and its full gradient at `point` in a single forward pass.
pub fn value_and_gradient<S, F, const N: usize>(f: F, point: &[S; N]) -> (S, [S; N])
where
    S: Scalar,
    F: FnOnce(&[Dual<S, N>; N]) -> Dual<S, N>,
{
    let out = f(&seed(point));
    (out.re, out.eps)
}

/// Central finite-difference gradient, the fallback for plain `f64` closures.
pub fn gradient_fd<F, const N: usize>(f: F, point: &[f64; N], step: f64) -> [f64; N]
where
    F: Fn(&[f64; N]) -> f64,
{
    std::array::from_fn(|i| {
        let mut hi = *point;
        let mut lo = *point;
        hi[i] += step;
        lo[i] -= step;
        (f(&hi) - f(&lo)) / (2.0 * step)
    })
}

/// Default central-difference step.
pub const FD_STEP: f64 = 1e-6;

impl<S: Scalar, const N: usize> Add for Dual<S, N> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self {
            re: self.re + rhs.re,
            eps: std::array::from_fn(|i| self.eps[i] + rhs.eps[i]),
        }
    }
}

impl<S: Scalar, const N: usize> Sub for Dual<S, N> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self {
            re: self.re - rhs.re,
            eps: std::array::from_fn(|i| self.eps[i] - rhs.eps[i]),
        }
    }
}

impl<S: Scalar, const N: usize> Mul for Dual<S, N> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        Self {
            re: self.re * rhs.re,
            eps: std::array::from_fn(|i| self.eps[i] * rhs.re + self.re * rhs.eps[i]),
        }
    }
}

impl<S: Scalar, const N: usize> Div for Dual<S, N> {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        let inv = rhs.re.recip();
        let re = self.re * inv;
        Self {
            re,
            eps: std::array::from_fn(|i| (self.eps[i] - re * rhs.eps[i]) * inv),
        }
    }
}

impl<S: Scalar, const N: usize> Neg for Dual<S, N> {
    type Output = Self;
    fn neg(self) -> Self {
        Self {
            re: -self.re,
            eps: self.eps.map(|d| -d),
        }
    }
}

impl<S: Scalar, const N: usize> Add<f64> for Dual<S, N> {
    type Output = Self;
    fn add(self, rhs: f64) -> Self {
        Self {
            re: self.re + rhs,
            eps: self.eps,
        }
    }
}

impl<S: Scalar, const N: usize> Sub<f64> for Dual<S, N> {
    type Output = Self;
    fn sub(self, rhs: f64) -> Self {
        Self {
            re: self.re - rhs,
            eps: self.eps,
        }
    }
}

impl<S: Scalar, const N: usize> Mul<f64> for Dual<S, N> {
    type Output = Self;
    fn mul(self, rhs: f64) -> Self {
        Self {
            re: self.re * rhs,
            eps: self.eps.map(|d| d * rhs),
        }
    }
}

impl<S: Scalar, const N: usize> Div<f64> for Dual<S, N> {
    type Output = Self;
    fn div(self, rhs: f64) -> Self {
        Self {
            re: self.re / rhs,
            eps: self.eps.map(|d| d / rhs),
        }
    }
}

impl<S: Scalar, const N: usize> Scalar for Dual<S, N> {
    fn constant(value: f64) -> Self {
        Self {
            re: S::constant(value),
            eps: [S::zero(); N],
        }
    }

    fn real(&self) -> f64 {
        self.re.real()
    }

    fn sqrt(self) -> Self {
        let r = self.re.sqrt();
        self.chain(r, (r * 2.0).recip())
    }

    fn sin(self) -> Self {
        self.chain(self.re.sin(), self.re.cos())
    }

    fn cos(self) -> Self {
        self.chain(self.re.cos(), -self.re.sin())
    }

    fn exp(self) -> Self {
        let e = self.re.exp();
        self.chain(e, e)
    }

    fn is_finite(&self) -> bool {
        self.re.is_finite() && self.eps.iter().all(Scalar::is_finite)
    }
}
