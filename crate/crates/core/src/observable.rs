//! Observables on an `N`-dimensional phase space and brackets built from a
//! constant Poisson structure.
//!
//! An observable is any type that can be evaluated over an arbitrary
//! [`Scalar`]. Evaluating over [`Dual`] numbers gives exact gradients, and
//! since a [`Bracket`] is itself an observable, brackets can be nested to any
//! depth.

use crate::autodiff::{seed, Dual, Scalar};
use crate::error::{Error, Result};

/// A smooth real function of phase-space coordinates.
pub trait Observable<const N: usize> {
    fn eval<S: Scalar>(&self, u: &[S; N]) -> S;

    fn value(&self, u: &[f64; N]) -> f64 {
        self.eval(u)
    }

    /// Exact gradient by forward-mode differentiation.
    fn gradient(&self, u: &[f64; N]) -> Result<[f64; N]> {
        let out = self.eval(&seed(u));
        if out.is_finite() {
            Ok(out.eps)
        } else {
            Err(Error::DerivativeFailure)
        }
    }
}

impl<T: Observable<N>, const N: usize> Observable<N> for &T {
    fn eval<S: Scalar>(&self, u: &[S; N]) -> S {
        (**self).eval(u)
    }
}

/// Constant Poisson structure: `{u_i, u_j}` does not depend on the point.
pub trait PoissonStructure<const N: usize> {
    /// Fundamental bracket `{u_i, u_j}`.
    fn entry(&self, i: usize, j: usize) -> f64;

    /// `Σ_ij df_i dg_j {u_i, u_j}`.
    fn contract<S: Scalar>(&self, df: &[S; N], dg: &[S; N]) -> S {
        let mut acc = S::zero();
        for i in 0..N {
            for j in 0..N {
                let w = self.entry(i, j);
                if w != 0.0 {
                    acc = acc + df[i] * dg[j] * w;
                }
            }
        }
        acc
    }
}

impl<P: PoissonStructure<N>, const N: usize> PoissonStructure<N> for &P {
    fn entry(&self, i: usize, j: usize) -> f64 {
        (**self).entry(i, j)
    }
    fn contract<S: Scalar>(&self, df: &[S; N], dg: &[S; N]) -> S {
        (**self).contract(df, dg)
    }
}

/// Standard canonical structure on `N = 2n` variables ordered
/// `(q_1..q_n, p_1..p_n)` in blocks of `block` coordinates followed by
/// `block` momenta.
///
/// For `block = n` this is the usual `(q, p)` layout; for the extended phase
/// space `(x, p, a, pᵃ, b, pᵇ)` the block size is 3.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Canonical {
    pub block: usize,
}

impl Canonical {
    fn momentum_of(&self, i: usize) -> Option<usize> {
        ((i / self.block) % 2 == 0).then_some(i + self.block)
    }
}

impl<const N: usize> PoissonStructure<N> for Canonical {
    fn entry(&self, i: usize, j: usize) -> f64 {
        if self.momentum_of(i) == Some(j) {
            1.0
        } else if self.momentum_of(j) == Some(i) {
            -1.0
        } else {
            0.0
        }
    }

    fn contract<S: Scalar>(&self, df: &[S; N], dg: &[S; N]) -> S {
        let mut acc = S::zero();
        for q in 0..N {
            if let Some(p) = self.momentum_of(q) {
                acc = acc + df[q] * dg[p] - df[p] * dg[q];
            }
        }
        acc
    }
}

/// `{f, g}` as an observable in its own right.
#[derive(Clone, Copy, Debug)]
pub struct Bracket<F, G, P> {
    pub f: F,
    pub g: G,
    pub structure: P,
}

impl<F, G, P> Bracket<F, G, P> {
    pub fn new(f: F, g: G, structure: P) -> Self {
        Self { f, g, structure }
    }
}

impl<F, G, P, const N: usize> Observable<N> for Bracket<F, G, P>
where
    F: Observable<N>,
    G: Observable<N>,
    P: PoissonStructure<N>,
{
    fn eval<S: Scalar>(&self, u: &[S; N]) -> S {
        let vars: [Dual<S, N>; N] = seed(u);
        let df = self.f.eval(&vars).eps;
        let dg = self.g.eval(&vars).eps;
        self.structure.contract(&df, &dg)
    }
}

/// `{f, g}` at `u` with exact first derivatives.
pub fn bracket_at<F, G, P, const N: usize>(f: &F, g: &G, structure: &P, u: &[f64; N]) -> Result<f64>
where
    F: Observable<N>,
    G: Observable<N>,
    P: PoissonStructure<N>,
{
    let df = f.gradient(u)?;
    let dg = g.gradient(u)?;
    let out = structure.contract(&df, &dg);
    if out.is_finite() {
        Ok(out)
    } else {
        Err(Error::DerivativeFailure)
    }
}

/// Cyclic sum `{a,{b,c}} + {b,{c,a}} + {c,{a,b}}` (signed).
pub fn jacobi_sum<A, B, C, P, const N: usize>(a: &A, b: &B, c: &C, structure: &P, u: &[f64; N]) -> Result<f64>
where
    A: Observable<N>,
    B: Observable<N>,
    C: Observable<N>,
    P: PoissonStructure<N>,
{
    let bc = Bracket::new(b, c, structure);
    let ca = Bracket::new(c, a, structure);
    let ab = Bracket::new(a, b, structure);
    Ok(bracket_at(a, &bc, structure, u)? + bracket_at(b, &ca, structure, u)? + bracket_at(c, &ab, structure, u)?)
}

/// Bracket from finite-difference gradients of plain closures.
pub fn bracket_fd<F, G, P, const N: usize>(f: F, g: G, structure: &P, u: &[f64; N]) -> Result<f64>
where
    F: Fn(&[f64; N]) -> f64,
    G: Fn(&[f64; N]) -> f64,
    P: PoissonStructure<N>,
{
    let df = crate::autodiff::gradient_fd(f, u, crate::autodiff::FD_STEP);
    let dg = crate::autodiff::gradient_fd(g, u, crate::autodiff::FD_STEP);
    let out = structure.contract(&df, &dg);
    if out.is_finite() {
        Ok(out)
    } else {
        Err(Error::DerivativeFailure)
    }
}

/// Projection onto the `i`-th phase-space coordinate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Coord(pub usize);

impl<const N: usize> Observable<N> for Coord {
    fn eval<S: Scalar>(&self, u: &[S; N]) -> S {
        u[self.0]
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Constant(pub f64);

impl<const N: usize> Observable<N> for Constant {
    fn eval<S: Scalar>(&self, _u: &[S; N]) -> S {
        S::constant(self.0)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Sum<A, B>(pub A, pub B);

impl<A: Observable<N>, B: Observable<N>, const N: usize> Observable<N> for Sum<A, B> {
    fn eval<S: Scalar>(&self, u: &[S; N]) -> S {
        self.0.eval(u) + self.1.eval(u)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Product<A, B>(pub A, pub B);

impl<A: Observable<N>, B: Observable<N>, const N: usize> Observable<N> for Product<A, B> {
    fn eval<S: Scalar>(&self, u: &[S; N]) -> S {
        self.0.eval(u) * self.1.eval(u)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Scaled<A>(pub f64, pub A);

impl<A: Observable<N>, const N: usize> Observable<N> for Scaled<A> {
    fn eval<S: Scalar>(&self, u: &[S; N]) -> S {
        self.1.eval(u) * self.0
    }
}
