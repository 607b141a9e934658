//! Deformed Poisson brackets on the 2D noncommutative phase space
//! `(X1, X2, P1, P2)`:
//!
//! ```text
//! {X1, X2} = θ,   {X1, P1} = {X2, P2} = 1 + γ,   {P1, P2} = η
//! ```
//!
//! and the classical time-reversal map.

use serde::{Deserialize, Serialize};

use crate::autodiff::Scalar;
use crate::error::Result;
use crate::observable::{bracket_at, bracket_fd, Observable, PoissonStructure};

/// Deformation constants of the 2D canonical algebra.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NCParams2D {
    pub theta: f64,
    pub eta: f64,
    pub gamma: f64,
}

impl NCParams2D {
    pub const COMMUTATIVE: NCParams2D = NCParams2D { theta: 0.0, eta: 0.0, gamma: 0.0 };

    pub fn new(theta: f64, eta: f64, gamma: f64) -> Self {
        Self { theta, eta, gamma }
    }

    pub fn is_finite(&self) -> bool {
        self.theta.is_finite() && self.eta.is_finite() && self.gamma.is_finite()
    }
}

/// Phase-space variable index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Var {
    X1 = 0,
    X2 = 1,
    P1 = 2,
    P2 = 3,
}

impl Var {
    pub const ALL: [Var; 4] = [Var::X1, Var::X2, Var::P1, Var::P2];

    pub fn index(self) -> usize {
        self as usize
    }
}

impl<const N: usize> Observable<N> for Var {
    fn eval<S: Scalar>(&self, u: &[S; N]) -> S {
        u[self.index()]
    }
}

/// A point `(X1, X2, P1, P2)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseState2D {
    pub x1: f64,
    pub x2: f64,
    pub p1: f64,
    pub p2: f64,
}

impl PhaseState2D {
    pub fn new(x1: f64, x2: f64, p1: f64, p2: f64) -> Self {
        Self { x1, x2, p1, p2 }
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.x1, self.x2, self.p1, self.p2]
    }

    pub fn from_array(u: [f64; 4]) -> Self {
        Self::new(u[0], u[1], u[2], u[3])
    }

    pub fn radius(&self) -> f64 {
        self.x1.hypot(self.x2)
    }

    pub fn distance(&self, other: &PhaseState2D) -> f64 {
        self.to_array()
            .iter()
            .zip(other.to_array())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

/// `{u_i, u_j}` for the fundamental variables.
pub fn fundamental_bracket(i: Var, j: Var, params: &NCParams2D) -> f64 {
    use Var::*;
    match (i, j) {
        (X1, X2) => params.theta,
        (X2, X1) => -params.theta,
        (P1, P2) => params.eta,
        (P2, P1) => -params.eta,
        (X1, P1) | (X2, P2) => 1.0 + params.gamma,
        (P1, X1) | (P2, X2) => -(1.0 + params.gamma),
        _ => 0.0,
    }
}

impl PoissonStructure<4> for NCParams2D {
    fn entry(&self, i: usize, j: usize) -> f64 {
        fundamental_bracket(Var::ALL[i], Var::ALL[j], self)
    }

    fn contract<S: Scalar>(&self, df: &[S; 4], dg: &[S; 4]) -> S {
        let one_plus_gamma = 1.0 + self.gamma;
        (df[0] * dg[1] - df[1] * dg[0]) * self.theta
            + (df[2] * dg[3] - df[3] * dg[2]) * self.eta
            + (df[0] * dg[2] - df[2] * dg[0] + df[1] * dg[3] - df[3] * dg[1]) * one_plus_gamma
    }
}

/// `Σ_ij ∂f/∂u_i ∂g/∂u_j {u_i, u_j}` at `s`.
pub fn poisson_bracket<F, G>(f: &F, g: &G, params: &NCParams2D, s: &PhaseState2D) -> Result<f64>
where
    F: Observable<4>,
    G: Observable<4>,
{
    bracket_at(f, g, params, &s.to_array())
}

/// Same bracket with central finite-difference derivatives of plain closures.
pub fn poisson_bracket_fd<F, G>(f: F, g: G, params: &NCParams2D, s: &PhaseState2D) -> Result<f64>
where
    F: Fn(&[f64; 4]) -> f64,
    G: Fn(&[f64; 4]) -> f64,
{
    bracket_fd(f, g, params, &s.to_array())
}

/// Parameters of the time-reversed algebra: `(θ, η, γ) → (−θ, −η, γ)`.
pub fn time_reverse_params(params: &NCParams2D) -> NCParams2D {
    NCParams2D::new(-params.theta, -params.eta, params.gamma)
}

/// `X → X`, `P → −P`.
pub fn time_reverse_state(s: &PhaseState2D) -> PhaseState2D {
    PhaseState2D::new(s.x1, s.x2, -s.p1, -s.p2)
}

/// `H = (P1² + P2²)/2m − k/|X|`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KeplerHamiltonian {
    pub m: f64,
    pub k: f64,
}

impl Observable<4> for KeplerHamiltonian {
    fn eval<S: Scalar>(&self, u: &[S; 4]) -> S {
        let kinetic = (u[2] * u[2] + u[3] * u[3]) / (2.0 * self.m);
        let radius = (u[0] * u[0] + u[1] * u[1]).sqrt();
        kinetic - radius.recip() * self.k
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::observable::{Bracket, Product};

    #[test]
    fn fundamental_examples() {
        let p = NCParams2D::new(0.3, 0.0, 0.0);
        assert_eq!(fundamental_bracket(Var::X1, Var::X2, &p), 0.3);
        assert_eq!(fundamental_bracket(Var::X1, Var::X1, &NCParams2D::new(0.4, 0.5, 0.6)), 0.0);
        assert_eq!(fundamental_bracket(Var::P2, Var::P1, &NCParams2D::new(0.0, 0.2, 0.0)), -0.2);
        assert_eq!(fundamental_bracket(Var::X2, Var::P1, &NCParams2D::new(0.1, 0.2, 0.3)), 0.0);
    }

    #[test]
    fn structure_contract_matches_entries() {
        let p = NCParams2D::new(0.3, -0.7, 0.11);
        for i in Var::ALL {
            for j in Var::ALL {
                let mut df = [0.0; 4];
                let mut dg = [0.0; 4];
                df[i.index()] = 1.0;
                dg[j.index()] = 1.0;
                assert_eq!(p.contract(&df, &dg), fundamental_bracket(i, j, &p));
            }
        }
    }

    #[test]
    fn bracket_examples() {
        let s = PhaseState2D::new(0.4, -1.0, 2.0, 0.5);
        let p = NCParams2D::new(0.3, 0.0, 0.0);
        assert!((poisson_bracket(&Var::X1, &Var::X2, &p, &s).unwrap() - 0.3).abs() < 1e-15);

        let h = KeplerHamiltonian { m: 1.3, k: 0.8 };
        assert_eq!(poisson_bracket(&h, &h, &NCParams2D::new(0.1, 0.2, 0.3), &s).unwrap(), 0.0);

        // {X1², P1} = 2 X1 (1 + γ)
        let s = PhaseState2D::new(2.0, 0.0, 0.0, 0.0);
        let x1_sq = Product(Var::X1, Var::X1);
        let got = poisson_bracket(&x1_sq, &Var::P1, &NCParams2D::new(0.0, 0.0, 0.1), &s).unwrap();
        assert!((got - 4.4).abs() < 1e-14);
    }

    #[test]
    fn fd_fallback_agrees_with_exact() {
        let s = PhaseState2D::new(0.9, -0.4, 0.3, 1.1);
        let p = NCParams2D::new(0.05, 0.02, 0.01);
        let h = KeplerHamiltonian { m: 1.0, k: 1.0 };
        let exact = poisson_bracket(&Var::X1, &h, &p, &s).unwrap();
        let approx = poisson_bracket_fd(|u| u[0], |u| h.value(u), &p, &s).unwrap();
        assert!((exact - approx).abs() / exact.abs() < 1e-6);
    }

    #[test]
    fn time_reversal_examples() {
        let p = NCParams2D::new(0.1, 0.05, 0.02);
        assert_eq!(time_reverse_params(&p), NCParams2D::new(-0.1, -0.05, 0.02));
        assert_eq!(time_reverse_params(&time_reverse_params(&p)), p);
        assert_eq!(time_reverse_params(&NCParams2D::COMMUTATIVE), NCParams2D::COMMUTATIVE);

        let s = PhaseState2D::new(1.0, 2.0, 3.0, 4.0);
        assert_eq!(time_reverse_state(&s), PhaseState2D::new(1.0, 2.0, -3.0, -4.0));
        let still = PhaseState2D::new(1.0, 2.0, 0.0, 0.0);
        assert_eq!(time_reverse_state(&still).to_array().map(|v| v.abs()), still.to_array());
    }

    #[test]
    fn nested_bracket_of_coordinates_is_constant() {
        let p = NCParams2D::new(0.3, 0.2, 0.1);
        let inner = Bracket::new(Var::X1, Var::X2, p);
        let s = PhaseState2D::new(1.0, 2.0, 3.0, 4.0);
        assert_eq!(poisson_bracket(&inner, &Var::P1, &p, &s).unwrap(), 0.0);
        assert!((inner.value(&s.to_array()) - 0.3).abs() < 1e-15);
    }
}
