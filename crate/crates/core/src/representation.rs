//! Linear representations of the 2D noncommutative algebra by canonical
//! variables `{x_i, p_j} = δ_ij`:
//!
//! ```text
//! X1 = ε(x1 − θ′1 p2)    X2 = ε(x2 + θ′2 p1)
//! P1 = ε(p1 + η′1 x2)    P2 = ε(p2 − η′2 x1)
//! ```
//!
//! The parameters are not unique, and different choices give different
//! images under time reversal `x → x, p → −p`.

use serde::{Deserialize, Serialize};

use crate::autodiff::Scalar;
use crate::bracket::PhaseState2D;
use crate::error::{Error, Result};
use crate::observable::{bracket_at, Canonical, Observable};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RepParams {
    pub eps: f64,
    pub theta1p: f64,
    pub theta2p: f64,
    pub eta1p: f64,
    pub eta2p: f64,
}

impl RepParams {
    pub const IDENTITY: RepParams = RepParams { eps: 1.0, theta1p: 0.0, theta2p: 0.0, eta1p: 0.0, eta2p: 0.0 };

    pub fn new(eps: f64, theta1p: f64, theta2p: f64, eta1p: f64, eta2p: f64) -> Result<Self> {
        let rp = Self { eps, theta1p, theta2p, eta1p, eta2p };
        if ![eps, theta1p, theta2p, eta1p, eta2p].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidInput("representation parameters must be finite".into()));
        }
        if eps == 0.0 {
            return Err(Error::InvalidInput("scale factor eps must be nonzero".into()));
        }
        Ok(rp)
    }

    /// Generic form of [`rep_map`] used to build observables.
    pub fn map<S: Scalar>(&self, c: &[S; 4]) -> [S; 4] {
        let [x1, x2, p1, p2] = *c;
        [
            (x1 - p2 * self.theta1p) * self.eps,
            (x2 + p1 * self.theta2p) * self.eps,
            (p1 + x2 * self.eta1p) * self.eps,
            (p2 - x1 * self.eta2p) * self.eps,
        ]
    }
}

/// Canonical point `(x1, x2, p1, p2)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CanonicalState2D {
    pub x1: f64,
    pub x2: f64,
    pub p1: f64,
    pub p2: f64,
}

impl CanonicalState2D {
    pub fn new(x1: f64, x2: f64, p1: f64, p2: f64) -> Self {
        Self { x1, x2, p1, p2 }
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.x1, self.x2, self.p1, self.p2]
    }

    pub fn time_reversed(self) -> Self {
        Self::new(self.x1, self.x2, -self.p1, -self.p2)
    }
}

/// Canonical structure on `(x1, x2, p1, p2)`.
pub const CANONICAL_2D: Canonical = Canonical { block: 2 };

pub fn rep_map(rp: &RepParams, c: &CanonicalState2D) -> PhaseState2D {
    PhaseState2D::from_array(rp.map(&c.to_array()))
}

/// One mapped variable `X1, X2, P1, P2` as an observable on canonical space.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MappedVar {
    pub rp: RepParams,
    pub index: usize,
}

impl Observable<4> for MappedVar {
    fn eval<S: Scalar>(&self, u: &[S; 4]) -> S {
        self.rp.map(u)[self.index]
    }
}

/// Brackets induced by a representation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InducedAlgebra {
    /// `{X1, X2}`
    pub theta: f64,
    /// `{P1, P2}`
    pub eta: f64,
    /// `{X1, P1} − 1`
    pub gamma11: f64,
    /// `{X2, P2} − 1`
    pub gamma22: f64,
}

impl InducedAlgebra {
    /// Largest deviation from `(θ, η, γ, γ)`.
    pub fn residual(&self, theta: f64, eta: f64, gamma: f64) -> f64 {
        [self.theta - theta, self.eta - eta, self.gamma11 - gamma, self.gamma22 - gamma]
            .iter()
            .map(|d| d.abs())
            .fold(0.0, f64::max)
    }
}

pub fn induced_algebra(rp: &RepParams) -> InducedAlgebra {
    let e2 = rp.eps * rp.eps;
    InducedAlgebra {
        theta: e2 * (rp.theta1p + rp.theta2p),
        eta: e2 * (rp.eta1p + rp.eta2p),
        gamma11: e2 * (1.0 + rp.theta1p * rp.eta1p) - 1.0,
        gamma22: e2 * (1.0 + rp.theta2p * rp.eta2p) - 1.0,
    }
}

/// Canonical brackets of the mapped variables at `c`, including the pairs
/// the representation must leave at zero (`{X1, P2}`, `{X2, P1}`).
pub fn mapped_brackets(rp: &RepParams, c: &CanonicalState2D) -> Result<(InducedAlgebra, f64)> {
    let u = c.to_array();
    let var = |index| MappedVar { rp: *rp, index };
    let b = |i, j| bracket_at(&var(i), &var(j), &CANONICAL_2D, &u);
    let algebra = InducedAlgebra {
        theta: b(0, 1)?,
        eta: b(2, 3)?,
        gamma11: b(0, 2)? - 1.0,
        gamma22: b(1, 3)? - 1.0,
    };
    let off_diagonal = b(0, 3)?.abs().max(b(1, 2)?.abs());
    Ok((algebra, off_diagonal))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    fn sign(self) -> f64 {
        match self {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        }
    }
}

/// `(θ, η, γ)` admissible for [`solve_general`]: returns the two
/// discriminants `θ² − 4θγ/η`, `η² − 4ηγ/θ` clamped at zero.
fn general_discriminants(theta: f64, eta: f64, gamma: f64) -> Result<(f64, f64)> {
    if theta == 0.0 {
        return Err(Error::ZeroParameter("theta"));
    }
    if eta == 0.0 {
        return Err(Error::ZeroParameter("eta"));
    }
    if !(theta * eta > 0.0) {
        return Err(Error::Constraint(format!("theta*eta must be positive, got {}", theta * eta)));
    }
    let bound = theta * eta / 4.0;
    if gamma > bound {
        return Err(Error::GammaConstraint { gamma, bound });
    }
    // θ² − 4θγ/η = (θ/η)(θη − 4γ), likewise for η; slack within roundoff of zero is degenerate
    let te = theta * eta;
    let mut slack = te - 4.0 * gamma;
    if slack.abs() <= 8.0 * f64::EPSILON * te.abs() {
        slack = 0.0;
    }
    Ok(((theta / eta * slack).max(0.0), (eta / theta * slack).max(0.0)))
}

/// True when both branches coincide (`γ = θη/4`).
pub fn is_degenerate(theta: f64, eta: f64, gamma: f64) -> Result<bool> {
    let (dt, de) = general_discriminants(theta, eta, gamma)?;
    Ok(dt == 0.0 && de == 0.0)
}

/// `ε = 1` representation of `(θ, η, γ)` on the chosen sign branch.
pub fn solve_general(theta: f64, eta: f64, gamma: f64, branch: Branch) -> Result<RepParams> {
    let (disc_theta, disc_eta) = general_discriminants(theta, eta, gamma)?;
    let s = branch.sign();
    let theta1p = 0.5 * (theta + s * disc_theta.sqrt());
    let eta1p = 0.5 * (eta - s * disc_eta.sqrt());
    RepParams::new(1.0, theta1p, theta - theta1p, eta1p, eta - eta1p)
}

/// Residuals of the four `γ = 0` matching equations.
pub fn gamma_zero_residual(rp: &RepParams, theta: f64, eta: f64) -> f64 {
    let e2 = rp.eps * rp.eps;
    [
        e2 * (1.0 + rp.theta1p * rp.eta1p) - 1.0,
        rp.theta1p * rp.eta1p - rp.theta2p * rp.eta2p,
        e2 * (rp.theta1p + rp.theta2p) - theta,
        e2 * (rp.eta1p + rp.eta2p) - eta,
    ]
    .iter()
    .map(|d| d.abs())
    .fold(0.0, f64::max)
}

const GAMMA_ZERO_TOL: f64 = 1e-12;

/// `γ = 0` representation with `θ′2` fixed to `theta2p`.
///
/// Writing `q = θ′1η′1 = θ′2η′2` the system reduces to the scalar equation
///
/// ```text
/// F(q) = (θ(1+q) − θ′2)(η(1+q) − q/θ′2) − q = 0,   q > −1,
/// ```
///
/// solved by bracketing outward from `q = 0` and bisecting, taking the root
/// closest to zero (the one continuously connected to the commutative limit).
pub fn solve_gamma_zero(theta: f64, eta: f64, theta2p: f64) -> Result<RepParams> {
    if ![theta, eta, theta2p].iter().all(|v| v.is_finite()) {
        return Err(Error::InvalidInput("parameters must be finite".into()));
    }
    if theta2p == 0.0 {
        // q = 0 forces ε = 1, θ′1 = θ and θ η′1 = 0
        return RepParams::new(1.0, theta, 0.0, 0.0, eta);
    }
    let residual = |q: f64| (theta * (1.0 + q) - theta2p) * (eta * (1.0 + q) - q / theta2p) - q;
    let q = nearest_root(residual).ok_or_else(|| {
        Error::NoSolution(format!("no real root of the gamma = 0 matching equation for theta2' = {theta2p}"))
    })?;
    let eps = (1.0 / (1.0 + q)).sqrt();
    let eta2p = q / theta2p;
    let rp = RepParams::new(eps, theta * (1.0 + q) - theta2p, theta2p, eta * (1.0 + q) - eta2p, eta2p)?;
    let res = gamma_zero_residual(&rp, theta, eta);
    if res > GAMMA_ZERO_TOL {
        return Err(Error::NoSolution(format!("root polish stalled with residual {res:e}")));
    }
    Ok(rp)
}

/// Root of `f` on `(−1, 1e8]` nearest to zero, found by scanning outward on a
/// geometric grid and bisecting the first sign change on either side.
fn nearest_root(f: impl Fn(f64) -> f64) -> Option<f64> {
    let f0 = f(0.0);
    if f0 == 0.0 {
        return Some(0.0);
    }
    let bisect = |mut lo: f64, mut hi: f64| {
        let mut flo = f(lo);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid == lo || mid == hi {
                break;
            }
            let fm = f(mid);
            if fm == 0.0 {
                return mid;
            }
            if (fm > 0.0) == (flo > 0.0) {
                lo = mid;
                flo = fm;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    let scan = |toward_positive: bool| -> Option<(f64, f64)> {
        let mut prev: f64 = 0.0;
        let mut f_prev = f0;
        let mut step: f64 = 1e-6;
        loop {
            let next = if toward_positive {
                if prev >= 1e8 {
                    return None;
                }
                (prev + step).min(1e8)
            } else {
                // approach q = −1 geometrically
                let gap = 1.0 + prev;
                if gap < 1e-14 {
                    return None;
                }
                (prev - step).max(-1.0 + gap * 0.5)
            };
            let f_next = f(next);
            if f_next == 0.0 || (f_next > 0.0) != (f_prev > 0.0) {
                return Some((prev, next));
            }
            prev = next;
            f_prev = f_next;
            step *= 1.5;
        }
    };
    let candidates: Vec<f64> = [scan(true), scan(false)]
        .into_iter()
        .flatten()
        .map(|(a, b)| bisect(a, b))
        .collect();
    candidates.into_iter().min_by(|a, b| a.abs().total_cmp(&b.abs()))
}

/// The two symmetric `γ = 0` representations
/// `θ′ = (1 ± √(1−θη))/η`, `η′ = (1 ± √(1−θη))/θ`, `ε = (1 + θ′η′)^(−1/2)`.
pub fn symmetric_reps_gamma_zero(theta: f64, eta: f64, branch: Branch) -> Result<RepParams> {
    if theta == 0.0 {
        return Err(Error::ZeroParameter("theta"));
    }
    if eta == 0.0 {
        return Err(Error::ZeroParameter("eta"));
    }
    let product = theta * eta;
    if product > 1.0 {
        return Err(Error::Constraint(format!("theta*eta = {product} exceeds 1")));
    }
    let root = (1.0 - product).sqrt();
    // 1 − √(1−θη) written without cancellation
    let u = match branch {
        Branch::Plus => 1.0 + root,
        Branch::Minus => product / (1.0 + root),
    };
    let theta_p = u / eta;
    let eta_p = u / theta;
    let eps_sq_inv = 1.0 + theta_p * eta_p;
    if !(eps_sq_inv > 0.0) {
        return Err(Error::Constraint(format!("1 + theta'*eta' = {eps_sq_inv} is not positive")));
    }
    RepParams::new(eps_sq_inv.sqrt().recip(), theta_p, theta_p, eta_p, eta_p)
}

/// `rep_map` applied to the time-reversed canonical point `(x, −p)`.
///
/// Returns `(X′1, X′2, −P′1, −P′2)`.
pub fn time_reversed_images(rp: &RepParams, c: &CanonicalState2D) -> PhaseState2D {
    rep_map(rp, &c.time_reversed())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b}");
    }

    #[test]
    fn rep_map_examples() {
        let c = CanonicalState2D::new(1.0, 2.0, 3.0, 4.0);
        assert_eq!(rep_map(&RepParams::IDENTITY, &c), PhaseState2D::new(1.0, 2.0, 3.0, 4.0));
        let rp = RepParams::new(1.0, 0.05, 0.05, 0.0, 0.0).unwrap();
        assert_eq!(rep_map(&rp, &CanonicalState2D::new(1.0, 0.0, 0.0, 1.0)), PhaseState2D::new(0.95, 0.0, 0.0, 1.0));
        assert!(RepParams::new(0.0, 0.0, 0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn induced_algebra_examples() {
        let id = induced_algebra(&RepParams::IDENTITY);
        assert_eq!(id, InducedAlgebra { theta: 0.0, eta: 0.0, gamma11: 0.0, gamma22: 0.0 });

        let sym = RepParams::new(1.0, 0.05, 0.05, 0.1, 0.1).unwrap();
        let got = induced_algebra(&sym);
        assert_close(got.theta, 0.1, 1e-15);
        assert_close(got.eta, 0.2, 1e-15);
        assert_close(got.gamma11, 0.005, 1e-15);
        assert_close(got.gamma22, 0.005, 1e-15);

        let asym = RepParams::new(1.0, 0.2, 0.0, 0.0, 0.1).unwrap();
        assert_eq!(induced_algebra(&asym), InducedAlgebra { theta: 0.2, eta: 0.1, gamma11: 0.0, gamma22: 0.0 });
    }

    #[test]
    fn mapped_brackets_match_closed_form() {
        let rp = solve_general(0.1, 0.2, 0.002, Branch::Plus).unwrap();
        let (b, off) = mapped_brackets(&rp, &CanonicalState2D::new(0.3, -1.2, 0.8, 2.1)).unwrap();
        let ia = induced_algebra(&rp);
        assert!(b.residual(ia.theta, ia.eta, ia.gamma11) < 1e-12);
        assert_close(b.gamma22, ia.gamma22, 1e-12);
        assert_eq!(off, 0.0);
    }

    #[test]
    fn solve_general_examples() {
        for branch in [Branch::Plus, Branch::Minus] {
            let rp = solve_general(0.1, 0.2, 0.005, branch).unwrap();
            assert_close(rp.theta1p, 0.05, 1e-9);
            assert_close(rp.theta2p, 0.05, 1e-9);
            assert_close(rp.eta1p, 0.1, 1e-9);
            assert_close(rp.eta2p, 0.1, 1e-9);
        }
        assert!(is_degenerate(0.1, 0.2, 0.005).unwrap());

        let rp = solve_general(0.2, 0.1, 0.004, Branch::Plus).unwrap();
        assert_close(rp.theta1p, 0.1447214, 1e-7);
        assert_close(rp.theta2p, 0.0552786, 1e-7);
        assert_close(rp.eta1p, 0.0276393, 1e-7);
        assert_close(rp.eta2p, 0.0723607, 1e-7);
        assert!(induced_algebra(&rp).residual(0.2, 0.1, 0.004) < 1e-15);

        assert!(matches!(solve_general(0.2, 0.1, 0.01, Branch::Plus), Err(Error::GammaConstraint { .. })));
        assert!(matches!(solve_general(0.0, 0.1, 0.0, Branch::Plus), Err(Error::ZeroParameter("theta"))));
        assert!(matches!(solve_general(0.1, 0.0, 0.0, Branch::Plus), Err(Error::ZeroParameter("eta"))));
        assert!(matches!(solve_general(0.1, -0.1, -0.1, Branch::Plus), Err(Error::Constraint(_))));
    }

    #[test]
    fn negative_pair_is_supported() {
        let rp = solve_general(-0.3, -0.2, -0.01, Branch::Minus).unwrap();
        assert!(induced_algebra(&rp).residual(-0.3, -0.2, -0.01) < 1e-15);
    }

    #[test]
    fn gamma_zero_examples() {
        let rp = solve_gamma_zero(0.2, 0.1, 0.0).unwrap();
        assert_eq!(rp, RepParams::new(1.0, 0.2, 0.0, 0.0, 0.1).unwrap());
        assert_eq!(solve_gamma_zero(0.0, 0.0, 0.0).unwrap(), RepParams::IDENTITY);

        let rp = solve_gamma_zero(0.2, 0.1, 0.05).unwrap();
        assert!(gamma_zero_residual(&rp, 0.2, 0.1) < 1e-12);
        assert!(induced_algebra(&rp).residual(0.2, 0.1, 0.0) < 1e-10);
        assert_eq!(rp.theta2p, 0.05);
    }

    #[test]
    fn gamma_zero_without_admissible_root() {
        // θ = η = 1, θ′2 = −10: F(q) = 1.1q² + 12.1q + 11, roots ≈ −1.045 and −9.955, both below −1
        assert!(matches!(solve_gamma_zero(1.0, 1.0, -10.0), Err(Error::NoSolution(_))));
    }

    #[test]
    fn symmetric_gamma_zero_examples() {
        let rp = symmetric_reps_gamma_zero(0.2, 0.1, Branch::Minus).unwrap();
        assert_close(rp.theta1p, 0.1005051, 1e-7);
        assert_close(rp.eta1p, 0.0502525, 1e-7);
        assert_close(rp.eps, (1.0 + rp.theta1p * rp.eta1p).powf(-0.5), 1e-15);
        assert!(induced_algebra(&rp).residual(0.2, 0.1, 0.0) < 1e-10);

        let plus = symmetric_reps_gamma_zero(0.2, 0.1, Branch::Plus).unwrap();
        assert!(induced_algebra(&plus).residual(0.2, 0.1, 0.0) < 1e-10);

        let tiny = symmetric_reps_gamma_zero(1e-6, 2e-6, Branch::Minus).unwrap();
        assert_close(tiny.theta1p / 0.5e-6, 1.0, 1e-9);
        assert_close(tiny.eta1p / 1e-6, 1.0, 1e-9);

        assert!(matches!(symmetric_reps_gamma_zero(2.0, 1.0, Branch::Plus), Err(Error::Constraint(_))));
        assert!(matches!(symmetric_reps_gamma_zero(0.0, 1.0, Branch::Plus), Err(Error::ZeroParameter(_))));
    }

    #[test]
    fn time_reversed_image_examples() {
        let c = CanonicalState2D::new(1.0, 2.0, 3.0, 4.0);
        assert_eq!(time_reversed_images(&RepParams::IDENTITY, &c), PhaseState2D::new(1.0, 2.0, -3.0, -4.0));

        let sym = solve_general(0.1, 0.2, 0.005, Branch::Plus).unwrap();
        let img = time_reversed_images(&sym, &c);
        let e = sym.eps;
        let expected = [
            e * (c.x1 + sym.theta1p * c.p2),
            e * (c.x2 - sym.theta2p * c.p1),
            e * (-c.p1 + sym.eta1p * c.x2),
            e * (-c.p2 - sym.eta2p * c.x1),
        ];
        assert_eq!(img.to_array(), expected);

        let unit = CanonicalState2D::new(1.0, 0.0, 0.0, 1.0);
        let plus = time_reversed_images(&solve_general(0.2, 0.1, 0.004, Branch::Plus).unwrap(), &unit);
        let minus = time_reversed_images(&solve_general(0.2, 0.1, 0.004, Branch::Minus).unwrap(), &unit);
        assert!(plus.distance(&minus) > 1e-8);
    }
}
