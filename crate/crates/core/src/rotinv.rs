//! Rotationally and time-reversal invariant noncommutative algebra built on
//! an 18-dimensional canonical phase space `(x, p, a, pᵃ, b, pᵇ)`.
//!
//! The tensors of noncommutativity are built from auxiliary oscillator
//! momenta,
//!
//! ```text
//! θ_ij = c_θ ε_ijk pᵃ_k,   η_ij = c_η ε_ijk pᵇ_k,   γ_ij = Σ_k θ_ik η_jk / 4,
//! ```
//!
//! and are realised exactly by
//!
//! ```text
//! X = x + (c_θ/2) pᵃ × p,   P = p + (c_η/2) x × pᵇ,
//! ```
//!
//! giving `{X_i, X_j} = θ_ij`, `{P_i, P_j} = η_ij`, `{X_i, P_j} = δ_ij + γ_ij`.
//! Everything here is in units with ħ = 1.
//!
//! The older position-based variant `θ_ij = l₀ ε_ijk a_k`,
//! `η_ij = p₀ ε_ijk pᵇ_k` ([`TensorKind::Position`]) satisfies the same
//! relations but is not invariant under time reversal.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::autodiff::{seed, Scalar};
use crate::error::{Error, Result};
use crate::observable::{bracket_at, jacobi_sum, Canonical, Observable};
use crate::rk4;

pub type Vec3 = [f64; 3];
pub type Mat3 = [[f64; 3]; 3];

/// Offsets of the six 3-vectors inside the flat 18-component state.
pub mod layout {
    pub const X: usize = 0;
    pub const P: usize = 3;
    pub const A: usize = 6;
    pub const PA: usize = 9;
    pub const B: usize = 12;
    pub const PB: usize = 15;
    pub const MOMENTA: [usize; 3] = [P, PA, PB];
}

/// Canonical structure pairing `x↔p`, `a↔pᵃ`, `b↔pᵇ`.
pub const EXTENDED: Canonical = Canonical { block: 3 };

pub const ALGEBRA_TOL: f64 = 1e-12;
pub const JACOBI_TOL: f64 = 1e-9;
pub const ROTATION_TOL: f64 = 1e-12;
pub const T_INVARIANCE_TOL: f64 = 1e-12;
pub const REVERSAL_TOL: f64 = 1e-6;
pub const ENERGY_DRIFT_TOL: f64 = 1e-8;
const AXIS_TOL: f64 = 1e-12;
const ORIGIN_CUTOFF: f64 = 1e-9;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ExtendedState {
    pub x: Vec3,
    pub p: Vec3,
    pub a: Vec3,
    pub pa: Vec3,
    pub b: Vec3,
    pub pb: Vec3,
}

impl ExtendedState {
    pub fn to_array(&self) -> [f64; 18] {
        let mut u = [0.0; 18];
        for (offset, v) in [self.x, self.p, self.a, self.pa, self.b, self.pb].iter().enumerate() {
            u[3 * offset..3 * offset + 3].copy_from_slice(v);
        }
        u
    }

    pub fn from_array(u: &[f64; 18]) -> Self {
        let v = |o: usize| [u[o], u[o + 1], u[o + 2]];
        Self {
            x: v(layout::X),
            p: v(layout::P),
            a: v(layout::A),
            pa: v(layout::PA),
            b: v(layout::B),
            pb: v(layout::PB),
        }
    }

    pub fn distance(&self, other: &ExtendedState) -> f64 {
        self.to_array()
            .iter()
            .zip(other.to_array())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// Uniform components in `[-1, 1]`, with `|x| ≥ 0.5`.
    pub fn random<R: Rng>(rng: &mut R) -> Self {
        let mut v = || -> Vec3 { std::array::from_fn(|_| rng.gen_range(-1.0..1.0)) };
        let mut x = v();
        while norm(&x) < 0.5 {
            x = x.map(|c| c * 2.0 + 0.1);
        }
        Self { x, p: v(), a: v(), pa: v(), b: v(), pb: v() }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TensorKind {
    /// `θ` from `pᵃ`, `η` from `pᵇ`: flips sign under time reversal.
    #[default]
    Momentum,
    /// `θ` from `a`, `η` from `pᵇ`: `θ` is even under time reversal.
    Position,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TensorConfig {
    pub c_theta: f64,
    pub c_eta: f64,
    pub l0: f64,
    pub p0: f64,
    pub m_osc: f64,
    pub omega_osc: f64,
}

impl Default for TensorConfig {
    fn default() -> Self {
        Self { c_theta: 0.01, c_eta: 0.01, l0: 0.01, p0: 0.01, m_osc: 1.0, omega_osc: 1.0 }
    }
}

impl TensorConfig {
    pub fn validate(&self) -> Result<()> {
        let all = [self.c_theta, self.c_eta, self.l0, self.p0, self.m_osc, self.omega_osc];
        if !all.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidInput("tensor configuration must be finite".into()));
        }
        if !(self.m_osc > 0.0 && self.omega_osc > 0.0) {
            return Err(Error::InvalidInput("oscillator mass and frequency must be positive".into()));
        }
        Ok(())
    }

    /// Oscillator length `√(1/(m_osc ω_osc))`.
    pub fn l_p(&self) -> f64 {
        (self.m_osc * self.omega_osc).recip().sqrt()
    }

    /// `(θ coupling, θ source offset, η coupling)` for a tensor kind.
    fn couplings(&self, kind: TensorKind) -> (f64, usize, f64) {
        match kind {
            TensorKind::Momentum => (self.c_theta, layout::PA, self.c_eta),
            TensorKind::Position => (self.l0, layout::A, self.p0),
        }
    }

    /// Vectors `t`, `e` with `θ_ij = ε_ijk t_k`, `η_ij = ε_ijk e_k`.
    pub fn tensor_vectors<S: Scalar>(&self, kind: TensorKind, u: &[S; 18]) -> ([S; 3], [S; 3]) {
        let (ct, src, ce) = self.couplings(kind);
        (
            std::array::from_fn(|k| u[src + k] * ct),
            std::array::from_fn(|k| u[layout::PB + k] * ce),
        )
    }
}

pub fn levi_civita(i: usize, j: usize, k: usize) -> f64 {
    match (i, j, k) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

pub fn cross<S: Scalar>(a: &[S; 3], b: &[S; 3]) -> [S; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &Vec3) -> f64 {
    dot(a, a).sqrt()
}

fn block<S: Scalar>(u: &[S; 18], offset: usize) -> [S; 3] {
    [u[offset], u[offset + 1], u[offset + 2]]
}

/// `ε_ijk v_k` as a matrix.
fn dual_matrix(v: &Vec3) -> Mat3 {
    std::array::from_fn(|i| std::array::from_fn(|j| (0..3).map(|k| levi_civita(i, j, k) * v[k]).sum()))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NCTensors {
    pub theta: Mat3,
    pub eta: Mat3,
    pub gamma: Mat3,
}

fn tensors(cfg: &TensorConfig, kind: TensorKind, s: &ExtendedState) -> NCTensors {
    let (t, e) = cfg.tensor_vectors(kind, &s.to_array());
    let theta = dual_matrix(&t);
    let eta = dual_matrix(&e);
    let gamma = std::array::from_fn(|i| std::array::from_fn(|j| (0..3).map(|k| theta[i][k] * eta[j][k]).sum::<f64>() / 4.0));
    NCTensors { theta, eta, gamma }
}

/// Momentum-built tensors `θ_ij = c_θ ε_ijk pᵃ_k`, `η_ij = c_η ε_ijk pᵇ_k`.
pub fn tensors_from_state(cfg: &TensorConfig, s: &ExtendedState) -> NCTensors {
    tensors(cfg, TensorKind::Momentum, s)
}

/// Position-built tensors `θ_ij = l₀ ε_ijk a_k`, `η_ij = p₀ ε_ijk pᵇ_k`.
pub fn tensors_alternative(cfg: &TensorConfig, s: &ExtendedState) -> NCTensors {
    tensors(cfg, TensorKind::Position, s)
}

pub fn tensors_of_kind(cfg: &TensorConfig, kind: TensorKind, s: &ExtendedState) -> NCTensors {
    tensors(cfg, kind, s)
}

/// `X = x + ½ t × p`, `P = p + ½ x × e` for the tensor vectors `t`, `e`.
pub fn nc_coordinates_generic<S: Scalar>(cfg: &TensorConfig, kind: TensorKind, u: &[S; 18]) -> ([S; 3], [S; 3]) {
    let (t, e) = cfg.tensor_vectors(kind, u);
    let x = block(u, layout::X);
    let p = block(u, layout::P);
    let tp = cross(&t, &p);
    let xe = cross(&x, &e);
    (
        std::array::from_fn(|i| x[i] + tp[i] * 0.5),
        std::array::from_fn(|i| p[i] + xe[i] * 0.5),
    )
}

/// `(X, P)` for the momentum-built algebra.
pub fn nc_coordinates(cfg: &TensorConfig, s: &ExtendedState) -> (Vec3, Vec3) {
    nc_coordinates_generic(cfg, TensorKind::Momentum, &s.to_array())
}

/// `(X, P)` for the position-built algebra.
pub fn nc_coordinates_alternative(cfg: &TensorConfig, s: &ExtendedState) -> (Vec3, Vec3) {
    nc_coordinates_generic(cfg, TensorKind::Position, &s.to_array())
}

/// Generators of the algebra as observables on the extended space.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Generator {
    X(usize),
    P(usize),
    Raw(usize),
    Theta(usize, usize),
    Eta(usize, usize),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AlgebraObservable {
    pub cfg: TensorConfig,
    pub kind: TensorKind,
    pub generator: Generator,
}

impl Observable<18> for AlgebraObservable {
    fn eval<S: Scalar>(&self, u: &[S; 18]) -> S {
        match self.generator {
            Generator::X(i) => nc_coordinates_generic(&self.cfg, self.kind, u).0[i],
            Generator::P(i) => nc_coordinates_generic(&self.cfg, self.kind, u).1[i],
            Generator::Raw(i) => u[i],
            Generator::Theta(i, j) | Generator::Eta(i, j) => {
                let (t, e) = self.cfg.tensor_vectors(self.kind, u);
                let v = if matches!(self.generator, Generator::Theta(..)) { t } else { e };
                (0..3).fold(S::zero(), |acc, k| acc + v[k] * levi_civita(i, j, k))
            }
        }
    }
}

/// Observable evaluated on the time-reversed point, optionally negated.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Reversed<F> {
    pub inner: F,
    pub odd: bool,
}

impl<F: Observable<18>> Observable<18> for Reversed<F> {
    fn eval<S: Scalar>(&self, u: &[S; 18]) -> S {
        let mut v = *u;
        for offset in layout::MOMENTA {
            for c in &mut v[offset..offset + 3] {
                *c = -*c;
            }
        }
        let out = self.inner.eval(&v);
        if self.odd {
            -out
        } else {
            out
        }
    }
}

/// Canonical bracket over the nine conjugate pairs.
pub fn bracket_extended<F, G>(f: &F, g: &G, s: &ExtendedState) -> Result<f64>
where
    F: Observable<18>,
    G: Observable<18>,
{
    bracket_at(f, g, &EXTENDED, &s.to_array())
}

/// Maximum residuals of the three defining relations and of the
/// equivalence condition `{θ_ij, X_k} = {θ_ij, P_k} = {η_ij, X_k} = {η_ij, P_k} = 0`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AlgebraResiduals {
    pub xx: f64,
    pub pp: f64,
    pub xp: f64,
    pub equivalence: f64,
}

impl AlgebraResiduals {
    pub fn max(&self) -> f64 {
        self.xx.max(self.pp).max(self.xp).max(self.equivalence)
    }

    fn max_gap(&self, other: &AlgebraResiduals) -> f64 {
        (self.xx - other.xx)
            .abs()
            .max((self.pp - other.pp).abs())
            .max((self.xp - other.xp).abs())
            .max((self.equivalence - other.equivalence).abs())
    }
}

/// Bracket table `{X_i,X_j}`, `{P_i,P_j}`, `{X_i,P_j}` from the
/// extended-space canonical bracket.
fn bracket_table<F, G>(xs: &[F; 3], ps: &[G; 3], s: &ExtendedState) -> Result<[Mat3; 3]>
where
    F: Observable<18>,
    G: Observable<18>,
{
    let mut out = [[[0.0; 3]; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[0][i][j] = bracket_extended(&xs[i], &xs[j], s)?;
            out[1][i][j] = bracket_extended(&ps[i], &ps[j], s)?;
            out[2][i][j] = bracket_extended(&xs[i], &ps[j], s)?;
        }
    }
    Ok(out)
}

/// Expected `(θ_ij, η_ij, δ_ij + ¼((t·e)δ_ij − t_j e_i))`.
fn expected_table(cfg: &TensorConfig, kind: TensorKind, s: &ExtendedState) -> [Mat3; 3] {
    let (t, e) = cfg.tensor_vectors(kind, &s.to_array());
    let te = dot(&t, &e);
    let delta = |i: usize, j: usize| if i == j { 1.0 } else { 0.0 };
    [
        dual_matrix(&t),
        dual_matrix(&e),
        std::array::from_fn(|i| std::array::from_fn(|j| delta(i, j) + 0.25 * (te * delta(i, j) - t[j] * e[i]))),
    ]
}

fn max_abs_diff(a: &Mat3, b: &Mat3) -> f64 {
    (0..3)
        .flat_map(|i| (0..3).map(move |j| (i, j)))
        .map(|(i, j)| (a[i][j] - b[i][j]).abs())
        .fold(0.0, f64::max)
}

fn generators(cfg: &TensorConfig, kind: TensorKind) -> ([AlgebraObservable; 3], [AlgebraObservable; 3]) {
    let obs = |generator| AlgebraObservable { cfg: *cfg, kind, generator };
    (
        std::array::from_fn(|i| obs(Generator::X(i))),
        std::array::from_fn(|i| obs(Generator::P(i))),
    )
}

pub fn verify_algebra_of_kind(cfg: &TensorConfig, kind: TensorKind, s: &ExtendedState) -> Result<AlgebraResiduals> {
    let (xs, ps) = generators(cfg, kind);
    let got = bracket_table(&xs, &ps, s)?;
    let want = expected_table(cfg, kind, s);

    let obs = |generator| AlgebraObservable { cfg: *cfg, kind, generator };
    let mut equivalence = 0.0_f64;
    for i in 0..3 {
        for j in 0..3 {
            for tensor in [obs(Generator::Theta(i, j)), obs(Generator::Eta(i, j))] {
                for k in 0..3 {
                    equivalence = equivalence
                        .max(bracket_extended(&tensor, &xs[k], s)?.abs())
                        .max(bracket_extended(&tensor, &ps[k], s)?.abs());
                }
            }
        }
    }
    Ok(AlgebraResiduals {
        xx: max_abs_diff(&got[0], &want[0]),
        pp: max_abs_diff(&got[1], &want[1]),
        xp: max_abs_diff(&got[2], &want[2]),
        equivalence,
    })
}

/// Residuals of the momentum-built algebra at `s`.
pub fn verify_algebra(cfg: &TensorConfig, s: &ExtendedState) -> Result<AlgebraResiduals> {
    verify_algebra_of_kind(cfg, TensorKind::Momentum, s)
}

/// `|{A,{B,C}} + {B,{C,A}} + {C,{A,B}}|` with the extended canonical bracket.
pub fn jacobi_check<A, B, C>(s: &ExtendedState, triple: (&A, &B, &C)) -> Result<f64>
where
    A: Observable<18>,
    B: Observable<18>,
    C: Observable<18>,
{
    Ok(jacobi_sum(triple.0, triple.1, triple.2, &EXTENDED, &s.to_array())?.abs())
}

/// Rodrigues rotation matrix for a unit `axis`.
pub fn rotation_matrix(axis: &Vec3, angle: f64) -> Result<Mat3> {
    let n = norm(axis);
    if !((n - 1.0).abs() <= AXIS_TOL) {
        return Err(Error::NonUnitAxis { norm: n });
    }
    let (s, c) = angle.sin_cos();
    let k = dual_matrix(axis).map(|row| row.map(|v| -v));
    // R = I + sin φ K + (1 − cos φ) K², K = [n]ₓ
    let k2: Mat3 = std::array::from_fn(|i| std::array::from_fn(|j| (0..3).map(|m| k[i][m] * k[m][j]).sum()));
    Ok(std::array::from_fn(|i| {
        std::array::from_fn(|j| if i == j { 1.0 } else { 0.0 } + s * k[i][j] + (1.0 - c) * k2[i][j])
    }))
}

pub fn apply(r: &Mat3, v: &Vec3) -> Vec3 {
    std::array::from_fn(|i| dot(&r[i], v))
}

/// Same proper rotation applied to all six 3-vectors.
pub fn rotate_extended(s: &ExtendedState, axis: &Vec3, angle: f64) -> Result<ExtendedState> {
    let r = rotation_matrix(axis, angle)?;
    Ok(ExtendedState {
        x: apply(&r, &s.x),
        p: apply(&r, &s.p),
        a: apply(&r, &s.a),
        pa: apply(&r, &s.pa),
        b: apply(&r, &s.b),
        pb: apply(&r, &s.pb),
    })
}

/// `x, a, b` unchanged; `p, pᵃ, pᵇ` negated.
pub fn time_reverse_extended(s: &ExtendedState) -> ExtendedState {
    let neg = |v: Vec3| v.map(|c| -c);
    ExtendedState { x: s.x, p: neg(s.p), a: s.a, pa: neg(s.pa), b: s.b, pb: neg(s.pb) }
}

/// `P²/2m − k/|X| + H_osc(a, pᵃ) + H_osc(b, pᵇ)` with `(X, P)` from the
/// chosen representation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TotalHamiltonian {
    pub cfg: TensorConfig,
    pub kind: TensorKind,
    pub m: f64,
    pub k: f64,
}

impl TotalHamiltonian {
    pub fn new(cfg: TensorConfig, m: f64, k: f64) -> Self {
        Self { cfg, kind: TensorKind::Momentum, m, k }
    }

    /// `|X|` of the embedded particle.
    pub fn radius(&self, u: &[f64; 18]) -> f64 {
        let (x, _) = nc_coordinates_generic(&self.cfg, self.kind, u);
        norm(&x)
    }
}

/// Kepler part `P²/2m − k/|X|`.
pub fn system_energy<S: Scalar>(cfg: &TensorConfig, kind: TensorKind, m: f64, k: f64, u: &[S; 18]) -> S {
    let (x, p) = nc_coordinates_generic(cfg, kind, u);
    let p2 = p[0] * p[0] + p[1] * p[1] + p[2] * p[2];
    let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
    p2 / (2.0 * m) - r.recip() * k
}

impl Observable<18> for TotalHamiltonian {
    fn eval<S: Scalar>(&self, u: &[S; 18]) -> S {
        let (m_osc, w) = (self.cfg.m_osc, self.cfg.omega_osc);
        let oscillator = |q: usize, mom: usize| {
            let mut acc = S::zero();
            for i in 0..3 {
                acc = acc + u[mom + i] * u[mom + i] / (2.0 * m_osc) + u[q + i] * u[q + i] * (0.5 * m_osc * w * w);
            }
            acc
        };
        system_energy(&self.cfg, self.kind, self.m, self.k, u)
            + oscillator(layout::A, layout::PA)
            + oscillator(layout::B, layout::PB)
    }
}

pub fn total_hamiltonian(cfg: &TensorConfig, s: &ExtendedState, m: f64, k: f64) -> Result<f64> {
    let h = TotalHamiltonian::new(*cfg, m, k);
    let u = s.to_array();
    let r = h.radius(&u);
    if !(r >= 1e-12) {
        return Err(Error::OriginSingularity { radius: r });
    }
    Ok(h.value(&u))
}

/// Hamilton's equations `q̇ = ∂H/∂p`, `ṗ = −∂H/∂q` for the canonical pairs.
pub fn extended_rhs(h: &TotalHamiltonian, u: &[f64; 18]) -> Result<[f64; 18]> {
    let r = h.radius(u);
    if !(r >= ORIGIN_CUTOFF) {
        return Err(Error::OriginSingularity { radius: r });
    }
    let out = h.eval(&seed(u));
    if !out.is_finite() {
        return Err(Error::DerivativeFailure);
    }
    let g = out.eps;
    let mut d = [0.0; 18];
    for q in [layout::X, layout::A, layout::B] {
        for i in 0..3 {
            d[q + i] = g[q + 3 + i];
            d[q + 3 + i] = -g[q + i];
        }
    }
    Ok(d)
}

/// Final state after exactly `tau`, plus the largest relative energy drift seen.
pub fn propagate_extended(h: &TotalHamiltonian, s0: &ExtendedState, tau: f64, dt: f64) -> Result<(ExtendedState, f64)> {
    let (n, step) = rk4::steps_for(tau, dt)?;
    let mut u = s0.to_array();
    let e0 = h.value(&u);
    let mut drift = 0.0_f64;
    let mut rhs = |v: &[f64; 18]| extended_rhs(h, v);
    for _ in 0..n {
        u = rk4::step(&mut rhs, &u, step)?;
        drift = drift.max((h.value(&u) - e0).abs() / e0.abs());
    }
    Ok((ExtendedState::from_array(&u), drift))
}

fn reversal_with(h: &TotalHamiltonian, s0: &ExtendedState, tau: f64, dt: f64) -> Result<f64> {
    let (mid, _) = propagate_extended(h, s0, tau, dt)?;
    let (back, _) = propagate_extended(h, &time_reverse_extended(&mid), tau, dt)?;
    Ok(time_reverse_extended(&back).distance(s0))
}

/// Forward `tau`, reverse, forward `tau`, reverse; distance from `s0`.
pub fn reversal_experiment_extended(
    cfg: &TensorConfig,
    s0: &ExtendedState,
    m: f64,
    k: f64,
    tau: f64,
    dt: f64,
) -> Result<f64> {
    reversal_with(&TotalHamiltonian::new(*cfg, m, k), s0, tau, dt)
}

/// Same experiment for either tensor kind.
pub fn reversal_experiment_extended_of_kind(
    cfg: &TensorConfig,
    kind: TensorKind,
    s0: &ExtendedState,
    m: f64,
    k: f64,
    tau: f64,
    dt: f64,
) -> Result<f64> {
    reversal_with(&TotalHamiltonian { cfg: *cfg, kind, m, k }, s0, tau, dt)
}

/// Embedded circular Kepler orbit in the `x₁x₂` plane (m = k = 1, unit
/// radius) with oscillators displaced by a fraction of their length scale.
pub fn reference_state(cfg: &TensorConfig) -> ExtendedState {
    let l = cfg.l_p();
    ExtendedState {
        x: [1.0, 0.0, 0.0],
        p: [0.0, 1.0, 0.0],
        a: [0.3 * l, -0.2 * l, 0.1 * l],
        pa: [0.2 / l, 0.5 / l, -0.4 / l],
        b: [-0.1 * l, 0.25 * l, 0.2 * l],
        pb: [-0.3 / l, 0.1 / l, 0.6 / l],
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TInvarianceResiduals {
    /// `max(|X(Ts) − X(s)|, |P(Ts) + P(s)|)`
    pub coordinates: f64,
    /// `max(|θ(Ts) + θ(s)|, |η(Ts) + η(s)|, |γ(Ts) − γ(s)|)`
    pub tensors: f64,
    /// Gap between algebra residuals at `Ts` and at `s`.
    pub algebra: f64,
    /// Brackets of the reversed generators `X∘T`, `−P∘T` against the
    /// untransformed relations.
    pub brackets: f64,
    /// `|H(Ts) − H(s)|`
    pub hamiltonian: f64,
}

impl TInvarianceResiduals {
    pub fn max(&self) -> f64 {
        self.coordinates
            .max(self.tensors)
            .max(self.algebra)
            .max(self.brackets)
            .max(self.hamiltonian)
    }
}

pub fn t_invariance_residuals(cfg: &TensorConfig, kind: TensorKind, s: &ExtendedState) -> Result<TInvarianceResiduals> {
    let ts = time_reverse_extended(s);
    let u = s.to_array();
    let tu = ts.to_array();

    let (x, p) = nc_coordinates_generic(cfg, kind, &u);
    let (tx, tp) = nc_coordinates_generic(cfg, kind, &tu);
    let coordinates = (0..3).map(|i| (tx[i] - x[i]).abs().max((tp[i] + p[i]).abs())).fold(0.0, f64::max);

    let t0 = tensors(cfg, kind, s);
    let t1 = tensors(cfg, kind, &ts);
    let neg = |m: &Mat3| m.map(|row| row.map(|v| -v));
    let tensors_res = max_abs_diff(&t1.theta, &neg(&t0.theta))
        .max(max_abs_diff(&t1.eta, &neg(&t0.eta)))
        .max(max_abs_diff(&t1.gamma, &t0.gamma));

    let algebra = verify_algebra_of_kind(cfg, kind, &ts)?.max_gap(&verify_algebra_of_kind(cfg, kind, s)?);

    let (xs, ps) = generators(cfg, kind);
    let rx = xs.map(|g| Reversed { inner: g, odd: false });
    let rp = ps.map(|g| Reversed { inner: g, odd: true });
    let got = bracket_table(&rx, &rp, s)?;
    let want = expected_table(cfg, kind, s);
    let brackets = (0..3).map(|r| max_abs_diff(&got[r], &want[r])).fold(0.0, f64::max);

    let h = TotalHamiltonian { cfg: *cfg, kind, m: 1.0, k: 1.0 };
    let hamiltonian = (h.value(&tu) - h.value(&u)).abs();

    Ok(TInvarianceResiduals { coordinates, tensors: tensors_res, algebra, brackets, hamiltonian })
}

/// Rotation residuals: vector transformation of `(X, P)`, tensor
/// transformation `θ → RθRᵀ`, and invariance of the total Hamiltonian.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RotationResiduals {
    pub equivariance: f64,
    pub hamiltonian: f64,
    /// `verify_algebra` maximum at the rotated state.
    pub rotated_algebra: f64,
}

pub fn rotation_residuals(
    cfg: &TensorConfig,
    kind: TensorKind,
    s: &ExtendedState,
    axis: &Vec3,
    angle: f64,
) -> Result<RotationResiduals> {
    let r = rotation_matrix(axis, angle)?;
    let rs = rotate_extended(s, axis, angle)?;
    let (x, p) = nc_coordinates_generic(cfg, kind, &s.to_array());
    let (rx, rp) = nc_coordinates_generic(cfg, kind, &rs.to_array());
    let (x_rot, p_rot) = (apply(&r, &x), apply(&r, &p));
    let mut equivariance = (0..3).map(|i| (rx[i] - x_rot[i]).abs().max((rp[i] - p_rot[i]).abs())).fold(0.0, f64::max);

    let conj = |m: &Mat3| -> Mat3 {
        std::array::from_fn(|i| {
            std::array::from_fn(|j| (0..3).flat_map(|a| (0..3).map(move |b| (a, b))).map(|(a, b)| r[i][a] * m[a][b] * r[j][b]).sum())
        })
    };
    let t0 = tensors(cfg, kind, s);
    let t1 = tensors(cfg, kind, &rs);
    equivariance = equivariance
        .max(max_abs_diff(&t1.theta, &conj(&t0.theta)))
        .max(max_abs_diff(&t1.eta, &conj(&t0.eta)))
        .max(max_abs_diff(&t1.gamma, &conj(&t0.gamma)));

    let h = TotalHamiltonian { cfg: *cfg, kind, m: 1.0, k: 1.0 };
    let hamiltonian = (h.value(&rs.to_array()) - h.value(&s.to_array())).abs();
    let rotated_algebra = verify_algebra_of_kind(cfg, kind, &rs)?.max();
    Ok(RotationResiduals { equivariance, hamiltonian, rotated_algebra })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifySettings {
    pub cfg: TensorConfig,
    pub kind: TensorKind,
    pub draws: usize,
    pub seed: u64,
    /// Draw couplings per sample instead of using `cfg` as is.
    pub randomize_config: bool,
    /// Run the forward–reverse–forward experiment on [`reference_state`].
    pub reversal: bool,
}

impl Default for VerifySettings {
    fn default() -> Self {
        Self {
            cfg: TensorConfig::default(),
            kind: TensorKind::Momentum,
            draws: 100,
            seed: 0,
            randomize_config: false,
            reversal: true,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub algebra: f64,
    pub jacobi: f64,
    pub rotation: f64,
    pub t_invariance: f64,
    pub reversal: f64,
    pub energy_drift: f64,
}

pub const TOLERANCES: Tolerances = Tolerances {
    algebra: ALGEBRA_TOL,
    jacobi: JACOBI_TOL,
    rotation: ROTATION_TOL,
    t_invariance: T_INVARIANCE_TOL,
    reversal: REVERSAL_TOL,
    energy_drift: ENERGY_DRIFT_TOL,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub draws: usize,
    pub seed: u64,
    pub tensors: TensorKind,
    pub algebra: AlgebraResiduals,
    pub jacobi: f64,
    pub rotation: RotationResiduals,
    pub t_invariance: TInvarianceResiduals,
    pub reversal_distance: Option<f64>,
    pub energy_drift: Option<f64>,
    pub tolerances: Tolerances,
    pub failures: Vec<String>,
    pub flags: Vec<String>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

#[derive(Clone, Copy, Debug, Default)]
struct DrawResult {
    algebra: AlgebraResiduals,
    jacobi: f64,
    rotation: RotationResiduals,
    t_invariance: TInvarianceResiduals,
}

fn combine(a: DrawResult, b: DrawResult) -> DrawResult {
    DrawResult {
        algebra: AlgebraResiduals {
            xx: a.algebra.xx.max(b.algebra.xx),
            pp: a.algebra.pp.max(b.algebra.pp),
            xp: a.algebra.xp.max(b.algebra.xp),
            equivalence: a.algebra.equivalence.max(b.algebra.equivalence),
        },
        jacobi: a.jacobi.max(b.jacobi),
        rotation: RotationResiduals {
            equivariance: a.rotation.equivariance.max(b.rotation.equivariance),
            hamiltonian: a.rotation.hamiltonian.max(b.rotation.hamiltonian),
            rotated_algebra: a.rotation.rotated_algebra.max(b.rotation.rotated_algebra),
        },
        t_invariance: TInvarianceResiduals {
            coordinates: a.t_invariance.coordinates.max(b.t_invariance.coordinates),
            tensors: a.t_invariance.tensors.max(b.t_invariance.tensors),
            algebra: a.t_invariance.algebra.max(b.t_invariance.algebra),
            brackets: a.t_invariance.brackets.max(b.t_invariance.brackets),
            hamiltonian: a.t_invariance.hamiltonian.max(b.t_invariance.hamiltonian),
        },
    }
}

/// Random couplings in `[-0.5, 0.5]`, oscillator scales in `[0.5, 2]`.
pub fn random_config<R: Rng>(rng: &mut R) -> TensorConfig {
    TensorConfig {
        c_theta: rng.gen_range(-0.5..0.5),
        c_eta: rng.gen_range(-0.5..0.5),
        l0: rng.gen_range(-0.5..0.5),
        p0: rng.gen_range(-0.5..0.5),
        m_osc: rng.gen_range(0.5..2.0),
        omega_osc: rng.gen_range(0.5..2.0),
    }
}

pub fn random_unit_vector<R: Rng>(rng: &mut R) -> Vec3 {
    loop {
        let v: Vec3 = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        let n = norm(&v);
        if n > 0.1 && n <= 1.0 {
            return v.map(|c| c / n);
        }
    }
}

/// Independent generator for draw `index`.
pub fn draw_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn one_draw(settings: &VerifySettings, index: usize) -> Result<DrawResult> {
    let mut rng = draw_rng(settings.seed, index as u64);
    let cfg = if settings.randomize_config { random_config(&mut rng) } else { settings.cfg };
    let kind = settings.kind;
    let s = ExtendedState::random(&mut rng);

    let mut pick = || {
        let generator = match rng.gen_range(0..4) {
            0 => Generator::X(rng.gen_range(0..3)),
            1 => Generator::P(rng.gen_range(0..3)),
            2 => Generator::Raw(layout::A + rng.gen_range(0..3)),
            _ => Generator::Raw(layout::PA + rng.gen_range(0..3)),
        };
        AlgebraObservable { cfg, kind, generator }
    };
    let (a, b, c) = (pick(), pick(), pick());
    let jacobi = jacobi_check(&s, (&a, &b, &c))?;

    let axis = random_unit_vector(&mut rng);
    let angle = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);

    Ok(DrawResult {
        algebra: verify_algebra_of_kind(&cfg, kind, &s)?,
        jacobi,
        rotation: rotation_residuals(&cfg, kind, &s, &axis, angle)?,
        t_invariance: t_invariance_residuals(&cfg, kind, &s)?,
    })
}

/// Random-draw verification of the algebra, Jacobi identity, rotation
/// equivariance and time-reversal invariance, plus the reversal experiment.
pub fn verify_batch(settings: &VerifySettings) -> Result<VerifyReport> {
    settings.cfg.validate()?;
    if settings.draws == 0 {
        return Err(Error::InvalidInput("draw count must be positive".into()));
    }
    let draws: Vec<DrawResult> = (0..settings.draws)
        .into_par_iter()
        .map(|i| one_draw(settings, i))
        .collect::<Result<_>>()?;
    let agg = draws.into_iter().fold(DrawResult::default(), combine);

    let (reversal_distance, energy_drift) = if settings.reversal {
        let h = TotalHamiltonian { cfg: settings.cfg, kind: settings.kind, m: 1.0, k: 1.0 };
        let s0 = reference_state(&settings.cfg);
        let tau = std::f64::consts::TAU;
        let dt = tau * 1e-4;
        let (_, drift) = propagate_extended(&h, &s0, tau, dt)?;
        (Some(reversal_with(&h, &s0, tau, dt)?), Some(drift))
    } else {
        (None, None)
    };

    let tol = TOLERANCES;
    let mut failures = Vec::new();
    let mut check = |name: &str, value: f64, limit: f64| {
        if !(value < limit) {
            failures.push(format!("{name}: {value:e} >= {limit:e}"));
        }
    };
    check("algebra", agg.algebra.max(), tol.algebra);
    check("jacobi", agg.jacobi, tol.jacobi);
    check("rotation_equivariance", agg.rotation.equivariance, tol.rotation);
    check("rotation_hamiltonian", agg.rotation.hamiltonian, tol.rotation);
    check("rotated_algebra", agg.rotation.rotated_algebra, tol.algebra);
    check("t_invariance_algebra", agg.t_invariance.algebra, tol.t_invariance);
    if let Some(d) = energy_drift {
        check("energy_drift", d, tol.energy_drift);
    }

    let mut flags = Vec::new();
    match settings.kind {
        TensorKind::Momentum => {
            check("t_invariance", agg.t_invariance.max(), tol.t_invariance);
            if let Some(d) = reversal_distance {
                check("reversal_distance", d, tol.reversal);
            }
        }
        TensorKind::Position => {
            let broken = agg.t_invariance.brackets > tol.t_invariance || agg.t_invariance.tensors > tol.t_invariance;
            if broken {
                flags.push("EXPECTED_BREAKING".to_string());
            } else {
                failures.push("position-built tensors unexpectedly time-reversal invariant".to_string());
            }
        }
    }

    Ok(VerifyReport {
        draws: settings.draws,
        seed: settings.seed,
        tensors: settings.kind,
        algebra: agg.algebra,
        jacobi: agg.jacobi,
        rotation: agg.rotation,
        t_invariance: agg.t_invariance,
        reversal_distance,
        energy_drift,
        tolerances: tol,
        failures,
        flags,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_state() -> ExtendedState {
        ExtendedState::random(&mut draw_rng(7, 0))
    }

    fn cfg(c_theta: f64, c_eta: f64) -> TensorConfig {
        TensorConfig { c_theta, c_eta, ..TensorConfig::default() }
    }

    #[test]
    fn layout_round_trip() {
        let s = sample_state();
        assert_eq!(ExtendedState::from_array(&s.to_array()), s);
        assert_eq!(s.to_array()[layout::PB + 2], s.pb[2]);
    }

    #[test]
    fn tensor_examples() {
        let zero = tensors_from_state(&cfg(1.0, 1.0), &ExtendedState { x: [1.0, 2.0, 3.0], ..Default::default() });
        assert_eq!(zero.theta, [[0.0; 3]; 3]);
        assert_eq!(zero.gamma, [[0.0; 3]; 3]);

        let s = ExtendedState { pa: [0.0, 0.0, 1.0], ..Default::default() };
        let t = tensors_from_state(&cfg(1.0, 0.0), &s);
        assert_eq!(t.theta, [[0.0, 1.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 0.0, 0.0]]);

        let s = sample_state();
        let t = tensors_from_state(&cfg(0.3, -0.7), &s);
        for i in 0..3 {
            for j in 0..3 {
                assert!((t.theta[i][j] + t.theta[j][i]).abs() < 1e-15);
                assert!((t.eta[i][j] + t.eta[j][i]).abs() < 1e-15);
            }
        }
        let alt = tensors_alternative(&TensorConfig::default(), &ExtendedState { x: [1.0, 0.0, 0.0], ..Default::default() });
        assert_eq!(alt.theta, [[0.0; 3]; 3]);
        assert_eq!(alt.eta, [[0.0; 3]; 3]);
    }

    #[test]
    fn nc_coordinate_examples() {
        let s = sample_state();
        let (x, p) = nc_coordinates(&cfg(0.0, 0.0), &s);
        assert_eq!((x, p), (s.x, s.p));

        let s = ExtendedState { x: [1.0, 0.0, 0.0], p: [0.0, 1.0, 0.0], pa: [0.0, 0.0, 1.0], ..Default::default() };
        let (x, _) = nc_coordinates(&cfg(0.1, 0.0), &s);
        assert!((x[0] - 0.95).abs() < 1e-15 && x[1] == 0.0 && x[2] == 0.0);
    }

    #[test]
    fn extended_bracket_examples() {
        let s = sample_state();
        let raw = |i| AlgebraObservable { cfg: TensorConfig::default(), kind: TensorKind::Momentum, generator: Generator::Raw(i) };
        assert_eq!(bracket_extended(&raw(layout::X), &raw(layout::P), &s).unwrap(), 1.0);
        assert_eq!(bracket_extended(&raw(layout::A + 1), &raw(layout::PB + 1), &s).unwrap(), 0.0);

        let c = cfg(0.37, 0.2);
        let x = |i| AlgebraObservable { cfg: c, kind: TensorKind::Momentum, generator: Generator::X(i) };
        let got = bracket_extended(&x(0), &x(1), &s).unwrap();
        assert!((got - 0.37 * s.pa[2]).abs() < 1e-15);
    }

    #[test]
    fn algebra_holds_exactly() {
        let s = sample_state();
        assert!(verify_algebra(&cfg(0.0, 0.0), &s).unwrap().max() < 1e-15);
        let r = verify_algebra(&cfg(0.4, -0.3), &s).unwrap();
        assert!(r.max() < 1e-12, "{r:?}");
        let alt = verify_algebra_of_kind(&TensorConfig { l0: 0.3, p0: 0.2, ..TensorConfig::default() }, TensorKind::Position, &s)
            .unwrap();
        assert!(alt.max() < 1e-12, "{alt:?}");
    }

    #[test]
    fn jacobi_examples() {
        let s = sample_state();
        let c = cfg(0.4, 0.25);
        let obs = |generator| AlgebraObservable { cfg: c, kind: TensorKind::Momentum, generator };
        let canon = jacobi_check(&s, (&obs(Generator::Raw(0)), &obs(Generator::Raw(3)), &obs(Generator::Raw(1)))).unwrap();
        assert!(canon < 1e-12);
        let xxx = jacobi_check(&s, (&obs(Generator::X(0)), &obs(Generator::X(1)), &obs(Generator::X(2)))).unwrap();
        assert!(xxx < 1e-9);
        let xpx = jacobi_check(&s, (&obs(Generator::X(0)), &obs(Generator::P(0)), &obs(Generator::X(1)))).unwrap();
        assert!(xpx < 1e-9);
    }

    #[test]
    fn rotation_examples() {
        let s = sample_state();
        let axis = [0.0, 0.6, 0.8];
        assert_eq!(rotate_extended(&s, &axis, 0.0).unwrap(), s);
        let full = rotate_extended(&s, &axis, std::f64::consts::TAU).unwrap();
        assert!(full.distance(&s) < 1e-12);
        assert!(matches!(rotate_extended(&s, &[1.0, 1.0, 0.0], 0.3), Err(Error::NonUnitAxis { .. })));

        // quarter turn about z sends e1 to e2
        let r = rotation_matrix(&[0.0, 0.0, 1.0], std::f64::consts::FRAC_PI_2).unwrap();
        let e = apply(&r, &[1.0, 0.0, 0.0]);
        assert!((e[0]).abs() < 1e-15 && (e[1] - 1.0).abs() < 1e-15);

        let res = rotation_residuals(&cfg(0.3, 0.2), TensorKind::Momentum, &s, &axis, 1.1).unwrap();
        assert!(res.equivariance < 1e-12 && res.hamiltonian < 1e-12 && res.rotated_algebra < 1e-12, "{res:?}");
    }

    #[test]
    fn time_reversal_examples() {
        let s = sample_state();
        assert_eq!(time_reverse_extended(&time_reverse_extended(&s)), s);
        let c = cfg(0.3, 0.2);
        let (x, p) = nc_coordinates(&c, &s);
        let (tx, tp) = nc_coordinates(&c, &time_reverse_extended(&s));
        for i in 0..3 {
            assert!((tx[i] - x[i]).abs() < 1e-15 && (tp[i] + p[i]).abs() < 1e-15);
        }
        let res = t_invariance_residuals(&c, TensorKind::Momentum, &s).unwrap();
        assert!(res.max() < 1e-12, "{res:?}");

        let alt = t_invariance_residuals(&TensorConfig { l0: 0.3, p0: 0.2, ..c }, TensorKind::Position, &s).unwrap();
        assert!(alt.brackets > 1e-3 && alt.tensors > 1e-3, "{alt:?}");
    }

    #[test]
    fn hamiltonian_examples() {
        let s = ExtendedState { x: [2.0, 0.0, 0.0], p: [0.0, 0.5, 0.0], ..Default::default() };
        let h = total_hamiltonian(&cfg(0.0, 0.0), &s, 1.0, 1.0).unwrap();
        assert!((h - (0.125 - 0.5)).abs() < 1e-15);

        let s = sample_state();
        let c = cfg(0.3, 0.2);
        let h0 = total_hamiltonian(&c, &s, 1.3, 0.7).unwrap();
        let ht = total_hamiltonian(&c, &time_reverse_extended(&s), 1.3, 0.7).unwrap();
        assert!((h0 - ht).abs() < 1e-12);
        let hr = total_hamiltonian(&c, &rotate_extended(&s, &[0.6, 0.0, -0.8], 2.2).unwrap(), 1.3, 0.7).unwrap();
        assert!((h0 - hr).abs() < 1e-12);
        assert!(matches!(total_hamiltonian(&c, &ExtendedState::default(), 1.0, 1.0), Err(Error::OriginSingularity { .. })));
    }

    #[test]
    fn rhs_matches_bracket_flow() {
        let s = sample_state();
        let h = TotalHamiltonian::new(cfg(0.3, 0.2), 1.0, 1.0);
        let rhs = extended_rhs(&h, &s.to_array()).unwrap();
        let raw = |i| AlgebraObservable { cfg: h.cfg, kind: h.kind, generator: Generator::Raw(i) };
        for i in 0..18 {
            let flow = bracket_extended(&raw(i), &h, &s).unwrap();
            assert!((flow - rhs[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn commutative_reversal_is_clean() {
        let c = cfg(0.0, 0.0);
        let d = reversal_experiment_extended(&c, &reference_state(&c), 1.0, 1.0, 1.0, 1e-3).unwrap();
        assert!(d < 1e-8, "{d}");
    }
}
