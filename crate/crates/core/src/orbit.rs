//! Closed-form circular orbits in both rotation directions.
//!
//! With `S = √(4k((1+γ)² − θη)/(m R0³) + (kθ/R0³ + η/m)²)` the
//! counter-clockwise and clockwise frequencies are
//!
//! ```text
//! ω  = ½ (S − η/m − kθ/R0³)        P0  =  (m ω  R0³ + k m θ) / (R0² (1+γ))
//! ω′ = ½ (S + η/m + kθ/R0³)        P0′ = −(m ω′ R0³ − k m θ) / (R0² (1+γ))
//! ```
//!
//! so the two directions differ by `Δω = η/m + kθ/R0³`.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::bracket::{time_reverse_params, PhaseState2D};
use crate::dynamics::{eom_rhs, KeplerSystem2D};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// Counter-clockwise: `X2 = R0 sin ωt`.
    Ccw,
    /// Clockwise: `X2 = −R0 sin ω′t`.
    Cw,
}

impl Direction {
    fn sign(self) -> f64 {
        match self {
            Direction::Ccw => 1.0,
            Direction::Cw => -1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircularOrbitSpec {
    pub sys: KeplerSystem2D,
    pub r0: f64,
    pub direction: Direction,
}

/// Frequency and period are positive magnitudes; `p0` carries the sign of
/// `P2(0)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitSolution {
    pub omega: f64,
    pub period: f64,
    pub p0: f64,
    pub direction: Direction,
}

fn check_radius(r0: f64) -> Result<()> {
    if r0 > 0.0 && r0.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("orbit radius must be positive, got {r0}")))
    }
}

/// Radicand under the square root shared by both frequencies.
pub fn radicand(sys: &KeplerSystem2D, r0: f64) -> f64 {
    let (m, k) = (sys.m, sys.k);
    let nc = sys.nc;
    let r3 = r0 * r0 * r0;
    let shift = k * nc.theta / r3 + nc.eta / m;
    4.0 * k * ((1.0 + nc.gamma).powi(2) - nc.theta * nc.eta) / (m * r3) + shift * shift
}

pub fn solve_orbit(spec: &CircularOrbitSpec) -> Result<OrbitSolution> {
    check_radius(spec.r0)?;
    let KeplerSystem2D { m, k, nc } = spec.sys;
    let r0 = spec.r0;
    let one_plus_gamma = 1.0 + nc.gamma;
    if one_plus_gamma == 0.0 {
        return Err(Error::SingularDeformation);
    }
    let rad = radicand(&spec.sys, r0);
    if !(rad >= 0.0) {
        return Err(Error::NoCircularOrbit { radicand: rad });
    }
    let r3 = r0 * r0 * r0;
    let shift = nc.eta / m + k * nc.theta / r3;
    let omega = match spec.direction {
        Direction::Ccw => 0.5 * (rad.sqrt() - shift),
        Direction::Cw => 0.5 * (rad.sqrt() + shift),
    };
    if !(omega > 0.0) {
        return Err(Error::DegenerateFrequency { omega });
    }
    let p0 = match spec.direction {
        Direction::Ccw => (m * omega * r3 + k * m * nc.theta) / (r0 * r0 * one_plus_gamma),
        Direction::Cw => -(m * omega * r3 - k * m * nc.theta) / (r0 * r0 * one_plus_gamma),
    };
    Ok(OrbitSolution { omega, period: TAU / omega, p0, direction: spec.direction })
}

/// `ω′ − ω = η/m + kθ/R0³`, after checking that both orbits exist.
pub fn delta_omega(sys: &KeplerSystem2D, r0: f64) -> Result<f64> {
    for direction in [Direction::Ccw, Direction::Cw] {
        solve_orbit(&CircularOrbitSpec { sys: *sys, r0, direction })?;
    }
    Ok(sys.nc.eta / sys.m + sys.k * sys.nc.theta / (r0 * r0 * r0))
}

/// `(R0, 0, 0, P0)` for either direction.
pub fn circular_initial_conditions(sol: &OrbitSolution, spec: &CircularOrbitSpec) -> PhaseState2D {
    PhaseState2D::new(spec.r0, 0.0, 0.0, sol.p0)
}

/// Analytic circular trajectory at time `t`.
pub fn analytic_state(sol: &OrbitSolution, spec: &CircularOrbitSpec, t: f64) -> PhaseState2D {
    let sign = sol.direction.sign();
    let (sin, cos) = (sol.omega * t).sin_cos();
    PhaseState2D::new(spec.r0 * cos, sign * spec.r0 * sin, -sign * sol.p0 * sin, sol.p0 * cos)
}

/// Analytic time derivative of [`analytic_state`].
pub fn analytic_velocity(sol: &OrbitSolution, spec: &CircularOrbitSpec, t: f64) -> [f64; 4] {
    let sign = sol.direction.sign();
    let w = sol.omega;
    let (sin, cos) = (w * t).sin_cos();
    [-spec.r0 * w * sin, sign * spec.r0 * w * cos, -sign * sol.p0 * w * cos, -sol.p0 * w * sin]
}

/// Largest component of `eom_rhs − analytic derivative` along the circular
/// solution at time `t`.
pub fn orbit_residual(sol: &OrbitSolution, spec: &CircularOrbitSpec, t: f64) -> Result<f64> {
    let rhs = eom_rhs(&spec.sys, &analytic_state(sol, spec, t))?;
    let exact = analytic_velocity(sol, spec, t);
    Ok(rhs.iter().zip(exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
}

fn relative_gap(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Whether `ω(−θ, −η, γ) = ω′(θ, η, γ)` and `P0(−θ, −η, γ) = −P0′(θ, η, γ)`
/// to relative `1e-12`.
pub fn t_reversal_frequency_check(sys: &KeplerSystem2D, r0: f64) -> Result<bool> {
    let flipped = sys.with_params(time_reverse_params(&sys.nc));
    let ccw_flipped = solve_orbit(&CircularOrbitSpec { sys: flipped, r0, direction: Direction::Ccw })?;
    let cw = solve_orbit(&CircularOrbitSpec { sys: *sys, r0, direction: Direction::Cw })?;
    Ok(relative_gap(ccw_flipped.omega, cw.omega) <= 1e-12 && relative_gap(ccw_flipped.p0, -cw.p0) <= 1e-12)
}

/// Both-direction summary as emitted by the `orbit` command.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitReport {
    pub omega_ccw: f64,
    #[serde(rename = "T_ccw")]
    pub t_ccw: f64,
    pub p0_ccw: f64,
    pub omega_cw: f64,
    #[serde(rename = "T_cw")]
    pub t_cw: f64,
    pub p0_cw: f64,
    pub delta_omega: f64,
}

impl OrbitReport {
    pub fn compute(sys: &KeplerSystem2D, r0: f64) -> Result<Self> {
        let ccw = solve_orbit(&CircularOrbitSpec { sys: *sys, r0, direction: Direction::Ccw })?;
        let cw = solve_orbit(&CircularOrbitSpec { sys: *sys, r0, direction: Direction::Cw })?;
        Ok(Self {
            omega_ccw: ccw.omega,
            t_ccw: ccw.period,
            p0_ccw: ccw.p0,
            omega_cw: cw.omega,
            t_cw: cw.period,
            p0_cw: cw.p0,
            delta_omega: delta_omega(sys, r0)?,
        })
    }
}
