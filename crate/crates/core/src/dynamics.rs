//! Equations of motion and numerical integration for the Kepler problem on
//! the 2D noncommutative phase space.

use std::f64::consts::{PI, TAU};
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::bracket::{time_reverse_params, time_reverse_state, KeplerHamiltonian, NCParams2D, PhaseState2D};
use crate::error::{Error, Result};
use crate::observable::Observable;
use crate::rk4;

/// `eom_rhs` refuses states with `|X|` below this.
pub const RHS_ORIGIN_CUTOFF: f64 = 1e-12;
/// Integration aborts once a step lands within this radius.
pub const STEP_ORIGIN_CUTOFF: f64 = 1e-9;

/// `H = P²/2m − k/|X|` with the bracket deformation `nc`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KeplerSystem2D {
    pub m: f64,
    pub k: f64,
    pub nc: NCParams2D,
}

impl KeplerSystem2D {
    pub fn new(m: f64, k: f64, nc: NCParams2D) -> Result<Self> {
        if !(m > 0.0 && m.is_finite()) {
            return Err(Error::InvalidInput(format!("mass must be positive, got {m}")));
        }
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::InvalidInput(format!("k must be positive, got {k}")));
        }
        if !nc.is_finite() {
            return Err(Error::InvalidInput("noncommutativity parameters must be finite".into()));
        }
        Ok(Self { m, k, nc })
    }

    pub fn hamiltonian(&self) -> KeplerHamiltonian {
        KeplerHamiltonian { m: self.m, k: self.k }
    }

    pub fn energy(&self, s: &PhaseState2D) -> f64 {
        self.hamiltonian().value(&s.to_array())
    }

    pub fn with_params(&self, nc: NCParams2D) -> Self {
        Self { nc, ..*self }
    }
}

/// Time derivatives `(Ẋ1, Ẋ2, Ṗ1, Ṗ2)`.
pub fn eom_rhs(sys: &KeplerSystem2D, s: &PhaseState2D) -> Result<[f64; 4]> {
    let r = s.radius();
    if !(r >= RHS_ORIGIN_CUTOFF) {
        return Err(Error::OriginSingularity { radius: r });
    }
    let NCParams2D { theta, eta, gamma } = sys.nc;
    let (m, k) = (sys.m, sys.k);
    let r3 = r * r * r;
    let g = 1.0 + gamma;
    Ok([
        s.p1 * g / m + k * theta * s.x2 / r3,
        s.p2 * g / m - k * theta * s.x1 / r3,
        eta * s.p2 / m - k * s.x1 * g / r3,
        -eta * s.p1 / m - k * s.x2 * g / r3,
    ])
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub state: PhaseState2D,
    pub energy: f64,
}

/// Uniformly sampled RK4 trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub dt: f64,
    pub samples: Vec<Sample>,
}

impl Trajectory {
    pub fn initial(&self) -> &Sample {
        &self.samples[0]
    }

    pub fn last(&self) -> &Sample {
        self.samples.last().expect("trajectory holds at least the initial sample")
    }

    /// `max |H(t) − H(0)| / |H(0)|`.
    pub fn max_relative_energy_drift(&self) -> f64 {
        let e0 = self.initial().energy;
        self.samples
            .iter()
            .map(|s| (s.energy - e0).abs())
            .fold(0.0, f64::max)
            / e0.abs()
    }

    pub const CSV_HEADER: &'static str = "t,X1,X2,P1,P2,H";

    /// CSV with header `t,X1,X2,P1,P2,H`, 17 significant digits per value.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{}", Self::CSV_HEADER)?;
        for s in &self.samples {
            let st = &s.state;
            writeln!(
                w,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                s.t, st.x1, st.x2, st.p1, st.p2, s.energy
            )?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV output is ASCII")
    }
}

fn advance(sys: &KeplerSystem2D, s: &PhaseState2D, dt: f64) -> Result<PhaseState2D> {
    let mut rhs = |u: &[f64; 4]| eom_rhs(sys, &PhaseState2D::from_array(*u));
    let next = PhaseState2D::from_array(rk4::step(&mut rhs, &s.to_array(), dt)?);
    let r = next.radius();
    if !(r >= STEP_ORIGIN_CUTOFF) {
        return Err(Error::OriginSingularity { radius: r });
    }
    Ok(next)
}

fn check_dt(dt: f64) -> Result<()> {
    if dt > 0.0 && dt.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("dt must be positive, got {dt}")))
    }
}

/// Fixed-step RK4 record of `n_steps` steps starting at `s0`.
pub fn integrate(sys: &KeplerSystem2D, s0: &PhaseState2D, dt: f64, n_steps: u64) -> Result<Trajectory> {
    check_dt(dt)?;
    rk4::check_step_count(n_steps)?;
    if n_steps == 0 {
        return Err(Error::InvalidInput("n_steps must be positive".into()));
    }
    if !(s0.radius() >= STEP_ORIGIN_CUTOFF) {
        return Err(Error::OriginSingularity { radius: s0.radius() });
    }
    let mut samples = Vec::with_capacity(n_steps as usize + 1);
    let mut s = *s0;
    samples.push(Sample { t: 0.0, state: s, energy: sys.energy(&s) });
    for i in 1..=n_steps {
        s = advance(sys, &s, dt)?;
        samples.push(Sample { t: i as f64 * dt, state: s, energy: sys.energy(&s) });
    }
    Ok(Trajectory { dt, samples })
}

/// Final state after evolving for exactly `tau`, using steps no longer than `dt`.
pub fn propagate(sys: &KeplerSystem2D, s0: &PhaseState2D, tau: f64, dt: f64) -> Result<PhaseState2D> {
    let (n, h) = rk4::steps_for(tau, dt)?;
    let mut s = *s0;
    for _ in 0..n {
        s = advance(sys, &s, h)?;
    }
    Ok(s)
}

fn wrap_angle(mut d: f64) -> f64 {
    while d > PI {
        d -= TAU;
    }
    while d <= -PI {
        d += TAU;
    }
    d
}

/// Time for the unwound polar angle to sweep `2π`, interpolated linearly
/// between samples.
pub fn measure_period(traj: &Trajectory) -> Result<f64> {
    let mut accumulated = 0.0_f64;
    let mut direction = 0.0_f64;
    for (i, pair) in traj.samples.windows(2).enumerate() {
        let (a, b) = (&pair[0], &pair[1]);
        let step = wrap_angle(b.state.x2.atan2(b.state.x1) - a.state.x2.atan2(a.state.x1));
        if direction == 0.0 {
            direction = step.signum();
        }
        if step == 0.0 || step.signum() != direction {
            return Err(Error::DirectionReversal { step: i });
        }
        let swept = accumulated + step.abs();
        if swept >= TAU {
            let frac = (TAU - accumulated) / step.abs();
            return Ok(a.t + frac * (b.t - a.t));
        }
        accumulated = swept;
    }
    Err(Error::NonWinding { winding: accumulated })
}

/// Forward `tau`, flip momenta, forward `tau`, flip momenta; distance from `s0`.
///
/// The bracket parameters are left untouched, so for `θ, η ≠ 0` the
/// trajectory does not retrace itself.
pub fn reversal_experiment(sys: &KeplerSystem2D, s0: &PhaseState2D, tau: f64, dt: f64) -> Result<f64> {
    check_dt(dt)?;
    let mid = propagate(sys, s0, tau, dt)?;
    let back = propagate(sys, &time_reverse_state(&mid), tau, dt)?;
    Ok(time_reverse_state(&back).distance(s0))
}

/// As [`reversal_experiment`], but the return leg runs with the
/// time-reversed algebra `(−θ, −η, γ)`.
pub fn reversal_experiment_flipping_params(
    sys: &KeplerSystem2D,
    s0: &PhaseState2D,
    tau: f64,
    dt: f64,
) -> Result<f64> {
    check_dt(dt)?;
    let mid = propagate(sys, s0, tau, dt)?;
    let reversed = sys.with_params(time_reverse_params(&sys.nc));
    let back = propagate(&reversed, &time_reverse_state(&mid), tau, dt)?;
    Ok(time_reverse_state(&back).distance(s0))
}

/// Step size tied to the orbital time scale: `T/10⁴`.
///
/// Uses the counter-clockwise closed-form period when it exists, otherwise
/// the commutative estimate `2π√(m r0³/k)`.
pub fn default_dt(sys: &KeplerSystem2D, r0: f64) -> f64 {
    use crate::orbit::{solve_orbit, CircularOrbitSpec, Direction};
    let estimate = solve_orbit(&CircularOrbitSpec { sys: *sys, r0, direction: Direction::Ccw })
        .map(|sol| sol.period)
        .unwrap_or_else(|_| TAU * (sys.m * r0.powi(3) / sys.k).sqrt());
    estimate / 1e4
}
