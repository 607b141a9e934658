//! Classical fixed-step fourth-order Runge–Kutta.

use crate::error::{Error, Result};

/// Upper bound on the number of steps a single integration may request.
pub const MAX_STEPS: u64 = 50_000_000;

pub fn check_step_count(n_steps: u64) -> Result<()> {
    if n_steps > MAX_STEPS {
        return Err(Error::StepOverflow { requested: n_steps, limit: MAX_STEPS });
    }
    Ok(())
}

/// One RK4 step of `y' = f(y)` for an autonomous system.
pub fn step<F, const N: usize>(f: &mut F, y: &[f64; N], dt: f64) -> Result<[f64; N]>
where
    F: FnMut(&[f64; N]) -> Result<[f64; N]> + ?Sized,
{
    let axpy = |a: &[f64; N], h: f64, k: &[f64; N]| -> [f64; N] { std::array::from_fn(|i| a[i] + h * k[i]) };
    let k1 = f(y)?;
    let k2 = f(&axpy(y, 0.5 * dt, &k1))?;
    let k3 = f(&axpy(y, 0.5 * dt, &k2))?;
    let k4 = f(&axpy(y, dt, &k3))?;
    Ok(std::array::from_fn(|i| y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])))
}

/// Number of whole steps covering `tau`, and the step size that lands on it exactly.
pub fn steps_for(tau: f64, dt: f64) -> Result<(u64, f64)> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::InvalidInput(format!("horizon must be positive, got {tau}")));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidInput(format!("dt must be positive, got {dt}")));
    }
    let ratio = tau / dt;
    if ratio > MAX_STEPS as f64 {
        return Err(Error::StepOverflow { requested: ratio.ceil() as u64, limit: MAX_STEPS });
    }
    let n = (ratio - 1e-9).ceil().max(1.0) as u64;
    Ok((n, tau / n as f64))
}
