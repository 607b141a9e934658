// Closed-form circular orbits in both directions and their numerical
// confirmation by RK4 integration and period measurement.

use ncphase::bracket::NCParams2D;
use ncphase::dynamics::{integrate, measure_period, KeplerSystem2D};
use ncphase::orbit::{circular_initial_conditions, delta_omega, solve_orbit, CircularOrbitSpec, Direction};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let sys = KeplerSystem2D::new(1.0, 1.0, NCParams2D::new(0.01, 0.01, 0.0))?;
    let r0 = 1.0;
    let mut measured_omega = Vec::new();

    for direction in [Direction::Ccw, Direction::Cw] {
        let spec = CircularOrbitSpec { sys, r0, direction };
        let sol = solve_orbit(&spec)?;
        let s0 = circular_initial_conditions(&sol, &spec);
        let dt = sol.period / 1e4;
        let traj = integrate(&sys, &s0, dt, 12_000)?;
        let period = measure_period(&traj)?;
        println!(
            "{direction:?}: omega = {:.12}, T = {:.12}, measured T = {:.12}, energy drift = {:.1e}",
            sol.omega,
            sol.period,
            period,
            traj.max_relative_energy_drift()
        );
        assert!((period - sol.period).abs() / sol.period < 1e-6);
        measured_omega.push(std::f64::consts::TAU / period);
    }

    let measured = measured_omega[1] - measured_omega[0];
    println!("cw - ccw frequency: measured {measured:.9}, closed form {:.9}", delta_omega(&sys, r0)?);
    assert!((measured - 0.02).abs() < 1e-6);
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
