// Forward, flip momenta, forward again: the commutative Kepler flow retraces
// itself, the deformed 2D flow does not, and the 18-dimensional flow with
// momentum-built tensors does.

use std::f64::consts::TAU;

use ncphase::bracket::{NCParams2D, PhaseState2D};
use ncphase::dynamics::{reversal_experiment, reversal_experiment_flipping_params, KeplerSystem2D};
use ncphase::rotinv::{reference_state, reversal_experiment_extended, reversal_experiment_extended_of_kind, TensorConfig, TensorKind};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let s0 = PhaseState2D::new(1.0, 0.0, 0.0, 1.0);
    let dt = TAU * 1e-4;

    let plain = KeplerSystem2D::new(1.0, 1.0, NCParams2D::COMMUTATIVE)?;
    let deformed = KeplerSystem2D::new(1.0, 1.0, NCParams2D::new(0.01, 0.01, 0.0))?;
    let d0 = reversal_experiment(&plain, &s0, TAU, dt)?;
    let d1 = reversal_experiment(&deformed, &s0, TAU, dt)?;
    let d2 = reversal_experiment_flipping_params(&deformed, &s0, TAU, dt)?;
    println!("2D commutative:            {d0:.3e}");
    println!("2D theta = eta = 0.01:     {d1:.3e}  (ratio {:.1e})", d1 / d0.max(f64::MIN_POSITIVE));
    println!("2D with flipped algebra:   {d2:.3e}");

    let cfg = TensorConfig { c_theta: 0.01, c_eta: 0.01, l0: 0.01, p0: 0.01, ..TensorConfig::default() };
    let e0 = reference_state(&cfg);
    let ext = reversal_experiment_extended(&cfg, &e0, 1.0, 1.0, TAU, dt)?;
    let alt = reversal_experiment_extended_of_kind(&cfg, TensorKind::Position, &e0, 1.0, 1.0, TAU, dt)?;
    println!("3D momentum-built tensors: {ext:.3e}");
    println!("3D position-built tensors: {alt:.3e}");

    assert!(d0 < 1e-8 && d1 > 1e3 * 1e-8 && ext < 1e-6 && alt > 1e3 * ext);
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
