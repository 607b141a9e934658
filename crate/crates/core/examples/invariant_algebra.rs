// The rotationally invariant 3D algebra on the extended phase space: exact
// relations, Jacobi identity, rotation equivariance and time-reversal
// behaviour of both tensor constructions.

use ncphase::rotinv::{
    draw_rng, jacobi_check, nc_coordinates, rotation_residuals, t_invariance_residuals, tensors_from_state,
    verify_algebra, verify_batch, AlgebraObservable, ExtendedState, Generator, TensorConfig, TensorKind, VerifySettings,
};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = TensorConfig { c_theta: 0.2, c_eta: -0.3, l0: 0.2, p0: -0.3, ..TensorConfig::default() };
    let s = ExtendedState::random(&mut draw_rng(42, 0));

    let (x, p) = nc_coordinates(&cfg, &s);
    println!("X = {x:?}\nP = {p:?}");
    println!("theta tensor = {:?}", tensors_from_state(&cfg, &s).theta);
    println!("algebra residuals: {:?}", verify_algebra(&cfg, &s)?);

    let g = |generator| AlgebraObservable { cfg, kind: TensorKind::Momentum, generator };
    let jac = jacobi_check(&s, (&g(Generator::X(0)), &g(Generator::P(1)), &g(Generator::X(2))))?;
    println!("Jacobi (X1, P2, X3): {jac:.1e}");

    let axis = [0.0, 0.6, 0.8];
    println!("rotation: {:?}", rotation_residuals(&cfg, TensorKind::Momentum, &s, &axis, 0.9)?);
    println!("time reversal, momentum-built: {:?}", t_invariance_residuals(&cfg, TensorKind::Momentum, &s)?);
    println!("time reversal, position-built: {:?}", t_invariance_residuals(&cfg, TensorKind::Position, &s)?);

    let report = verify_batch(&VerifySettings { cfg, draws: 20, seed: 1, ..VerifySettings::default() })?;
    println!("batch of {} draws: failures {:?}, flags {:?}", report.draws, report.failures, report.flags);
    assert!(report.passed());
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
