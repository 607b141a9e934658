// Poisson brackets on the deformed 2D phase space, computed exactly with
// forward-mode dual numbers.

use ncphase::bracket::{poisson_bracket, KeplerHamiltonian, NCParams2D, PhaseState2D, Var};
use ncphase::observable::{jacobi_sum, Coord, Observable, Product};
use ncphase::autodiff::Scalar;

/// Angular momentum `X1 P2 − X2 P1`.
struct AngularMomentum;

impl Observable<4> for AngularMomentum {
    fn eval<S: Scalar>(&self, u: &[S; 4]) -> S {
        u[0] * u[3] - u[1] * u[2]
    }
}

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let params = NCParams2D::new(0.3, -0.2, 0.1);
    let s = PhaseState2D::new(1.0, 0.5, -0.4, 0.8);

    for (a, b) in [(Var::X1, Var::X2), (Var::P1, Var::P2), (Var::X1, Var::P1), (Var::X1, Var::P2)] {
        println!("{{{a:?}, {b:?}}} = {}", poisson_bracket(&a, &b, &params, &s)?);
    }

    let x1_squared = Product(Coord(0), Coord(0));
    println!("{{X1², P1}} = {}", poisson_bracket(&x1_squared, &Var::P1, &params, &s)?);

    let h = KeplerHamiltonian { m: 1.0, k: 1.0 };
    println!("{{H, H}} = {}", poisson_bracket(&h, &h, &params, &s)?);
    println!("dL/dt = {{L, H}} = {:.6e}", poisson_bracket(&AngularMomentum, &h, &params, &s)?);

    let jacobi = jacobi_sum(&AngularMomentum, &h, &x1_squared, &params, &s.to_array())?;
    println!("Jacobi sum for (L, H, X1²) = {jacobi:.3e}");
    assert!(jacobi.abs() < 1e-12);
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
