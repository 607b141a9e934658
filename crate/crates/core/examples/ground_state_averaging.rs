// Ground-state moments of the tensor components, analytic against Monte
// Carlo, and the effective Kepler energy averaged over the oscillators.

use ncphase::averaging::{
    effective_hamiltonian_mc, first_order_check, moments_analytic, moments_mc, sign_flip_check, Coupling,
    GroundStateSpec, MCConfig, ParticlePoint,
};
use ncphase::rotinv::TensorConfig;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = TensorConfig { c_theta: 0.05, c_eta: 0.05, l0: 1.0, p0: 2.0, ..TensorConfig::default() };
    let spec = GroundStateSpec::from_config(&cfg)?;
    let mc = MCConfig::new(100_000, 7)?;

    let exact = moments_analytic(&spec, &cfg);
    let sampled = moments_mc(&spec, &cfg, &mc)?;
    for name in ["theta^2", "eta^2", "uncertainty_product"] {
        let (a, m) = (exact.get(name).unwrap(), sampled.get(name).unwrap());
        println!(
            "<{name}> analytic {:.6}, sampled {:.6} ± {:.6}",
            a.analytic,
            m.estimate.unwrap(),
            m.standard_error.unwrap()
        );
    }

    let point = ParticlePoint { x: [1.0, 0.0, 0.0], p: [0.0, 1.0, 0.0] };
    let h = effective_hamiltonian_mc(&cfg, &spec, 1.0, 1.0, &point, &mc)?;
    println!("<H_s> = {:.9} ± {:.1e}", h.mean, h.standard_error);
    for which in [Coupling::Theta, Coupling::Eta] {
        let flip = sign_flip_check(&cfg, which, &spec, 1.0, 1.0, &point, &mc)?;
        let slope = first_order_check(&cfg, which, &spec, 1.0, 1.0, &point, &mc)?;
        println!(
            "{which:?}: flip difference {:.2e} ± {:.1e}, slope at zero {:.2e} ± {:.1e}",
            flip.difference, flip.standard_error, slope.difference, slope.standard_error
        );
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
