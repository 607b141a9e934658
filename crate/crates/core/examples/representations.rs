// Expressing deformed coordinates through canonical ones: both branches of
// the general solution, a one-parameter family at gamma = 0, and the
// symmetric gamma = 0 choice.

use ncphase::representation::{
    induced_algebra, mapped_brackets, rep_map, solve_gamma_zero, solve_general, symmetric_reps_gamma_zero, Branch,
    CanonicalState2D,
};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let (theta, eta, gamma) = (0.2, 0.1, 0.004);
    for branch in [Branch::Plus, Branch::Minus] {
        let rp = solve_general(theta, eta, gamma, branch)?;
        let ia = induced_algebra(&rp);
        println!("{branch:?}: {rp:?}");
        println!("    induced {ia:?}, residual {:.1e}", ia.residual(theta, eta, gamma));
    }

    for theta2p in [0.0, 0.05, 0.1] {
        let rp = solve_gamma_zero(theta, eta, theta2p)?;
        println!("gamma = 0, theta'2 = {theta2p}: {rp:?}");
    }

    let rp = symmetric_reps_gamma_zero(theta, eta, Branch::Minus)?;
    let c = CanonicalState2D::new(0.3, -0.7, 1.2, 0.4);
    let (brackets, off) = mapped_brackets(&rp, &c)?;
    println!("symmetric: {rp:?}");
    println!("    image of {c:?} is {:?}", rep_map(&rp, &c));
    println!("    brackets from the map {brackets:?} (off-diagonal {off:.1e})");
    assert!(brackets.residual(theta, eta, 0.0) < 1e-12);
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
