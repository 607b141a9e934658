//! End-to-end acceptance run: one line per criterion, non-zero exit on failure.

use std::f64::consts::TAU;
use std::time::Instant;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ncphase::averaging::{
    first_order_check, moments_mc, sign_flip_check, Coupling, GroundStateSpec, MCConfig, ParticlePoint,
};
use ncphase::bracket::{time_reverse_params, NCParams2D, PhaseState2D};
use ncphase::dynamics::{integrate, measure_period, reversal_experiment, KeplerSystem2D};
use ncphase::orbit::{circular_initial_conditions, solve_orbit, CircularOrbitSpec, Direction};
use ncphase::representation::{induced_algebra, solve_gamma_zero, solve_general, Branch, RepParams};
use ncphase::rotinv::{reference_state, reversal_experiment_extended, verify_batch, TensorConfig, VerifySettings};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

const GRID: [f64; 5] = [-0.01, -0.005, 0.0, 0.005, 0.01];

/// Measured angular frequencies `2π/T` in both directions, with worst
/// relative period error against the closed form.
fn measured_frequencies(theta: f64, eta: f64, gamma: f64) -> Result<(f64, f64, f64), ncphase::Error> {
    let sys = KeplerSystem2D::new(1.0, 1.0, NCParams2D::new(theta, eta, gamma))?;
    let mut out = [0.0; 2];
    let mut worst = 0.0_f64;
    for (slot, direction) in [Direction::Ccw, Direction::Cw].into_iter().enumerate() {
        let spec = CircularOrbitSpec { sys, r0: 1.0, direction };
        let sol = solve_orbit(&spec)?;
        let traj = integrate(&sys, &circular_initial_conditions(&sol, &spec), sol.period / 1e4, 12_000)?;
        let period = measure_period(&traj)?;
        worst = worst.max(rel(period, sol.period));
        out[slot] = TAU / period;
    }
    Ok((out[0], out[1], worst))
}

fn grid() -> Vec<(f64, f64, f64)> {
    let mut cells = Vec::new();
    for theta in GRID {
        for eta in GRID {
            for gamma in [0.0, 0.01, theta * eta / 4.0] {
                cells.push((theta, eta, gamma));
            }
        }
    }
    cells
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0_f64;
    for (theta, eta, gamma) in grid() {
        match measured_frequencies(theta, eta, gamma) {
            Ok((_, _, w)) => worst = worst.max(w),
            Err(e) => return outcome(false, format!("({theta}, {eta}, {gamma}): {e}")),
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(worst <= 1e-6 && secs < 60.0, format!("75 cells x 2 directions, worst relative period error {worst:.2e}, {secs:.1} s"))
}

fn criterion_2() -> Outcome {
    let mut worst = 0.0_f64;
    for (theta, eta, gamma) in grid() {
        match measured_frequencies(theta, eta, gamma) {
            Ok((ccw, cw, _)) => worst = worst.max((cw - ccw - (eta + theta)).abs()),
            Err(e) => return outcome(false, format!("({theta}, {eta}, {gamma}): {e}")),
        }
    }
    let unit = match measured_frequencies(0.01, 0.01, 0.0) {
        Ok((ccw, cw, _)) => cw - ccw,
        Err(e) => return outcome(false, e.to_string()),
    };
    let unit_err = (unit - 0.02).abs();
    outcome(
        worst <= 1e-6 && unit_err <= 1e-6,
        format!("worst |measured - closed form| {worst:.2e}, unit case {unit:.12} (off by {unit_err:.1e})"),
    )
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut valid, mut tries, mut worst) = (0, 0, 0.0_f64);
    while valid < 1000 && tries < 100_000 {
        tries += 1;
        let nc = NCParams2D::new(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5));
        let (m, k, r0) = (rng.gen_range(0.5..2.0), rng.gen_range(0.5..2.0), rng.gen_range(0.5..2.0));
        let Ok(sys) = KeplerSystem2D::new(m, k, nc) else { continue };
        let flipped = sys.with_params(time_reverse_params(&nc));
        let ccw = solve_orbit(&CircularOrbitSpec { sys: flipped, r0, direction: Direction::Ccw });
        let cw = solve_orbit(&CircularOrbitSpec { sys, r0, direction: Direction::Cw });
        if let (Ok(a), Ok(b)) = (ccw, cw) {
            valid += 1;
            worst = worst.max(rel(a.omega, b.omega)).max(rel(a.p0, -b.p0));
        }
    }
    outcome(valid == 1000 && worst <= 1e-12, format!("{valid} valid draws, worst relative gap {worst:.2e}"))
}

fn criterion_4() -> Outcome {
    let run = || -> Result<Outcome, ncphase::Error> {
        let plain = KeplerSystem2D::new(1.0, 1.0, NCParams2D::COMMUTATIVE)?;
        let s0 = PhaseState2D::new(1.0, 0.0, 0.0, 1.0);
        let base = reversal_experiment(&plain, &s0, TAU, TAU / 1e4)?;

        let sys = KeplerSystem2D::new(1.0, 1.0, NCParams2D::new(0.01, 0.01, 0.0))?;
        let spec = CircularOrbitSpec { sys, r0: 1.0, direction: Direction::Ccw };
        let sol = solve_orbit(&spec)?;
        let deformed = reversal_experiment(&sys, &circular_initial_conditions(&sol, &spec), sol.period, sol.period / 1e4)?;

        let cfg = TensorConfig { c_theta: 0.01, c_eta: 0.01, ..TensorConfig::default() };
        let ext = reversal_experiment_extended(&cfg, &reference_state(&cfg), 1.0, 1.0, TAU, TAU / 1e4)?;

        // contrast measured against the 1e-8 threshold; against the measured baseline it is far larger
        let passed = base < 1e-8 && deformed >= 1e3 * 1e-8 && ext < 1e-6;
        Ok(outcome(
            passed,
            format!(
                "commutative {base:.2e}, deformed {deformed:.2e} (x{:.1e} baseline), extended flow {ext:.2e}",
                deformed / base.max(f64::MIN_POSITIVE)
            ),
        ))
    };
    run().unwrap_or_else(|e| outcome(false, e.to_string()))
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0_f64;
    for _ in 0..1000 {
        let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let theta = sign * rng.gen_range(1e-3..1.0);
        let eta = sign * rng.gen_range(1e-3..1.0);
        let gamma = theta * eta / 4.0 - rng.gen_range(0.0..1.0);
        for branch in [Branch::Plus, Branch::Minus] {
            match solve_general(theta, eta, gamma, branch) {
                Ok(rp) => worst = worst.max(induced_algebra(&rp).residual(theta, eta, gamma)),
                Err(e) => return outcome(false, format!("({theta}, {eta}, {gamma}): {e}")),
            }
        }
    }
    let example = solve_gamma_zero(0.2, 0.1, 0.0);
    let exact = matches!(example, Ok(rp) if rp == RepParams { eps: 1.0, theta1p: 0.2, theta2p: 0.0, eta1p: 0.0, eta2p: 0.1 });
    outcome(worst <= 1e-10 && exact, format!("2000 solutions, worst residual {worst:.2e}; gamma = 0 example exact: {exact}"))
}

fn criterion_6() -> Outcome {
    let fixed = verify_batch(&VerifySettings { draws: 100, seed: 6, ..VerifySettings::default() });
    let random = verify_batch(&VerifySettings { draws: 100, seed: 7, randomize_config: true, reversal: false, ..VerifySettings::default() });
    match (fixed, random) {
        (Ok(a), Ok(b)) => {
            let algebra = a.algebra.max().max(b.algebra.max());
            let jacobi = a.jacobi.max(b.jacobi);
            let rotation = [a.rotation, b.rotation]
                .iter()
                .map(|r| r.equivariance.max(r.hamiltonian).max(r.rotated_algebra))
                .fold(0.0, f64::max);
            let t = a.t_invariance.max().max(b.t_invariance.max());
            outcome(
                algebra < 1e-12 && jacobi < 1e-9 && rotation < 1e-12 && t < 1e-12,
                format!("algebra {algebra:.1e}, Jacobi {jacobi:.1e}, rotation {rotation:.1e}, time reversal {t:.1e}"),
            )
        }
        (Err(e), _) | (_, Err(e)) => outcome(false, e.to_string()),
    }
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let run = || -> Result<(bool, String), ncphase::Error> {
        let mc = MCConfig::new(1_000_000, 7)?;
        let mut passed = true;
        let mut notes = Vec::new();
        for (l0, p0, m_osc) in [(1.0, 1.0, 1.0), (0.5, 2.0, 4.0)] {
            let cfg = TensorConfig { l0, p0, m_osc, omega_osc: 1.0, ..TensorConfig::default() };
            let spec = GroundStateSpec::from_config(&cfg)?;
            let lp2 = spec.l_p * spec.l_p;
            let report = moments_mc(&spec, &cfg, &mc)?;
            for (name, closed) in [("theta^2", 1.5 * l0 * l0 * lp2), ("eta^2", 1.5 * p0 * p0 / lp2)] {
                let m = report.get(name).expect("moment present");
                let (est, se) = (m.estimate.unwrap(), m.standard_error.unwrap());
                let ok = m.analytic == closed && (est - closed).abs() <= 3.0 * se;
                passed &= ok;
                notes.push(format!("{name}={closed} z={:.2}", (est - closed) / se));
            }
        }
        let cfg = TensorConfig { c_theta: 0.01, c_eta: 0.01, ..TensorConfig::default() };
        let spec = GroundStateSpec::from_config(&cfg)?;
        let point = ParticlePoint { x: [1.0, 0.2, -0.3], p: [0.1, 0.9, 0.2] };
        for which in [Coupling::Theta, Coupling::Eta] {
            let flip = sign_flip_check(&cfg, which, &spec, 1.0, 1.0, &point, &mc)?;
            let slope = first_order_check(&cfg, which, &spec, 1.0, 1.0, &point, &mc)?;
            passed &= flip.passed && slope.passed;
            notes.push(format!(
                "{which:?} flip z={:.2} slope z={:.2}",
                flip.difference / flip.standard_error,
                slope.difference / slope.standard_error
            ));
        }
        Ok((passed, notes.join(", ")))
    };
    match run() {
        Ok((passed, notes)) => {
            let secs = start.elapsed().as_secs_f64();
            outcome(passed && secs < 120.0, format!("{notes}; {secs:.1} s"))
        }
        Err(e) => outcome(false, e.to_string()),
    }
}

fn criterion_8() -> Outcome {
    let run = || -> Result<Outcome, ncphase::Error> {
        let sys = KeplerSystem2D::new(1.0, 1.0, NCParams2D::COMMUTATIVE)?;
        let s0 = PhaseState2D::new(1.0, 0.0, 0.0, 1.0);
        let mut errors = Vec::new();
        for n in [64_u64, 128, 256, 512] {
            let traj = integrate(&sys, &s0, TAU / n as f64, n)?;
            errors.push(traj.last().state.distance(&s0));
        }
        let ratios: Vec<f64> = errors.windows(2).map(|w| w[0] / w[1]).collect();
        let passed = ratios.iter().all(|r| (12.0..=20.0).contains(r));
        let errs: Vec<String> = errors.iter().map(|e| format!("{e:.2e}")).collect();
        Ok(outcome(passed, format!("errors [{}], ratios {ratios:.2?}", errs.join(", "))))
    };
    run().unwrap_or_else(|e| outcome(false, e.to_string()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("closed-form orbit periods", criterion_1),
        ("direction asymmetry", criterion_2),
        ("time-reversal frequency identity", criterion_3),
        ("reversal contrast", criterion_4),
        ("representation round trip", criterion_5),
        ("invariant algebra verification", criterion_6),
        ("ground-state averaging", criterion_7),
        ("RK4 convergence order", criterion_8),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        println!("criterion {} {}: {} ({})", i + 1, if o.passed { "PASS" } else { "FAIL" }, name, o.detail);
        failed += usize::from(!o.passed);
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
