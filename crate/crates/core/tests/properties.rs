use std::f64::consts::PI;

use ncphase::autodiff::Scalar;
use ncphase::bracket::{poisson_bracket, poisson_bracket_fd, time_reverse_params, NCParams2D, PhaseState2D};
use ncphase::dynamics::KeplerSystem2D;
use ncphase::observable::{bracket_at, jacobi_sum, Canonical, Observable, Product};
use ncphase::orbit::{radicand, solve_orbit, CircularOrbitSpec, Direction};
use ncphase::representation::{induced_algebra, mapped_brackets, solve_general, Branch, CanonicalState2D};
use ncphase::rotinv::{
    nc_coordinates, rotate_extended, t_invariance_residuals, time_reverse_extended, verify_algebra, ExtendedState,
    TensorConfig, TensorKind,
};
use proptest::prelude::*;

/// Quadratic polynomial plus a `sin` term in the four phase-space variables.
#[derive(Clone, Copy, Debug)]
struct Poly {
    c: [f64; 15],
    wave: f64,
}

impl Observable<4> for Poly {
    fn eval<S: Scalar>(&self, u: &[S; 4]) -> S {
        let mut acc = S::constant(self.c[0]);
        let mut n = 1;
        for i in 0..4 {
            acc = acc + u[i] * self.c[n];
            n += 1;
        }
        for i in 0..4 {
            for j in i..4 {
                acc = acc + u[i] * u[j] * self.c[n];
                n += 1;
            }
        }
        acc + u[0].sin() * u[3] * self.wave
    }
}

fn coeff() -> impl Strategy<Value = f64> {
    -2.0..2.0f64
}

fn poly() -> impl Strategy<Value = Poly> {
    (prop::array::uniform15(coeff()), coeff()).prop_map(|(c, wave)| Poly { c, wave })
}

fn params() -> impl Strategy<Value = NCParams2D> {
    (-1.0..1.0f64, -1.0..1.0f64, -0.5..0.5f64).prop_map(|(t, e, g)| NCParams2D::new(t, e, g))
}

fn state() -> impl Strategy<Value = PhaseState2D> {
    prop::array::uniform4(-2.0..2.0f64).prop_map(|u| PhaseState2D::from_array(u))
}

fn extended() -> impl Strategy<Value = ExtendedState> {
    prop::array::uniform18(-1.0..1.0f64).prop_map(|u| ExtendedState::from_array(&u))
}

fn tensor_config() -> impl Strategy<Value = TensorConfig> {
    (-0.5..0.5f64, -0.5..0.5f64, 0.5..2.0f64, 0.5..2.0f64).prop_map(|(ct, ce, m, w)| TensorConfig {
        c_theta: ct,
        c_eta: ce,
        l0: ct,
        p0: ce,
        m_osc: m,
        omega_osc: w,
    })
}

fn unit_axis() -> impl Strategy<Value = [f64; 3]> {
    (0.0..PI, 0.0..2.0 * PI).prop_map(|(polar, az)| [polar.sin() * az.cos(), polar.sin() * az.sin(), polar.cos()])
}

fn scale(values: &[f64]) -> f64 {
    values.iter().fold(1.0, |m, v| m.max(v.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn bracket_is_antisymmetric(f in poly(), g in poly(), p in params(), s in state()) {
        let fg = poisson_bracket(&f, &g, &p, &s).unwrap();
        let gf = poisson_bracket(&g, &f, &p, &s).unwrap();
        prop_assert!((fg + gf).abs() <= 1e-12 * scale(&[fg]));
    }

    #[test]
    fn bracket_obeys_leibniz(f in poly(), g in poly(), h in poly(), p in params(), s in state()) {
        let lhs = poisson_bracket(&Product(f, g), &h, &p, &s).unwrap();
        let rhs = f.value(&s.to_array()) * poisson_bracket(&g, &h, &p, &s).unwrap()
            + g.value(&s.to_array()) * poisson_bracket(&f, &h, &p, &s).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * scale(&[lhs, rhs]));
    }

    #[test]
    fn constant_structure_satisfies_jacobi(f in poly(), g in poly(), h in poly(), p in params(), s in state()) {
        let j = jacobi_sum(&f, &g, &h, &p, &s.to_array()).unwrap();
        prop_assert!(j.abs() <= 1e-9, "jacobi {}", j);
    }

    #[test]
    fn commutative_limit_is_canonical(f in poly(), g in poly(), s in state()) {
        let deformed = poisson_bracket(&f, &g, &NCParams2D::COMMUTATIVE, &s).unwrap();
        let canonical = bracket_at(&f, &g, &Canonical { block: 2 }, &s.to_array()).unwrap();
        prop_assert!((deformed - canonical).abs() <= 1e-13 * scale(&[canonical]));
    }

    #[test]
    fn exact_bracket_matches_finite_differences(f in poly(), g in poly(), p in params(), s in state()) {
        let exact = poisson_bracket(&f, &g, &p, &s).unwrap();
        let fd = poisson_bracket_fd(|u: &[f64; 4]| f.value(u), |u: &[f64; 4]| g.value(u), &p, &s).unwrap();
        prop_assert!((exact - fd).abs() <= 1e-6 * scale(&[exact]));
    }

    #[test]
    fn radicand_is_a_sum_of_squares(
        theta in -3.0..3.0f64, eta in -3.0..3.0f64, gamma in -0.9..2.0f64,
        m in 0.2..5.0f64, k in 0.2..5.0f64, r0 in 0.2..5.0f64,
    ) {
        let sys = KeplerSystem2D::new(m, k, NCParams2D::new(theta, eta, gamma)).unwrap();
        let r3 = r0.powi(3);
        let sos = 4.0 * k * (1.0 + gamma).powi(2) / (m * r3) + (k * theta / r3 - eta / m).powi(2);
        let got = radicand(&sys, r0);
        prop_assert!(got >= 0.0);
        prop_assert!((got - sos).abs() <= 1e-12 * sos.max(1.0));
    }

    #[test]
    fn time_reversal_swaps_directions(
        theta in -0.2..0.2f64, eta in -0.2..0.2f64, gamma in -0.5..0.5f64,
        m in 0.5..2.0f64, k in 0.5..2.0f64, r0 in 0.5..2.0f64,
    ) {
        let sys = KeplerSystem2D::new(m, k, NCParams2D::new(theta, eta, gamma)).unwrap();
        let flipped = sys.with_params(time_reverse_params(&sys.nc));
        let ccw = solve_orbit(&CircularOrbitSpec { sys: flipped, r0, direction: Direction::Ccw });
        let cw = solve_orbit(&CircularOrbitSpec { sys, r0, direction: Direction::Cw });
        if let (Ok(a), Ok(b)) = (ccw, cw) {
            prop_assert!((a.omega - b.omega).abs() <= 1e-12 * b.omega);
            prop_assert!((a.p0 + b.p0).abs() <= 1e-12 * b.p0.abs());
        }
    }

    #[test]
    fn ccw_frequency_decreases_with_theta(
        theta in -0.5..0.5f64, d in 1e-3..0.5f64, eta in -0.5..0.5f64, gamma in -0.5..0.5f64,
    ) {
        let omega = |t: f64| {
            let sys = KeplerSystem2D::new(1.0, 1.0, NCParams2D::new(t, eta, gamma)).unwrap();
            let ccw = solve_orbit(&CircularOrbitSpec { sys, r0: 1.0, direction: Direction::Ccw });
            let cw = solve_orbit(&CircularOrbitSpec { sys, r0: 1.0, direction: Direction::Cw });
            (ccw.map(|s| s.omega).ok(), cw.map(|s| s.omega).ok())
        };
        let (lo, hi) = (omega(theta), omega(theta + d));
        if let (Some(a), Some(b)) = (lo.0, hi.0) {
            prop_assert!(b < a);
        }
        if let (Some(a), Some(b)) = (lo.1, hi.1) {
            prop_assert!(b > a);
        }
    }

    #[test]
    fn representations_round_trip(
        theta in 0.01..1.0f64, eta in 0.01..1.0f64, negative in any::<bool>(), slack in 0.0..1.0f64,
        c in prop::array::uniform4(-2.0..2.0f64),
    ) {
        let (theta, eta) = if negative { (-theta, -eta) } else { (theta, eta) };
        let gamma = theta * eta / 4.0 - slack;
        let plus = solve_general(theta, eta, gamma, Branch::Plus).unwrap();
        let minus = solve_general(theta, eta, gamma, Branch::Minus).unwrap();
        for rp in [plus, minus] {
            prop_assert!(induced_algebra(&rp).residual(theta, eta, gamma) <= 1e-10);
            let (b, off) = mapped_brackets(&rp, &CanonicalState2D::new(c[0], c[1], c[2], c[3])).unwrap();
            prop_assert!(b.residual(theta, eta, gamma) <= 1e-10 && off <= 1e-12);
        }
        prop_assert!((plus.theta1p - minus.theta2p).abs() <= 1e-12);
        prop_assert!((plus.eta1p - minus.eta2p).abs() <= 1e-12);
    }

    #[test]
    fn rotation_is_equivariant(cfg in tensor_config(), s in extended(), axis in unit_axis(), angle in -PI..PI) {
        let r = rotate_extended(&s, &axis, angle).unwrap();
        let (x, p) = nc_coordinates(&cfg, &s);
        let (rx, rp) = nc_coordinates(&cfg, &r);
        let rot = |v: [f64; 3]| rotate_extended(&ExtendedState { x: v, ..Default::default() }, &axis, angle).unwrap().x;
        let (ex, ep) = (rot(x), rot(p));
        for i in 0..3 {
            prop_assert!((rx[i] - ex[i]).abs() <= 1e-12 && (rp[i] - ep[i]).abs() <= 1e-12);
        }
        prop_assert!(verify_algebra(&cfg, &r).unwrap().max() <= 1e-12);
    }

    #[test]
    fn rotations_compose(s in extended(), axis in unit_axis(), a in -PI..PI, b in -PI..PI) {
        let twice = rotate_extended(&rotate_extended(&s, &axis, a).unwrap(), &axis, b).unwrap();
        let once = rotate_extended(&s, &axis, a + b).unwrap();
        prop_assert!(twice.distance(&once) <= 1e-12);
    }

    #[test]
    fn time_reversal_is_an_involution_and_symmetry(cfg in tensor_config(), s in extended()) {
        prop_assert_eq!(time_reverse_extended(&time_reverse_extended(&s)), s);
        let res = t_invariance_residuals(&cfg, TensorKind::Momentum, &s).unwrap();
        prop_assert!(res.coordinates <= 1e-12 && res.tensors <= 1e-12 && res.algebra <= 1e-12 && res.brackets <= 1e-12);
    }
}
