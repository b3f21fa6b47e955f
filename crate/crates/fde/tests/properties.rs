use std::f64::consts::PI;

use fde::coefficient::catalog::{mixed_growth_spec, tangent_spec};
use fde::coefficient::{evaluate_omega, rescale_to_unit_step, EquationParams};
use fde::factorization::{factorize, find_zeros, reflect_angles, to_omega, SParams, Sign, TrigCoefficientSpec};
use fde::homogeneous::{HomogeneousSolution, PeriodicPlugin};
use fde::specfun::{angle_reduce, digamma, log_gamma, mittag_leffler3};
use fde::transmission::{derive_angles, CornerAngle, ForcingModel, TransmissionProblem};
use fde::C64;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn params() -> EquationParams {
    EquationParams::unit(1.0, 0.5, 0.5)
}

fn s_eval(s: &SParams, pm: f64, z: C64) -> C64 {
    (z - s.theta1).sin() + pm * s.q2 * (s.q1() * z - s.theta2).sin()
}

fn coprime_pq() -> impl Strategy<Value = (u32, u32)> {
    prop_oneof![Just((3, 1)), Just((4, 1)), Just((5, 1)), Just((5, 2)), Just((7, 2)), Just((7, 3))]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn angle_reduction_ranges(theta in 0.0..2.0 * PI) {
        let a = angle_reduce(theta).unwrap();
        prop_assert!((0.0..PI).contains(&a.theta_plus));
        prop_assert!((-PI / 2.0..PI / 2.0).contains(&a.theta_minus) || (a.theta_minus - PI / 2.0).abs() < 1e-15);
        for r in [a.theta_plus, a.theta_minus] {
            let k = (theta - r) / PI;
            prop_assert!((k - k.round()).abs() < 1e-12);
        }
    }

    #[test]
    fn gamma_recurrence(re in -10.0..10.0f64, im in -10.0..10.0f64) {
        prop_assume!(im.abs() > 1e-3 || (re - re.round()).abs() > 1e-3);
        let z = c(re, im);
        let lhs = log_gamma(z + 1.0).unwrap().exp();
        let rhs = z * log_gamma(z).unwrap().exp();
        prop_assert!((lhs - rhs).norm() < 1e-10 * lhs.norm());
    }

    #[test]
    fn digamma_is_the_log_gamma_slope(re in 0.3..8.0f64, im in -6.0..6.0f64) {
        let (z, h) = (c(re, im), 1e-5);
        let fd = (log_gamma(z + h).unwrap() - log_gamma(z - h).unwrap()) / (2.0 * h);
        prop_assert!((digamma(z).unwrap() - fd).norm() < 1e-6 * (1.0 + fd.norm()));
    }

    #[test]
    fn mittag_leffler_reduces_to_exp(re in -7.0..7.0f64, im in -7.0..7.0f64) {
        let x = c(re, im);
        prop_assume!(x.norm() <= 10.0);
        let e = mittag_leffler3(1.0, c(1.0, 0.0), c(1.0, 0.0), x).unwrap();
        prop_assert!((e - x.exp()).norm() < 1e-10 * x.exp().norm().max(1.0));
    }

    #[test]
    fn rescaling_preserves_omega(beta in prop_oneof![0.3..3.0f64, -3.0..-0.3f64], re in -0.3..0.9f64, im in -3.0..3.0f64) {
        let spec = mixed_growth_spec();
        let (s, _) = rescale_to_unit_step(&spec, &EquationParams { beta, ..params() });
        let z = c(re, im);
        let a = evaluate_omega(&spec, z, 400);
        let b = evaluate_omega(&s, z / beta.abs(), 400);
        if let (Ok(a), Ok(b)) = (a, b) {
            prop_assert!((a.value - b.value).norm() < 1e-10 * a.value.norm());
        }
    }

    #[test]
    fn omega_truncation_within_tail_estimate(re in -0.4..1.4f64, im in -5.0..5.0f64) {
        let spec = tangent_spec();
        let z = c(re, im);
        if let (Ok(a), Ok(b)) = (evaluate_omega(&spec, z, 500), evaluate_omega(&spec, z, 1000)) {
            prop_assert!((a.value - b.value).norm() <= a.tail_estimate);
        }
    }

    #[test]
    fn plugin_enters_multiplicatively(re in -0.4..1.4f64, im in -4.0..4.0f64, s_re in 0.3..2.0f64) {
        let unit = HomogeneousSolution::build(&tangent_spec(), &params(), PeriodicPlugin::unit(), 300).unwrap();
        let sine = unit.with_plugin(PeriodicPlugin::sine_exponential());
        let (z, sigma) = (c(re, im), c(s_re, 0.2));
        if let (Ok(a), Ok(b)) = (unit.log_evaluate(z, sigma), sine.log_evaluate(z, sigma)) {
            let expect = sine.plugin().eval(z);
            prop_assert!(((b - a).exp() - expect).norm() < 1e-12 * expect.norm().max(1.0));
        }
    }

    #[test]
    fn homogeneous_residual_is_small(re in -0.4..1.4f64, im in -6.0..6.0f64, s_re in 0.2..3.0f64, s_im in -2.0..2.0f64) {
        let sol = HomogeneousSolution::build(&tangent_spec(), &params(), PeriodicPlugin::unit(), 2000).unwrap();
        if let Ok(r) = sol.residual(c(re, im), c(s_re, s_im)) {
            prop_assert!(r < 1e-8, "{r}");
        }
    }

    #[test]
    fn zero_tables_are_complete(
        (p, q) in coprime_pq(),
        t1 in 0.0..2.0 * PI,
        t2 in 0.0..2.0 * PI,
        q2 in 1.05..4.0f64,
        plus in any::<bool>(),
    ) {
        let s = SParams { theta1: t1, theta2: t2, p, q, q2 };
        let pm = if plus { 1.0 } else { -1.0 };
        let spec = if plus { TrigCoefficientSpec::SPlus(s) } else { TrigCoefficientSpec::SMinus(s) };
        let t = find_zeros(&spec).unwrap();
        prop_assert_eq!(t.count, 2 * p);
        for w in t.entries.windows(2) {
            prop_assert!(w[0].location <= w[1].location);
        }
        for e in &t.entries {
            prop_assert!(s_eval(&s, pm, c(e.location, 0.0)).norm() < 1e-9 * (1.0 + q2));
        }
    }

    #[test]
    fn reflection_identities(t1 in 0.0..2.0 * PI, t2 in 0.0..2.0 * PI, q2 in 0.2..3.0f64, plus in any::<bool>(), x in -6.0..6.0f64, y in -1.0..1.0f64) {
        let s = SParams { theta1: t1, theta2: t2, p: 5, q: 2, q2 };
        let pm = if plus { 1.0 } else { -1.0 };
        let (factor, r, rpm) = reflect_angles(s, pm);
        prop_assert!(r.theta1 <= PI && r.theta2 <= PI);
        let z = c(x, y);
        let (a, b) = (s_eval(&s, pm, z), factor * s_eval(&r, rpm, z));
        prop_assert!((a - b).norm() < 1e-10 * (1.0 + a.norm()));
    }

    #[test]
    fn products_match_direct_values(q0 in 0.3..1.5f64, theta in 0.0..2.0 * PI, plus in any::<bool>(), x in -3.5..3.5f64, y in -3.5..3.5f64) {
        prop_assume!((theta - PI / 2.0).abs() > 1e-3 && (theta - 1.5 * PI).abs() > 1e-3);
        let sign = if plus { Sign::Plus } else { Sign::Minus };
        let z = c(x, y);
        for spec in [TrigCoefficientSpec::SinShift { q0, theta, sign }, TrigCoefficientSpec::CosShift { q0, theta, sign }] {
            let direct = spec.eval(z);
            prop_assume!(direct.norm() > 1e-6);
            let n = 4000;
            let f = factorize(&spec, n).unwrap();
            // omitted factors contribute z(a+b)/T² and z²/T² per lattice level, T = π/q₀
            let w = q0 * z.norm() / PI;
            let bound = 2.0 * (w + w * w) / n as f64;
            prop_assert!((f.evaluate(z).unwrap() - direct).norm() <= bound * direct.norm() + 1e-12);
        }
    }

    #[test]
    fn conversion_reproduces_the_product(q2 in 1.2..3.0f64, t1 in 0.1..3.0f64, t2 in 0.1..3.0f64, x in -2.0..2.0f64, y in -1.0..1.0f64) {
        let spec = TrigCoefficientSpec::SMinus(SParams { theta1: t1, theta2: t2, p: 4, q: 1, q2 });
        let t = find_zeros(&spec).unwrap();
        prop_assume!(t.complex.is_empty());
        let f = factorize(&spec, 3000).unwrap();
        // a zero very close to the origin can exceed the summability ceiling
        let Ok(conv) = to_omega(&f, 1.0) else { return Ok(()) };
        let z = c(x, y);
        let a = f.evaluate(z).unwrap();
        prop_assume!(a.norm() > 1e-6);
        let b = evaluate_omega(&conv.omega, z, 3000).unwrap().value;
        prop_assert!((a - b).norm() < 1e-8 * a.norm(), "{a} vs {b}");
    }

    #[test]
    fn transmission_angle_identity(a3 in 0.01..5.0f64, a4 in 0.01..5.0f64, kappa in prop_oneof![1.01..10.0f64, 0.05..0.99f64]) {
        let p = TransmissionProblem {
            omega0: CornerAngle { q: 1, p: 3 },
            a1: 1.0,
            a2: 0.5,
            a3,
            a4,
            kappa,
            s0: -0.5,
            nu: 0.5,
            s: 0.3,
            forcing: ForcingModel::Zero,
            d0: 0.5,
        };
        let a = derive_angles(&p).unwrap();
        prop_assert!(a.identity_defect < 1e-12);
        prop_assert!(a.theta1 > 0.0 && a.theta1 < PI / 2.0 && a.theta2 > 0.0 && a.theta2 < PI);
        prop_assert!(a.q2 > 1.0 && a.q2_star > 1.0);
    }
}
