use csk_core::kernels::{green_function, heat_kernel, KernelSpec};
use csk_core::params::{classify_realization, gamma_p, similarity_shift, OperatorParams, SpaceParams};
use csk_core::specfun::{bessel_i, bessel_k, bessel_k_integral};
use csk_core::suites::{run_suite, SuiteConfig};
use proptest::prelude::*;

const INVARIANT_SUITES: [&str; 10] = [
    "params-invariants",
    "specfun-invariants",
    "kernel-symmetry",
    "scaling",
    "envelope",
    "elementary-inequalities",
    "maximal-function",
    "trace-limits",
    "domain-limits",
    "tensor-invariants",
];

#[test]
fn invariant_suites_pass() {
    for name in INVARIANT_SUITES {
        let rep = run_suite(name, &SuiteConfig::default()).unwrap_or_else(|e| panic!("{name}: {e}"));
        let bad: Vec<_> = rep.failures().map(|c| format!("{} = {}", c.name, c.measured.0)).collect();
        assert!(rep.pass, "{name}: {bad:?}");
    }
}

#[test]
fn unknown_suite_is_rejected() {
    assert!(run_suite("no-such-suite", &SuiteConfig::default()).is_err());
}

fn op_with_real_roots() -> impl Strategy<Value = OperatorParams> {
    (-1.0f64..3.0, 0.0f64..4.0).prop_map(|(c, extra)| OperatorParams::new(extra - ((c - 1.0) / 2.0).powi(2), c))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn roots_solve_indicial_equation(op in op_with_real_roots()) {
        let r = op.indicial_roots().unwrap();
        for s in [r.s1, r.s2] {
            let q = -s * s + (op.c - 1.0) * s + op.b;
            prop_assert!(q.abs() < 1e-12 * (1.0 + s * s + op.b.abs()));
        }
        prop_assert!((r.s1 + r.s2 - (op.c - 1.0)).abs() < 1e-12);
        prop_assert!(r.s1 <= r.s2);
    }

    #[test]
    fn similarity_shifts_roots(op in op_with_real_roots(), k in -2.0f64..2.0, m in -0.5f64..2.0, p in 1.1f64..4.0) {
        let sp = SpaceParams::half_line(m, p).unwrap();
        let (op2, sp2) = similarity_shift(op, sp, k);
        let (r, r2) = (op.indicial_roots().unwrap(), op2.indicial_roots().unwrap());
        prop_assert!((r2.d - r.d).abs() < 1e-9 * (1.0 + r.d));
        prop_assert!((r2.s1 - (r.s1 + k)).abs() < 1e-6);
        prop_assert!((r2.s2 - (r.s2 + k)).abs() < 1e-6);
        prop_assert!((sp2.homogeneity() - (sp.homogeneity() + k)).abs() < 1e-12);
    }

    #[test]
    fn alternate_realization_breaks_uniqueness(op in op_with_real_roots(), m in -0.9f64..3.0, p in 1.1f64..4.0) {
        let sp = SpaceParams::half_line(m, p).unwrap();
        if let Ok(real) = classify_realization(op, sp) {
            prop_assert!(!(real.alternate_exists && real.unique));
        }
    }

    #[test]
    fn gamma_vanishes_at_two_points(c in -2.0f64..2.0) {
        prop_assert!(gamma_p(c, 0.5).abs() < 1e-12);
        let p = 1.0 / (1.0 + c);
        if p.is_finite() && p > 0.0 {
            prop_assert!(gamma_p(c, p).abs() < 1e-9);
        }
    }

    #[test]
    fn bessel_k_matches_integral(nu in -3.0f64..3.0, x in 0.05f64..30.0) {
        let a = bessel_k(nu, x, true).unwrap();
        let b = bessel_k_integral(nu, x, true).unwrap();
        prop_assert!((a - b).abs() <= 1e-10 * b.abs());
    }

    #[test]
    fn bessel_wronskian(nu in 0.0f64..4.0, x in 0.05f64..40.0) {
        // I_nu K_{nu+1} + I_{nu+1} K_nu = 1/x, in scaled form
        let w = bessel_i(nu, x, true).unwrap() * bessel_k(nu + 1.0, x, true).unwrap()
            + bessel_i(nu + 1.0, x, true).unwrap() * bessel_k(nu, x, true).unwrap();
        prop_assert!((w * x - 1.0).abs() < 1e-11);
    }

    #[test]
    fn kernel_is_symmetric_against_weight(c in -0.9f64..2.5, t in 0.05f64..5.0, y in 0.05f64..5.0, rho in 0.05f64..5.0) {
        let k = KernelSpec::neumann(c).unwrap();
        let a = heat_kernel(&k, t, y, rho).unwrap() * rho.powf(-c);
        let b = heat_kernel(&k, t, rho, y).unwrap() * y.powf(-c);
        prop_assert!((a - b).abs() <= 1e-11 * a.abs().max(1e-300));
    }

    #[test]
    fn green_function_is_positive_and_symmetric(b in 0.0f64..3.0, c in -0.5f64..2.0, lambda in 0.1f64..10.0,
                                                y in 0.05f64..5.0, rho in 0.05f64..5.0) {
        let k = KernelSpec::standard(OperatorParams::new(b, c)).unwrap();
        let g = green_function(&k, lambda, y, rho).unwrap();
        let h = green_function(&k, lambda, rho, y).unwrap();
        prop_assert!(g > 0.0);
        let (gs, hs) = (g * rho.powf(-c), h * y.powf(-c));
        prop_assert!((gs - hs).abs() <= 1e-11 * gs);
    }
}
