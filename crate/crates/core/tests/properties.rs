use green_ops::expr::{parse_expression, Expr};
use green_ops::geometry::{fd_step, wirtinger_split, DiskDomain};
use green_ops::operators::{GreenOperators, ScalarField};
use green_ops::oracle::hoelder::hoelder_seminorm;
use green_ops::oracle::PolynomialField;
use green_ops::quadrature::Resolution;
use num_complex::Complex64;
use proptest::prelude::*;

fn finite_nonneg() -> impl Strategy<Value = f64> {
    prop_oneof![0.0..10.0, (0u32..1000).prop_map(|n| n as f64), 1e-9..1e-3]
}

/// Constants the parser can produce: `x`, `xi` and folded `(x±yi)`.
fn constant() -> impl Strategy<Value = Complex64> {
    prop_oneof![
        finite_nonneg().prop_map(|x| Complex64::new(x, 0.0)),
        finite_nonneg().prop_map(|y| Complex64::new(0.0, y)),
        (finite_nonneg(), -10.0..10.0f64).prop_map(|(x, y)| Complex64::new(x, y)),
    ]
}

fn expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        constant().prop_map(Expr::Const),
        (0usize..2, any::<bool>()).prop_map(|(factor, conj)| Expr::Var { factor, conj }),
    ];
    leaf.prop_recursive(5, 48, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|e| Expr::Neg(Box::new(e))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Add(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Sub(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Mul(Box::new(a), Box::new(b))),
            (inner, 0u32..6).prop_map(|(a, k)| Expr::Pow(Box::new(a), k)),
        ]
    })
}

fn polynomial(max_degree: usize) -> impl Strategy<Value = PolynomialField> {
    prop::collection::vec(
        (0..=max_degree, 0..=max_degree, -1.0..1.0f64, -1.0..1.0f64),
        1..6,
    )
    .prop_map(move |terms| {
        let mut p = PolynomialField::zero();
        for (a, b, re, im) in terms {
            if a + b <= max_degree {
                p.set(a, b, p.coeff(a, b) + Complex64::new(re, im)).unwrap();
            }
        }
        p
    })
}

fn point(max: f64) -> impl Strategy<Value = Complex64> {
    (0.0..max, 0.0..std::f64::consts::TAU).prop_map(|(r, t)| Complex64::from_polar(r, t))
}

proptest! {
    #[test]
    fn print_then_parse_is_identity(e in expr()) {
        let text = e.to_string();
        let back = parse_expression(&text, 2).unwrap();
        prop_assert_eq!(back, e, "{}", text);
    }

    #[test]
    fn polynomial_routing_agrees_with_evaluator(e in expr(), z in point(1.0)) {
        let single = e.factors_used() <= 1;
        prop_assume!(single);
        if let Some(p) = e.to_polynomial() {
            let (a, b) = (p.eval(z), e.eval(&[z]));
            prop_assert!((a - b).norm() <= 1e-9 * b.norm().max(1.0) * (1.0 + p.max_coeff()), "{} vs {}", a, b);
        }
    }

    #[test]
    fn conjugation_is_an_involution(p in polynomial(4), z in point(1.0)) {
        prop_assert_eq!(p.conj().conj(), p);
        let v = p.eval(z);
        prop_assert!((p.conj().eval(z) - v.conj()).norm() <= 1e-14 * (1.0 + v.norm()));
        let f = ScalarField::from_polynomial(DiskDomain::unit(), p);
        prop_assert!((f.conj().conj().eval(z) - v).norm() <= 1e-14 * (1.0 + v.norm()));
    }

    #[test]
    fn exact_t_inverts_dbar(p in polynomial(5), r in 0.5..2.0f64) {
        let back = p.exact_t(r).unwrap().wirtinger_exact(0, 1);
        prop_assert!((back - p).max_coeff() < 1e-12);
        let back = p.exact_tbar(r).unwrap().wirtinger_exact(1, 0);
        prop_assert!((back - p).max_coeff() < 1e-12);
    }

    #[test]
    fn exact_wirtinger_matches_finite_differences(p in polynomial(3), z in point(0.5), mu in 0u32..2, nu in 0u32..2) {
        prop_assume!(mu + nu > 0);
        let exact = p.wirtinger_exact(mu, nu).eval(z);
        let h = fd_step(mu + nu, 1.0);
        let fd = wirtinger_split(mu, nu).apply(|w| Ok::<_, ()>(p.eval(w)), z, h).unwrap();
        prop_assert!((fd - exact).norm() < 1e-6 * exact.norm().max(1.0), "{} vs {}", fd, exact);
    }

    #[test]
    fn hoelder_estimate_is_monotone(p in polynomial(3), alpha in 0.1..0.9f64, budget in 8usize..200, extra in 1usize..200) {
        let d = DiskDomain::unit();
        let small = hoelder_seminorm(&d, |z| p.eval(z), alpha, budget).unwrap();
        let large = hoelder_seminorm(&d, |z| p.eval(z), alpha, budget + extra).unwrap();
        prop_assert!(large.value >= small.value);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn t_is_linear(p in polynomial(3), q in polynomial(3), a in point(2.0), b in point(2.0), z in point(0.9)) {
        let d = DiskDomain::unit();
        let ops = GreenOperators::new(Resolution::new(8, 16).unwrap(), 64).unwrap();
        let f = ScalarField::new(d, 0.5, "p", move |w| p.eval(w)).unwrap();
        let g = ScalarField::new(d, 0.5, "q", move |w| q.eval(w)).unwrap();
        let sum = ScalarField::new(d, 0.5, "a p + b q", move |w| a * p.eval(w) + b * q.eval(w)).unwrap();
        let lhs = ops.apply_t(&sum, z).unwrap();
        let rhs = a * ops.apply_t(&f, z).unwrap() + b * ops.apply_t(&g, z).unwrap();
        prop_assert!((lhs - rhs).norm() < 1e-12 * (1.0 + lhs.norm()), "{} vs {}", lhs, rhs);
    }

    #[test]
    fn quadrature_t_matches_exact_polynomial_t(p in polynomial(3), z in point(0.9)) {
        let d = DiskDomain::unit();
        let ops = GreenOperators::new(Resolution::new(16, 32).unwrap(), 64).unwrap();
        let f = ScalarField::from_polynomial(d, p);
        let exact = p.exact_t(1.0).unwrap().eval(z);
        let got = ops.apply_t(&f, z).unwrap();
        prop_assert!((got - exact).norm() < 1e-10 * (1.0 + exact.norm()), "{} vs {}", got, exact);
    }
}
