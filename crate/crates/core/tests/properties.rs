use proptest::prelude::*;

use nullag::construct::solve_c;
use nullag::expr::{is_zero, parse, partial, total_dt, Domain, Expr, Var};
use nullag::variational::{from_gauge, is_null, null_condition_residual, GaugeFunction, Lagrangian};
use nullag::Settings;

fn leaf() -> impl Strategy<Value = String> {
    prop_oneof![
        (-4i32..=4).prop_map(|k| format!("({k})")),
        Just("x".to_string()),
        Just("t".to_string()),
        Just("a1".to_string()),
    ]
}

/// Expressions in x, t and a constant, free of singular points on the
/// default box.
fn smooth() -> impl Strategy<Value = String> {
    leaf().prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} + {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} - {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a})*({b})")),
            (inner.clone(), 0u32..=3).prop_map(|(a, k)| format!("({a})^{k}")),
            inner.clone().prop_map(|a| format!("sin({a})")),
            inner.clone().prop_map(|a| format!("cos({a})")),
            inner.prop_map(|a| format!("exp(({a})/4)")),
        ]
    })
}

/// Same, with x' allowed.
fn with_velocity() -> impl Strategy<Value = String> {
    (smooth(), smooth(), smooth()).prop_map(|(a, b, c)| format!("({a})*x'^2 + ({b})*x' + {c}"))
}

fn p(s: &str) -> Expr {
    parse(s).unwrap()
}

fn settings() -> Settings {
    Settings { n_eq: 8, ..Settings::default() }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn printing_round_trips(src in with_velocity()) {
        let e = p(&src);
        let back = parse(&e.to_string()).unwrap();
        prop_assert_eq!(back, e);
    }

    #[test]
    fn canonical_form_is_idempotent(src in with_velocity()) {
        let e = p(&src);
        prop_assert_eq!(e.canonical(), e.clone());
        prop_assert_eq!(e.canonical().canonical(), e.canonical());
    }

    #[test]
    fn total_derivative_is_linear(a in with_velocity(), b in with_velocity(), k in -5i64..=5) {
        let (a, b) = (p(&a), p(&b));
        let lhs = total_dt(&a.add(&b.scale(&k.into())));
        let rhs = total_dt(&a).add(&total_dt(&b).scale(&k.into()));
        let r = is_zero(&lhs.sub(&rhs), &Domain::default(), &settings()).unwrap();
        prop_assert!(r.verdict.holds(), "{:?}", r.witness);
    }

    #[test]
    fn total_derivative_obeys_product_rule(a in smooth(), b in with_velocity()) {
        let (a, b) = (p(&a), p(&b));
        let lhs = total_dt(&a.mul(&b));
        let rhs = total_dt(&a).mul(&b).add(&a.mul(&total_dt(&b)));
        let r = is_zero(&lhs.sub(&rhs), &Domain::default(), &settings()).unwrap();
        prop_assert!(r.verdict.holds(), "{:?}", r.witness);
    }

    #[test]
    fn partials_commute(src in smooth()) {
        let e = p(&src);
        let xt = partial(&partial(&e, &Var::x()), &Var::t());
        let tx = partial(&partial(&e, &Var::t()), &Var::x());
        let r = is_zero(&xt.sub(&tx), &Domain::default(), &settings()).unwrap();
        prop_assert!(r.verdict.holds());
    }

    #[test]
    fn gauge_derivatives_are_null(src in smooth()) {
        let phi = GaugeFunction::new(p(&src), Domain::default()).unwrap();
        let l = from_gauge(&phi);
        prop_assert!(is_null(&l, &settings()).unwrap().is_null());
    }

    #[test]
    fn solved_c_meets_null_condition(
        terms in proptest::collection::vec((0usize..8, -5i64..=5), 1..5)
    ) {
        const T: [&str; 8] = ["x", "x^2", "t*x^3", "t^2*x", "sin(x)*t", "exp(x)*t^2", "sin(t)*x", "cos(t)*exp(x)"];
        let b = terms.iter().fold(Expr::zero(), |acc, (i, k)| acc.add(&p(T[*i]).scale(&(*k).into())));
        prop_assume!(!b.is_zero());
        let d = Domain::default();
        let sol = solve_c(&b, &d).unwrap();
        let s = settings();
        prop_assert!(is_zero(&null_condition_residual(&b, &sol.c), &d, &s).unwrap().verdict.holds());
        let body = b.mul(&Expr::xdot()).add(&sol.c.mul(&Expr::x()));
        let l = Lagrangian::new(body, d).unwrap();
        prop_assert!(is_null(&l, &s).unwrap().is_null());
    }

    #[test]
    fn kinetic_terms_are_never_null(src in smooth(), k in 1i64..=4) {
        let body = p(&src).add(&Expr::xdot().powi(2).scale(&k.into()));
        let l = Lagrangian::new(body, Domain::default()).unwrap();
        let r = is_null(&l, &settings()).unwrap();
        prop_assert!(!r.is_null());
        prop_assert!(r.witness().is_some());
    }
}
