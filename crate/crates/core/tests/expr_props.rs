use proptest::prelude::*;
use wgfrac::{Error, Expr};

/// Random expressions that evaluate finitely on [-1, 1]: every `log`,
/// `sqrt` and division is guarded by a strictly positive argument.
fn expr_text() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        Just("x".to_string()),
        Just("pi".to_string()),
        Just("e".to_string()),
        (0.1f64..3.0).prop_map(|c| format!("{c:.3}")),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a}) + ({b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a}) - ({b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a}) * ({b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a}) / (2 + cos({b}))")),
            inner.clone().prop_map(|a| format!("-({a})")),
            inner.clone().prop_map(|a| format!("sin({a})")),
            inner.clone().prop_map(|a| format!("cos({a})")),
            inner.clone().prop_map(|a| format!("exp(sin({a}))")),
            inner.clone().prop_map(|a| format!("log(2 + sin({a}))")),
            inner.clone().prop_map(|a| format!("sqrt(1 + ({a})^2)")),
            (inner.clone(), 1u32..4).prop_map(|(a, k)| format!("({a})^{k}")),
            inner.prop_map(|a| format!("(1.5 + sin({a}))^(cos(x))")),
        ]
    })
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn print_parse_round_trip(text in expr_text(), xs in proptest::collection::vec(-1.0f64..1.0, 32)) {
        let e = Expr::parse(&text).unwrap();
        let back = Expr::parse(&e.to_string()).unwrap();
        for x in xs {
            let (u, v) = (e.eval(x).unwrap(), back.eval(x).unwrap());
            prop_assert!(rel_close(u, v, 1e-13), "{text} -> {e}: {u} vs {v} at {x}");
        }
    }

    #[test]
    fn differentiation_is_linear(
        f in expr_text(),
        g in expr_text(),
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
        x in -1.0f64..1.0,
    ) {
        let combo = Expr::parse(&format!("({a}) * ({f}) + ({b}) * ({g})")).unwrap();
        let lhs = combo.differentiate().unwrap().eval(x).unwrap();
        let df = Expr::parse(&f).unwrap().differentiate().unwrap().eval(x).unwrap();
        let dg = Expr::parse(&g).unwrap().differentiate().unwrap().eval(x).unwrap();
        let rhs = a * df + b * dg;
        let scale = (a * df).abs() + (b * dg).abs();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * scale.max(1.0), "{lhs} vs {rhs}");
    }

    #[test]
    fn derivative_matches_central_difference(text in expr_text(), x in -0.9f64..0.9) {
        const H: f64 = 1e-5;
        let e = Expr::parse(&text).unwrap();
        let d = e.differentiate().unwrap().eval(x).unwrap();
        let fd = (e.eval(x + H).unwrap() - e.eval(x - H).unwrap()) / (2.0 * H);
        let scale = 1.0 + d.abs() + e.eval(x).unwrap().abs();
        prop_assert!((d - fd).abs() <= 1e-6 * scale, "{text}: d = {d}, fd = {fd}");
    }
}

#[test]
fn documented_parse_shapes() {
    assert_eq!(Expr::parse("1").unwrap().to_sexpr(), "1");
    assert_eq!(
        Expr::parse("exp(x) * (1 + x^2)").unwrap().to_sexpr(),
        "Mul(exp(x), Add(1, Pow(x, 2)))"
    );
    match Expr::parse("2*+x") {
        Err(Error::Parse { offset, .. }) => assert_eq!(offset, 2),
        other => panic!("expected a parse error, got {other:?}"),
    }
    assert!(matches!(Expr::parse("x + y"), Err(Error::MultipleVariables { .. })));
    assert!(Expr::parse("").is_err());
}

#[test]
fn documented_evaluations() {
    assert_eq!(Expr::parse("x^2").unwrap().eval(3.0).unwrap(), 9.0);
    assert!(Expr::parse("sin(pi)").unwrap().eval(0.7).unwrap().abs() <= 1e-15);
    assert!(matches!(Expr::parse("1/x").unwrap().eval(0.0), Err(Error::Eval { .. })));
    assert!(Expr::parse("log(x)").unwrap().eval(-1.0).is_err());
    assert!(Expr::parse("x^x").unwrap().eval(-0.5).is_err());
}

#[test]
fn documented_derivatives() {
    assert_eq!(Expr::parse("x^2").unwrap().differentiate().unwrap().to_string(), "2*x");
    assert_eq!(
        Expr::parse("exp(2*x)").unwrap().differentiate().unwrap().to_string(),
        "2*exp(2*x)"
    );
    assert!(matches!(
        Expr::parse("abs(x)").unwrap().differentiate(),
        Err(Error::Unsupported(_))
    ));
}
