use fock_cli::catalog::{lookup, CATALOG};
use fock_cli::expr::{parse, BinOp, Expr, ExprKind, Func, ParseError, SymbolExpression};
use fock_core::operator::SymbolShape;
use fock_core::C64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn eval1(src: &str, z: C64) -> C64 {
    parse(src, 1).unwrap().eval(&[z])
}

#[test]
fn literal_and_functions() {
    assert_eq!(eval1("1", c(3.0, 4.0)), c(1.0, 0.0));
    assert!((eval1("exp(-abs(z)^2)", c(1.0, 0.0)) - c((-1.0f64).exp(), 0.0)).norm() < 1e-15);
    assert_eq!(eval1("phase(z)", c(0.0, 1.0)), c(0.0, 1.0));
    assert_eq!(eval1("phase(z)", c(0.0, 0.0)), c(0.0, 0.0));
    let z = c(0.3, -1.7);
    assert_eq!(eval1("conj(z)", z), z.conj());
    assert_eq!(eval1("re(z) + i*im(z)", z), z);
    assert_eq!(eval1("abs(z)", c(3.0, 4.0)), c(5.0, 0.0));
    assert_eq!(eval1("z^-1", c(0.0, 2.0)), c(0.0, -0.5));
    assert_eq!(eval1("2.5e-1", z), c(0.25, 0.0));
}

#[test]
fn precedence_and_associativity() {
    let z = c(2.0, 0.0);
    assert_eq!(eval1("1 + 2 * 3", z), c(7.0, 0.0));
    assert_eq!(eval1("8 / 4 / 2", z), c(1.0, 0.0));
    assert_eq!(eval1("5 - 3 - 1", z), c(1.0, 0.0));
    assert_eq!(eval1("-z^2", z), c(-4.0, 0.0));
    assert_eq!(eval1("(-z)^3", z), c(-8.0, 0.0));
    assert_eq!(eval1("2 * -z", z), c(-4.0, 0.0));
    let e = parse("-z^2", 1).unwrap();
    assert!(
        matches!(e.kind, ExprKind::Neg(ref inner) if matches!(inner.kind, ExprKind::Pow(_, 2)))
    );
}

#[test]
fn several_variables() {
    let e = parse("z1 * conj(z2) + abs(z2)^2", 2).unwrap();
    let v = e.eval(&[c(1.0, 1.0), c(0.0, 2.0)]);
    assert_eq!(v, c(1.0, 1.0) * c(0.0, -2.0) + c(4.0, 0.0));
    assert!(matches!(
        parse("z", 2),
        Err(ParseError::UnknownIdentifier { offset: 0, .. })
    ));
    assert!(matches!(
        parse("z3", 2),
        Err(ParseError::UnknownIdentifier { offset: 0, .. })
    ));
}

#[test]
fn errors_carry_offsets_and_expectations() {
    match parse("1 + * z", 1) {
        Err(ParseError::Syntax {
            offset, expected, ..
        }) => {
            assert_eq!(offset, 4);
            assert!(expected.contains(&"number"));
        }
        other => panic!("{other:?}"),
    }
    match parse("z^2.5", 1) {
        Err(ParseError::Syntax {
            offset, expected, ..
        }) => {
            assert_eq!(offset, 3);
            assert_eq!(expected, vec!["integer exponent"]);
        }
        other => panic!("{other:?}"),
    }
    match parse("z^w", 1) {
        Err(ParseError::Syntax { offset: 2, .. }) => {}
        other => panic!("{other:?}"),
    }
    match parse("exp(z", 1) {
        Err(ParseError::Syntax {
            offset: 5,
            expected,
            ..
        }) => assert!(expected.contains(&"`)`")),
        other => panic!("{other:?}"),
    }
    match parse("sin(z)", 1) {
        Err(ParseError::UnknownIdentifier { offset: 0, name }) => assert_eq!(name, "sin"),
        other => panic!("{other:?}"),
    }
    match parse("(z) z", 1) {
        Err(ParseError::Syntax { offset: 4, .. }) => {}
        other => panic!("{other:?}"),
    }
    assert!(parse("", 1).is_err());
    assert!(parse("1e999", 1).is_err());
    assert!(parse("exp z", 1).is_err());
}

#[test]
fn catalog_agrees_with_closed_forms() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for entry in CATALOG {
        let e = SymbolExpression::parse(entry.expression, 1).unwrap();
        let f = (entry.closed_form)();
        for _ in 0..100 {
            let z = [C64::from_polar(
                5.0 * rng.gen::<f64>(),
                rng.gen::<f64>() * std::f64::consts::TAU,
            )];
            assert!((e.eval(&z) - f.eval(&z)).norm() < 1e-12, "{}", entry.name);
        }
    }
    assert!(lookup("phase").is_some());
    assert!(lookup("nope").is_none());
}

#[test]
fn shapes_are_recognized() {
    let shape = |s: &str| SymbolExpression::parse(s, 1).unwrap().shape();
    assert_eq!(shape("2 - i"), SymbolShape::Constant(c(2.0, -1.0)));
    assert_eq!(
        shape("exp(-abs(z)^2)"),
        SymbolShape::Gaussian {
            amplitude: c(1.0, 0.0),
            rate: 1.0
        }
    );
    match shape("3 * exp(1 - abs(z)^2 / 4)") {
        SymbolShape::Gaussian { amplitude, rate } => {
            assert!((amplitude - c(3.0 * 1f64.exp(), 0.0)).norm() < 1e-14);
            assert_eq!(rate, 0.25);
        }
        other => panic!("{other:?}"),
    }
    assert_eq!(shape("exp(abs(z)^2)"), SymbolShape::General);
    assert_eq!(shape("exp(-abs(z)^2) + 1"), SymbolShape::General);
    assert_eq!(shape("phase(z)"), SymbolShape::General);
    let two = SymbolExpression::parse("exp(-abs(z1)^2 - abs(z2)^2)", 2).unwrap();
    assert!(matches!(two.shape(), SymbolShape::Gaussian { rate, .. } if rate == 1.0));
    let skew = SymbolExpression::parse("exp(-abs(z1)^2 - 2*abs(z2)^2)", 2).unwrap();
    assert_eq!(skew.shape(), SymbolShape::General);
}

#[test]
fn directional_limits_are_derived() {
    let lim = |s: &str, x: C64| parse(s, 1).unwrap().radial_limit(&[x]);
    let x = C64::from_polar(1.0, 0.7);
    assert_eq!(lim("phase(z)", x), Some(x));
    assert_eq!(lim("2", x), Some(c(2.0, 0.0)));
    assert_eq!(lim("exp(-abs(z)^2)", x), Some(c(0.0, 0.0)));
    assert_eq!(lim("z * exp(-abs(z)^2)", x), None);
    assert_eq!(lim("phase(z) * exp(-abs(z)^2) + 1", x), Some(c(1.0, 0.0)));
    assert_eq!(lim("conj(phase(z))^2", x), Some(x.conj().powi(2)));
    assert_eq!(lim("re(z)", x), None);
    assert_eq!(lim("exp(abs(z)^2)", x), None);
    let f = SymbolExpression::parse("phase(z)", 1)
        .unwrap()
        .to_symbol(1.0, None);
    assert_eq!(f.limit_along(&[x]), Some(x));
    let g = SymbolExpression::parse("re(z)", 1)
        .unwrap()
        .to_symbol(1.0, None);
    assert!(!g.has_limits());
    let given = SymbolExpression::parse("re(z)", 1).unwrap();
    let h = given.to_symbol(1.0, Some(&given));
    assert_eq!(h.limit_along(&[c(1.0, 0.0)]), Some(c(1.0, 0.0)));
    let two = parse("exp(-abs(z1)^2)", 2).unwrap();
    assert_eq!(
        two.radial_limit(&[c(0.0, 0.0), c(1.0, 0.0)]),
        Some(c(1.0, 0.0))
    );
    assert_eq!(
        two.radial_limit(&[c(0.6, 0.0), c(0.8, 0.0)]),
        Some(c(0.0, 0.0))
    );
}

fn arb_expr() -> impl Strategy<Value = Expr> {
    let node = |kind| Expr { kind, pos: 0 };
    let leaf = prop_oneof![
        prop_oneof![Just(0.0), Just(1.0), Just(0.5), 0.0..1e6f64, 1e-9..1e-3f64]
            .prop_map(move |v| node(ExprKind::Num(v))),
        Just(node(ExprKind::I)),
        (0usize..2).prop_map(move |j| node(ExprKind::Var(j))),
    ];
    leaf.prop_recursive(5, 48, 2, move |inner| {
        let func = prop_oneof![
            Just(Func::Exp),
            Just(Func::Conj),
            Just(Func::Abs),
            Just(Func::Re),
            Just(Func::Im),
            Just(Func::Phase)
        ];
        let op = prop_oneof![
            Just(BinOp::Add),
            Just(BinOp::Sub),
            Just(BinOp::Mul),
            Just(BinOp::Div)
        ];
        prop_oneof![
            inner
                .clone()
                .prop_map(move |e| node(ExprKind::Neg(Box::new(e)))),
            (op, inner.clone(), inner.clone()).prop_map(move |(o, l, r)| node(ExprKind::Bin(
                o,
                Box::new(l),
                Box::new(r)
            ))),
            (inner.clone(), -4i32..5).prop_map(move |(e, k)| node(ExprKind::Pow(Box::new(e), k))),
            (func, inner).prop_map(move |(f, e)| node(ExprKind::Call(f, Box::new(e)))),
        ]
    })
}

proptest! {
    #[test]
    fn print_then_parse_is_identity(e in arb_expr()) {
        let printed = e.to_string();
        let back = parse(&printed, 2).unwrap();
        prop_assert_eq!(&back, &e, "printed as {}", printed);
        let again = parse(&back.to_string(), 2).unwrap();
        prop_assert_eq!(again, back);
    }

    #[test]
    fn parse_print_parse_is_a_fixed_point(src in "[ ]?(z|i|1|2\\.5)([ ]?[-+*/][ ]?-?(z|i|3|abs\\(z\\)|phase\\(z\\)|\\(z\\+1\\)\\^2)){0,6}") {
        if let Ok(e) = parse(&src, 1) {
            let back = parse(&e.to_string(), 1).unwrap();
            prop_assert_eq!(&back, &e);
            prop_assert_eq!(back.to_string(), e.to_string());
        }
    }
}
