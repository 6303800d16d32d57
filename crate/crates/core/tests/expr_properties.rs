//! Property tests for the expression language: serialization round-trips
//! and agreement with an independent reference evaluator.

use geoequiv_core::expr::{BinOp, Expression, Func, Node};
use proptest::prelude::*;

const VARS: [&str; 3] = ["x1", "x2", "x3"];

fn leaf() -> BoxedStrategy<Node> {
    prop_oneof![
        (0.01f64..100.0).prop_map(Node::Num),
        (0usize..VARS.len()).prop_map(Node::Var),
        Just(Node::Num(core::f64::consts::PI)),
    ]
    .boxed()
}

fn arb_node() -> BoxedStrategy<Node> {
    leaf()
        .prop_recursive(5, 64, 4, |inner| {
            let func = prop_oneof![
                Just(Func::Sin),
                Just(Func::Cos),
                Just(Func::Tan),
                Just(Func::Sqrt),
                Just(Func::Exp),
                Just(Func::Log),
                Just(Func::Abs),
            ];
            let op = prop_oneof![
                Just(BinOp::Add),
                Just(BinOp::Sub),
                Just(BinOp::Mul),
                Just(BinOp::Div),
                Just(BinOp::Pow),
            ];
            prop_oneof![
                inner.clone().prop_map(|n| Node::Neg(Box::new(n))),
                (func, inner.clone()).prop_map(|(f, n)| Node::Call(f, Box::new(n))),
                (op, inner.clone(), inner)
                    .prop_map(|(o, a, b)| { Node::Bin(o, Box::new(a), Box::new(b)) }),
            ]
            .boxed()
        })
        .boxed()
}

/// Naive recursive reference evaluator, independent of the library route.
/// Returns `None` where the library would report a domain error.
fn reference_eval(node: &Node, point: &[f64]) -> Option<f64> {
    let v = match node {
        Node::Num(v) => *v,
        Node::Var(i) => point[*i],
        Node::Neg(inner) => -reference_eval(inner, point)?,
        Node::Bin(op, a, b) => {
            let x = reference_eval(a, point)?;
            let y = reference_eval(b, point)?;
            match op {
                BinOp::Add => x + y,
                BinOp::Sub => x - y,
                BinOp::Mul => x * y,
                BinOp::Div => {
                    if y == 0.0 {
                        return None;
                    }
                    x / y
                }
                BinOp::Pow => x.powf(y),
            }
        }
        Node::Call(f, a) => {
            let x = reference_eval(a, point)?;
            match f {
                Func::Sin => x.sin(),
                Func::Cos => x.cos(),
                Func::Tan => x.tan(),
                Func::Sqrt => {
                    if x < 0.0 {
                        return None;
                    }
                    x.sqrt()
                }
                Func::Exp => x.exp(),
                Func::Log => {
                    if x <= 0.0 {
                        return None;
                    }
                    x.ln()
                }
                Func::Abs => x.abs(),
            }
        }
    };
    v.is_finite().then_some(v)
}

fn expression_from(node: Node) -> Expression {
    Expression::from_parts(VARS.iter().map(|s| s.to_string()).collect(), node)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    /// parse(serialize(tree)) reproduces the tree structurally.
    #[test]
    fn serialize_parse_round_trip(node in arb_node()) {
        let expr = expression_from(node);
        let text = expr.to_string();
        let reparsed = Expression::parse(&text, &VARS)
            .unwrap_or_else(|e| panic!("`{text}` failed to re-parse: {e}"));
        prop_assert_eq!(reparsed.root(), expr.root(), "serialized form: {}", text);
    }

    /// Library evaluation agrees bit-for-bit with the reference evaluator.
    #[test]
    fn evaluation_matches_reference(
        node in arb_node(),
        p in proptest::array::uniform3(-3.0f64..3.0),
    ) {
        let expr = expression_from(node);
        match (expr.eval(&p), reference_eval(expr.root(), &p)) {
            (Ok(mine), Some(reference)) => {
                prop_assert_eq!(
                    mine.to_bits(),
                    reference.to_bits(),
                    "{} at {:?}: {} vs {}", expr, p, mine, reference
                );
            }
            (Err(_), None) => {}
            (mine, reference) => {
                return Err(TestCaseError::fail(format!(
                    "divergent domain handling for {expr}: {mine:?} vs {reference:?}"
                )));
            }
        }
    }
}
