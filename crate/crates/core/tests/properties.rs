//! Fixed-seed property suites for the expression language and the
//! Christoffel symbols.

use geolift::expr::{eval_dual, parse_expr};
use geolift::geometry::{christoffel, Point};
use geolift::manifold::parse_metric;
use proptest::prelude::*;
use proptest::strategy::ValueTree;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};

fn runner(cases: u32, seed: u8) -> TestRunner {
    let config = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    TestRunner::new_with_rng(config, TestRng::from_seed(RngAlgorithm::ChaCha, &[seed; 32]))
}

fn coords() -> Vec<String> {
    ["x1", "x2", "x3"].iter().map(|s| s.to_string()).collect()
}

fn number() -> impl Strategy<Value = String> {
    (-20i32..=20).prop_map(|k| format!("{}", k as f64 / 8.0))
}

/// Polynomials in three coordinates, nesting depth at most 6.
fn polynomial() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        number(),
        prop::sample::select(vec!["x1", "x2", "x3"]).prop_map(String::from)
    ];
    leaf.prop_recursive(6, 48, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} + {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} - {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a})*({b})")),
            (inner.clone(), 2u32..=3).prop_map(|(a, k)| format!("({a})^{k}")),
            inner.prop_map(|a| format!("-{a}")),
        ]
    })
}

/// The full grammar, including division and functions.
fn expression() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        number(),
        prop::sample::select(vec!["x1", "x2", "x3", "pi"]).prop_map(String::from)
    ];
    leaf.prop_recursive(5, 32, 2, |inner| {
        let func = prop::sample::select(vec!["sin", "cos", "tan", "exp", "log", "ln", "sqrt", "abs"]);
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("{a} + {b}")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("{a} - {b}")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("{a} * {b}")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("{a} / ({b})")),
            (inner.clone(), 1u32..=3).prop_map(|(a, k)| format!("({a})^{k}")),
            (func, inner.clone()).prop_map(|(f, a)| format!("{f}({a})")),
            inner.prop_map(|a| format!("-({a})")),
        ]
    })
}

fn point() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, 3)
}

#[test]
fn dual_partials_match_central_differences() {
    runner(256, 1)
        .run(&(polynomial(), point()), |(text, x)| {
            let e = parse_expr(&text, &coords()).unwrap();
            let d = eval_dual(&e, &x).unwrap();
            let h = 1e-6;
            for i in 0..3 {
                let (mut a, mut b) = (x.clone(), x.clone());
                a[i] += h;
                b[i] -= h;
                let fd = (e.eval_f64(&a).unwrap() - e.eval_f64(&b).unwrap()) / (2.0 * h);
                let scale = d.partials[i].abs().max(d.value.abs()).max(1.0);
                prop_assert!(
                    (d.partials[i] - fd).abs() <= 1e-6 * scale,
                    "{text}: d/dx{} = {} vs {fd}",
                    i + 1,
                    d.partials[i]
                );
            }
            Ok(())
        })
        .unwrap();
}

#[test]
fn printing_and_reparsing_preserves_values() {
    let mut pts = runner(1, 2);
    let samples: Vec<Vec<f64>> = (0..100)
        .map(|_| point().new_tree(&mut pts).unwrap().current())
        .collect();
    runner(200, 3)
        .run(&expression(), |text| {
            let e = parse_expr(&text, &coords()).unwrap();
            let again = parse_expr(&e.to_string(), &coords()).unwrap();
            for x in &samples {
                match (e.eval_f64(x), again.eval_f64(x)) {
                    (Ok(a), Ok(b)) => prop_assert!(
                        a == b || (a - b).abs() <= 1e-12 * a.abs().max(1.0),
                        "{text}: {a} vs {b}"
                    ),
                    (Err(_), Err(_)) => {}
                    (a, b) => prop_assert!(false, "{text}: {a:?} vs {b:?}"),
                }
            }
            Ok(())
        })
        .unwrap();
}

#[test]
fn conformal_christoffels_match_the_closed_form() {
    let coef = prop::collection::vec(-0.5f64..0.5, 6);
    let at = prop::collection::vec(-1.0f64..1.0, 2);
    runner(100, 4)
        .run(&(coef, at), |(c, x)| {
            let phi = format!(
                "{} + {}*x1 + {}*x2 + {}*x1^2 + {}*x1*x2 + {}*x2^2",
                c[0], c[1], c[2], c[3], c[4], c[5]
            );
            let cfg = format!(
                "[manifold]\nname = \"conformal\"\ndim = 2\ncoords = [\"x1\", \"x2\"]\nsignature = [2, 0]\n\n\
                 [metric]\ng11 = \"exp(2*({phi}))\"\ng12 = \"0\"\ng22 = \"exp(2*({phi}))\"\n\n\
                 [domain]\nbox = [[-2.0, 2.0], [-2.0, 2.0]]\n"
            );
            let m = parse_metric(&cfg).unwrap();
            let gamma = christoffel(&m, &Point::new(x.clone())).unwrap();
            let dphi = [
                c[1] + 2.0 * c[3] * x[0] + c[4] * x[1],
                c[2] + c[4] * x[0] + 2.0 * c[5] * x[1],
            ];
            let delta = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
            for k in 0..2 {
                for i in 0..2 {
                    for j in 0..2 {
                        let want = delta(k, i) * dphi[j] + delta(k, j) * dphi[i] - delta(i, j) * dphi[k];
                        prop_assert!(
                            (gamma[k][i][j] - want).abs() < 1e-10,
                            "G^{k}_{i}{j}: {} vs {want}",
                            gamma[k][i][j]
                        );
                    }
                }
            }
            Ok(())
        })
        .unwrap();
}
