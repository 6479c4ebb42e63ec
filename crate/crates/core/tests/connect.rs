mod common;

use std::f64::consts::PI;

use geolift::connect::{
    avez_seifert, causal_quasi_lift, causal_seeds, connect_geodesic, enumerate_geodesics, great_circle_seeds,
    minimal_connect, straight_seed, wrap_seeds, ConnectOptions, MinimalOptions,
};
use geolift::geometry::{CausalKind, Point};
use geolift::lifting::{BasePath, LiftOptions, LiftStatus};
use geolift::manifold::MetricSpec;
use rand::Rng;

fn metric(name: &str) -> MetricSpec {
    MetricSpec::builtin(name).unwrap()
}

#[test]
fn sphere_direct_connection_has_unit_length() {
    let m = metric("sphere");
    let p = Point::new(vec![0.0, 0.0]);
    let q = Point::new(vec![0.5f64.tan(), 0.0]);
    let s = connect_geodesic(&m, &p, &q, &straight_seed(&p, &q).unwrap(), &ConnectOptions::default()).unwrap();
    assert!((s.length - 1.0).abs() < 1e-6, "length {}", s.length);
    assert!(s.verify(&m, 1e-8));
}

#[test]
fn torus_windings_give_lattice_lengths() {
    let m = metric("torus");
    let p = Point::new(vec![0.0, 0.0]);
    let q = Point::new(vec![0.5, 0.0]);
    let seeds = wrap_seeds(&m, &p, &q, 0, -2..=2).unwrap();
    let r = enumerate_geodesics(&m, &p, &q, 10, &seeds, &ConnectOptions::default()).unwrap();
    assert_eq!(r.solutions.len(), 5);
    let mut want: Vec<f64> = (-2..=2).map(|k| (0.5 + k as f64).abs()).collect();
    want.sort_by(f64::total_cmp);
    for (s, w) in r.solutions.iter().zip(&want) {
        assert!((s.length - w).abs() < 1e-6, "{} vs {w}", s.length);
        assert!(s.verify(&m, 1e-8));
    }
}

#[test]
fn sphere_great_circles_give_three_lengths() {
    let m = metric("sphere");
    let theta = 1.0f64;
    let p = Point::new(vec![1.0, 0.0]);
    let q = Point::new(vec![theta.cos(), theta.sin()]);
    let seeds = great_circle_seeds(&p, &q, 3).unwrap();
    let r = enumerate_geodesics(&m, &p, &q, 3, &seeds, &ConnectOptions::default()).unwrap();
    assert!(r.failures.is_empty(), "{:?}", r.failures);
    let want = [theta, 2.0 * PI - theta, 2.0 * PI + theta];
    assert_eq!(r.solutions.len(), 3);
    for (s, w) in r.solutions.iter().zip(want) {
        assert!((s.length - w).abs() < 1e-6, "{} vs {w}", s.length);
        assert!(s.verify(&m, 1e-8));
    }
}

#[test]
fn sphere_minimal_matches_great_circle_distance() {
    let m = metric("sphere");
    let mut rng = common::rng(11);
    for _ in 0..4 {
        let a: Vec<f64> = (0..2).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let b: Vec<f64> = (0..2).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (p, q) = (Point::new(a.clone()), Point::new(b.clone()));
        let r = minimal_connect(&m, &p, &q, &MinimalOptions::default()).unwrap();
        let d = common::sphere_distance(&a, &b);
        assert!((r.solution.length - d).abs() < 1e-6, "{} vs {d}", r.solution.length);
        for pr in &r.probes {
            assert!(r.solution.length <= pr.seed_length + 1e-9);
            assert!(r.solution.length <= pr.shortened_length.unwrap() + 1e-6);
        }
        let back = minimal_connect(&m, &q, &p, &MinimalOptions::default()).unwrap();
        assert!((back.solution.length - r.solution.length).abs() < 1e-6);
    }
}

#[test]
fn torus_minimal_uses_the_nearest_image() {
    let m = metric("torus");
    let r = minimal_connect(
        &m,
        &Point::new(vec![0.1, 0.1]),
        &Point::new(vec![0.9, 0.2]),
        &MinimalOptions::default(),
    )
    .unwrap();
    assert!((r.solution.length - 0.05f64.sqrt()).abs() < 1e-9);
    assert_eq!(r.probes.len(), 9);
    assert!(r
        .probes
        .iter()
        .all(|pr| pr.solution_length.unwrap() >= r.solution.length - 1e-12));
}

#[test]
fn minkowski_maximizer_is_the_straight_line() {
    let m = metric("minkowski");
    let (p, q) = (Point::new(vec![0.0, 0.0]), Point::new(vec![2.0, 0.0]));
    let seeds: Vec<BasePath> = [0.0, 0.4, -0.7]
        .iter()
        .map(|&x| BasePath::polyline(&[vec![0.0, 0.0], vec![1.0, x], vec![2.0, 0.0]]).unwrap())
        .collect();
    let r = avez_seifert(&m, &p, &q, &seeds, &ConnectOptions::default()).unwrap();
    assert!((r.proper_time - 2.0).abs() < 1e-8);
    assert!((r.solution.v[0] - 2.0).abs() < 1e-8 && r.solution.v[1].abs() < 1e-8);
    assert!(!r.null_boundary);
    for l in &r.seed_lengths {
        assert!(r.proper_time >= l - 1e-6);
    }
}

#[test]
fn light_cone_target_is_flagged() {
    let m = metric("minkowski");
    let (p, q) = (Point::new(vec![0.0, 0.0]), Point::new(vec![1.0, 1.0]));
    let r = avez_seifert(
        &m,
        &p,
        &q,
        &[straight_seed(&p, &q).unwrap()],
        &ConnectOptions::default(),
    )
    .unwrap();
    assert!(r.null_boundary);
    assert_eq!(r.solution.causal, Some(CausalKind::Null));
    assert_eq!(r.proper_time, 0.0);
}

/// Geodesic endpoint of `Ω²(−dt² + dx²)`, `Ω = 1 + 0.1 sin x`, by RK4.
fn conformal_shoot(v: [f64; 2]) -> [f64; 2] {
    let f = |z: [f64; 4]| {
        let om = 1.0 + 0.1 * z[1].sin();
        let dphi = 0.1 * z[1].cos() / om;
        [
            z[2],
            z[3],
            -2.0 * dphi * z[2] * z[3],
            -dphi * (z[2] * z[2] + z[3] * z[3]),
        ]
    };
    let mut z = [0.0, 0.0, v[0], v[1]];
    let n = 4000;
    let h = 1.0 / n as f64;
    let axpy = |z: [f64; 4], k: [f64; 4], c: f64| [z[0] + c * k[0], z[1] + c * k[1], z[2] + c * k[2], z[3] + c * k[3]];
    for _ in 0..n {
        let k1 = f(z);
        let k2 = f(axpy(z, k1, 0.5 * h));
        let k3 = f(axpy(z, k2, 0.5 * h));
        let k4 = f(axpy(z, k3, h));
        for i in 0..4 {
            z[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    [z[0], z[1]]
}

#[test]
fn conformal_maximizer_matches_shooting() {
    let m = metric("conformal-mink");
    let (p, q) = (Point::new(vec![0.0, 0.0]), Point::new(vec![2.0, 0.0]));
    let seeds = causal_seeds(&m, &p, &q, 3).unwrap();
    assert_eq!(seeds.len(), 3);
    let r = avez_seifert(&m, &p, &q, &seeds, &ConnectOptions::default()).unwrap();

    let mut v = [2.0, 0.0];
    for _ in 0..20 {
        let e = conformal_shoot(v);
        let r0 = [e[0] - 2.0, e[1]];
        if r0[0].hypot(r0[1]) < 1e-12 {
            break;
        }
        let h = 1e-6;
        let c0 = conformal_shoot([v[0] + h, v[1]]);
        let c1 = conformal_shoot([v[0], v[1] + h]);
        let j = [
            [(c0[0] - e[0]) / h, (c1[0] - e[0]) / h],
            [(c0[1] - e[1]) / h, (c1[1] - e[1]) / h],
        ];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        v[0] -= (j[1][1] * r0[0] - j[0][1] * r0[1]) / det;
        v[1] -= (-j[1][0] * r0[0] + j[0][0] * r0[1]) / det;
    }
    let tau = (v[0] * v[0] - v[1] * v[1]).sqrt();
    assert!((r.proper_time - tau).abs() < 1e-4, "{} vs {tau}", r.proper_time);
    assert!(r.seed_lengths.iter().all(|l| r.proper_time >= l - 1e-6));
}

#[test]
fn causal_lift_stays_in_the_cone_or_stops_at_the_puncture() {
    let m = metric("minkowski");
    let path = BasePath::polyline(&[vec![0.0, 0.0], vec![1.0, 0.8], vec![2.0, 0.0]]).unwrap();
    let lift = causal_quasi_lift(&m, &path, &LiftOptions::default()).unwrap();
    assert!(lift.is_global());

    let m = metric("punctured-mink");
    let path = BasePath::polyline(&[vec![0.0, 0.0], vec![1.0, 0.3], vec![2.0, 0.0]]).unwrap();
    let lift = causal_quasi_lift(&m, &path, &LiftOptions::default()).unwrap();
    assert!(matches!(lift.status, LiftStatus::InextensibleInDomain { .. }));
}
