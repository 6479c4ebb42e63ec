//! Closed-form oracles shared by the integration tests.
#![allow(dead_code)]

/// Inverse stereographic projection from the north pole of the unit sphere.
pub fn embed(u: &[f64]) -> [f64; 3] {
    let r2 = u[0] * u[0] + u[1] * u[1];
    let d = 1.0 + r2;
    [2.0 * u[0] / d, 2.0 * u[1] / d, (r2 - 1.0) / d]
}

/// Differential of [`embed`] applied to `v`.
pub fn embed_push(u: &[f64], v: &[f64]) -> [f64; 3] {
    let r2 = u[0] * u[0] + u[1] * u[1];
    let d = 1.0 + r2;
    let dot = u[0] * v[0] + u[1] * v[1];
    [
        2.0 * v[0] / d - 4.0 * u[0] * dot / (d * d),
        2.0 * v[1] / d - 4.0 * u[1] * dot / (d * d),
        4.0 * dot / (d * d),
    ]
}

pub fn project(x: [f64; 3]) -> [f64; 2] {
    [x[0] / (1.0 - x[2]), x[1] / (1.0 - x[2])]
}

/// Great-circle exponential map of the stereographic sphere chart.
pub fn sphere_exp(p: &[f64], v: &[f64]) -> [f64; 2] {
    let p0 = embed(p);
    let w = embed_push(p, v);
    let s = (w[0] * w[0] + w[1] * w[1] + w[2] * w[2]).sqrt();
    if s == 0.0 {
        return [p[0], p[1]];
    }
    let (c, sn) = (s.cos(), s.sin());
    project([
        c * p0[0] + sn * w[0] / s,
        c * p0[1] + sn * w[1] / s,
        c * p0[2] + sn * w[2] / s,
    ])
}

/// Great-circle distance between two chart points.
pub fn sphere_distance(a: &[f64], b: &[f64]) -> f64 {
    let (x, y) = (embed(a), embed(b));
    let dot = x[0] * y[0] + x[1] * y[1] + x[2] * y[2];
    dot.clamp(-1.0, 1.0).acos()
}

/// `g`-norm of `v` at `p` in the sphere chart.
pub fn sphere_norm(p: &[f64], v: &[f64]) -> f64 {
    let w = embed_push(p, v);
    (w[0] * w[0] + w[1] * w[1] + w[2] * w[2]).sqrt()
}

pub fn rng(seed: u64) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    rand_chacha::ChaCha8Rng::seed_from_u64(seed)
}
