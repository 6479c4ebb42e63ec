use std::f64::consts::PI;

use crate::error::LiftError;
use crate::geometry::Point;
use crate::lifting::BasePath;
use crate::manifold::MetricSpec;

/// Chart segment from `p` to `q`.
pub fn straight_seed(p: &Point, q: &Point) -> Result<BasePath, LiftError> {
    BasePath::polyline(&[p.0.clone(), q.0.clone()])
}

fn image(m: &MetricSpec, p: &Point, q: &Point, shift: &[i64]) -> Vec<f64> {
    let d = m.chart_difference(q.coords(), p.coords());
    p.coords()
        .iter()
        .zip(d)
        .zip(m.periods())
        .zip(shift)
        .map(|(((x, d), per), k)| x + d + per.map_or(0.0, |per| *k as f64 * per))
        .collect()
}

/// Segments from `p` to the images `q + k·period·e_axis`, `k ∈ ks`: the
/// direct path composed with `k` loops around the periodic `axis`.
pub fn wrap_seeds(
    m: &MetricSpec,
    p: &Point,
    q: &Point,
    axis: usize,
    ks: impl IntoIterator<Item = i64>,
) -> Result<Vec<BasePath>, LiftError> {
    if m.periods().get(axis).copied().flatten().is_none() {
        return Err(LiftError::InvalidPath(format!("coordinate {axis} is not periodic")));
    }
    ks.into_iter()
        .map(|k| {
            let mut shift = vec![0; m.dim()];
            shift[axis] = k;
            BasePath::polyline(&[p.0.clone(), image(m, p, q, &shift)])
        })
        .collect()
}

/// Segments from `p` to every lattice image of `q` with shifts in
/// `[-radius, radius]` along each periodic coordinate, ordered by the
/// largest shift. Non-periodic charts give the single direct segment.
pub fn lattice_seeds(m: &MetricSpec, p: &Point, q: &Point, radius: i64) -> Result<Vec<BasePath>, LiftError> {
    let axes: Vec<usize> = (0..m.dim()).filter(|&i| m.periods()[i].is_some()).collect();
    let mut shifts = vec![vec![0i64; m.dim()]];
    for &a in &axes {
        shifts = shifts
            .into_iter()
            .flat_map(|s| {
                (-radius..=radius).map(move |k| {
                    let mut s = s.clone();
                    s[a] = k;
                    s
                })
            })
            .collect();
    }
    shifts.sort_by_key(|s| (s.iter().map(|k| k.abs()).max().unwrap_or(0), s.clone()));
    shifts
        .iter()
        .map(|s| BasePath::polyline(&[p.0.clone(), image(m, p, q, s)]))
        .collect()
}

fn lift3(x: &[f64]) -> [f64; 3] {
    let r2 = x[0] * x[0] + x[1] * x[1];
    [
        2.0 * x[0] / (1.0 + r2),
        2.0 * x[1] / (1.0 + r2),
        (r2 - 1.0) / (r2 + 1.0),
    ]
}

/// Seeds along the great circle through `p` and `q` in the stereographic
/// chart of the unit sphere (projection from the north pole): the direct
/// arc of angle `θ`, then the arcs turning `θ − 2π`, `θ + 2π`, `θ − 4π`, …
pub fn great_circle_seeds(p: &Point, q: &Point, count: usize) -> Result<Vec<BasePath>, LiftError> {
    if p.dim() != 2 || q.dim() != 2 {
        return Err(LiftError::InvalidPath(
            "great-circle seeds need a 2-dimensional chart".into(),
        ));
    }
    let a = lift3(p.coords());
    let b = lift3(q.coords());
    let dot: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
    let mut t: Vec<f64> = (0..3).map(|i| b[i] - dot * a[i]).collect();
    let tn = t.iter().map(|x| x * x).sum::<f64>().sqrt();
    if tn < 1e-9 {
        return Err(LiftError::InvalidPath("points are equal or antipodal".into()));
    }
    t.iter_mut().for_each(|x| *x /= tn);
    let theta = tn.atan2(dot);
    // Worst approach to the missing pole along the circle.
    let top = (a[2] * a[2] + t[2] * t[2]).sqrt();
    if top > 1.0 - 1e-6 {
        return Err(LiftError::InvalidPath(
            "great circle passes through the missing pole".into(),
        ));
    }
    (0..count)
        .map(|j| {
            let k = (j as i64 + 1) / 2;
            let sign = if j % 2 == 1 { -1.0 } else { 1.0 };
            let angle = theta + sign * 2.0 * PI * k as f64;
            let knots = ((angle.abs() * 40.0).ceil() as usize).max(16);
            BasePath::from_fn(
                |s| {
                    let (sn, cs) = (angle * s).sin_cos();
                    let x: Vec<f64> = (0..3).map(|i| cs * a[i] + sn * t[i]).collect();
                    let dx: Vec<f64> = (0..3).map(|i| angle * (cs * t[i] - sn * a[i])).collect();
                    let d = 1.0 - x[2];
                    let pos = vec![x[0] / d, x[1] / d];
                    let vel = vec![
                        (dx[0] * d + x[0] * dx[2]) / (d * d),
                        (dx[1] * d + x[1] * dx[2]) / (d * d),
                    ];
                    (pos, vel)
                },
                knots,
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lattice_counts_and_order() {
        let m = MetricSpec::builtin("torus").unwrap();
        let s = lattice_seeds(&m, &Point::new(vec![0.1, 0.1]), &Point::new(vec![0.9, 0.2]), 1).unwrap();
        assert_eq!(s.len(), 9);
        let e = s[0].end();
        assert!((e[0] + 0.1).abs() < 1e-12 && (e[1] - 0.2).abs() < 1e-12);
    }

    #[test]
    fn great_circle_endpoints() {
        let (p, q) = (Point::new(vec![1.0, 0.0]), Point::new(vec![0.0, 1.0]));
        for s in great_circle_seeds(&p, &q, 3).unwrap() {
            let e = s.end();
            assert!(e[0].abs() < 1e-12 && (e[1] - 1.0).abs() < 1e-12);
            let v = s.velocity(0.5);
            let h = 1e-6;
            let fd: Vec<f64> = (0..2)
                .map(|i| (s.point(0.5 + h)[i] - s.point(0.5 - h)[i]) / (2.0 * h))
                .collect();
            assert!(
                (v[0] - fd[0]).abs() < 1e-4 * (1.0 + v[0].abs()) && (v[1] - fd[1]).abs() < 1e-4 * (1.0 + v[1].abs())
            );
        }
    }
}
