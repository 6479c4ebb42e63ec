use serde::{Deserialize, Serialize};

use crate::error::LiftError;
use crate::manifold::MetricSpec;

/// One knot of a base path. `velocity_left` is present only at a break,
/// where the curve is continuous but its velocity jumps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSample {
    pub t: f64,
    pub point: Vec<f64>,
    pub velocity: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub velocity_left: Option<Vec<f64>>,
}

/// Cubic Hermite piece on `[t0, t1]`.
#[derive(Debug, Clone)]
struct Piece {
    t0: f64,
    t1: f64,
    p0: Vec<f64>,
    p1: Vec<f64>,
    d0: Vec<f64>,
    d1: Vec<f64>,
}

impl Piece {
    fn eval(&self, t: f64) -> (Vec<f64>, Vec<f64>) {
        let h = self.t1 - self.t0;
        let th = ((t - self.t0) / h).clamp(0.0, 1.0);
        let (t2, t3) = (th * th, th * th * th);
        let (h00, h10, h01, h11) = (
            2.0 * t3 - 3.0 * t2 + 1.0,
            t3 - 2.0 * t2 + th,
            -2.0 * t3 + 3.0 * t2,
            t3 - t2,
        );
        let (e00, e10, e01, e11) = (
            6.0 * t2 - 6.0 * th,
            3.0 * t2 - 4.0 * th + 1.0,
            -6.0 * t2 + 6.0 * th,
            3.0 * t2 - 2.0 * th,
        );
        let n = self.p0.len();
        let mut x = vec![0.0; n];
        let mut v = vec![0.0; n];
        for i in 0..n {
            x[i] = h00 * self.p0[i] + h10 * h * self.d0[i] + h01 * self.p1[i] + h11 * h * self.d1[i];
            v[i] = (e00 * self.p0[i] + e01 * self.p1[i]) / h + e10 * self.d0[i] + e11 * self.d1[i];
        }
        (x, v)
    }
}

/// A piecewise-smooth regular curve `γ: [0, 1] → M` in chart coordinates,
/// C¹ between breaks, with a table of cumulative Euclidean chart length.
#[derive(Debug, Clone)]
pub struct BasePath {
    samples: Vec<PathSample>,
    pieces: Vec<Piece>,
    breaks: Vec<f64>,
    aux: Vec<f64>,
}

// 5-point Gauss–Legendre on [0, 1].
const GL_X: [f64; 5] = [
    0.046_910_077_030_668,
    0.230_765_344_947_158_5,
    0.5,
    0.769_234_655_052_841_5,
    0.953_089_922_969_332,
];
const GL_W: [f64; 5] = [
    0.118_463_442_528_094_5,
    0.239_314_335_249_683_2,
    0.284_444_444_444_444_4,
    0.239_314_335_249_683_2,
    0.118_463_442_528_094_5,
];
const GL_SUBDIV: usize = 4;

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

impl BasePath {
    pub fn new(samples: Vec<PathSample>) -> Result<BasePath, LiftError> {
        if samples.len() < 2 {
            return Err(LiftError::InvalidPath("need at least two samples".into()));
        }
        let n = samples[0].point.len();
        if n == 0 {
            return Err(LiftError::InvalidPath("empty coordinates".into()));
        }
        if samples[0].t != 0.0 || samples.last().unwrap().t != 1.0 {
            return Err(LiftError::InvalidPath("parameter must run from 0 to 1".into()));
        }
        for w in samples.windows(2) {
            if !(w[1].t > w[0].t) {
                return Err(LiftError::InvalidPath(format!(
                    "parameter not increasing at t = {}",
                    w[1].t
                )));
            }
        }
        for s in &samples {
            let bad =
                s.point.len() != n || s.velocity.len() != n || s.velocity_left.as_ref().is_some_and(|l| l.len() != n);
            if bad {
                return Err(LiftError::InvalidPath(format!("dimension mismatch at t = {}", s.t)));
            }
            if s.point.iter().chain(&s.velocity).any(|x| !x.is_finite()) {
                return Err(LiftError::InvalidPath(format!("non-finite sample at t = {}", s.t)));
            }
            if norm(&s.velocity) <= 1e-14 || s.velocity_left.as_ref().is_some_and(|l| norm(l) <= 1e-14) {
                return Err(LiftError::Irregular { t: s.t });
            }
        }
        let pieces: Vec<Piece> = samples
            .windows(2)
            .map(|w| Piece {
                t0: w[0].t,
                t1: w[1].t,
                p0: w[0].point.clone(),
                p1: w[1].point.clone(),
                d0: w[0].velocity.clone(),
                d1: w[1].velocity_left.clone().unwrap_or_else(|| w[1].velocity.clone()),
            })
            .collect();
        let breaks = samples
            .iter()
            .filter(|s| s.velocity_left.is_some() && s.t > 0.0 && s.t < 1.0)
            .map(|s| s.t)
            .collect();
        let mut aux = vec![0.0];
        for pc in &pieces {
            let mut len = 0.0;
            let h = (pc.t1 - pc.t0) / GL_SUBDIV as f64;
            for k in 0..GL_SUBDIV {
                for (x, w) in GL_X.iter().zip(GL_W) {
                    let (_, v) = pc.eval(pc.t0 + (k as f64 + x) * h);
                    len += w * h * norm(&v);
                }
            }
            aux.push(aux.last().unwrap() + len);
        }
        Ok(BasePath {
            samples,
            pieces,
            breaks,
            aux,
        })
    }

    /// Straight chart segments through `vertices`, parametrized
    /// proportionally to chart length.
    pub fn polyline(vertices: &[Vec<f64>]) -> Result<BasePath, LiftError> {
        let mut cum = vec![0.0];
        for w in vertices.windows(2) {
            let d: Vec<f64> = w[1].iter().zip(&w[0]).map(|(a, b)| a - b).collect();
            cum.push(cum.last().unwrap() + norm(&d));
        }
        let total = *cum.last().unwrap_or(&0.0);
        if vertices.len() < 2 || !(total > 0.0) {
            return Err(LiftError::InvalidPath("polyline needs two distinct vertices".into()));
        }
        let ts: Vec<f64> = cum.iter().map(|c| c / total).collect();
        Self::polyline_timed(&ts, vertices)
    }

    /// Straight chart segments through `vertices` at the given parameters.
    pub fn polyline_timed(ts: &[f64], vertices: &[Vec<f64>]) -> Result<BasePath, LiftError> {
        if ts.len() != vertices.len() || vertices.len() < 2 {
            return Err(LiftError::InvalidPath(
                "need matching times and at least two vertices".into(),
            ));
        }
        let k = vertices.len();
        let vel = |i: usize| -> Vec<f64> {
            let dt = ts[i + 1] - ts[i];
            vertices[i + 1]
                .iter()
                .zip(&vertices[i])
                .map(|(a, b)| (a - b) / dt)
                .collect()
        };
        let mut samples = Vec::with_capacity(k);
        for i in 0..k {
            let (velocity, velocity_left) = if i == 0 {
                (vel(0), None)
            } else if i == k - 1 {
                (vel(k - 2), None)
            } else {
                let (right, left) = (vel(i), vel(i - 1));
                let jump = norm(&sub(&right, &left)) > 1e-14 * (1.0 + norm(&left));
                (right, jump.then_some(left))
            };
            samples.push(PathSample {
                t: ts[i],
                point: vertices[i].clone(),
                velocity,
                velocity_left,
            });
        }
        BasePath::new(samples)
    }

    /// Samples a smooth curve `f(t) = (γ(t), γ'(t))` at `knots + 1`
    /// uniform parameters.
    pub fn from_fn(f: impl Fn(f64) -> (Vec<f64>, Vec<f64>), knots: usize) -> Result<BasePath, LiftError> {
        let knots = knots.max(1);
        let samples = (0..=knots)
            .map(|i| {
                let t = i as f64 / knots as f64;
                let (point, velocity) = f(t);
                PathSample {
                    t,
                    point,
                    velocity,
                    velocity_left: None,
                }
            })
            .collect();
        BasePath::new(samples)
    }

    /// Concatenation, each part taking a share of `[0, 1]` proportional to
    /// its chart length. Every junction becomes a break.
    pub fn chain(parts: &[BasePath]) -> Result<BasePath, LiftError> {
        if parts.is_empty() {
            return Err(LiftError::InvalidPath("nothing to chain".into()));
        }
        let total: f64 = parts.iter().map(|p| p.aux_length()).sum();
        let mut samples: Vec<PathSample> = Vec::new();
        let mut offset = 0.0;
        for (k, part) in parts.iter().enumerate() {
            let share = part.aux_length() / total;
            if let Some(last) = samples.last() {
                let gap = norm(&sub(&last.point, &part.start()));
                if gap > 1e-12 {
                    return Err(LiftError::InvalidPath(format!("parts {} and {} do not meet", k - 1, k)));
                }
            }
            for (i, s) in part.samples.iter().enumerate() {
                let t = if k + 1 == parts.len() && i + 1 == part.samples.len() {
                    1.0
                } else {
                    offset + share * s.t
                };
                let velocity: Vec<f64> = s.velocity.iter().map(|v| v / share).collect();
                let velocity_left = s.velocity_left.as_ref().map(|l| l.iter().map(|v| v / share).collect());
                if i == 0 && k > 0 {
                    let prev = samples.pop().unwrap();
                    samples.push(PathSample {
                        t: prev.t,
                        point: prev.point,
                        velocity,
                        velocity_left: Some(prev.velocity_left.unwrap_or(prev.velocity)),
                    });
                } else {
                    samples.push(PathSample {
                        t,
                        point: s.point.clone(),
                        velocity,
                        velocity_left,
                    });
                }
            }
            offset += share;
        }
        BasePath::new(samples)
    }

    /// The same curve traversed backwards.
    pub fn reversed(&self) -> BasePath {
        let samples = self
            .samples
            .iter()
            .rev()
            .map(|s| {
                let flip = |v: &Vec<f64>| v.iter().map(|x| -x).collect::<Vec<f64>>();
                let (velocity, velocity_left) = match &s.velocity_left {
                    Some(l) => (flip(l), Some(flip(&s.velocity))),
                    None => (flip(&s.velocity), None),
                };
                PathSample {
                    t: 1.0 - s.t,
                    point: s.point.clone(),
                    velocity,
                    velocity_left,
                }
            })
            .collect();
        BasePath::new(samples).expect("reversal preserves validity")
    }

    /// The curve translated by `offset` in chart coordinates.
    pub fn shifted(&self, offset: &[f64]) -> BasePath {
        let samples = self
            .samples
            .iter()
            .map(|s| PathSample {
                point: s.point.iter().zip(offset).map(|(a, b)| a + b).collect(),
                ..s.clone()
            })
            .collect();
        BasePath::new(samples).expect("translation preserves validity")
    }

    pub fn dim(&self) -> usize {
        self.samples[0].point.len()
    }

    pub fn samples(&self) -> &[PathSample] {
        &self.samples
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn start(&self) -> Vec<f64> {
        self.samples[0].point.clone()
    }

    pub fn end(&self) -> Vec<f64> {
        self.samples.last().unwrap().point.clone()
    }

    fn piece_index(&self, t: f64) -> usize {
        let i = self.pieces.partition_point(|p| p.t1 <= t);
        i.min(self.pieces.len() - 1)
    }

    pub fn point(&self, t: f64) -> Vec<f64> {
        let t = t.clamp(0.0, 1.0);
        if t == 1.0 {
            return self.end();
        }
        let pc = &self.pieces[self.piece_index(t)];
        if t == pc.t0 {
            return pc.p0.clone();
        }
        pc.eval(t).0
    }

    /// Right-sided velocity (left-sided at `t = 1`).
    pub fn velocity(&self, t: f64) -> Vec<f64> {
        let t = t.clamp(0.0, 1.0);
        if t == 1.0 {
            return self.pieces.last().unwrap().d1.clone();
        }
        let pc = &self.pieces[self.piece_index(t)];
        if t == pc.t0 {
            return pc.d0.clone();
        }
        pc.eval(t).1
    }

    /// Smallest break strictly after `t`, or 1.
    pub fn next_break(&self, t: f64) -> f64 {
        self.breaks.iter().copied().find(|&b| b > t).unwrap_or(1.0)
    }

    /// Total Euclidean chart length.
    pub fn aux_length(&self) -> f64 {
        *self.aux.last().unwrap()
    }

    /// Largest chart distance from `center` over the knots and piece midpoints.
    pub fn max_distance_from(&self, center: &[f64]) -> f64 {
        let mut r: f64 = 0.0;
        for pc in &self.pieces {
            for th in [0.0, 0.25, 0.5, 0.75, 1.0] {
                let (x, _) = pc.eval(pc.t0 + th * (pc.t1 - pc.t0));
                r = r.max(norm(&sub(&x, center)));
            }
        }
        r
    }

    /// `∫ sqrt(|g(γ', γ')|) dt` over the parts of the curve where
    /// `keep(g(γ', γ'))` holds.
    fn metric_integral(&self, m: &MetricSpec, keep: impl Fn(f64) -> bool) -> Result<f64, LiftError> {
        let mut total = 0.0;
        for pc in &self.pieces {
            let h = (pc.t1 - pc.t0) / GL_SUBDIV as f64;
            for k in 0..GL_SUBDIV {
                for (x, w) in GL_X.iter().zip(GL_W) {
                    let (p, v) = pc.eval(pc.t0 + (k as f64 + x) * h);
                    let g = m.metric_matrix(&p).map_err(crate::error::GeometryError::from)?;
                    let q = crate::geometry::bilinear(&g, &v, &v);
                    if keep(q) {
                        total += w * h * q.abs().sqrt();
                    }
                }
            }
        }
        Ok(total)
    }

    /// Riemannian length.
    pub fn length(&self, m: &MetricSpec) -> Result<f64, LiftError> {
        self.metric_integral(m, |_| true)
    }

    /// Lorentzian length `∫ sqrt(-g(γ', γ')) dt` of the causal parts.
    pub fn lorentz_length(&self, m: &MetricSpec) -> Result<f64, LiftError> {
        self.metric_integral(m, |q| q < 0.0)
    }

    /// Velocities (both sides at breaks) at knots and four interior points
    /// per piece, for causal checks.
    pub fn probe_velocities(&self) -> Vec<(f64, Vec<f64>, Vec<f64>)> {
        let mut out = Vec::new();
        for pc in &self.pieces {
            for th in [0.0, 0.2, 0.4, 0.6, 0.8, 1.0] {
                let t = pc.t0 + th * (pc.t1 - pc.t0);
                let (x, v) = pc.eval(t);
                out.push((t, x, v));
            }
        }
        out
    }
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// One sample of a seed-path file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeedSample {
    pub t: f64,
    pub coords: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum SeedFile {
    One(Vec<SeedSample>),
    Many(Vec<Vec<SeedSample>>),
}

/// Parses a seed-path file: a JSON array of `{"t": .., "coords": [..]}`
/// samples, or an array of such arrays. Samples are joined by straight
/// chart segments; `t` must run from 0 to 1.
pub fn parse_seed_paths(text: &str) -> Result<Vec<BasePath>, LiftError> {
    let file: SeedFile = serde_json::from_str(text).map_err(|e| LiftError::InvalidPath(format!("seed file: {e}")))?;
    let sets = match file {
        SeedFile::One(s) => vec![s],
        SeedFile::Many(s) => s,
    };
    sets.iter()
        .map(|set| {
            let ts: Vec<f64> = set.iter().map(|s| s.t).collect();
            let xs: Vec<Vec<f64>> = set.iter().map(|s| s.coords.clone()).collect();
            BasePath::polyline_timed(&ts, &xs)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polyline_parametrization_and_breaks() {
        let p = BasePath::polyline(&[vec![0.0, 0.0], vec![3.0, 0.0], vec![3.0, 1.0]]).unwrap();
        assert_eq!(p.breaks(), &[0.75]);
        assert!((p.aux_length() - 4.0).abs() < 1e-14);
        assert_eq!(p.point(0.375), vec![1.5, 0.0]);
        assert_eq!(p.velocity(0.75), vec![0.0, 4.0]);
        assert_eq!(p.velocity(0.5), vec![4.0, 0.0]);
        assert_eq!(p.next_break(0.0), 0.75);
        assert_eq!(p.next_break(0.75), 1.0);
    }

    #[test]
    fn collinear_vertices_are_not_breaks() {
        let p = BasePath::polyline(&[vec![0.0, 0.0], vec![1.0, 1.0], vec![2.0, 2.0]]).unwrap();
        assert!(p.breaks().is_empty());
    }

    #[test]
    fn hermite_reproduces_cubics() {
        let p = BasePath::from_fn(|t| (vec![t * t * t, t], vec![3.0 * t * t, 1.0]), 3).unwrap();
        for t in [0.1, 0.37, 0.9] {
            assert!((p.point(t)[0] - t * t * t).abs() < 1e-15);
            assert!((p.velocity(t)[0] - 3.0 * t * t).abs() < 1e-14);
        }
    }

    #[test]
    fn circle_length() {
        let p = BasePath::from_fn(
            |t| {
                let a = 2.0 * std::f64::consts::PI * t;
                (
                    vec![a.cos(), a.sin()],
                    vec![
                        -2.0 * std::f64::consts::PI * a.sin(),
                        2.0 * std::f64::consts::PI * a.cos(),
                    ],
                )
            },
            64,
        )
        .unwrap();
        assert!((p.aux_length() - 2.0 * std::f64::consts::PI).abs() < 1e-6);
    }

    #[test]
    fn chain_and_reverse() {
        let a = BasePath::polyline(&[vec![0.0, 0.0], vec![1.0, 0.0]]).unwrap();
        let b = BasePath::polyline(&[vec![1.0, 0.0], vec![1.0, 3.0]]).unwrap();
        let c = BasePath::chain(&[a, b]).unwrap();
        assert_eq!(c.breaks().len(), 1);
        assert!((c.breaks()[0] - 0.25).abs() < 1e-14);
        assert_eq!(c.point(1.0), vec![1.0, 3.0]);
        let r = c.reversed();
        assert_eq!(r.start(), vec![1.0, 3.0]);
        assert!((r.breaks()[0] - 0.75).abs() < 1e-14);
        assert!((r.point(0.3)[1] - c.point(0.7)[1]).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_paths() {
        assert!(matches!(
            BasePath::polyline(&[vec![0.0, 0.0], vec![0.0, 0.0]]),
            Err(LiftError::InvalidPath(_))
        ));
        let s = |t: f64, v: f64| PathSample {
            t,
            point: vec![t, 0.0],
            velocity: vec![v, 0.0],
            velocity_left: None,
        };
        assert!(matches!(
            BasePath::new(vec![s(0.0, 1.0), s(1.0, 0.0)]),
            Err(LiftError::Irregular { .. })
        ));
        assert!(BasePath::new(vec![s(0.0, 1.0), s(0.5, 1.0)]).is_err());
    }

    #[test]
    fn seed_files() {
        let one = r#"[{"t":0,"coords":[0,0]},{"t":0.5,"coords":[1,0.5]},{"t":1,"coords":[2,0]}]"#;
        let p = parse_seed_paths(one).unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!(p[0].breaks(), &[0.5]);
        let many = format!("[{one},{one}]");
        assert_eq!(parse_seed_paths(&many).unwrap().len(), 2);
        assert!(parse_seed_paths("{").is_err());
    }
}
