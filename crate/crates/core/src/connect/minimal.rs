use serde::{Deserialize, Serialize};

use super::{
    check_point, connect_seed, lattice_seeds, shoot, straight_seed, ConnectError, ConnectOptions, GeodesicSolution,
};
use crate::error::LiftError;
use crate::flow::flow_endpoint;
use crate::geometry::{bilinear, Point};
use crate::lifting::BasePath;
use crate::manifold::MetricSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MinimalOptions {
    pub connect: ConnectOptions,
    /// Number of broken-geodesic pieces during shortening.
    pub partition: usize,
    pub max_sweeps: usize,
    /// Sweeps stop once the length drops by less than this.
    pub shorten_tol: f64,
}

impl Default for MinimalOptions {
    fn default() -> Self {
        MinimalOptions {
            connect: ConnectOptions::default(),
            partition: 8,
            max_sweeps: 400,
            shorten_tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeLength {
    pub seed_id: usize,
    pub seed_length: f64,
    pub shortened_length: Option<f64>,
    pub solution_length: Option<f64>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimalReport {
    pub solution: GeodesicSolution,
    pub probes: Vec<ProbeLength>,
}

fn g_length(m: &MetricSpec, a: &[f64], v: &[f64]) -> Result<f64, LiftError> {
    let g = m.metric_matrix(a).map_err(|e| LiftError::Flow(e.to_string()))?;
    Ok(bilinear(&g, v, v).max(0.0).sqrt())
}

/// Birkhoff curve shortening: the partition points alternately move to the
/// midpoints of the short geodesics between their neighbours.
fn shorten(m: &MetricSpec, mut pts: Vec<Vec<f64>>, opts: &MinimalOptions) -> Result<(Vec<Vec<f64>>, f64), LiftError> {
    let tol = opts.connect.lift.ode_tol;
    let diverged = |_| LiftError::ShorteningDiverged;
    let length = |pts: &[Vec<f64>]| -> Result<f64, LiftError> {
        pts.windows(2).try_fold(0.0, |acc, w| {
            let v = shoot(m, &w[0], &w[1], tol).map_err(diverged)?;
            Ok(acc + g_length(m, &w[0], &v)?)
        })
    };
    let n = pts.len() - 1;
    let mut len = length(&pts)?;
    for _ in 0..opts.max_sweeps {
        for parity in [1, 0] {
            for i in (1..n).filter(|i| i % 2 == parity) {
                let v = shoot(m, &pts[i - 1], &pts[i + 1], tol).map_err(diverged)?;
                let half: Vec<f64> = v.iter().map(|c| 0.5 * c).collect();
                pts[i] = flow_endpoint(m, &pts[i - 1], &half, tol).map_err(diverged)?;
            }
        }
        let next = length(&pts)?;
        let done = len - next < opts.shorten_tol;
        len = next.min(len);
        if done {
            break;
        }
    }
    Ok((pts, len))
}

/// Shortest geodesic from `p` to `q` among the lifts of shortened probe
/// seeds: the direct segment, and in periodic charts the segments to the
/// neighbouring lattice images of `q`.
pub fn minimal_connect(
    m: &MetricSpec,
    p: &Point,
    q: &Point,
    opts: &MinimalOptions,
) -> Result<MinimalReport, ConnectError> {
    if !m.signature().is_riemannian() {
        return Err(ConnectError::NotRiemannian);
    }
    opts.connect.validate()?;
    if opts.partition < 2 || opts.max_sweeps == 0 {
        return Err(LiftError::InvalidOptions("partition must be at least 2 and max_sweeps positive".into()).into());
    }
    check_point(m, p.coords(), "p")?;
    check_point(m, q.coords(), "q")?;
    let seeds = if m.is_periodic() {
        lattice_seeds(m, p, q, 1)?
    } else {
        vec![straight_seed(p, q)?]
    };

    let mut probes = Vec::new();
    let mut best: Option<GeodesicSolution> = None;
    for (id, seed) in seeds.iter().enumerate() {
        let seed_length = seed.length(m)?;
        let mut probe = ProbeLength {
            seed_id: id,
            seed_length,
            shortened_length: None,
            solution_length: None,
            note: None,
        };
        let k = opts.partition;
        let pts: Vec<Vec<f64>> = (0..=k).map(|i| seed.point(i as f64 / k as f64)).collect();
        let attempt = shorten(m, pts, opts)
            .map_err(ConnectError::from)
            .and_then(|(pts, len)| {
                probe.shortened_length = Some(len);
                let path = BasePath::polyline(&pts)?;
                connect_seed(m, p, q, &path, id, &opts.connect)
            });
        match attempt {
            Ok(s) => {
                probe.solution_length = Some(s.length);
                if best.as_ref().is_none_or(|b| s.length < b.length) {
                    best = Some(s);
                }
            }
            Err(e) => probe.note = Some(e.to_string()),
        }
        probes.push(probe);
    }
    match best {
        Some(solution) => Ok(MinimalReport { solution, probes }),
        None => Err(ConnectError::NoSolution {
            failures: probes
                .iter()
                .map(|pr| super::SeedFailure {
                    seed_id: pr.seed_id,
                    reason: pr.note.clone().unwrap_or_default(),
                    status: None,
                })
                .collect(),
        }),
    }
}
