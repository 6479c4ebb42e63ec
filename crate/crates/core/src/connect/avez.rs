use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_point, finish, norm, ConnectError, ConnectOptions, GeodesicSolution, SeedFailure};
use crate::error::{GeometryError, LiftError};
use crate::geometry::{CausalKind, Point};
use crate::lifting::BasePath;
use crate::manifold::MetricSpec;

use super::causal::causal_quasi_lift;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AvezReport {
    /// The causal geodesic of largest proper time among the candidates.
    pub solution: GeodesicSolution,
    pub proper_time: f64,
    /// Set when the maximizer is null: `q` lies on the light cone of `p`.
    pub null_boundary: bool,
    /// Lorentzian lengths of the seed paths, by seed index.
    pub seed_lengths: Vec<f64>,
    pub candidates: Vec<GeodesicSolution>,
    pub failures: Vec<SeedFailure>,
}

/// Causal geodesic from `p` to `q` maximizing proper time over the lifts of
/// the causal `seeds`.
pub fn avez_seifert(
    m: &MetricSpec,
    p: &Point,
    q: &Point,
    seeds: &[BasePath],
    opts: &ConnectOptions,
) -> Result<AvezReport, ConnectError> {
    if !m.signature().is_lorentzian() {
        return Err(LiftError::from(GeometryError::NotLorentzian).into());
    }
    opts.validate()?;
    check_point(m, p.coords(), "p")?;
    check_point(m, q.coords(), "q")?;
    if seeds.is_empty() {
        return Err(LiftError::InvalidPath("no seed paths".into()).into());
    }
    for s in seeds {
        let tol = 1e-9 * (1.0 + s.aux_length());
        if norm(&m.chart_difference(&s.start(), p.coords())) > tol
            || norm(&m.chart_difference(&s.end(), q.coords())) > tol
        {
            return Err(LiftError::EndpointMismatch.into());
        }
    }
    let results: Vec<(f64, Result<GeodesicSolution, ConnectError>)> = seeds
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let len = s.lorentz_length(m).unwrap_or(f64::NAN);
            let r = causal_quasi_lift(m, s, &opts.lift)
                .map_err(ConnectError::from)
                .and_then(|lift| {
                    if !lift.is_global() {
                        return Err(ConnectError::Lift {
                            seed_id: i,
                            lift: Box::new(lift),
                        });
                    }
                    finish(m, p.coords(), lift.alpha_end(), q.coords(), i, opts)
                });
            (len, r)
        })
        .collect();

    let mut seed_lengths = Vec::with_capacity(results.len());
    let mut candidates: Vec<GeodesicSolution> = Vec::new();
    let mut failures = Vec::new();
    for (i, (len, r)) in results.into_iter().enumerate() {
        seed_lengths.push(len);
        match r {
            Ok(s) if matches!(s.causal, Some(CausalKind::Timelike | CausalKind::Null)) => candidates.push(s),
            Ok(s) => failures.push(SeedFailure {
                seed_id: i,
                reason: format!("connecting geodesic is {:?}", s.causal.unwrap_or(CausalKind::Spacelike)),
                status: None,
            }),
            Err(e) => failures.push(e.as_failure(i)),
        }
    }
    let Some(best) = candidates
        .iter()
        .max_by(|a, b| a.length.total_cmp(&b.length).then(b.seed_id.cmp(&a.seed_id)))
        .cloned()
    else {
        return Err(ConnectError::NoSolution { failures });
    };
    Ok(AvezReport {
        proper_time: best.length,
        null_boundary: best.causal == Some(CausalKind::Null),
        solution: best,
        seed_lengths,
        candidates,
        failures,
    })
}

/// The straight segment from `p` to `q` plus broken paths through
/// midpoints pushed along the spatial axes, keeping only causal ones.
pub fn causal_seeds(m: &MetricSpec, p: &Point, q: &Point, count: usize) -> Result<Vec<BasePath>, LiftError> {
    let time = m.time_coord().ok_or(GeometryError::NotLorentzian)?;
    let n = m.dim();
    let span = (q.coords()[time] - p.coords()[time]).abs();
    let spatial: Vec<usize> = (0..n).filter(|&i| i != time).collect();
    let mid: Vec<f64> = p.coords().iter().zip(q.coords()).map(|(a, b)| 0.5 * (a + b)).collect();
    let mut out = vec![BasePath::polyline(&[p.0.clone(), q.0.clone()])?];
    let mut k = 1;
    while out.len() < count && k <= 4 * count && !spatial.is_empty() {
        let axis = spatial[(k - 1) / 2 % spatial.len()];
        let size = 0.15 * span * k.div_ceil(2) as f64 / spatial.len() as f64;
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        let mut c = mid.clone();
        c[axis] += sign * size;
        k += 1;
        let Ok(path) = BasePath::polyline(&[p.0.clone(), c, q.0.clone()]) else {
            continue;
        };
        let causal = path.probe_velocities().iter().all(|(_, x, v)| {
            m.metric_matrix(x)
                .map(|g| {
                    crate::geometry::bilinear(&g, v, v) < 0.0 && v[time] * (q.coords()[time] - p.coords()[time]) > 0.0
                })
                .unwrap_or(false)
        });
        if causal && m.margin(&path.point(0.5)) > 0.0 {
            out.push(path);
        }
    }
    Ok(out)
}
