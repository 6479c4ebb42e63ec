//! Connecting geodesics: endpoint problems solved by lifting a seed path
//! and polishing the lifted endpoint with Newton steps on `E_p`.

mod avez;
mod causal;
mod minimal;
mod seeds;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::LiftError;
use crate::flow::{flow_endpoint, flow_with_differential, FlowError, JacobiFrame};
use crate::geometry::{bilinear, classify, CausalKind, Point, Tangent};
use crate::lifting::{quasi_lift, regularized_solve, BasePath, LiftOptions, LiftStatus, QuasiLift};
use crate::manifold::MetricSpec;

pub use avez::{avez_seifert, causal_seeds, AvezReport};
pub use causal::{causal_quasi_lift, CausalCone};
pub use minimal::{minimal_connect, MinimalOptions, MinimalReport, ProbeLength};
pub use seeds::{great_circle_seeds, lattice_seeds, straight_seed, wrap_seeds};

/// Vectors closer than this are the same geodesic.
pub const DEDUP_TOL: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ConnectOptions {
    pub lift: LiftOptions,
    /// Required `|E(v) − q|`.
    pub connect_tol: f64,
    pub polish_iters: usize,
}

impl Default for ConnectOptions {
    fn default() -> Self {
        ConnectOptions {
            lift: LiftOptions::default(),
            connect_tol: 1e-8,
            polish_iters: 20,
        }
    }
}

impl ConnectOptions {
    pub fn validate(&self) -> Result<(), LiftError> {
        self.lift.validate()?;
        if !(self.connect_tol > 0.0) || self.polish_iters == 0 {
            return Err(LiftError::InvalidOptions(
                "connect_tol and polish_iters must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// A geodesic `t ↦ E_p(t v)` from `base` to `target`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeodesicSolution {
    pub base: Vec<f64>,
    pub v: Vec<f64>,
    pub target: Vec<f64>,
    pub endpoint: Vec<f64>,
    /// `|E(v) − target|`, periodic coordinates by nearest image.
    pub residual: f64,
    /// `g(v, v)`.
    pub energy: f64,
    /// `sqrt|g(v, v)|`: length, or proper time for timelike geodesics.
    pub length: f64,
    pub causal: Option<CausalKind>,
    pub sigma_min: f64,
    pub seed_id: usize,
}

impl GeodesicSolution {
    pub fn tangent(&self) -> Tangent {
        Tangent::new(&Point::new(self.base.clone()), self.v.clone())
    }

    /// Re-integrates the geodesic and checks the endpoint.
    pub fn verify(&self, m: &MetricSpec, tol: f64) -> bool {
        match flow_endpoint(m, &self.base, &self.v, 1e-11) {
            Ok(x) => dist(m, &x, &self.target) <= tol,
            Err(_) => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedFailure {
    pub seed_id: usize,
    pub reason: String,
    pub status: Option<LiftStatus>,
}

#[derive(Debug, Clone, Error)]
pub enum ConnectError {
    #[error(transparent)]
    Invalid(#[from] LiftError),
    #[error("lift of seed {seed_id} ended: {}", lift.status.label())]
    Lift { seed_id: usize, lift: Box<QuasiLift> },
    #[error("endpoint polish stalled at residual {residual:.3e}")]
    Polish { seed_id: usize, residual: f64 },
    #[error("minimal connection requires a Riemannian metric")]
    NotRiemannian,
    #[error("no seed produced a connecting geodesic")]
    NoSolution { failures: Vec<SeedFailure> },
}

impl ConnectError {
    pub fn as_failure(&self, seed_id: usize) -> SeedFailure {
        SeedFailure {
            seed_id,
            reason: self.to_string(),
            status: match self {
                ConnectError::Lift { lift, .. } => Some(lift.status.clone()),
                _ => None,
            },
        }
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dist(m: &MetricSpec, a: &[f64], b: &[f64]) -> f64 {
    norm(&m.chart_difference(a, b))
}

pub(crate) fn check_point(m: &MetricSpec, x: &[f64], what: &str) -> Result<(), LiftError> {
    if x.len() != m.dim() {
        return Err(LiftError::InvalidPath(format!(
            "{what} has dimension {}, expected {}",
            x.len(),
            m.dim()
        )));
    }
    if m.margin(x) <= 0.0 {
        return Err(LiftError::Flow(format!("{what} is outside the domain")));
    }
    Ok(())
}

/// Builds the solution record for `v`, classifying it in Lorentzian charts.
pub(crate) fn solution(
    m: &MetricSpec,
    p: &[f64],
    v: Vec<f64>,
    target: &[f64],
    endpoint: Vec<f64>,
    sigma_min: f64,
    seed_id: usize,
) -> Result<GeodesicSolution, LiftError> {
    let g = m.metric_matrix(p).map_err(|e| LiftError::Flow(e.to_string()))?;
    let energy = bilinear(&g, &v, &v);
    let causal = m.signature().is_lorentzian().then(|| {
        let time = m.time_coord().map(|t| v[t]).unwrap_or(0.0);
        classify(energy, norm(&v).powi(2), time).kind
    });
    let length = if causal == Some(CausalKind::Null) {
        0.0
    } else {
        energy.abs().sqrt()
    };
    Ok(GeodesicSolution {
        base: p.to_vec(),
        residual: dist(m, &endpoint, target),
        v,
        target: target.to_vec(),
        endpoint,
        energy,
        length,
        causal,
        sigma_min,
        seed_id,
    })
}

/// Newton iteration on `E_p(v) = target` from `v`, with the pseudo-inverse
/// of `dE_v`. Returns the polished vector, its endpoint and `σ_min`.
pub(crate) fn polish(
    m: &MetricSpec,
    p: &[f64],
    v: &[f64],
    target: &[f64],
    opts: &ConnectOptions,
) -> Result<(Vec<f64>, Vec<f64>, f64), f64> {
    let mut v = v.to_vec();
    let mut best: Option<(Vec<f64>, Vec<f64>, f64, f64)> = None;
    for _ in 0..=opts.polish_iters {
        let Ok((x, jac)) = flow_with_differential(m, p, &v, opts.lift.ode_tol) else {
            break;
        };
        let r = m.chart_difference(&x, target);
        let res = norm(&r);
        let frame = JacobiFrame::new(jac, Point::new(x.clone()));
        let improved = best.as_ref().is_none_or(|b| res < 0.5 * b.3);
        if best.as_ref().is_none_or(|b| res < b.3) {
            best = Some((v.clone(), x, frame.sigma_min(), res));
        }
        if res <= 1e-3 * opts.connect_tol || !improved {
            break;
        }
        let thr = opts.lift.sigma_threshold;
        let xi = if frame.sigma_min() > thr { 0.0 } else { thr };
        let step = regularized_solve(&frame, &r, xi);
        for (vi, d) in v.iter_mut().zip(&step.w) {
            *vi -= d;
        }
    }
    match best {
        Some((v, x, s, res)) if res <= opts.connect_tol => Ok((v, x, s)),
        Some((.., res)) => Err(res),
        None => Err(f64::INFINITY),
    }
}

/// Geodesic from `p` to `q` obtained by quasi-lifting `seed` from `v0 = 0`
/// and polishing the lifted endpoint.
///
/// The seed must start at `p` and end at `q`; in periodic charts the end
/// may be any lattice image of `q`, which selects the winding.
pub fn connect_geodesic(
    m: &MetricSpec,
    p: &Point,
    q: &Point,
    seed: &BasePath,
    opts: &ConnectOptions,
) -> Result<GeodesicSolution, ConnectError> {
    connect_seed(m, p, q, seed, 0, opts)
}

pub(crate) fn connect_seed(
    m: &MetricSpec,
    p: &Point,
    q: &Point,
    seed: &BasePath,
    seed_id: usize,
    opts: &ConnectOptions,
) -> Result<GeodesicSolution, ConnectError> {
    opts.validate()?;
    check_point(m, p.coords(), "p")?;
    check_point(m, q.coords(), "q")?;
    let tol = 1e-9 * (1.0 + seed.aux_length());
    if norm(&sub(&seed.start(), p.coords())) > tol || dist(m, &seed.end(), q.coords()) > tol {
        return Err(LiftError::EndpointMismatch.into());
    }
    let lift = quasi_lift(m, seed, &Tangent::zero(p), &opts.lift)?;
    if !lift.is_global() {
        return Err(ConnectError::Lift {
            seed_id,
            lift: Box::new(lift),
        });
    }
    finish(m, p.coords(), lift.alpha_end(), &seed.end(), seed_id, opts)
}

pub(crate) fn finish(
    m: &MetricSpec,
    p: &[f64],
    v: &[f64],
    target: &[f64],
    seed_id: usize,
    opts: &ConnectOptions,
) -> Result<GeodesicSolution, ConnectError> {
    let (v, x, sigma) = polish(m, p, v, target, opts).map_err(|residual| ConnectError::Polish { seed_id, residual })?;
    Ok(solution(m, p, v, target, x, sigma, seed_id)?)
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnumerateReport {
    /// Distinct geodesics sorted by length, at most `want` of them.
    pub solutions: Vec<GeodesicSolution>,
    pub failures: Vec<SeedFailure>,
}

/// Lifts every seed (in parallel), removes duplicates and returns the
/// shortest `want` distinct geodesics.
pub fn enumerate_geodesics(
    m: &MetricSpec,
    p: &Point,
    q: &Point,
    want: usize,
    seeds: &[BasePath],
    opts: &ConnectOptions,
) -> Result<EnumerateReport, ConnectError> {
    opts.validate()?;
    check_point(m, p.coords(), "p")?;
    check_point(m, q.coords(), "q")?;
    let results: Vec<Result<GeodesicSolution, ConnectError>> = seeds
        .par_iter()
        .enumerate()
        .map(|(i, s)| connect_seed(m, p, q, s, i, opts))
        .collect();
    let mut found: Vec<GeodesicSolution> = Vec::new();
    let mut failures = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(s) => {
                if !found.iter().any(|f| norm(&sub(&f.v, &s.v)) <= DEDUP_TOL) {
                    found.push(s);
                }
            }
            Err(ConnectError::Invalid(e)) => return Err(ConnectError::Invalid(e)),
            Err(e) => failures.push(e.as_failure(i)),
        }
    }
    found.sort_by(|a, b| a.length.total_cmp(&b.length).then(a.seed_id.cmp(&b.seed_id)));
    found.truncate(want);
    Ok(EnumerateReport {
        solutions: found,
        failures,
    })
}

/// Newton shooting for the short geodesic from `a` to `b`, starting from
/// the chart difference. Used for nearby points only.
pub(crate) fn shoot(m: &MetricSpec, a: &[f64], b: &[f64], tol: f64) -> Result<Vec<f64>, FlowError> {
    let mut v = sub(b, a);
    let scale = 1.0 + norm(&v);
    for _ in 0..30 {
        let (x, jac) = flow_with_differential(m, a, &v, tol)?;
        let r = DVector::from_vec(sub(&x, b));
        if r.norm() <= 1e-12 * scale {
            return Ok(v);
        }
        let d = jac.lu().solve(&r).ok_or(FlowError::Invalid {
            message: "singular differential while shooting".into(),
        })?;
        for (vi, di) in v.iter_mut().zip(d.iter()) {
            *vi -= di;
        }
    }
    let x = flow_endpoint(m, a, &v, tol)?;
    if norm(&sub(&x, b)) <= 1e-9 * scale {
        Ok(v)
    } else {
        Err(FlowError::Invalid {
            message: "shooting did not converge".into(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn euclid_connect_is_the_difference() {
        let m = MetricSpec::builtin("euclid").unwrap();
        let (p, q) = (Point::new(vec![0.5, -1.0]), Point::new(vec![2.0, 1.0]));
        let seed = BasePath::polyline(&[p.0.clone(), vec![3.0, -2.0], q.0.clone()]).unwrap();
        let s = connect_geodesic(&m, &p, &q, &seed, &ConnectOptions::default()).unwrap();
        assert!((s.v[0] - 1.5).abs() < 1e-10 && (s.v[1] - 2.0).abs() < 1e-10);
        assert!((s.length - 2.5).abs() < 1e-10);
        assert!(s.verify(&m, 1e-8));
    }

    #[test]
    fn mismatched_seed_is_rejected() {
        let m = MetricSpec::builtin("euclid").unwrap();
        let seed = BasePath::polyline(&[vec![0.0, 0.0], vec![1.0, 0.0]]).unwrap();
        let r = connect_geodesic(
            &m,
            &Point::new(vec![0.0, 0.0]),
            &Point::new(vec![1.0, 1.0]),
            &seed,
            &Default::default(),
        );
        assert!(matches!(r, Err(ConnectError::Invalid(LiftError::EndpointMismatch))));
    }

    #[test]
    fn shooting_on_the_sphere() {
        let m = MetricSpec::builtin("sphere").unwrap();
        let (a, b) = ([0.2, 0.1], [0.35, -0.05]);
        let v = shoot(&m, &a, &b, 1e-11).unwrap();
        let x = flow_endpoint(&m, &a, &v, 1e-11).unwrap();
        assert!(norm(&sub(&x, &b)) < 1e-10);
    }
}
