//! Geodesic flow: the spray, the exponential map `E` and its differential.
//!
//! The integrators only see a [`Spray`], i.e. a second-order vector field
//! `x'' = a(x, x')` on the chart. [`GeodesicSpray`] is the one shipped;
//! other sprays can be lifted through the same machinery by implementing
//! the trait.

mod dopri;
mod jacobi;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dual::{Dual, Real, MAX_DIM};
use crate::error::GeometryError;
use crate::geometry::{bilinear, check_condition, christoffel_from_jet, Point, Tangent};
use crate::manifold::MetricSpec;

pub use dopri::{Termination, EVENT_RESOLUTION};
pub use jacobi::JacobiFrame;

use dopri::{integrate, OdeSystem, Options, Solution};

/// Default integrator tolerance.
pub const DEFAULT_TOL: f64 = 1e-10;

/// A second-order vector field on the chart: `x'' = accel(x, x')`.
pub trait Spray: Sync {
    fn dim(&self) -> usize;
    fn accel<T: Real>(&self, x: &[T], y: &[T], out: &mut [T]) -> Result<(), GeometryError>;
    fn margin(&self, x: &[f64]) -> f64;
    fn feature_scale(&self) -> f64;
}

/// The geodesic spray `a^l = -Γ^l_{jk} y^j y^k` of a metric.
#[derive(Debug, Clone, Copy)]
pub struct GeodesicSpray<'a> {
    pub metric: &'a MetricSpec,
}

impl Spray for GeodesicSpray<'_> {
    fn dim(&self) -> usize {
        self.metric.dim()
    }

    fn accel<T: Real>(&self, x: &[T], y: &[T], out: &mut [T]) -> Result<(), GeometryError> {
        let n = self.metric.dim();
        let (g, ginv, dg) = self.metric.metric_jet(x)?;
        check_condition(n, &g, &ginv)?;
        let gamma = christoffel_from_jet(n, &ginv, &dg);
        for l in 0..n {
            let mut s = T::cst(0.0);
            for j in 0..n {
                let mut inner = T::cst(0.0);
                for k in 0..n {
                    inner = inner + gamma[l][j][k] * y[k];
                }
                s = s + inner * y[j];
            }
            out[l] = -s;
        }
        Ok(())
    }

    fn margin(&self, x: &[f64]) -> f64 {
        self.metric.margin(x)
    }

    fn feature_scale(&self) -> f64 {
        self.metric.feature_scale()
    }
}

/// `z = (x, y)` for the phase flow.
struct PhaseSystem<'s, S> {
    spray: &'s S,
}

impl<S: Spray> OdeSystem for PhaseSystem<'_, S> {
    fn len(&self) -> usize {
        2 * self.spray.dim()
    }

    fn rhs(&self, z: &[f64], out: &mut [f64]) -> Result<(), GeometryError> {
        let n = self.spray.dim();
        out[..n].copy_from_slice(&z[n..2 * n]);
        self.spray.accel(&z[..n], &z[n..2 * n], &mut out[n..2 * n])
    }

    fn margin(&self, z: &[f64]) -> f64 {
        self.spray.margin(&z[..self.spray.dim()])
    }

    fn displacement(&self, a: &[f64], b: &[f64]) -> f64 {
        chart_distance(&a[..self.spray.dim()], &b[..self.spray.dim()])
    }

    fn feature_scale(&self) -> f64 {
        self.spray.feature_scale()
    }
}

/// Phase flow plus `n` variational columns `(δx_c, δy_c)`, linearized with
/// one forward-mode lane per column.
struct VariationalSystem<'s, S> {
    spray: &'s S,
}

impl<S: Spray> OdeSystem for VariationalSystem<'_, S> {
    fn len(&self) -> usize {
        let n = self.spray.dim();
        2 * n * (n + 1)
    }

    fn rhs(&self, z: &[f64], out: &mut [f64]) -> Result<(), GeometryError> {
        let n = self.spray.dim();
        let zero = Dual::constant(0.0);
        let mut x = [zero; MAX_DIM];
        let mut y = [zero; MAX_DIM];
        for i in 0..n {
            x[i].re = z[i];
            y[i].re = z[n + i];
            for c in 0..n {
                let col = 2 * n + 2 * n * c;
                x[i].eps[c] = z[col + i];
                y[i].eps[c] = z[col + n + i];
            }
        }
        let mut a = [zero; MAX_DIM];
        self.spray.accel(&x[..n], &y[..n], &mut a[..n])?;
        for i in 0..n {
            out[i] = z[n + i];
            out[n + i] = a[i].re;
            for c in 0..n {
                let col = 2 * n + 2 * n * c;
                out[col + i] = z[col + n + i];
                out[col + n + i] = a[i].eps[c];
            }
        }
        Ok(())
    }

    fn margin(&self, z: &[f64]) -> f64 {
        self.spray.margin(&z[..self.spray.dim()])
    }

    fn displacement(&self, a: &[f64], b: &[f64]) -> f64 {
        chart_distance(&a[..self.spray.dim()], &b[..self.spray.dim()])
    }

    fn feature_scale(&self) -> f64 {
        self.spray.feature_scale()
    }
}

pub(crate) fn chart_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt()
}

/// The state `z = (x, y)` of the chartwise geodesic equations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseState(pub Vec<f64>);

impl PhaseState {
    pub fn from_tangent(v: &Tangent) -> PhaseState {
        let mut z = v.base.0.clone();
        z.extend_from_slice(&v.components);
        PhaseState(z)
    }

    pub fn position(&self) -> &[f64] {
        &self.0[..self.0.len() / 2]
    }

    pub fn velocity(&self) -> &[f64] {
        &self.0[self.0.len() / 2..]
    }
}

/// Right-hand side of the geodesic equations at `z`.
pub fn spray_rhs(m: &MetricSpec, z: &PhaseState) -> Result<Vec<f64>, GeometryError> {
    let n = m.dim();
    if z.0.len() != 2 * n {
        return Err(GeometryError::Dimension {
            expected: 2 * n,
            got: z.0.len(),
        });
    }
    if m.margin(z.position()) <= 0.0 {
        return Err(GeometryError::OutOfDomain(z.position().to_vec()));
    }
    let sys = PhaseSystem {
        spray: &GeodesicSpray { metric: m },
    };
    let mut out = vec![0.0; 2 * n];
    sys.rhs(&z.0, &mut out)?;
    Ok(out)
}

/// A geodesic `t ↦ E(t v)` with dense output over its alive interval.
#[derive(Debug, Clone)]
pub struct GeodesicArc {
    pub initial: Tangent,
    pub t_final: f64,
    pub termination: Termination,
    solution: Solution,
}

impl GeodesicArc {
    /// End of the interval on which the arc is known to stay in the domain.
    pub fn alive_until(&self) -> f64 {
        self.solution.t_end
    }

    pub fn end_state(&self) -> PhaseState {
        PhaseState(self.solution.z_end.clone())
    }

    pub fn state_at(&self, t: f64) -> Option<PhaseState> {
        if t == 0.0 {
            return Some(PhaseState::from_tangent(&self.initial));
        }
        self.solution.state_at(t).map(PhaseState)
    }

    pub fn steps(&self) -> (usize, usize) {
        (self.solution.accepted, self.solution.rejected)
    }

    /// `g(γ'(t), γ'(t))`.
    pub fn energy_at(&self, m: &MetricSpec, t: f64) -> Option<f64> {
        let z = self.state_at(t)?;
        let g = m.metric_matrix(z.position()).ok()?;
        Some(bilinear(&g, z.velocity(), z.velocity()))
    }
}

/// Integrates the geodesic with initial velocity `v` over `[0, t_final]`.
pub fn integrate_geodesic(m: &MetricSpec, v: &Tangent, t_final: f64, tol: f64) -> GeodesicArc {
    let spray = GeodesicSpray { metric: m };
    let z0 = PhaseState::from_tangent(v);
    let mut opts = Options::new(tol);
    opts.keep_dense = true;
    let solution = integrate(&PhaseSystem { spray: &spray }, &z0.0, t_final, opts);
    GeodesicArc {
        initial: v.clone(),
        t_final,
        termination: solution.termination,
        solution,
    }
}

/// Why a flow evaluation did not reach parameter 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, thiserror::Error)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FlowError {
    #[error("geodesic left the domain at t = {t_exit}")]
    LeftDomain { t_exit: f64, last_point: Vec<f64> },
    #[error("integration failed at t = {t}")]
    StepFailure { t: f64 },
    #[error("invalid input: {message}")]
    Invalid { message: String },
}

/// Outcome of the exponential map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ExpResult {
    Reached { point: Point },
    LeftDomain { t_exit: f64, last_point: Point },
    StepFailure { t: f64 },
}

impl ExpResult {
    pub fn point(&self) -> Option<&Point> {
        match self {
            ExpResult::Reached { point } => Some(point),
            _ => None,
        }
    }
}

fn check_base(m: &MetricSpec, p: &Point, v: &Tangent) -> Result<(), FlowError> {
    if p.dim() != m.dim() || v.components.len() != m.dim() {
        return Err(FlowError::Invalid {
            message: format!("expected dimension {}", m.dim()),
        });
    }
    if &v.base != p {
        return Err(FlowError::Invalid {
            message: "tangent vector is not based at p".into(),
        });
    }
    Ok(())
}

/// Endpoint of the geodesic `x(0) = p`, `x'(0) = v` at parameter 1.
pub(crate) fn flow_endpoint(m: &MetricSpec, p: &[f64], v: &[f64], tol: f64) -> Result<Vec<f64>, FlowError> {
    let spray = GeodesicSpray { metric: m };
    let mut z0 = p.to_vec();
    z0.extend_from_slice(v);
    let sol = integrate(&PhaseSystem { spray: &spray }, &z0, 1.0, Options::new(tol));
    let n = m.dim();
    match sol.termination {
        Termination::Completed => Ok(sol.z_end[..n].to_vec()),
        Termination::LeftDomain { t_exit } => Err(FlowError::LeftDomain {
            t_exit,
            last_point: sol.z_end[..n].to_vec(),
        }),
        Termination::StepFailure { t } => Err(FlowError::StepFailure { t }),
    }
}

/// Endpoint and the matrix of `dE_v` (columns `∂E/∂v_i`).
pub(crate) fn flow_with_differential(
    m: &MetricSpec,
    p: &[f64],
    v: &[f64],
    tol: f64,
) -> Result<(Vec<f64>, DMatrix<f64>), FlowError> {
    let n = m.dim();
    let spray = GeodesicSpray { metric: m };
    let mut z0 = vec![0.0; 2 * n * (n + 1)];
    z0[..n].copy_from_slice(p);
    z0[n..2 * n].copy_from_slice(v);
    for c in 0..n {
        z0[2 * n + 2 * n * c + n + c] = 1.0;
    }
    let sol = integrate(&VariationalSystem { spray: &spray }, &z0, 1.0, Options::new(tol));
    match sol.termination {
        Termination::Completed => {
            let z = &sol.z_end;
            let jac = DMatrix::from_fn(n, n, |i, c| z[2 * n + 2 * n * c + i]);
            Ok((z[..n].to_vec(), jac))
        }
        Termination::LeftDomain { t_exit } => Err(FlowError::LeftDomain {
            t_exit,
            last_point: sol.z_end[..n].to_vec(),
        }),
        Termination::StepFailure { t } => Err(FlowError::StepFailure { t }),
    }
}

/// `E_p(v)` at the default tolerance.
pub fn exp_map(m: &MetricSpec, p: &Point, v: &Tangent) -> ExpResult {
    exp_map_tol(m, p, v, DEFAULT_TOL)
}

pub fn exp_map_tol(m: &MetricSpec, p: &Point, v: &Tangent, tol: f64) -> ExpResult {
    if check_base(m, p, v).is_err() {
        return ExpResult::StepFailure { t: 0.0 };
    }
    match flow_endpoint(m, p.coords(), &v.components, tol) {
        Ok(x) => ExpResult::Reached { point: Point(x) },
        Err(FlowError::LeftDomain { t_exit, last_point }) => ExpResult::LeftDomain {
            t_exit,
            last_point: Point(last_point),
        },
        Err(FlowError::StepFailure { t }) => ExpResult::StepFailure { t },
        Err(FlowError::Invalid { .. }) => ExpResult::StepFailure { t: 0.0 },
    }
}

/// `dE_v` assembled from Jacobi fields `J(0) = 0, J'(0) = e_i`.
pub fn d_exp(m: &MetricSpec, p: &Point, v: &Tangent, tol: f64) -> Result<JacobiFrame, FlowError> {
    check_base(m, p, v)?;
    let (end, jac) = flow_with_differential(m, p.coords(), &v.components, tol)?;
    Ok(JacobiFrame::new(jac, Point(end)))
}

/// Verdict on `v ∈ 𝒟`, with the failure when it is not.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainVerdict {
    pub inside: bool,
    pub reason: Option<FlowError>,
}

/// Whether the geodesic with initial velocity `v` survives on `[0, 1]`.
pub fn in_domain_d(m: &MetricSpec, p: &Point, v: &Tangent) -> DomainVerdict {
    if let Err(e) = check_base(m, p, v) {
        return DomainVerdict {
            inside: false,
            reason: Some(e),
        };
    }
    match flow_endpoint(m, p.coords(), &v.components, DEFAULT_TOL) {
        Ok(_) => DomainVerdict {
            inside: true,
            reason: None,
        },
        Err(e) => DomainVerdict {
            inside: false,
            reason: Some(e),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn pt(x: &[f64]) -> Point {
        Point::new(x.to_vec())
    }

    #[test]
    fn flat_rhs() {
        let e = MetricSpec::builtin("euclid").unwrap();
        let z = PhaseState(vec![0.3, 0.4, 1.0, -2.0]);
        assert_eq!(spray_rhs(&e, &z).unwrap(), vec![1.0, -2.0, 0.0, 0.0]);
        let mk = MetricSpec::builtin("minkowski").unwrap();
        assert_eq!(spray_rhs(&mk, &z).unwrap(), vec![1.0, -2.0, 0.0, 0.0]);
    }

    #[test]
    fn sphere_rhs_at_equator() {
        let s = MetricSpec::builtin("sphere").unwrap();
        let z = PhaseState(vec![1.0, 0.0, 1.0, 0.0]);
        let r = spray_rhs(&s, &z).unwrap();
        assert_eq!(&r[..2], &[1.0, 0.0]);
        assert!((r[2] - 1.0).abs() < 1e-14);
        assert!(r[3].abs() < 1e-14);
    }

    #[test]
    fn rhs_rejects_out_of_domain() {
        let m = MetricSpec::builtin("punctured-plane").unwrap();
        let z = PhaseState(vec![1.0, 0.0, 1.0, 0.0]);
        assert!(matches!(spray_rhs(&m, &z), Err(GeometryError::OutOfDomain(_))));
    }

    #[test]
    fn straight_line() {
        let e = MetricSpec::builtin("euclid").unwrap();
        let p = pt(&[0.0, 0.0]);
        let arc = integrate_geodesic(&e, &Tangent::new(&p, vec![1.0, 2.0]), 1.0, DEFAULT_TOL);
        assert_eq!(arc.termination, Termination::Completed);
        let z = arc.end_state();
        assert!((z.0[0] - 1.0).abs() < 1e-14 && (z.0[1] - 2.0).abs() < 1e-14);
        assert_eq!(z.velocity(), &[1.0, 2.0]);
    }

    #[test]
    fn punctured_plane_exit() {
        let m = MetricSpec::builtin("punctured-plane").unwrap();
        let p = pt(&[0.0, 0.0]);
        let arc = integrate_geodesic(&m, &Tangent::new(&p, vec![1.0, 0.0]), 1.0, DEFAULT_TOL);
        match arc.termination {
            Termination::LeftDomain { t_exit } => assert!((t_exit - 0.95).abs() < 1e-9, "{t_exit}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn exp_examples() {
        let e = MetricSpec::builtin("euclid").unwrap();
        let p = pt(&[1.0, 1.0]);
        let r = exp_map(&e, &p, &Tangent::new(&p, vec![2.0, -1.0]));
        let q = r.point().unwrap();
        assert!((q.0[0] - 3.0).abs() < 1e-14 && q.0[1].abs() < 1e-14);

        let s = MetricSpec::builtin("sphere").unwrap();
        let o = pt(&[0.0, 0.0]);
        assert_eq!(exp_map(&s, &o, &Tangent::zero(&o)).point().unwrap(), &o);
        // g-norm pi/2 from the south pole lands on the equator at chart radius 1
        let r = exp_map(&s, &o, &Tangent::new(&o, vec![PI / 4.0, 0.0]));
        let q = r.point().unwrap();
        assert!((q.0[0] - 1.0).abs() < 1e-9 && q.0[1].abs() < 1e-12, "{q:?}");
    }

    #[test]
    fn d_exp_identity_cases() {
        let s = MetricSpec::builtin("sphere").unwrap();
        let o = pt(&[0.2, -0.1]);
        let f = d_exp(&s, &o, &Tangent::zero(&o), DEFAULT_TOL).unwrap();
        assert!((f.matrix.clone() - DMatrix::identity(2, 2)).abs().max() < 1e-12);
        assert!((f.sigma_min() - 1.0).abs() < 1e-12);
        let e = MetricSpec::builtin("euclid").unwrap();
        let f = d_exp(&e, &o, &Tangent::new(&o, vec![3.0, -7.0]), DEFAULT_TOL).unwrap();
        assert!((f.matrix.clone() - DMatrix::identity(2, 2)).abs().max() < 1e-12);
    }

    #[test]
    fn domain_membership() {
        let m = MetricSpec::builtin("punctured-mink").unwrap();
        let p = pt(&[0.0, 0.0]);
        assert!(!in_domain_d(&m, &p, &Tangent::new(&p, vec![2.0, 0.0])).inside);
        assert!(in_domain_d(&m, &p, &Tangent::new(&p, vec![0.5, 0.0])).inside);
        let e = MetricSpec::builtin("euclid").unwrap();
        assert!(in_domain_d(&e, &p, &Tangent::new(&p, vec![50.0, -20.0])).inside);
    }
}
