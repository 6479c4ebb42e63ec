//! Pointwise metric algebra on a single chart.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dual::{Real, MAX_DIM};
use crate::error::GeometryError;
use crate::manifold::{condition_number, Mat, MetricSpec, MAX_CONDITION};

/// Chart coordinates of a point of `M`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Point(pub Vec<f64>);

/// A tangent vector: chart components at a base point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tangent {
    pub base: Point,
    pub components: Vec<f64>,
}

impl Point {
    pub fn new(coords: impl Into<Vec<f64>>) -> Point {
        Point(coords.into())
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

impl Tangent {
    pub fn new(base: &Point, components: impl Into<Vec<f64>>) -> Tangent {
        Tangent {
            base: base.clone(),
            components: components.into(),
        }
    }

    pub fn zero(base: &Point) -> Tangent {
        Tangent::new(base, vec![0.0; base.dim()])
    }

    pub fn scaled(&self, k: f64) -> Tangent {
        Tangent::new(&self.base, self.components.iter().map(|c| c * k).collect::<Vec<_>>())
    }
}

/// Christoffel symbols `gamma[l][j][k] = Γ^l_{jk}`.
pub type Christoffel = Vec<Vec<Vec<f64>>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CausalKind {
    Timelike,
    Null,
    Spacelike,
    Zero,
}

/// Causal character of a vector; `cone` is +1 (future) / -1 (past) for
/// timelike and null vectors and 0 otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CausalClass {
    pub kind: CausalKind,
    pub cone: i8,
}

impl CausalClass {
    pub fn is_causal(&self) -> bool {
        matches!(self.kind, CausalKind::Timelike | CausalKind::Null)
    }
}

fn check_dim(m: &MetricSpec, len: usize) -> Result<(), GeometryError> {
    if len != m.dim() {
        return Err(GeometryError::Dimension {
            expected: m.dim(),
            got: len,
        });
    }
    Ok(())
}

/// Strict domain membership plus the margin to the nearest constraint.
pub fn domain_contains(m: &MetricSpec, x: &Point) -> (bool, f64) {
    let margin = m.margin(x.coords());
    (margin > 0.0, margin)
}

/// The metric matrix `g_ij(x)`.
pub fn metric_at(m: &MetricSpec, x: &Point) -> Result<DMatrix<f64>, GeometryError> {
    check_dim(m, x.dim())?;
    if m.margin(x.coords()) <= 0.0 {
        return Err(GeometryError::OutOfDomain(x.0.clone()));
    }
    let g = m.metric_matrix(x.coords())?;
    let cond = condition_number(&g);
    if !(cond <= MAX_CONDITION) {
        return Err(GeometryError::SingularMetric { cond });
    }
    Ok(g)
}

/// `Γ^l_{jk} = ½ g^{lm}(∂_j g_{mk} + ∂_k g_{mj} − ∂_m g_{jk})` over any
/// scalar type, from the metric, its inverse and first partials.
pub(crate) fn christoffel_from_jet<T: Real>(n: usize, ginv: &Mat<T>, dg: &[Mat<T>; MAX_DIM]) -> [Mat<T>; MAX_DIM] {
    let zero = T::cst(0.0);
    // lowered symbols A[m][j][k] = ∂_j g_mk + ∂_k g_mj − ∂_m g_jk
    let mut lowered = [[[zero; MAX_DIM]; MAX_DIM]; MAX_DIM];
    for mm in 0..n {
        for j in 0..n {
            for k in j..n {
                let a = dg[j][mm][k] + dg[k][mm][j] - dg[mm][j][k];
                lowered[mm][j][k] = a;
                lowered[mm][k][j] = a;
            }
        }
    }
    let mut gamma = [[[zero; MAX_DIM]; MAX_DIM]; MAX_DIM];
    for l in 0..n {
        for j in 0..n {
            for k in j..n {
                let mut s = zero;
                for mm in 0..n {
                    s = s + ginv[l][mm] * lowered[mm][j][k];
                }
                let s = s.scale(0.5);
                gamma[l][j][k] = s;
                gamma[l][k][j] = s;
            }
        }
    }
    gamma
}

/// Metric inverse condition check shared by the pointwise and flow paths.
pub(crate) fn check_condition<T: Real>(n: usize, g: &Mat<T>, ginv: &Mat<T>) -> Result<(), GeometryError> {
    let norm1 = |a: &Mat<T>| {
        (0..n)
            .map(|j| (0..n).map(|i| a[i][j].re().abs()).sum::<f64>())
            .fold(0.0, f64::max)
    };
    let cond = norm1(g) * norm1(ginv);
    if !(cond <= MAX_CONDITION) {
        return Err(GeometryError::SingularMetric { cond });
    }
    Ok(())
}

/// Christoffel symbols at `x`, symmetric in the lower indices.
pub fn christoffel(m: &MetricSpec, x: &Point) -> Result<Christoffel, GeometryError> {
    check_dim(m, x.dim())?;
    if m.margin(x.coords()) <= 0.0 {
        return Err(GeometryError::OutOfDomain(x.0.clone()));
    }
    let n = m.dim();
    let (g, ginv, dg) = m.metric_jet::<f64>(x.coords())?;
    check_condition(n, &g, &ginv)?;
    let gamma = christoffel_from_jet(n, &ginv, &dg);
    Ok((0..n)
        .map(|l| (0..n).map(|j| gamma[l][j][..n].to_vec()).collect())
        .collect())
}

/// `g(u, w)` at the common base point.
pub fn inner(m: &MetricSpec, u: &Tangent, w: &Tangent) -> Result<f64, GeometryError> {
    if u.base != w.base {
        return Err(GeometryError::BaseMismatch);
    }
    check_dim(m, u.components.len())?;
    check_dim(m, w.components.len())?;
    let g = metric_at(m, &u.base)?;
    Ok(bilinear(&g, &u.components, &w.components))
}

pub(crate) fn bilinear(g: &DMatrix<f64>, u: &[f64], w: &[f64]) -> f64 {
    let n = u.len();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            s += g[(i, j)] * u[i] * w[j];
        }
    }
    s
}

/// `sqrt(|g(v, v)|)`.
pub fn norm_g(m: &MetricSpec, v: &Tangent) -> Result<f64, GeometryError> {
    Ok(inner(m, v, v)?.abs().sqrt())
}

/// Euclidean norm of the chart components (the auxiliary metric `h`).
pub fn norm_aux(v: &Tangent) -> f64 {
    v.components.iter().map(|c| c * c).sum::<f64>().sqrt()
}

/// Tolerance for the null/zero decisions, relative to `|v|²`.
pub const CAUSAL_TOL: f64 = 1e-12;

/// Causal character of `v` in a Lorentzian chart.
pub fn causal_class(m: &MetricSpec, v: &Tangent) -> Result<CausalClass, GeometryError> {
    if !m.signature().is_lorentzian() {
        return Err(GeometryError::NotLorentzian);
    }
    let q = inner(m, v, v)?;
    let aux2 = norm_aux(v).powi(2);
    Ok(classify(q, aux2, time_component(m, v)))
}

pub(crate) fn time_component(m: &MetricSpec, v: &Tangent) -> f64 {
    m.time_coord().map(|t| v.components[t]).unwrap_or(0.0)
}

pub(crate) fn classify(q: f64, aux2: f64, time: f64) -> CausalClass {
    if aux2 == 0.0 {
        return CausalClass {
            kind: CausalKind::Zero,
            cone: 0,
        };
    }
    let tol = CAUSAL_TOL * aux2;
    let kind = if q < -tol {
        CausalKind::Timelike
    } else if q <= tol {
        CausalKind::Null
    } else {
        CausalKind::Spacelike
    };
    let cone = match kind {
        CausalKind::Timelike | CausalKind::Null if time > 0.0 => 1,
        CausalKind::Timelike | CausalKind::Null if time < 0.0 => -1,
        _ => 0,
    };
    CausalClass { kind, cone }
}
