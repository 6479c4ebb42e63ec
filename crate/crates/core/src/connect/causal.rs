use serde::{Deserialize, Serialize};

use crate::error::{GeometryError, LiftError};
use crate::flow::in_domain_d;
use crate::geometry::{causal_class, classify, inner, norm_aux, CausalKind, Point, Tangent};
use crate::lifting::{quasi_lift, BasePath, LiftOptions, QuasiLift};
use crate::manifold::MetricSpec;

/// The closed causal cone at `base` on one time side, intersected with the
/// exponential domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CausalCone {
    pub base: Vec<f64>,
    /// +1 for the future cone, -1 for the past cone.
    pub sign: i8,
}

impl CausalCone {
    /// Membership of `v`; the zero vector belongs to both cones.
    pub fn contains(&self, m: &MetricSpec, v: &Tangent) -> Result<bool, GeometryError> {
        self.contains_within(m, v, 0.0)
    }

    /// Membership with `g(v, v)` allowed up to `slack·|v|` above the null
    /// tolerance, for vectors carrying a solver residual.
    pub fn contains_within(&self, m: &MetricSpec, v: &Tangent, slack: f64) -> Result<bool, GeometryError> {
        let c = causal_class(m, v)?;
        if c.kind == CausalKind::Zero {
            return Ok(true);
        }
        let aux = norm_aux(v);
        let time = m.time_coord().map_or(0.0, |t| v.components[t]);
        let near_null = c.kind == CausalKind::Spacelike && inner(m, v, v)? <= slack * aux;
        let side = c.cone == self.sign || (near_null && time * f64::from(self.sign) > 0.0);
        Ok((c.is_causal() || near_null) && side && in_domain_d(m, &v.base, v).inside)
    }
}

/// Causal cone sign shared by every velocity of `path`, checked at the
/// knots, inside each piece and on both sides of every break.
fn path_cone(m: &MetricSpec, path: &BasePath) -> Result<i8, LiftError> {
    let time = m.time_coord().ok_or(GeometryError::NotLorentzian)?;
    let mut sign = 0;
    for (t, x, v) in path.probe_velocities() {
        let g = m.metric_matrix(&x).map_err(|e| LiftError::Flow(e.to_string()))?;
        let q = crate::geometry::bilinear(&g, &v, &v);
        let aux2 = v.iter().map(|c| c * c).sum::<f64>();
        let c = classify(q, aux2, v[time]);
        if !c.is_causal() {
            return Err(LiftError::NotCausal(format!("velocity at t = {t} is {:?}", c.kind)));
        }
        if sign != 0 && c.cone != sign {
            return Err(LiftError::NotCausal(format!("velocity at t = {t} switches time cone")));
        }
        sign = c.cone;
    }
    Ok(sign)
}

/// Quasi-lift of a causal path from `v0 = 0` at `p = γ(0)` that stays in
/// the causal cone of the path's time orientation.
///
/// The path must be causal with a single time orientation; afterwards every
/// lifted vector is checked against the cone (up to the null tolerance).
pub fn causal_quasi_lift(m: &MetricSpec, path: &BasePath, opts: &LiftOptions) -> Result<QuasiLift, LiftError> {
    if !m.signature().is_lorentzian() {
        return Err(GeometryError::NotLorentzian.into());
    }
    let sign = path_cone(m, path)?;
    let p = Point::new(path.start());
    let lift = quasi_lift(m, path, &Tangent::zero(&p), opts)?;
    let cone = CausalCone {
        base: p.0.clone(),
        sign,
    };
    let slack = 10.0 * opts.lift_tol;
    for (index, s) in lift.samples.iter().enumerate() {
        let v = Tangent::new(&p, s.alpha.clone());
        if !cone.contains_within(m, &v, slack)? {
            let c = causal_class(m, &v)?;
            return Err(LiftError::ConeViolation {
                index,
                detail: format!("lifted vector {:?} is {:?} with time sign {}", s.alpha, c.kind, c.cone),
            });
        }
    }
    Ok(lift)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spacelike_path_is_rejected() {
        let m = MetricSpec::builtin("minkowski").unwrap();
        let tc = m.time_coord().unwrap();
        let mut end = vec![0.0, 0.0];
        end[1 - tc] = 1.0;
        let path = BasePath::polyline(&[vec![0.0, 0.0], end]).unwrap();
        assert!(matches!(
            causal_quasi_lift(&m, &path, &LiftOptions::default()),
            Err(LiftError::NotCausal(_))
        ));
    }

    #[test]
    fn riemannian_metric_is_rejected() {
        let m = MetricSpec::builtin("euclid").unwrap();
        let path = BasePath::polyline(&[vec![0.0, 0.0], vec![1.0, 0.0]]).unwrap();
        assert!(matches!(
            causal_quasi_lift(&m, &path, &LiftOptions::default()),
            Err(LiftError::Geometry(GeometryError::NotLorentzian))
        ));
    }
}
