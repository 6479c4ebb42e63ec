use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::flow::JacobiFrame;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularizedSolution {
    pub w: Vec<f64>,
    /// `‖J w − b‖`.
    pub residual: f64,
    /// `‖w‖`.
    pub norm: f64,
}

/// Minimizer of `‖J w − b‖² + ξ²‖w‖²`, i.e. `w = (JᵀJ + ξ²I)⁻¹ Jᵀ b`,
/// evaluated through the singular value decomposition of the frame.
///
/// With `ξ = 0` singular directions with `σ = 0` are dropped, which gives
/// the pseudo-inverse.
pub fn regularized_solve(j: &JacobiFrame, b: &[f64], xi: f64) -> RegularizedSolution {
    let b = DVector::from_column_slice(b);
    let mut w = DVector::zeros(j.dim());
    for (i, &s) in j.singular_values.iter().enumerate() {
        let denom = s * s + xi * xi;
        if denom > 0.0 {
            let coef = s * j.left.column(i).dot(&b) / denom;
            w += j.right.column(i) * coef;
        }
    }
    let residual = (&j.matrix * &w - &b).norm();
    let norm = w.norm();
    RegularizedSolution {
        w: w.iter().copied().collect(),
        residual,
        norm,
    }
}
