use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::geometry::Point;

/// `dE_v` in chart components with its singular value decomposition.
///
/// Singular values are sorted in decreasing order. Each right singular
/// vector is oriented so its largest-magnitude component is positive, and
/// the matching left vector follows it; this fixes the "positive
/// orientation" of kernel directions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JacobiFrame {
    pub matrix: DMatrix<f64>,
    pub singular_values: Vec<f64>,
    /// Right singular vectors as columns.
    pub right: DMatrix<f64>,
    /// Left singular vectors as columns.
    pub left: DMatrix<f64>,
    pub endpoint: Point,
}

impl JacobiFrame {
    pub fn new(matrix: DMatrix<f64>, endpoint: Point) -> JacobiFrame {
        let n = matrix.nrows();
        let svd = matrix.clone().svd(true, true);
        let u = svd.u.expect("requested U");
        let v_t = svd.v_t.expect("requested V^T");
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
        let mut right = DMatrix::zeros(n, n);
        let mut left = DMatrix::zeros(n, n);
        let mut singular_values = Vec::with_capacity(n);
        for (k, &i) in order.iter().enumerate() {
            let mut rv: DVector<f64> = v_t.row(i).transpose();
            let mut lv: DVector<f64> = u.column(i).into_owned();
            let lead = rv
                .iter()
                .copied()
                .fold(0.0f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
            if lead < 0.0 {
                rv = -rv;
                lv = -lv;
            }
            right.set_column(k, &rv);
            left.set_column(k, &lv);
            singular_values.push(svd.singular_values[i]);
        }
        JacobiFrame {
            matrix,
            singular_values,
            right,
            left,
            endpoint,
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn sigma_min(&self) -> f64 {
        *self.singular_values.last().expect("nonempty frame")
    }

    pub fn sigma_max(&self) -> f64 {
        self.singular_values[0]
    }

    /// Right singular vector of the smallest singular value.
    pub fn kernel_direction(&self) -> DVector<f64> {
        self.right.column(self.dim() - 1).into_owned()
    }

    /// Right singular vectors whose singular value is at most `threshold`.
    pub fn kernel_basis(&self, threshold: f64) -> Vec<DVector<f64>> {
        self.singular_values
            .iter()
            .enumerate()
            .filter(|(_, &s)| s <= threshold)
            .map(|(i, _)| self.right.column(i).into_owned())
            .collect()
    }

    /// Component of `b` outside the span of the left singular vectors with
    /// singular value above `threshold`.
    pub fn unreachable_part(&self, b: &DVector<f64>, threshold: f64) -> DVector<f64> {
        let mut r = b.clone();
        for (i, &s) in self.singular_values.iter().enumerate() {
            if s > threshold {
                let u = self.left.column(i);
                r -= u * u.dot(b);
            }
        }
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sorted_and_oriented() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, -1e-3, -2.0, 0.0]);
        let f = JacobiFrame::new(m, Point(vec![0.0, 0.0]));
        assert!((f.singular_values[0] - 2.0).abs() < 1e-15);
        assert!((f.singular_values[1] - 1e-3).abs() < 1e-15);
        let k = f.kernel_direction();
        assert!(k[0].abs() < 1e-15 && (k[1] - 1.0).abs() < 1e-15);
        let recon =
            &f.left * DMatrix::from_diagonal(&DVector::from_vec(f.singular_values.clone())) * f.right.transpose();
        assert!((recon - &f.matrix).abs().max() < 1e-15);
        let r = f.unreachable_part(&DVector::from_vec(vec![1.0, 1.0]), 1e-2);
        assert!((r[0] - 1.0).abs() < 1e-15 && r[1].abs() < 1e-15);
        assert_eq!(f.kernel_basis(1e-2).len(), 1);
    }
}
