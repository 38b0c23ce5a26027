use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_dims, invalid, Result};
use crate::features::FeatureMatrix;
use crate::linalg::fix_column_signs;

/// Principal axes of a centered sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: DVector<f64>,
    /// `k × d`, orthonormal rows.
    pub components: DMatrix<f64>,
    pub explained_variance: DVector<f64>,
    pub explained_variance_ratio: DVector<f64>,
}

impl PcaModel {
    pub fn in_dim(&self) -> usize {
        self.mean.len()
    }

    pub fn out_dim(&self) -> usize {
        self.components.nrows()
    }

    /// Maps projected points back to input space.
    pub fn inverse_transform(&self, z: &FeatureMatrix) -> Result<FeatureMatrix> {
        check_dims(self.out_dim(), z.cols())?;
        let mut x = z.to_dmatrix() * &self.components;
        for mut row in x.row_iter_mut() {
            row += self.mean.transpose();
        }
        FeatureMatrix::from_dmatrix(&x)
    }
}

fn centered(x: &FeatureMatrix) -> (DVector<f64>, DMatrix<f64>) {
    let mean = DVector::from_vec(x.column_means());
    let mut c = x.to_dmatrix();
    for mut row in c.row_iter_mut() {
        row -= mean.transpose();
    }
    (mean, c)
}

/// Top-`k` right singular vectors of the centered data. Each component is
/// signed so that its largest-magnitude entry is positive.
pub fn pca_fit(x: &FeatureMatrix, k: usize) -> Result<PcaModel> {
    let (n, d) = x.shape();
    if k == 0 || k > d.min(n.saturating_sub(1)) {
        return Err(invalid(format!(
            "cannot keep {k} components from {n} samples in {d} dimensions (max {})",
            d.min(n.saturating_sub(1))
        )));
    }
    let (mean, c) = centered(x);
    // For tall data the R factor has the same singular values and right
    // singular vectors at a fraction of the cost.
    let reduced = if n > d { c.qr().r() } else { c };
    let svd = reduced.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));

    let total: f64 = svd.singular_values.iter().map(|s| s * s).sum();
    let denom = (n - 1) as f64;
    let mut vectors = DMatrix::zeros(d, k);
    let mut var = DVector::zeros(k);
    let mut ratio = DVector::zeros(k);
    for (slot, &idx) in order.iter().take(k).enumerate() {
        vectors.set_column(slot, &v_t.row(idx).transpose());
        let s2 = svd.singular_values[idx].powi(2);
        var[slot] = s2 / denom;
        ratio[slot] = if total > 0.0 { s2 / total } else { 0.0 };
    }
    fix_column_signs(&mut vectors);
    Ok(PcaModel {
        mean,
        components: vectors.transpose(),
        explained_variance: var,
        explained_variance_ratio: ratio,
    })
}

/// `(x − mean) · componentsᵀ`.
pub fn pca_transform(model: &PcaModel, x: &FeatureMatrix) -> Result<FeatureMatrix> {
    check_dims(model.in_dim(), x.cols())?;
    let mut c = x.to_dmatrix();
    for mut row in c.row_iter_mut() {
        row -= model.mean.transpose();
    }
    FeatureMatrix::from_dmatrix(&(c * model.components.transpose()))
}
