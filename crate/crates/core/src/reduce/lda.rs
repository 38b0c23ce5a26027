use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_dims, invalid, Result};
use crate::features::{FeatureMatrix, LabeledFeatures};
use crate::linalg::{fix_column_signs, spd_inverse, sym_eigen, symmetrize};

/// Fisher discriminant directions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaModel {
    pub mean: DVector<f64>,
    /// `k × d`. Projections have unit pooled within-class variance.
    pub scalings: DMatrix<f64>,
    pub classes: Vec<i64>,
    /// Between/within variance ratio of each direction.
    pub eigenvalues: DVector<f64>,
}

impl LdaModel {
    pub fn in_dim(&self) -> usize {
        self.mean.len()
    }

    pub fn out_dim(&self) -> usize {
        self.scalings.nrows()
    }
}

pub fn lda_fit(x: &LabeledFeatures, k: usize) -> Result<LdaModel> {
    lda_fit_with(x, k, true)
}

/// Solves `S_b v = λ S_w v` by whitening with `S_w^{-1/2}`. With
/// `allow_ridge` unset, an ill-conditioned within-class scatter is an error.
pub fn lda_fit_with(x: &LabeledFeatures, k: usize, allow_ridge: bool) -> Result<LdaModel> {
    let m = &x.matrix;
    let (n, d) = m.shape();
    let mut groups: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
    for (i, &l) in x.labels.iter().enumerate() {
        groups.entry(l).or_default().push(i);
    }
    let c = groups.len();
    if c < 2 {
        return Err(invalid("LDA needs at least two classes"));
    }
    if k == 0 || k > c - 1 || k > d {
        return Err(invalid(format!(
            "LDA with {c} classes in {d} dimensions supports 1..={} directions, got {k}",
            (c - 1).min(d)
        )));
    }
    let data = m.to_dmatrix();
    let mean = DVector::from_vec(m.column_means());
    let mut sw = DMatrix::zeros(d, d);
    let mut sb = DMatrix::zeros(d, d);
    for idx in groups.values() {
        let sub = data.select_rows(idx);
        let mu = sub.row_mean().transpose();
        let mut centered = sub;
        for mut row in centered.row_iter_mut() {
            row -= mu.transpose();
        }
        sw += centered.transpose() * &centered;
        let diff = &mu - &mean;
        sb += &diff * diff.transpose() * idx.len() as f64;
    }
    sw /= n as f64;
    sb /= n as f64;

    let inv = spd_inverse(&sw, allow_ridge)?;
    if inv.ridge > 0.0 {
        log::warn!("within-class scatter is ill-conditioned; added ridge {:e}", inv.ridge);
    }
    let w = &inv.inv_sqrt;
    let eig = sym_eigen(&symmetrize(&(w * &sb * w)))?;
    let mut dirs = w * eig.vectors.columns(0, k);
    fix_column_signs(&mut dirs);
    Ok(LdaModel {
        mean,
        scalings: dirs.transpose(),
        classes: groups.keys().copied().collect(),
        eigenvalues: eig.values.rows(0, k).into_owned(),
    })
}

pub fn lda_transform(model: &LdaModel, x: &FeatureMatrix) -> Result<FeatureMatrix> {
    check_dims(model.in_dim(), x.cols())?;
    let mut c = x.to_dmatrix();
    for mut row in c.row_iter_mut() {
        row -= model.mean.transpose();
    }
    FeatureMatrix::from_dmatrix(&(c * model.scalings.transpose()))
}
