//! Symmetric-matrix helpers shared by the Gaussian, normality and reduction
//! modules.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{invalid, Error, Result};

/// Relative tolerance below which negative eigenvalues count as rounding.
pub const PSD_TOL: f64 = 1e-8;

/// Eigendecomposition with eigenvalues sorted in descending order.
#[derive(Debug, Clone)]
pub struct SortedEigen {
    pub values: DVector<f64>,
    /// Columns are eigenvectors, matching `values`.
    pub vectors: DMatrix<f64>,
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0f64, |a, v| a.max(v.abs()))
}

pub fn is_symmetric(m: &DMatrix<f64>, rel_tol: f64) -> bool {
    if !m.is_square() {
        return false;
    }
    let scale = max_abs(m);
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            if (m[(i, j)] - m[(j, i)]).abs() > rel_tol * scale {
                return false;
            }
        }
    }
    true
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

pub fn sym_eigen(m: &DMatrix<f64>) -> Result<SortedEigen> {
    if !m.is_square() {
        return Err(invalid(format!("matrix is {}x{}, not square", m.nrows(), m.ncols())));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(invalid("matrix has non-finite entries"));
    }
    let eig = SymmetricEigen::new(m.clone());
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    // Stable sort keeps the decomposition deterministic under ties.
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        vectors.set_column(k, &eig.eigenvectors.column(i));
    }
    Ok(SortedEigen { values, vectors })
}

/// Clamps eigenvalues in `[-tol, 0)` to zero, where `tol = PSD_TOL * λ_max`.
/// Anything more negative is an error.
pub fn clamp_psd_eigenvalues(values: &DVector<f64>) -> Result<DVector<f64>> {
    let lmax = values.iter().fold(0.0f64, |a, &v| a.max(v));
    let tol = PSD_TOL * lmax;
    values
        .iter()
        .map(|&v| {
            if v >= 0.0 {
                Ok(v)
            } else if v >= -tol {
                Ok(0.0)
            } else {
                Err(Error::NotPsd {
                    eigenvalue: v,
                    tolerance: tol,
                })
            }
        })
        .collect::<Result<Vec<_>>>()
        .map(DVector::from_vec)
}

fn reconstruct(vectors: &DMatrix<f64>, values: &DVector<f64>) -> DMatrix<f64> {
    let mut scaled = vectors.clone();
    for (j, &v) in values.iter().enumerate() {
        scaled.column_mut(j).scale_mut(v);
    }
    symmetrize(&(scaled * vectors.transpose()))
}

/// Principal square root of a symmetric positive semi-definite matrix.
pub fn sqrtm_psd(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !is_symmetric(m, 1e-10) {
        return Err(invalid("sqrtm_psd requires a symmetric matrix"));
    }
    let eig = sym_eigen(&symmetrize(m))?;
    let vals = clamp_psd_eigenvalues(&eig.values)?.map(f64::sqrt);
    Ok(reconstruct(&eig.vectors, &vals))
}

/// Trace of the principal square root, computed from the eigenvalues alone.
pub fn trace_sqrtm_psd(m: &DMatrix<f64>) -> Result<f64> {
    let eig = sym_eigen(&symmetrize(m))?;
    Ok(clamp_psd_eigenvalues(&eig.values)?
        .iter()
        .map(|v| v.sqrt())
        .sum())
}

/// Inverse (or inverse square root) of a symmetric positive-definite matrix
/// through its eigendecomposition, optionally regularized.
#[derive(Debug, Clone)]
pub struct SpdInverse {
    pub inverse: DMatrix<f64>,
    pub inv_sqrt: DMatrix<f64>,
    /// Ridge added to the diagonal before inversion, 0 when none was needed.
    pub ridge: f64,
    pub condition: f64,
}

/// Conditioning above which the ridge fallback kicks in.
pub const MAX_CONDITION: f64 = 1e12;

/// Inverts `s`. When its condition number exceeds [`MAX_CONDITION`] and
/// `allow_ridge` is set, `1e-8 * tr(s) / d` is added to the diagonal first.
pub fn spd_inverse(s: &DMatrix<f64>, allow_ridge: bool) -> Result<SpdInverse> {
    let d = s.nrows();
    let trace = s.trace();
    if !(trace > 0.0) {
        return Err(Error::Degenerate(
            "covariance has zero trace (all columns constant)".into(),
        ));
    }
    let eig = sym_eigen(&symmetrize(s))?;
    let lmax = eig.values[0];
    let lmin = eig.values[d - 1];
    let condition = if lmin > 0.0 { lmax / lmin } else { f64::INFINITY };
    let mut ridge = 0.0;
    let mut values = eig.values.clone();
    if condition > MAX_CONDITION {
        if !allow_ridge {
            return Err(Error::Singular(format!(
                "covariance condition number {condition:e} exceeds {MAX_CONDITION:e}"
            )));
        }
        ridge = 1e-8 * trace / d as f64;
        values.iter_mut().for_each(|v| *v = v.max(0.0) + ridge);
    }
    let inv = values.map(|v| 1.0 / v);
    let inv_sqrt = values.map(|v| 1.0 / v.sqrt());
    Ok(SpdInverse {
        inverse: reconstruct(&eig.vectors, &inv),
        inv_sqrt: reconstruct(&eig.vectors, &inv_sqrt),
        ridge,
        condition,
    })
}

/// Flips each column of `vectors` so that its largest-magnitude entry is
/// positive.
pub fn fix_column_signs(vectors: &mut DMatrix<f64>) {
    for mut col in vectors.column_iter_mut() {
        let mut best = 0.0f64;
        let mut sign = 1.0;
        for &v in col.iter() {
            if v.abs() > best {
                best = v.abs();
                sign = v.signum();
            }
        }
        if sign < 0.0 {
            col.neg_mut();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sqrt_of_scaled_identity() {
        let r = sqrtm_psd(&(DMatrix::identity(3, 3) * 4.0)).unwrap();
        assert!((r - DMatrix::identity(3, 3) * 2.0).amax() < 1e-14);
    }

    #[test]
    fn sqrt_multiplies_back() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let r = sqrtm_psd(&m).unwrap();
        assert!((&r * &r - &m).amax() < 1e-10);
        assert!(is_symmetric(&r, 1e-14));
    }

    #[test]
    fn negative_eigenvalue_rejected() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(matches!(sqrtm_psd(&m), Err(Error::NotPsd { .. })));
    }

    #[test]
    fn tiny_negative_eigenvalue_clamped() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1e-12]);
        let r = sqrtm_psd(&m).unwrap();
        assert_eq!(r[(1, 1)], 0.0);
    }

    #[test]
    fn asymmetric_rejected() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(sqrtm_psd(&m).is_err());
    }

    #[test]
    fn ridge_only_when_ill_conditioned() {
        let good = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0]);
        let inv = spd_inverse(&good, false).unwrap();
        assert_eq!(inv.ridge, 0.0);
        assert!((inv.inverse[(0, 0)] - 0.5).abs() < 1e-15);

        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(matches!(spd_inverse(&bad, false), Err(Error::Singular(_))));
        let inv = spd_inverse(&bad, true).unwrap();
        assert!((inv.ridge - 1e-8).abs() < 1e-20);
        assert!(inv.inverse.iter().all(|v| v.is_finite()));

        let zero = DMatrix::<f64>::zeros(1, 1);
        assert!(matches!(spd_inverse(&zero, true), Err(Error::Degenerate(_))));
    }
}
