//! Gaussian moments and the Fréchet (2-Wasserstein) distance between Gaussians.
//!
//! For `P = N(μ_P, Σ_P)` and `Q = N(μ_Q, Σ_Q)`,
//!
//! ```text
//! FD²(P, Q) = ‖μ_P − μ_Q‖² + Tr(Σ_P + Σ_Q − 2 (Σ_P Σ_Q)^{1/2})
//! ```
//!
//! The trace of the product square root is evaluated as
//! `Tr((Σ_P^{1/2} Σ_Q Σ_P^{1/2})^{1/2})`, which has the same eigenvalues as
//! `(Σ_P Σ_Q)^{1/2}` but is symmetric PSD by construction. FD satisfies
//! non-negativity, identity and symmetry but not the triangle inequality.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_dims, invalid, Error, Result};
use crate::features::FeatureMatrix;
use crate::linalg::{self, is_symmetric, sqrtm_psd, symmetrize, trace_sqrtm_psd};

/// Relative threshold separating rounding noise from a genuinely negative
/// covariance term.
pub const COV_TERM_CLAMP: f64 = 1e-6;

/// Normalization of the sample covariance.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovEstimator {
    /// `1/n`, the maximum-likelihood estimator.
    #[default]
    Population,
    /// `1/(n-1)`.
    Sample,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MomentOptions {
    pub estimator: CovEstimator,
    /// Adds `ridge · I` to the covariance when set. Off by default.
    pub ridge: Option<f64>,
}

/// Mean and covariance of a feature set.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMoments {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
    pub n_source: usize,
}

impl GaussianMoments {
    /// Validates symmetry and positive semi-definiteness.
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>, n_source: usize) -> Result<Self> {
        check_dims(mean.len(), cov.nrows())?;
        check_dims(cov.nrows(), cov.ncols())?;
        if !is_symmetric(&cov, 1e-10) {
            return Err(invalid("covariance is not symmetric"));
        }
        let eig = linalg::sym_eigen(&cov)?;
        linalg::clamp_psd_eigenvalues(&eig.values)?;
        Ok(Self { mean, cov, n_source })
    }

    pub fn isotropic(mean: &[f64], variance: f64) -> Result<Self> {
        let d = mean.len();
        Self::new(
            DVector::from_column_slice(mean),
            DMatrix::identity(d, d) * variance,
            0,
        )
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// True when the estimate came from no more samples than dimensions, so
    /// the covariance is necessarily singular.
    pub fn rank_deficient(&self) -> bool {
        self.n_source > 0 && self.n_source <= self.dim()
    }

    /// Number of covariance eigenvalues above `rel_tol · λ_max`.
    pub fn numerical_rank(&self, rel_tol: f64) -> Result<usize> {
        let eig = linalg::sym_eigen(&self.cov)?;
        let lmax = eig.values[0].max(0.0);
        Ok(eig.values.iter().filter(|&&v| v > rel_tol * lmax).count())
    }
}

/// Column means and `1/n` covariance of `x`.
pub fn estimate_moments(x: &FeatureMatrix) -> Result<GaussianMoments> {
    estimate_moments_with(x, MomentOptions::default())
}

pub fn estimate_moments_with(x: &FeatureMatrix, opts: MomentOptions) -> Result<GaussianMoments> {
    let (n, d) = x.shape();
    if n < 2 {
        return Err(invalid(format!("need at least 2 samples for moments, got {n}")));
    }
    let mean = DVector::from_vec(x.column_means());
    let mut centered = x.to_dmatrix();
    for mut row in centered.row_iter_mut() {
        for (v, m) in row.iter_mut().zip(mean.iter()) {
            *v -= m;
        }
    }
    let denom = match opts.estimator {
        CovEstimator::Population => n as f64,
        CovEstimator::Sample => (n - 1) as f64,
    };
    let mut cov = symmetrize(&(centered.transpose() * &centered)) / denom;
    if let Some(r) = opts.ridge {
        if !(r >= 0.0) {
            return Err(invalid("ridge must be non-negative"));
        }
        for i in 0..d {
            cov[(i, i)] += r;
        }
    }
    let m = GaussianMoments {
        mean,
        cov,
        n_source: n,
    };
    if m.rank_deficient() {
        log::warn!("{n} samples in {d} dimensions: covariance is singular");
    }
    Ok(m)
}

/// Result of a Fréchet distance evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrechetResult {
    pub value: f64,
    pub mean_term: f64,
    pub cov_term: f64,
    /// Set when a slightly negative covariance term was clamped to zero.
    pub clamped: bool,
}

pub fn frechet_distance(a: &GaussianMoments, b: &GaussianMoments) -> Result<FrechetResult> {
    check_dims(a.dim(), b.dim())?;
    let mean_term = (&a.mean - &b.mean).norm_squared();
    let root_a = sqrtm_psd(&a.cov)?;
    let inner = symmetrize(&(&root_a * &b.cov * &root_a));
    let tr_a = a.cov.trace();
    let tr_b = b.cov.trace();
    let cross = trace_sqrtm_psd(&inner)?;
    let mut cov_term = tr_a + tr_b - 2.0 * cross;
    let threshold = COV_TERM_CLAMP * (tr_a + tr_b);
    let mut clamped = false;
    if cov_term < 0.0 {
        if cov_term < -threshold {
            return Err(Error::NegativeCovTerm {
                cov_term,
                threshold,
            });
        }
        cov_term = 0.0;
        clamped = true;
    }
    Ok(FrechetResult {
        value: mean_term + cov_term,
        mean_term,
        cov_term,
        clamped,
    })
}

/// Fréchet distance between Gaussian fits of two feature sets.
pub fn fvd(real: &FeatureMatrix, gen: &FeatureMatrix) -> Result<FrechetResult> {
    fvd_with(real, gen, MomentOptions::default())
}

pub fn fvd_with(
    real: &FeatureMatrix,
    gen: &FeatureMatrix,
    opts: MomentOptions,
) -> Result<FrechetResult> {
    check_dims(real.cols(), gen.cols())?;
    let a = estimate_moments_with(real, opts)?;
    let b = estimate_moments_with(gen, opts)?;
    frechet_distance(&a, &b)
}
