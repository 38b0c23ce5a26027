//! Gaussian mixture models fitted by expectation-maximization.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dims, invalid, Error, Result};
use crate::features::FeatureMatrix;
use crate::frechet::{estimate_moments, GaussianMoments};
use crate::rng::stream;

/// Cluster count used when none is given.
pub const DEFAULT_COMPONENTS: usize = 5;

/// Smallest allowed covariance diagonal entry.
pub const VARIANCE_FLOOR: f64 = 1e-6;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// A fitted mixture `Σ πᵢ N(μᵢ, Σᵢ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GmmModel {
    pub weights: Vec<f64>,
    pub means: Vec<DVector<f64>>,
    pub covs: Vec<DMatrix<f64>>,
}

/// JSON form: weights, means as nested arrays, covariances flattened
/// row-major.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct GmmJson {
    dim: usize,
    weights: Vec<f64>,
    means: Vec<Vec<f64>>,
    covs: Vec<Vec<f64>>,
}

impl GmmModel {
    pub fn new(weights: Vec<f64>, means: Vec<DVector<f64>>, covs: Vec<DMatrix<f64>>) -> Result<Self> {
        let c = weights.len();
        if c == 0 {
            return Err(invalid("mixture needs at least one component"));
        }
        check_dims(c, means.len())?;
        check_dims(c, covs.len())?;
        let d = means[0].len();
        for (m, s) in means.iter().zip(&covs) {
            check_dims(d, m.len())?;
            check_dims(d, s.nrows())?;
            check_dims(d, s.ncols())?;
        }
        if weights.iter().any(|&w| !(w >= 0.0)) {
            return Err(invalid("mixture weights must be non-negative"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(invalid(format!("mixture weights sum to {total}, not 1")));
        }
        Ok(Self {
            weights,
            means,
            covs,
        })
    }

    pub fn components(&self) -> usize {
        self.weights.len()
    }

    pub fn dim(&self) -> usize {
        self.means[0].len()
    }

    /// Component `i` as a Gaussian.
    pub fn component(&self, i: usize) -> GaussianMoments {
        GaussianMoments {
            mean: self.means[i].clone(),
            cov: self.covs[i].clone(),
            n_source: 0,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let d = self.dim();
        let j = GmmJson {
            dim: d,
            weights: self.weights.clone(),
            means: self.means.iter().map(|m| m.iter().copied().collect()).collect(),
            covs: self
                .covs
                .iter()
                .map(|s| (0..d).flat_map(|i| (0..d).map(move |k| s[(i, k)])).collect())
                .collect(),
        };
        Ok(serde_json::to_string_pretty(&j)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let j: GmmJson = serde_json::from_str(text)?;
        let d = j.dim;
        let means = j
            .means
            .into_iter()
            .map(|m| {
                check_dims(d, m.len())?;
                Ok(DVector::from_vec(m))
            })
            .collect::<Result<Vec<_>>>()?;
        let covs = j
            .covs
            .into_iter()
            .map(|c| {
                check_dims(d * d, c.len())?;
                Ok(DMatrix::from_row_slice(d, d, &c))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(j.weights, means, covs)
    }

    /// Mean log-likelihood per sample.
    pub fn mean_log_likelihood(&self, x: &FeatureMatrix) -> Result<f64> {
        check_dims(self.dim(), x.cols())?;
        let logp = component_log_densities(self, &x.to_dmatrix())?;
        Ok(responsibilities(&logp).1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GmmOptions {
    pub max_iter: usize,
    /// Stop once the mean log-likelihood improves by less than this.
    pub tol: f64,
    pub variance_floor: f64,
    /// Empty-component re-seeding attempts before giving up.
    pub max_restarts: usize,
    /// Lloyd iterations run after k-means++ seeding.
    pub kmeans_iter: usize,
}

impl Default for GmmOptions {
    fn default() -> Self {
        Self {
            max_iter: 200,
            tol: 1e-6,
            variance_floor: VARIANCE_FLOOR,
            max_restarts: 3,
            kmeans_iter: 20,
        }
    }
}

/// The model plus a trace of the fit.
#[derive(Debug, Clone)]
pub struct GmmFit {
    pub model: GmmModel,
    /// Mean log-likelihood after each E-step, starting from the initial
    /// parameters.
    pub log_likelihood: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub restarts: usize,
}

pub fn fit_gmm(x: &FeatureMatrix, c: usize, seed: u64) -> Result<GmmModel> {
    fit_gmm_with(x, c, seed, &GmmOptions::default()).map(|f| f.model)
}

/// EM with k-means++ initialization. Deterministic per seed.
pub fn fit_gmm_with(x: &FeatureMatrix, c: usize, seed: u64, opts: &GmmOptions) -> Result<GmmFit> {
    if c == 0 {
        return Err(invalid("component count must be at least 1"));
    }
    let n = x.rows();
    if n < 5 * c {
        return Err(invalid(format!(
            "{n} samples is too few for {c} components (need at least {})",
            5 * c
        )));
    }
    if c == 1 {
        // EM's fixed point for one component is the sample moments.
        let m = estimate_moments(x)?;
        let mut cov = m.cov;
        floor_diagonal(&mut cov, opts.variance_floor);
        let model = GmmModel::new(vec![1.0], vec![m.mean], vec![cov])?;
        let ll = model.mean_log_likelihood(x)?;
        return Ok(GmmFit {
            model,
            log_likelihood: vec![ll],
            iterations: 0,
            converged: true,
            restarts: 0,
        });
    }

    let data = x.to_dmatrix();
    let labels = kmeans_labels(x, c, seed, opts.kmeans_iter);
    let mut resp = DMatrix::zeros(n, c);
    for (i, &l) in labels.iter().enumerate() {
        resp[(i, l)] = 1.0;
    }
    let mut restarts = 0;
    let mut model = m_step(&data, &resp, opts, &mut restarts)?;
    let mut history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    for iter in 0..opts.max_iter {
        let logp = component_log_densities(&model, &data)?;
        let (r, ll) = responsibilities(&logp);
        history.push(ll);
        if let [.., prev, last] = history[..] {
            if (last - prev).abs() < opts.tol {
                converged = true;
                break;
            }
        }
        resp = r;
        model = m_step(&data, &resp, opts, &mut restarts)?;
        iterations = iter + 1;
    }
    Ok(GmmFit {
        model,
        log_likelihood: history,
        iterations,
        converged,
        restarts,
    })
}

fn floor_diagonal(cov: &mut DMatrix<f64>, floor: f64) {
    for i in 0..cov.nrows() {
        if cov[(i, i)] < floor {
            cov[(i, i)] = floor;
        }
    }
}

/// k-means++ seeding followed by a few Lloyd steps; returns hard labels.
fn kmeans_labels(x: &FeatureMatrix, c: usize, seed: u64, iters: usize) -> Vec<usize> {
    let n = x.rows();
    let d = x.cols();
    let mut rng = stream(seed);
    let sq = |a: &[f64], b: &[f64]| crate::kernels::sq_dist(a, b);

    let mut centers: Vec<Vec<f64>> = Vec::with_capacity(c);
    centers.push(x.row(rng.random_range(0..n as u64) as usize).to_vec());
    let mut best: Vec<f64> = x.iter_rows().map(|r| sq(r, &centers[0])).collect();
    while centers.len() < c {
        let total: f64 = best.iter().sum();
        let next = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = n - 1;
            for (i, &b) in best.iter().enumerate() {
                acc += b;
                if acc >= target {
                    pick = i;
                    break;
                }
            }
            pick
        } else {
            rng.random_range(0..n as u64) as usize
        };
        centers.push(x.row(next).to_vec());
        let cnew = centers.last().expect("just pushed");
        for (b, r) in best.iter_mut().zip(x.iter_rows()) {
            *b = b.min(sq(r, cnew));
        }
    }

    let assign = |centers: &[Vec<f64>]| -> Vec<usize> {
        x.iter_rows()
            .map(|r| {
                let mut arg = 0;
                let mut min = f64::INFINITY;
                for (k, ctr) in centers.iter().enumerate() {
                    let v = sq(r, ctr);
                    if v < min {
                        min = v;
                        arg = k;
                    }
                }
                arg
            })
            .collect()
    };
    let mut labels = assign(&centers);
    for _ in 0..iters {
        let mut sums = vec![vec![0.0; d]; c];
        let mut counts = vec![0usize; c];
        for (r, &l) in x.iter_rows().zip(&labels) {
            counts[l] += 1;
            for (s, v) in sums[l].iter_mut().zip(r) {
                *s += v;
            }
        }
        for k in 0..c {
            if counts[k] > 0 {
                centers[k] = sums[k].iter().map(|s| s / counts[k] as f64).collect();
            }
        }
        let next = assign(&centers);
        if next == labels {
            break;
        }
        labels = next;
    }
    labels
}

/// Weighted means and covariances from responsibilities. Components that end
/// up (nearly) empty are re-seeded at the worst-explained point.
fn m_step(
    data: &DMatrix<f64>,
    resp: &DMatrix<f64>,
    opts: &GmmOptions,
    restarts: &mut usize,
) -> Result<GmmModel> {
    let (n, d) = data.shape();
    let c = resp.ncols();
    let mut resp = resp.clone();
    let min_mass = 1e-8 * n as f64;
    loop {
        let nk: Vec<f64> = (0..c).map(|k| resp.column(k).sum()).collect();
        let Some(empty) = nk.iter().position(|&v| v < min_mass.max(1.0)) else {
            break;
        };
        if *restarts >= opts.max_restarts {
            return Err(Error::DegenerateFit(format!(
                "component {empty} stayed empty after {} restarts; try fewer components",
                opts.max_restarts
            )));
        }
        *restarts += 1;
        // Hand the point with the least total responsibility mass elsewhere
        // to the empty component.
        let (worst, _) = (0..n)
            .map(|i| (i, resp[(i, empty)] - resp.row(i).max()))
            .fold((0, f64::INFINITY), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc });
        for k in 0..c {
            resp[(worst, k)] = 0.0;
        }
        resp[(worst, empty)] = 1.0;
        // Give it a few neighbours too so the covariance is estimable.
        let target = data.row(worst).clone_owned();
        let mut order: Vec<(usize, f64)> = (0..n)
            .map(|i| (i, (data.row(i) - &target).norm_squared()))
            .collect();
        order.sort_by(|a, b| a.1.total_cmp(&b.1));
        for &(i, _) in order.iter().take((d + 1).max(5)) {
            for k in 0..c {
                resp[(i, k)] = 0.0;
            }
            resp[(i, empty)] = 1.0;
        }
    }

    let mut weights = Vec::with_capacity(c);
    let mut means = Vec::with_capacity(c);
    let mut covs = Vec::with_capacity(c);
    for k in 0..c {
        let r = resp.column(k);
        let nk = r.sum();
        let mean = data.tr_mul(&r) / nk;
        let mut weighted = data.clone();
        for (i, mut row) in weighted.row_iter_mut().enumerate() {
            let w = r[i].sqrt();
            for (v, m) in row.iter_mut().zip(mean.iter()) {
                *v = (*v - m) * w;
            }
        }
        let mut cov = crate::linalg::symmetrize(&(weighted.transpose() * &weighted)) / nk;
        floor_diagonal(&mut cov, opts.variance_floor);
        weights.push(nk / n as f64);
        means.push(mean);
        covs.push(cov);
    }
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    GmmModel::new(weights, means, covs)
}

/// Cholesky factor, adding growing multiples of the floor to the diagonal when
/// the covariance is numerically singular.
fn robust_cholesky(cov: &DMatrix<f64>, floor: f64) -> Result<Cholesky<f64, nalgebra::Dyn>> {
    if let Some(ch) = Cholesky::new(cov.clone()) {
        return Ok(ch);
    }
    let d = cov.nrows();
    let scale = (cov.trace() / d as f64).max(1.0);
    let mut jitter = floor * scale;
    for _ in 0..12 {
        let mut m = cov.clone();
        for i in 0..d {
            m[(i, i)] += jitter;
        }
        if let Some(ch) = Cholesky::new(m) {
            log::debug!("covariance regularized with jitter {jitter:e}");
            return Ok(ch);
        }
        jitter *= 10.0;
    }
    Err(Error::Singular("component covariance is not positive definite".into()))
}

/// `log πₖ + log N(xᵢ | μₖ, Σₖ)` as an n×c matrix.
fn component_log_densities(model: &GmmModel, data: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (n, d) = data.shape();
    let cols: Vec<Vec<f64>> = (0..model.components())
        .into_par_iter()
        .map(|k| {
            let ch = robust_cholesky(&model.covs[k], VARIANCE_FLOOR)?;
            let l = ch.l();
            let log_det: f64 = 2.0 * l.diagonal().iter().map(|v| v.ln()).sum::<f64>();
            let mut centered = data.transpose();
            for mut col in centered.column_iter_mut() {
                col -= &model.means[k];
            }
            let z = l
                .solve_lower_triangular(&centered)
                .ok_or_else(|| Error::Singular("triangular solve failed".into()))?;
            let base = model.weights[k].ln() - 0.5 * (d as f64 * LN_2PI + log_det);
            Ok(z.column_iter().map(|c| base - 0.5 * c.norm_squared()).collect())
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = DMatrix::zeros(n, model.components());
    for (k, col) in cols.into_iter().enumerate() {
        out.set_column(k, &DVector::from_vec(col));
    }
    Ok(out)
}

/// Normalized responsibilities and the mean log-likelihood.
fn responsibilities(logp: &DMatrix<f64>) -> (DMatrix<f64>, f64) {
    let (n, c) = logp.shape();
    let mut r = DMatrix::zeros(n, c);
    let mut total = 0.0;
    for i in 0..n {
        let row = logp.row(i);
        let max = row.max();
        let sum: f64 = row.iter().map(|v| (v - max).exp()).sum();
        let lse = max + sum.ln();
        total += lse;
        for k in 0..c {
            r[(i, k)] = (logp[(i, k)] - lse).exp();
        }
    }
    (r, total / n as f64)
}
