//! Sample-efficiency protocols: convergence sample size, convergence-rate
//! curves, perturbation sweeps and rank correlation, plus the synthetic toys
//! they are exercised on.
//!
//! A protocol evaluates a metric on a grid of sample sizes. At each grid size
//! `n` and repeat `r` it draws `n` rows from each input without replacement,
//! using streams seeded by `derive_seed(master_seed, &[n, r])`, and averages the
//! metric over repeats to get `D̄(n)`. The grid's last point is the target size,
//! whose average `D̄(target)` is the reference value.

mod sweep;
mod synth;

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dims, invalid, Error, Result};
use crate::features::{standardize, subsample, FeatureMatrix};
use crate::metrics::{Metric, MetricId, MetricSpec};
use crate::reduce::{pca_fit, pca_transform};
use crate::rng::derive_seed;

pub use sweep::{
    blur_sigma_range, ranks, spearman, sweep, sweep_with, BlurPreset, SweepResult,
};
pub use synth::{
    gmm_layout, synth_gmm, synth_gmm_labeled, synth_mg, BASE_DIM, GMM_COMPONENTS,
    GMM_LAYOUT_SEED, TOY_DIM,
};

/// Guard added to the rate denominator.
pub const RATE_EPSILON: f64 = 1e-12;

/// Transform applied to both inputs before any subsampling. Statistics are
/// fitted on the real set only.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Preprocess {
    /// Per-column z-scoring.
    #[serde(default)]
    pub standardize: bool,
    /// Projection onto this many principal components, after any
    /// standardization.
    #[serde(default)]
    pub pca: Option<usize>,
}

impl Preprocess {
    pub fn is_identity(&self) -> bool {
        !self.standardize && self.pca.is_none()
    }

    pub fn apply(
        &self,
        real: &FeatureMatrix,
        gen: &FeatureMatrix,
    ) -> Result<(FeatureMatrix, FeatureMatrix)> {
        check_dims(real.cols(), gen.cols())?;
        let (mut r, mut g) = (real.clone(), gen.clone());
        if self.standardize {
            let (rs, stats) = standardize(&r, None)?;
            g = standardize(&g, Some(&stats))?.0;
            r = rs;
        }
        if let Some(k) = self.pca {
            let model = pca_fit(&r, k)?;
            r = pca_transform(&model, &r)?;
            g = pca_transform(&model, &g)?;
        }
        Ok((r, g))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceConfig {
    pub interval: usize,
    pub repeats: usize,
    pub margin: f64,
    pub target_n: usize,
    pub metric: MetricId,
    pub master_seed: u64,
    #[serde(default)]
    pub preprocess: Preprocess,
}

impl Default for ConvergenceConfig {
    fn default() -> Self {
        Self {
            interval: 100,
            repeats: 5,
            margin: 0.05,
            target_n: 5000,
            metric: MetricId::Fd,
            master_seed: 0,
            preprocess: Preprocess::default(),
        }
    }
}

impl ConvergenceConfig {
    pub fn new(metric: MetricId) -> Self {
        Self {
            metric,
            ..Self::default()
        }
    }

    /// Defaults for rate curves: ten repeats per point.
    pub fn rate_default(metric: MetricId) -> Self {
        Self {
            repeats: 10,
            ..Self::new(metric)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.margin > 0.0 && self.margin <= 1.0) {
            return Err(invalid(format!("margin must be in (0, 1], got {}", self.margin)));
        }
        if self.interval == 0 || self.repeats == 0 || self.target_n == 0 {
            return Err(invalid("interval, repeats and target_n must be positive"));
        }
        Ok(())
    }

    /// Grid sizes for a target of `target`: `max(interval, 50)` upward in steps
    /// of `interval`, always ending at `target`.
    pub fn grid(&self, target: usize) -> Vec<usize> {
        let start = self.interval.max(50);
        let mut g: Vec<usize> = (start..target).step_by(self.interval).collect();
        g.push(target);
        g
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridPoint {
    pub n: usize,
    pub mean: f64,
    /// Unbiased variance over repeats; zero for a single repeat.
    pub variance: f64,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergencePoint {
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
    /// `|D̄(n) − D̄(target)| / |D̄(target)|`.
    pub rel_error: f64,
    pub within_margin: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub metric: String,
    pub config: ConvergenceConfig,
    pub points: Vec<ConvergencePoint>,
    /// Target size actually used: `min(target_n, available)`.
    pub target_n: usize,
    pub target_value: f64,
    pub converged_at: Option<usize>,
    /// Set when fewer than `target_n` rows were available.
    pub truncated: bool,
    pub available_n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatePoint {
    pub n: usize,
    pub mean: f64,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateCurve {
    pub metric: String,
    pub config: ConvergenceConfig,
    pub points: Vec<RatePoint>,
    pub target_n: usize,
    pub target_value: f64,
    pub epsilon: f64,
    pub repeats: usize,
    pub truncated: bool,
}

/// Metric means at every grid size, plus the effective target and whether it
/// was truncated.
pub fn evaluate_grid<M: Metric + ?Sized>(
    real: &FeatureMatrix,
    gen: &FeatureMatrix,
    cfg: &ConvergenceConfig,
    metric: &M,
) -> Result<(Vec<GridPoint>, usize, bool)> {
    cfg.validate()?;
    check_dims(real.cols(), gen.cols())?;
    let (real, gen) = if cfg.preprocess.is_identity() {
        (real.clone(), gen.clone())
    } else {
        cfg.preprocess.apply(real, gen)?
    };
    let available = real.rows().min(gen.rows());
    let truncated = available < cfg.target_n;
    let target = cfg.target_n.min(available);
    if truncated {
        log::warn!(
            "only {available} rows available; target {} truncated to {target}",
            cfg.target_n
        );
    }
    let grid = cfg.grid(target);
    let tasks: Vec<(usize, usize)> = grid
        .iter()
        .flat_map(|&n| (0..cfg.repeats).map(move |r| (n, r)))
        .collect();
    // Collect every outcome first so the reported failure is the earliest one
    // in grid order, whatever the scheduling.
    let outcomes: Vec<Result<f64>> = tasks
        .par_iter()
        .map(|&(n, r)| {
            let seed = derive_seed(cfg.master_seed, &[n as u64, r as u64]);
            let a = subsample(&real, n, derive_seed(seed, &[0]))?;
            let b = subsample(&gen, n, derive_seed(seed, &[1]))?;
            metric.evaluate(&a, &b).map_err(|e| Error::Protocol {
                n,
                repeat: r,
                source: Box::new(e),
            })
        })
        .collect();
    let values = outcomes.into_iter().collect::<Result<Vec<f64>>>()?;
    let points = grid
        .iter()
        .zip(values.chunks(cfg.repeats))
        .map(|(&n, vals)| {
            let k = vals.len() as f64;
            let mean = vals.iter().sum::<f64>() / k;
            let variance = if vals.len() > 1 {
                vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0)
            } else {
                0.0
            };
            GridPoint {
                n,
                mean,
                variance,
                values: vals.to_vec(),
            }
        })
        .collect();
    Ok((points, target, truncated))
}

fn rel_error(v: f64, target: f64) -> f64 {
    let diff = (v - target).abs();
    if target != 0.0 {
        diff / target.abs()
    } else if diff == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Smallest grid size from which every later point stays within the margin.
fn converged_at(points: &[ConvergencePoint]) -> Option<usize> {
    let mut at = None;
    for p in points.iter().rev() {
        if !p.within_margin {
            break;
        }
        at = Some(p.n);
    }
    at
}

pub fn convergence_sample_size(
    real: &FeatureMatrix,
    gen: &FeatureMatrix,
    cfg: &ConvergenceConfig,
) -> Result<ConvergenceReport> {
    let metric = MetricSpec::new(cfg.metric);
    convergence_with(real, gen, cfg, &metric)
}

/// [`convergence_sample_size`] with any metric in place of `cfg.metric`.
pub fn convergence_with<M: Metric + ?Sized>(
    real: &FeatureMatrix,
    gen: &FeatureMatrix,
    cfg: &ConvergenceConfig,
    metric: &M,
) -> Result<ConvergenceReport> {
    let (grid, target_n, truncated) = evaluate_grid(real, gen, cfg, metric)?;
    let target_value = grid.last().expect("grid ends at target").mean;
    let points: Vec<ConvergencePoint> = grid
        .iter()
        .map(|p| {
            let rel = rel_error(p.mean, target_value);
            ConvergencePoint {
                n: p.n,
                mean: p.mean,
                variance: p.variance,
                rel_error: rel,
                within_margin: rel <= cfg.margin,
            }
        })
        .collect();
    Ok(ConvergenceReport {
        metric: metric.name(),
        config: cfg.clone(),
        converged_at: converged_at(&points),
        points,
        target_n,
        target_value,
        truncated,
        available_n: real.rows().min(gen.rows()),
    })
}

pub fn rate_curve(
    real: &FeatureMatrix,
    gen: &FeatureMatrix,
    cfg: &ConvergenceConfig,
) -> Result<RateCurve> {
    let metric = MetricSpec::new(cfg.metric);
    rate_curve_with(real, gen, cfg, &metric)
}

/// `(D̄(n) − D̄(target)) / (D̄(target) + ε)` at each grid size.
pub fn rate_curve_with<M: Metric + ?Sized>(
    real: &FeatureMatrix,
    gen: &FeatureMatrix,
    cfg: &ConvergenceConfig,
    metric: &M,
) -> Result<RateCurve> {
    let (grid, target_n, truncated) = evaluate_grid(real, gen, cfg, metric)?;
    let target_value = grid.last().expect("grid ends at target").mean;
    let points = grid
        .iter()
        .map(|p| RatePoint {
            n: p.n,
            mean: p.mean,
            rate: (p.mean - target_value) / (target_value + RATE_EPSILON),
        })
        .collect();
    Ok(RateCurve {
        metric: metric.name(),
        config: cfg.clone(),
        points,
        target_n,
        target_value,
        epsilon: RATE_EPSILON,
        repeats: cfg.repeats,
        truncated,
    })
}

impl ConvergenceReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,mean,variance,rel_error,within_margin\n");
        for p in &self.points {
            let _ = writeln!(
                s,
                "{},{},{},{},{}",
                p.n, p.mean, p.variance, p.rel_error, p.within_margin
            );
        }
        s
    }
}

impl RateCurve {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,mean,rate\n");
        for p in &self.points {
            let _ = writeln!(s, "{},{},{}", p.n, p.mean, p.rate);
        }
        s
    }
}
