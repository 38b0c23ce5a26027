use serde::{Deserialize, Serialize};

use crate::error::{check_dims, invalid, Error, Result};
use crate::features::{subsample, FeatureMatrix};
use crate::metrics::{Metric, MetricSpec};

/// Blur standard-deviation range at distortion level `λ`:
/// `[0.1 − 0.01λ, 0.75 + 0.8λ]`.
pub fn blur_sigma_range(level: f64) -> Result<(f64, f64)> {
    if !(level >= 0.0) {
        return Err(invalid(format!("distortion level must be >= 0, got {level}")));
    }
    let lo = 0.1 - 0.01 * level;
    let hi = 0.75 + 0.8 * level;
    if !(lo > 0.0) {
        return Err(invalid(format!(
            "distortion level {level} gives a non-positive lower sigma {lo}"
        )));
    }
    Ok((lo, hi))
}

/// Named blur strengths. These ranges do not follow [`blur_sigma_range`]
/// for any single `λ`; both parameterizations are offered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlurPreset {
    Low,
    Medium,
    High,
}

impl BlurPreset {
    pub fn sigma_range(self) -> (f64, f64) {
        match self {
            BlurPreset::Low => (0.05, 0.75),
            BlurPreset::Medium => (0.1, 1.5),
            BlurPreset::High => (0.01, 3.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub metric: String,
    pub levels: Vec<f64>,
    pub values: Vec<f64>,
}

/// Metric value of `real` against each element of `series`. With `n_sub`
/// set, every set is first subsampled with the same seed.
pub fn sweep(
    real: &FeatureMatrix,
    series: &[FeatureMatrix],
    levels: Option<&[f64]>,
    metric: &MetricSpec,
    seed: u64,
    n_sub: Option<usize>,
) -> Result<SweepResult> {
    sweep_with(real, series, levels, metric, seed, n_sub)
}

pub fn sweep_with<M: Metric + ?Sized>(
    real: &FeatureMatrix,
    series: &[FeatureMatrix],
    levels: Option<&[f64]>,
    metric: &M,
    seed: u64,
    n_sub: Option<usize>,
) -> Result<SweepResult> {
    if series.is_empty() {
        return Err(invalid("sweep needs at least one generated set"));
    }
    let levels: Vec<f64> = match levels {
        Some(l) => {
            check_dims(series.len(), l.len())?;
            l.to_vec()
        }
        None => (0..series.len()).map(|i| i as f64).collect(),
    };
    let prep = |m: &FeatureMatrix| -> Result<FeatureMatrix> {
        match n_sub {
            Some(k) => subsample(m, k.min(m.rows()), seed),
            None => Ok(m.clone()),
        }
    };
    let real = prep(real)?;
    let values = series
        .iter()
        .map(|g| {
            check_dims(real.cols(), g.cols())?;
            metric.evaluate(&real, &prep(g)?)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult {
        metric: metric.name(),
        levels,
        values,
    })
}

/// 1-based ranks, ties sharing their average rank.
pub fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut out = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            out[k] = avg;
        }
        i = j + 1;
    }
    out
}

/// Spearman's rank correlation: the Pearson correlation of the ranks.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64> {
    check_dims(xs.len(), ys.len())?;
    if xs.len() < 2 {
        return Err(invalid("rank correlation needs at least two pairs"));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(invalid("rank correlation inputs must be finite"));
    }
    let (rx, ry) = (ranks(xs), ranks(ys));
    let n = xs.len() as f64;
    let mean = (n + 1.0) / 2.0;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        let (da, db) = (a - mean, b - mean);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Degenerate(
            "rank correlation is undefined for a constant input".into(),
        ));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}
