//! Synthetic toy distributions.
//!
//! Both toys are 100-dimensional: the first 50 coordinates are drawn from the
//! base distribution and the last 50 are their running sum, so column 51
//! equals column 1 and column 100 is the sum of columns 1 to 50.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Result};
use crate::features::{FeatureMatrix, LabeledFeatures};
use crate::rng::stream;

/// Dimension of the base block.
pub const BASE_DIM: usize = 50;
/// Total toy dimension.
pub const TOY_DIM: usize = 2 * BASE_DIM;
/// Mixture components in [`synth_gmm`].
pub const GMM_COMPONENTS: usize = 5;
/// Seed of the fixed mixture layout. Not a data seed: it never changes.
pub const GMM_LAYOUT_SEED: u64 = 7;

fn with_cumsum(base: &[f64], out: &mut Vec<f64>) {
    out.extend_from_slice(base);
    let mut acc = 0.0;
    for v in base {
        acc += v;
        out.push(acc);
    }
}

/// `n` rows of the multivariate-Gaussian toy.
pub fn synth_mg(n: usize, seed: u64) -> Result<FeatureMatrix> {
    if n == 0 {
        return Err(invalid("synth_mg needs n >= 1"));
    }
    let mut rng = stream(seed);
    let mut data = Vec::with_capacity(n * TOY_DIM);
    let mut base = [0.0; BASE_DIM];
    for _ in 0..n {
        base.iter_mut().for_each(|v| *v = rng.sample(StandardNormal));
        with_cumsum(&base, &mut data);
    }
    FeatureMatrix::new(n, TOY_DIM, data)
}

/// Component means of the mixture toy: each coordinate is one of −1, 0, 1,
/// chosen once from [`GMM_LAYOUT_SEED`].
pub fn gmm_layout() -> Vec<[f64; BASE_DIM]> {
    let mut rng = stream(GMM_LAYOUT_SEED);
    (0..GMM_COMPONENTS)
        .map(|_| {
            let mut m = [0.0; BASE_DIM];
            m.iter_mut()
                .for_each(|v| *v = rng.random_range(0..3u64) as f64 - 1.0);
            m
        })
        .collect()
}

/// `n` rows of the mixture toy with their component labels: equal weights,
/// unit covariances, means from [`gmm_layout`].
pub fn synth_gmm_labeled(n: usize, seed: u64) -> Result<LabeledFeatures> {
    if n < GMM_COMPONENTS {
        return Err(invalid(format!("synth_gmm needs n >= {GMM_COMPONENTS}")));
    }
    let means = gmm_layout();
    let mut rng = stream(seed);
    let mut data = Vec::with_capacity(n * TOY_DIM);
    let mut labels = Vec::with_capacity(n);
    let mut base = [0.0; BASE_DIM];
    for _ in 0..n {
        let c = rng.random_range(0..GMM_COMPONENTS as u64) as usize;
        for (v, mu) in base.iter_mut().zip(&means[c]) {
            *v = mu + rng.sample::<f64, _>(StandardNormal);
        }
        with_cumsum(&base, &mut data);
        labels.push(c as i64);
    }
    LabeledFeatures::new(FeatureMatrix::new(n, TOY_DIM, data)?, labels)
}

/// `n` rows of the mixture toy.
pub fn synth_gmm(n: usize, seed: u64) -> Result<FeatureMatrix> {
    Ok(synth_gmm_labeled(n, seed)?.matrix)
}
