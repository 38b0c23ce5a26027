//! Distribution-free two-sample distances: unbiased MMD² and the energy
//! distance.
//!
//! Both reduce to sums of a pairwise function over index blocks. Blocks are
//! [`BLOCK`] rows on a side and are visited in row-major order; each block is
//! summed row-major and the block sums are then added sequentially in that same
//! order. Blocks may be evaluated in parallel, but the reduction is fixed, so
//! results are bitwise identical for any thread count.

use rayon::prelude::*;

use crate::error::{check_dims, invalid, Result};
use crate::features::FeatureMatrix;
use crate::kernels::{sq_dist, KernelSpec, ResolvedKernel};
use crate::metrics::{MetricDetail, MetricId, MetricResult};

/// Block edge length for pairwise accumulation.
pub const BLOCK: usize = 256;

/// JEDi reports MMD² multiplied by this factor.
pub const JEDI_SCALE: f64 = 100.0;

#[derive(Clone, Copy)]
pub(crate) enum Pairs {
    /// `i < j` within one set.
    Upper,
    /// All `(i, j)` across two sets.
    Full,
}

fn block_list(m: usize, n: usize, pairs: Pairs) -> Vec<(usize, usize)> {
    let bm = m.div_ceil(BLOCK);
    let bn = n.div_ceil(BLOCK);
    let mut out = Vec::new();
    for bi in 0..bm {
        let start = match pairs {
            Pairs::Upper => bi,
            Pairs::Full => 0,
        };
        for bj in start..bn {
            out.push((bi, bj));
        }
    }
    out
}

/// Sums `f(x_i, y_j)` over the requested pairs.
fn pair_sum<F>(x: &FeatureMatrix, y: &FeatureMatrix, pairs: Pairs, f: F) -> f64
where
    F: Fn(&[f64], &[f64]) -> f64 + Sync,
{
    let sums: Vec<f64> = block_list(x.rows(), y.rows(), pairs)
        .into_par_iter()
        .map(|(bi, bj)| {
            let i_end = ((bi + 1) * BLOCK).min(x.rows());
            let j_end = ((bj + 1) * BLOCK).min(y.rows());
            let mut acc = 0.0;
            for i in bi * BLOCK..i_end {
                let xi = x.row(i);
                let j0 = match pairs {
                    Pairs::Upper if bi == bj => i + 1,
                    _ => bj * BLOCK,
                };
                for j in j0..j_end {
                    acc += f(xi, y.row(j));
                }
            }
            acc
        })
        .collect();
    sums.into_iter().sum()
}

/// Sums `f(i, j, xᵢᵀyⱼ)` over the requested pairs, computing each block's
/// inner products with one matrix multiply.
pub(crate) fn gram_sum<F>(x: &FeatureMatrix, y: &FeatureMatrix, pairs: Pairs, f: F) -> f64
where
    F: Fn(usize, usize, f64) -> f64 + Sync,
{
    let d = x.cols();
    let sums: Vec<f64> = block_list(x.rows(), y.rows(), pairs)
        .into_par_iter()
        .map(|(bi, bj)| {
            let i0 = bi * BLOCK;
            let j0 = bj * BLOCK;
            let mb = (i0 + BLOCK).min(x.rows()) - i0;
            let nb = (j0 + BLOCK).min(y.rows()) - j0;
            let a = &x.as_slice()[i0 * d..(i0 + mb) * d];
            let b = &y.as_slice()[j0 * d..(j0 + nb) * d];
            let mut gram = vec![0.0; mb * nb];
            // SAFETY: `a` is mb×d row-major, `b` read as d×nb with strides
            // (1, d), `gram` is mb×nb row-major; all slices are sized to match.
            unsafe {
                matrixmultiply::dgemm(
                    mb,
                    d,
                    nb,
                    1.0,
                    a.as_ptr(),
                    d as isize,
                    1,
                    b.as_ptr(),
                    1,
                    d as isize,
                    0.0,
                    gram.as_mut_ptr(),
                    nb as isize,
                    1,
                );
            }
            let mut acc = 0.0;
            for r in 0..mb {
                let c0 = match pairs {
                    Pairs::Upper if bi == bj => r + 1,
                    _ => 0,
                };
                for c in c0..nb {
                    acc += f(i0 + r, j0 + c, gram[r * nb + c]);
                }
            }
            acc
        })
        .collect();
    sums.into_iter().sum()
}

fn kernel_sum(x: &FeatureMatrix, y: &FeatureMatrix, pairs: Pairs, k: &ResolvedKernel) -> f64 {
    if k.is_dot_product() {
        gram_sum(x, y, pairs, |_, _, g| k.from_dot(g))
    } else {
        pair_sum(x, y, pairs, |a, b| k.eval(a, b))
    }
}

/// Unbiased MMD² with an already-resolved kernel.
pub fn mmd2_unbiased_raw(x: &FeatureMatrix, y: &FeatureMatrix, k: &ResolvedKernel) -> Result<f64> {
    check_dims(x.cols(), y.cols())?;
    let (m, n) = (x.rows(), y.rows());
    if m < 2 || n < 2 {
        return Err(invalid(format!(
            "unbiased MMD needs at least 2 samples per set, got {m} and {n}"
        )));
    }
    let (mf, nf) = (m as f64, n as f64);
    let kxx = 2.0 * kernel_sum(x, x, Pairs::Upper, k);
    let kyy = 2.0 * kernel_sum(y, y, Pairs::Upper, k);
    let kxy = kernel_sum(x, y, Pairs::Full, k);
    Ok(kxx / (mf * (mf - 1.0)) + kyy / (nf * (nf - 1.0)) - 2.0 * kxy / (mf * nf))
}

/// Unbiased estimate of MMD² between the distributions behind `x` and `y`.
/// The estimate can be negative and is reported as is.
pub fn mmd2_unbiased(x: &FeatureMatrix, y: &FeatureMatrix, spec: &KernelSpec) -> Result<MetricResult> {
    let start = std::time::Instant::now();
    check_dims(x.cols(), y.cols())?;
    let kernel = spec.resolve(x.cols())?;
    let value = mmd2_unbiased_raw(x, y, &kernel)?;
    let metric = match kernel.family {
        crate::kernels::KernelFamily::Linear => MetricId::MmdLinear,
        crate::kernels::KernelFamily::Polynomial => MetricId::MmdPoly,
        crate::kernels::KernelFamily::Rbf => MetricId::MmdRbf,
        crate::kernels::KernelFamily::Laplacian => MetricId::MmdLap,
    };
    Ok(MetricResult {
        metric,
        value,
        n_real: x.rows(),
        n_gen: y.rows(),
        seed: None,
        elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
        detail: MetricDetail::Kernel {
            kernel,
            raw_mmd2: None,
            scale: None,
            clamped: false,
        },
    })
}

/// Energy distance with full double sums (diagonals included):
///
/// ```text
/// E = 2/(mn) ΣΣ‖xᵢ−yⱼ‖ − 1/m² ΣΣ‖xᵢ−xⱼ‖ − 1/n² ΣΣ‖yᵢ−yⱼ‖
/// ```
pub fn energy_distance(x: &FeatureMatrix, y: &FeatureMatrix) -> Result<MetricResult> {
    let start = std::time::Instant::now();
    check_dims(x.cols(), y.cols())?;
    let (mf, nf) = (x.rows() as f64, y.rows() as f64);
    let dist = |a: &[f64], b: &[f64]| sq_dist(a, b).sqrt();
    let cross = pair_sum(x, y, Pairs::Full, dist);
    let within_x = 2.0 * pair_sum(x, x, Pairs::Upper, dist);
    let within_y = 2.0 * pair_sum(y, y, Pairs::Upper, dist);
    let value = 2.0 * cross / (mf * nf) - within_x / (mf * mf) - within_y / (nf * nf);
    Ok(MetricResult {
        metric: MetricId::Energy,
        value,
        n_real: x.rows(),
        n_gen: y.rows(),
        seed: None,
        elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
        detail: MetricDetail::Plain {},
    })
}

/// JEDi: 100 × unbiased polynomial-kernel MMD² (degree 2, γ = 1, coef = 0).
pub fn jedi_score(real: &FeatureMatrix, gen: &FeatureMatrix) -> Result<MetricResult> {
    crate::metrics::MetricSpec::new(MetricId::Jedi).compute(real, gen)
}
