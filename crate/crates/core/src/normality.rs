//! Multivariate normality tests: Mardia skewness and kurtosis, and
//! Henze-Zirkler.
//!
//! All three work on the whitened sample `zᵢ = S^{-1/2}(xᵢ − x̄)` where `S`
//! is the `1/n` covariance, so the statistics are affine invariant.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, LogNormal, Normal};

use crate::error::{invalid, Error, Result};
use crate::features::FeatureMatrix;
use crate::frechet::estimate_moments;
use crate::linalg::spd_inverse;
use crate::two_sample::{gram_sum, Pairs};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalityTest {
    MardiaSkew,
    MardiaKurt,
    HenzeZirkler,
}

impl NormalityTest {
    pub const ALL: [NormalityTest; 3] = [
        NormalityTest::MardiaSkew,
        NormalityTest::MardiaKurt,
        NormalityTest::HenzeZirkler,
    ];

    /// Command-line spelling.
    pub fn cli_name(self) -> &'static str {
        match self {
            NormalityTest::MardiaSkew => "mardia-skew",
            NormalityTest::MardiaKurt => "mardia-kurt",
            NormalityTest::HenzeZirkler => "hz",
        }
    }
}

impl fmt::Display for NormalityTest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.cli_name())
    }
}

impl FromStr for NormalityTest {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "mardia-skew" | "mardia_skew" => Ok(NormalityTest::MardiaSkew),
            "mardia-kurt" | "mardia_kurt" => Ok(NormalityTest::MardiaKurt),
            "hz" | "henze-zirkler" | "henze_zirkler" => Ok(NormalityTest::HenzeZirkler),
            _ => Err(format!(
                "unknown normality test '{s}' (expected mardia-skew, mardia-kurt or hz)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormalityTestResult {
    pub test_id: NormalityTest,
    pub statistic: f64,
    pub p_value: f64,
    pub reject_at_005: bool,
    pub n: usize,
    pub d: usize,
    /// Diagonal ridge added to the covariance before inversion.
    #[serde(skip_serializing_if = "is_zero")]
    pub ridge: f64,
}

fn is_zero(v: &f64) -> bool {
    *v == 0.0
}

impl NormalityTestResult {
    fn new(test_id: NormalityTest, statistic: f64, p_value: f64, w: &Whitened) -> Result<Self> {
        if !statistic.is_finite() || p_value.is_nan() {
            return Err(Error::Degenerate(format!(
                "{test_id} statistic is not finite; the data may be degenerate"
            )));
        }
        let p_value = p_value.clamp(0.0, 1.0);
        Ok(Self {
            test_id,
            statistic,
            p_value,
            reject_at_005: p_value < 0.05,
            n: w.z.rows(),
            d: w.z.cols(),
            ridge: w.ridge,
        })
    }
}

/// Centered, whitened sample.
struct Whitened {
    z: FeatureMatrix,
    /// `‖zᵢ‖²`, the Mahalanobis distances to the mean.
    norms: Vec<f64>,
    ridge: f64,
}

fn whiten(x: &FeatureMatrix, allow_ridge: bool) -> Result<Whitened> {
    let (n, d) = x.shape();
    if n <= d {
        log::warn!("{n} samples in {d} dimensions: covariance is singular, expect a ridge");
    }
    let m = estimate_moments(x)?;
    let inv = spd_inverse(&m.cov, allow_ridge)?;
    if inv.ridge > 0.0 {
        log::warn!(
            "covariance condition number {:e}; added ridge {:e}",
            inv.condition,
            inv.ridge
        );
    }
    let mut centered = x.to_dmatrix();
    for mut row in centered.row_iter_mut() {
        row -= m.mean.transpose();
    }
    let z = FeatureMatrix::from_dmatrix(&(centered * &inv.inv_sqrt))?;
    let norms = z.iter_rows().map(|r| r.iter().map(|v| v * v).sum()).collect();
    Ok(Whitened {
        z,
        norms,
        ridge: inv.ridge,
    })
}

/// `b₁ = (1/n²) Σᵢⱼ gᵢⱼ³` with `n·b₁/6 ~ χ²(d(d+1)(d+2)/6)`.
pub fn mardia_skewness(x: &FeatureMatrix) -> Result<NormalityTestResult> {
    skewness(&whiten(x, true)?)
}

/// `b₂ = (1/n) Σᵢ gᵢᵢ²`, compared with `d(d+2)` by a two-sided z-test.
pub fn mardia_kurtosis(x: &FeatureMatrix) -> Result<NormalityTestResult> {
    kurtosis(&whiten(x, true)?)
}

/// The Henze-Zirkler statistic with the usual smoothing parameter and a
/// lognormal approximation to its null distribution.
pub fn henze_zirkler(x: &FeatureMatrix) -> Result<NormalityTestResult> {
    hz(&whiten(x, true)?)
}

/// Runs one test. With `allow_ridge` unset, an ill-conditioned covariance is
/// an error instead of being regularized.
pub fn normality_test(
    x: &FeatureMatrix,
    test: NormalityTest,
    allow_ridge: bool,
) -> Result<NormalityTestResult> {
    let w = whiten(x, allow_ridge)?;
    run(&w, test)
}

/// Runs several tests, sharing the whitening step.
pub fn normality_tests(
    x: &FeatureMatrix,
    tests: &[NormalityTest],
    allow_ridge: bool,
) -> Result<Vec<NormalityTestResult>> {
    if tests.is_empty() {
        return Err(invalid("no normality tests requested"));
    }
    let w = whiten(x, allow_ridge)?;
    tests.iter().map(|&t| run(&w, t)).collect()
}

fn run(w: &Whitened, test: NormalityTest) -> Result<NormalityTestResult> {
    match test {
        NormalityTest::MardiaSkew => skewness(w),
        NormalityTest::MardiaKurt => kurtosis(w),
        NormalityTest::HenzeZirkler => hz(w),
    }
}

/// `b₁` itself.
pub fn mardia_b1(x: &FeatureMatrix) -> Result<f64> {
    Ok(b1(&whiten(x, true)?))
}

/// `b₂` itself.
pub fn mardia_b2(x: &FeatureMatrix) -> Result<f64> {
    Ok(b2(&whiten(x, true)?))
}

fn b1(w: &Whitened) -> f64 {
    let n = w.z.rows() as f64;
    let diag: f64 = w.norms.iter().map(|g| g * g * g).sum();
    let off = gram_sum(&w.z, &w.z, Pairs::Upper, |_, _, g| g * g * g);
    (diag + 2.0 * off) / (n * n)
}

fn b2(w: &Whitened) -> f64 {
    w.norms.iter().map(|g| g * g).sum::<f64>() / w.z.rows() as f64
}

fn skewness(w: &Whitened) -> Result<NormalityTestResult> {
    let (n, d) = (w.z.rows() as f64, w.z.cols() as f64);
    let stat = n * b1(w) / 6.0;
    let df = d * (d + 1.0) * (d + 2.0) / 6.0;
    let chi = ChiSquared::new(df).map_err(|e| invalid(e.to_string()))?;
    NormalityTestResult::new(NormalityTest::MardiaSkew, stat, chi.sf(stat), w)
}

fn kurtosis(w: &Whitened) -> Result<NormalityTestResult> {
    let (n, d) = (w.z.rows() as f64, w.z.cols() as f64);
    let z = (b2(w) - d * (d + 2.0)) / (8.0 * d * (d + 2.0) / n).sqrt();
    let normal = Normal::standard();
    let p = 2.0 * normal.sf(z.abs());
    NormalityTestResult::new(NormalityTest::MardiaKurt, z, p, w)
}

/// Smoothing parameter `β = ((2d+1) n / 4)^{1/(d+4)} / √2`.
pub fn hz_beta(n: usize, d: usize) -> f64 {
    let (n, d) = (n as f64, d as f64);
    ((2.0 * d + 1.0) * n / 4.0).powf(1.0 / (d + 4.0)) / 2f64.sqrt()
}

fn hz(w: &Whitened) -> Result<NormalityTestResult> {
    let (n_us, d_us) = w.z.shape();
    let (n, d) = (n_us as f64, d_us as f64);
    let beta = hz_beta(n_us, d_us);
    let b2 = beta * beta;
    let norms = &w.norms;
    let pair = gram_sum(&w.z, &w.z, Pairs::Upper, |i, j, g| {
        (-0.5 * b2 * (norms[i] + norms[j] - 2.0 * g)).exp()
    });
    let within = (2.0 * pair + n) / n;
    let single: f64 = norms
        .iter()
        .map(|&di| (-b2 / (2.0 * (1.0 + b2)) * di).exp())
        .sum();
    let stat = within - 2.0 * (1.0 + b2).powf(-d / 2.0) * single + n * (1.0 + 2.0 * b2).powf(-d / 2.0);

    let a = 1.0 + 2.0 * b2;
    let b4 = b2 * b2;
    let b8 = b4 * b4;
    let mu = 1.0 - a.powf(-d / 2.0) * (1.0 + d * b2 / a + d * (d + 2.0) * b4 / (2.0 * a * a));
    let wb = (1.0 + b2) * (1.0 + 3.0 * b2);
    let var = 2.0 * (1.0 + 4.0 * b2).powf(-d / 2.0)
        + 2.0 * a.powf(-d) * (1.0 + 2.0 * d * b4 / (a * a) + 3.0 * d * (d + 2.0) * b8 / (4.0 * a.powi(4)))
        - 4.0 * wb.powf(-d / 2.0) * (1.0 + 3.0 * d * b4 / (2.0 * wb) + d * (d + 2.0) * b8 / (2.0 * wb * wb));
    // ln_1p keeps the shape positive when var / mu² is below f64 epsilon,
    // which happens at large d.
    let rel = var / (mu * mu);
    if !(rel > 0.0) {
        return Err(invalid(format!("Henze-Zirkler null variance {var:e} is not positive at d = {d_us}")));
    }
    let location = mu.ln() - 0.5 * rel.ln_1p();
    let shape = rel.ln_1p().sqrt();
    let p = if stat <= 0.0 {
        1.0
    } else {
        LogNormal::new(location, shape)
            .map_err(|e| invalid(e.to_string()))?
            .sf(stat)
    };
    NormalityTestResult::new(NormalityTest::HenzeZirkler, stat, p, w)
}
