//! Metric identifiers, the shared result record, and dispatch from an
//! identifier to the implementing function.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{check_dims, Result};
use crate::features::FeatureMatrix;
use crate::frechet::{fvd_with, MomentOptions};
use crate::kernels::{Gamma, KernelSpec, ResolvedKernel};
use crate::two_sample::{energy_distance, mmd2_unbiased_raw, JEDI_SCALE};

/// Every metric the toolkit can compute between two feature sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MetricId {
    #[serde(rename = "fd")]
    Fd,
    #[serde(rename = "energy")]
    Energy,
    #[serde(rename = "mmd-linear")]
    MmdLinear,
    #[serde(rename = "mmd-poly")]
    MmdPoly,
    #[serde(rename = "mmd-rbf")]
    MmdRbf,
    #[serde(rename = "mmd-lap")]
    MmdLap,
    #[serde(rename = "jedi")]
    Jedi,
    #[serde(rename = "mw2")]
    Mw2,
}

impl MetricId {
    pub const ALL: [MetricId; 8] = [
        MetricId::Fd,
        MetricId::Energy,
        MetricId::MmdLinear,
        MetricId::MmdPoly,
        MetricId::MmdRbf,
        MetricId::MmdLap,
        MetricId::Jedi,
        MetricId::Mw2,
    ];

    /// Metrics run by the sample-efficiency protocols unless asked otherwise.
    /// MW₂ is left out: its mixture fits converge far slower than the rest.
    pub const PROTOCOL_DEFAULT: [MetricId; 6] = [
        MetricId::Fd,
        MetricId::Energy,
        MetricId::MmdPoly,
        MetricId::MmdRbf,
        MetricId::MmdLap,
        MetricId::Jedi,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MetricId::Fd => "fd",
            MetricId::Energy => "energy",
            MetricId::MmdLinear => "mmd-linear",
            MetricId::MmdPoly => "mmd-poly",
            MetricId::MmdRbf => "mmd-rbf",
            MetricId::MmdLap => "mmd-lap",
            MetricId::Jedi => "jedi",
            MetricId::Mw2 => "mw2",
        }
    }

    /// Default kernel for the MMD family members.
    pub fn default_kernel(self) -> Option<KernelSpec> {
        match self {
            MetricId::MmdLinear => Some(KernelSpec::linear()),
            MetricId::MmdPoly | MetricId::Jedi => Some(KernelSpec::jedi()),
            MetricId::MmdRbf => Some(KernelSpec::rbf(Gamma::Auto)),
            MetricId::MmdLap => Some(KernelSpec::laplacian(Gamma::Auto)),
            _ => None,
        }
    }
}

impl fmt::Display for MetricId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MetricId {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        MetricId::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| {
                let names: Vec<_> = MetricId::ALL.iter().map(|m| m.as_str()).collect();
                format!("unknown metric '{s}' (expected one of {})", names.join(", "))
            })
    }
}

/// Metric-specific fields carried alongside the value.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum MetricDetail {
    Frechet {
        mean_term: f64,
        cov_term: f64,
        clamped: bool,
    },
    Kernel {
        kernel: ResolvedKernel,
        /// Unscaled MMD² estimate when a scale factor was applied.
        #[serde(skip_serializing_if = "Option::is_none")]
        raw_mmd2: Option<f64>,
        #[serde(skip_serializing_if = "Option::is_none")]
        scale: Option<f64>,
        clamped: bool,
    },
    Mixture {
        components_real: usize,
        components_gen: usize,
    },
    Plain {},
}

/// The common result record for every two-sample metric.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricResult {
    pub metric: MetricId,
    pub value: f64,
    pub n_real: usize,
    pub n_gen: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub elapsed_ms: f64,
    #[serde(flatten)]
    pub detail: MetricDetail,
}

/// Anything that maps two feature sets to a scalar distance. Protocols are
/// generic over this so they can run stubs as well as real metrics.
pub trait Metric: Sync {
    fn evaluate(&self, real: &FeatureMatrix, gen: &FeatureMatrix) -> Result<f64>;

    fn name(&self) -> String {
        "custom".into()
    }
}

impl<F> Metric for F
where
    F: Fn(&FeatureMatrix, &FeatureMatrix) -> Result<f64> + Sync,
{
    fn evaluate(&self, real: &FeatureMatrix, gen: &FeatureMatrix) -> Result<f64> {
        self(real, gen)
    }
}

/// A metric identifier plus every parameter it may need.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSpec {
    pub id: MetricId,
    /// Overrides the identifier's default kernel (MMD family only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelSpec>,
    /// Applied to MMD values; JEDi defaults to 100.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
    /// Clamps negative MMD estimates to zero. Off by default.
    #[serde(default)]
    pub clamp: bool,
    #[serde(default)]
    pub moments: MomentOptions,
    /// Mixture components for MW₂.
    #[serde(default = "default_clusters")]
    pub clusters: usize,
    /// Seed for MW₂ mixture fitting.
    #[serde(default)]
    pub seed: u64,
}

fn default_clusters() -> usize {
    crate::gmm::DEFAULT_COMPONENTS
}

impl MetricSpec {
    pub fn new(id: MetricId) -> Self {
        Self {
            id,
            kernel: None,
            scale: None,
            clamp: false,
            moments: MomentOptions::default(),
            clusters: default_clusters(),
            seed: 0,
        }
    }

    pub fn kernel(&self) -> Option<KernelSpec> {
        self.kernel.or_else(|| self.id.default_kernel())
    }

    pub fn effective_scale(&self) -> Option<f64> {
        match (self.scale, self.id) {
            (Some(s), _) => Some(s),
            (None, MetricId::Jedi) => Some(JEDI_SCALE),
            _ => None,
        }
    }

    /// Computes the metric and wraps it in a [`MetricResult`].
    pub fn compute(&self, real: &FeatureMatrix, gen: &FeatureMatrix) -> Result<MetricResult> {
        check_dims(real.cols(), gen.cols())?;
        let start = Instant::now();
        let (value, detail, seed) = match self.id {
            MetricId::Fd => {
                let r = fvd_with(real, gen, self.moments)?;
                (
                    r.value,
                    MetricDetail::Frechet {
                        mean_term: r.mean_term,
                        cov_term: r.cov_term,
                        clamped: r.clamped,
                    },
                    None,
                )
            }
            MetricId::Energy => (energy_distance(real, gen)?.value, MetricDetail::Plain {}, None),
            MetricId::Mw2 => {
                let p = crate::gmm::fit_gmm(real, self.clusters, self.seed)?;
                let q = crate::gmm::fit_gmm(gen, self.clusters, crate::rng::derive_seed(self.seed, &[1]))?;
                let v = crate::transport::mw2_value(&p, &q)?;
                (
                    v,
                    MetricDetail::Mixture {
                        components_real: p.components(),
                        components_gen: q.components(),
                    },
                    Some(self.seed),
                )
            }
            _ => {
                let spec = self.kernel().expect("MMD family has a kernel");
                let kernel = spec.resolve(real.cols())?;
                let raw = mmd2_unbiased_raw(real, gen, &kernel)?;
                let scale = self.effective_scale();
                let mut v = raw * scale.unwrap_or(1.0);
                let clamped = self.clamp && v < 0.0;
                if clamped {
                    v = 0.0;
                }
                (
                    v,
                    MetricDetail::Kernel {
                        kernel,
                        raw_mmd2: scale.map(|_| raw),
                        scale,
                        clamped,
                    },
                    None,
                )
            }
        };
        Ok(MetricResult {
            metric: self.id,
            value,
            n_real: real.rows(),
            n_gen: gen.rows(),
            seed,
            elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
            detail,
        })
    }
}

impl Metric for MetricSpec {
    fn evaluate(&self, real: &FeatureMatrix, gen: &FeatureMatrix) -> Result<f64> {
        self.compute(real, gen).map(|r| r.value)
    }

    fn name(&self) -> String {
        self.id.as_str().into()
    }
}
