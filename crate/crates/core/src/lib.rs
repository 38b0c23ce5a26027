//! Distribution distances between sets of video feature vectors.
//!
//! Every metric takes two [`FeatureMatrix`] values, a reference ("real") set
//! and a candidate ("generated") set with one row per clip, and returns a
//! [`MetricResult`]:
//!
//! ```
//! use vdmkit::{FeatureMatrix, MetricId, MetricSpec};
//!
//! let real = FeatureMatrix::from_rows(&[[0.0, 1.0], [1.0, 0.0], [0.5, 0.5]]).unwrap();
//! let gen = FeatureMatrix::from_rows(&[[1.0, 1.0], [2.0, 1.0], [1.5, 1.5]]).unwrap();
//! let fd = MetricSpec::new(MetricId::Fd).compute(&real, &gen).unwrap();
//! assert!(fd.value > 0.0);
//! ```
//!
//! Beyond the metrics themselves the crate has the tooling used to study
//! them: multivariate normality tests ([`normality`]), dimensionality
//! reduction ([`reduce`]), sample-efficiency protocols ([`protocols`]) and
//! agreement with human preference data ([`align`]).

pub mod align;
pub mod error;
pub mod features;
pub mod frechet;
pub mod gmm;
pub mod kernels;
pub mod linalg;
pub mod metrics;
pub mod normality;
pub mod npy;
pub mod protocols;
pub mod reduce;
pub mod rng;
pub mod transport;
pub mod two_sample;

pub use error::{Error, Result};
pub use features::{standardize, subsample, Extractor, FeatureMatrix, LabeledFeatures, Manifest};
pub use frechet::{estimate_moments, frechet_distance, fvd, FrechetResult, GaussianMoments};
pub use gmm::{fit_gmm, GmmModel};
pub use kernels::{Gamma, KernelFamily, KernelSpec};
pub use metrics::{Metric, MetricId, MetricResult, MetricSpec};
pub use transport::{discrete_ot, mw2_sq, TransportPlan};
pub use two_sample::{energy_distance, jedi_score, mmd2_unbiased};

/// The mdBook guide's code samples, compiled and run as doc-tests.
#[cfg(doctest)]
pub mod book {
    #[doc = include_str!("../../../book/src/quickstart.md")]
    pub struct Quickstart;
    #[doc = include_str!("../../../book/src/metrics.md")]
    pub struct Metrics;
    #[doc = include_str!("../../../book/src/normality.md")]
    pub struct Normality;
    #[doc = include_str!("../../../book/src/reduction.md")]
    pub struct Reduction;
    #[doc = include_str!("../../../book/src/protocols.md")]
    pub struct Protocols;
    #[doc = include_str!("../../../book/src/human-alignment.md")]
    pub struct HumanAlignment;
    #[doc = include_str!("../../../book/src/formats.md")]
    pub struct Formats;
}
