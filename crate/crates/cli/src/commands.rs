//! Subcommand arguments and implementations. Each command returns the
//! `result` part of the output document.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use vdmkit::frechet::{CovEstimator, MomentOptions};
use vdmkit::gmm::{fit_gmm_with, GmmOptions, DEFAULT_COMPONENTS, VARIANCE_FLOOR};
use vdmkit::normality::{normality_tests, NormalityTest};
use vdmkit::protocols::{
    convergence_with, rate_curve_with, spearman, synth_gmm_labeled, synth_mg, BlurPreset,
    ConvergenceConfig, Preprocess, RATE_EPSILON,
};
use vdmkit::reduce::{
    ae_train, lda_fit_with, load_model, pca_fit, save_model, AeArchitecture, AePlan,
    AeTrainConfig, ReducerModel,
};
use vdmkit::rng::derive_seed;
use vdmkit::{
    align::{align_report, PairwiseMatrix},
    npy, subsample, Extractor, FeatureMatrix, Gamma, KernelFamily, LabeledFeatures, Manifest,
    MetricId, MetricSpec,
};

use crate::io::{load_features, read_text, required, write_features, write_text, PrecisionArg};
use crate::plot::{emit_plot, Chart};
use crate::UsageError;

fn parse_metric(s: &str) -> Result<MetricId, String> {
    s.parse()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Estimator {
    /// Divide by n.
    #[default]
    Population,
    /// Divide by n - 1.
    Sample,
}

/// Parameters shared by every metric-computing command.
#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct MetricArgs {
    /// Kernel gamma. Unset means 1/d for rbf and laplacian, 1 for polynomial.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Polynomial kernel degree (default 2).
    #[arg(long)]
    pub degree: Option<u32>,
    /// Polynomial kernel offset (default 0).
    #[arg(long)]
    pub coef: Option<f64>,
    /// Mixture components for mw2.
    #[arg(long, default_value_t = DEFAULT_COMPONENTS)]
    pub clusters: usize,
    /// Factor applied to MMD values (jedi defaults to 100).
    #[arg(long)]
    pub scale: Option<f64>,
    /// Report negative MMD estimates as zero.
    #[arg(long)]
    pub clamp: bool,
    /// Covariance normalization for fd.
    #[arg(long, value_enum, default_value_t)]
    pub estimator: Estimator,
    /// Diagonal ridge added to fd covariances.
    #[arg(long)]
    pub ridge: Option<f64>,
}

impl MetricArgs {
    pub fn spec(&self, id: MetricId, seed: u64) -> anyhow::Result<MetricSpec> {
        let mut spec = MetricSpec::new(id);
        let overrides = self.gamma.is_some() || self.degree.is_some() || self.coef.is_some();
        match id.default_kernel() {
            Some(mut k) if overrides => {
                if let Some(g) = self.gamma {
                    k.gamma = Gamma::Value(g);
                }
                if let Some(d) = self.degree {
                    if k.family != KernelFamily::Polynomial {
                        return Err(UsageError(format!("--degree does not apply to {id}")).into());
                    }
                    k.degree = d;
                }
                if let Some(c) = self.coef {
                    if k.family != KernelFamily::Polynomial {
                        return Err(UsageError(format!("--coef does not apply to {id}")).into());
                    }
                    k.coef = c;
                }
                spec.kernel = Some(k);
            }
            None if overrides => {
                return Err(UsageError(format!("kernel parameters do not apply to {id}")).into());
            }
            _ => {}
        }
        spec.scale = self.scale;
        spec.clamp = self.clamp;
        spec.moments = MomentOptions {
            estimator: match self.estimator {
                Estimator::Population => CovEstimator::Population,
                Estimator::Sample => CovEstimator::Sample,
            },
            ridge: self.ridge,
        };
        spec.clusters = self.clusters;
        spec.seed = seed;
        Ok(spec)
    }
}

// dist

#[derive(Args, Debug, Serialize, Deserialize)]
pub struct DistArgs {
    /// fd, energy, mmd-linear, mmd-poly, mmd-rbf, mmd-lap, jedi or mw2.
    #[arg(long, default_value = "fd", value_parser = parse_metric)]
    pub metric: MetricId,
    /// Reference features (.npy, or a .json manifest).
    #[arg(long)]
    pub real: Option<PathBuf>,
    /// Candidate features (.npy, or a .json manifest).
    #[arg(long)]
    pub gen: Option<PathBuf>,
    /// Subsample both sets to this many rows first.
    #[arg(long)]
    pub n_sub: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    #[serde(flatten)]
    pub params: MetricArgs,
}

pub fn dist(a: &DistArgs) -> anyhow::Result<Value> {
    let mut real = load_features(required(&a.real, "real")?)?;
    let mut gen = load_features(required(&a.gen, "gen")?)?;
    if let Some(k) = a.n_sub {
        real = subsample(&real, k.min(real.rows()), derive_seed(a.seed, &[0]))?;
        gen = subsample(&gen, k.min(gen.rows()), derive_seed(a.seed, &[1]))?;
    }
    let spec = a.params.spec(a.metric, a.seed)?;
    Ok(serde_json::to_value(spec.compute(&real, &gen)?)?)
}

// converge / rate-curve

#[derive(Args, Debug, Serialize, Deserialize)]
pub struct ProtocolArgs {
    #[arg(long, default_value = "fd", value_parser = parse_metric)]
    pub metric: MetricId,
    #[arg(long)]
    pub real: Option<PathBuf>,
    #[arg(long)]
    pub gen: Option<PathBuf>,
    /// Grid step between sample sizes.
    #[arg(long, default_value_t = 100)]
    pub interval: usize,
    /// Repeats per grid point (default 5 for converge, 10 for rate-curve).
    #[arg(long)]
    pub repeats: Option<usize>,
    /// Relative margin around the target value, in (0, 1].
    #[arg(long, default_value_t = 0.05)]
    pub margin: f64,
    /// Largest sample size; reduced to the available rows if needed.
    #[arg(long, default_value_t = 5000)]
    pub target_n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Z-score every column with statistics of the real set.
    #[arg(long)]
    pub standardize: bool,
    /// Project onto this many principal components of the real set.
    #[arg(long)]
    pub pca: Option<usize>,
    /// Also write the report as CSV here.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Also draw the report as SVG here.
    #[arg(long)]
    pub plot: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub params: MetricArgs,
}

impl ProtocolArgs {
    fn setup(
        &self,
        default_repeats: usize,
    ) -> anyhow::Result<(FeatureMatrix, FeatureMatrix, ConvergenceConfig, MetricSpec)> {
        let cfg = ConvergenceConfig {
            interval: self.interval,
            repeats: self.repeats.unwrap_or(default_repeats),
            margin: self.margin,
            target_n: self.target_n,
            metric: self.metric,
            master_seed: self.seed,
            preprocess: Preprocess {
                standardize: self.standardize,
                pca: self.pca,
            },
        };
        cfg.validate().map_err(|e| UsageError(e.to_string()))?;
        let real = load_features(required(&self.real, "real")?)?;
        let gen = load_features(required(&self.gen, "gen")?)?;
        let spec = self.params.spec(self.metric, self.seed)?;
        Ok((real, gen, cfg, spec))
    }

    fn outputs(&self, csv: impl FnOnce() -> String, chart: Chart) -> anyhow::Result<()> {
        if let Some(p) = &self.csv {
            write_text(p, &csv())?;
        }
        if let Some(p) = &self.plot {
            emit_plot(&chart, p)?;
        }
        Ok(())
    }
}

pub fn converge(a: &ProtocolArgs) -> anyhow::Result<Value> {
    let (real, gen, cfg, spec) = a.setup(ConvergenceConfig::default().repeats)?;
    let report = convergence_with(&real, &gen, &cfg, &spec)?;
    a.outputs(|| report.to_csv(), Chart::from(&report))?;
    Ok(serde_json::to_value(&report)?)
}

pub fn rate_curve(a: &ProtocolArgs) -> anyhow::Result<Value> {
    let (real, gen, cfg, spec) = a.setup(ConvergenceConfig::rate_default(a.metric).repeats)?;
    let curve = rate_curve_with(&real, &gen, &cfg, &spec)?;
    a.outputs(|| curve.to_csv(), Chart::from(&curve))?;
    Ok(serde_json::to_value(&curve)?)
}

// sweep

#[derive(Args, Debug, Serialize, Deserialize)]
pub struct SweepArgs {
    #[arg(long, default_value = "fd", value_parser = parse_metric)]
    pub metric: MetricId,
    #[arg(long)]
    pub real: Option<PathBuf>,
    /// Perturbed sets, in order of increasing strength. Repeatable.
    #[arg(long, num_args = 1..)]
    #[serde(default)]
    pub gen: Vec<PathBuf>,
    /// Perturbation level of each set (default 0, 1, 2, ...).
    #[arg(long, value_delimiter = ',')]
    #[serde(default)]
    pub levels: Vec<f64>,
    #[arg(long)]
    pub n_sub: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub plot: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub params: MetricArgs,
}

pub fn sweep(a: &SweepArgs) -> anyhow::Result<Value> {
    if a.gen.is_empty() {
        return Err(UsageError("sweep needs at least one --gen".into()).into());
    }
    let real = load_features(required(&a.real, "real")?)?;
    let series = a
        .gen
        .iter()
        .map(|p| load_features(p))
        .collect::<anyhow::Result<Vec<_>>>()?;
    let levels = (!a.levels.is_empty()).then_some(a.levels.as_slice());
    let spec = a.params.spec(a.metric, a.seed)?;
    let r = vdmkit::protocols::sweep(&real, &series, levels, &spec, a.seed, a.n_sub)?;
    if let Some(p) = &a.plot {
        emit_plot(&Chart::from(&r), p)?;
    }
    let increasing = r.values.windows(2).all(|w| w[1] > w[0]);
    let mut v = serde_json::to_value(&r)?;
    v["strictly_increasing"] = json!(increasing);
    Ok(v)
}

// normality

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TestArg {
    MardiaSkew,
    MardiaKurt,
    Hz,
    #[default]
    All,
}

impl TestArg {
    fn tests(self) -> Vec<NormalityTest> {
        match self {
            TestArg::MardiaSkew => vec![NormalityTest::MardiaSkew],
            TestArg::MardiaKurt => vec![NormalityTest::MardiaKurt],
            TestArg::Hz => vec![NormalityTest::HenzeZirkler],
            TestArg::All => NormalityTest::ALL.to_vec(),
        }
    }
}

#[derive(Args, Debug, Serialize, Deserialize)]
pub struct NormalityArgs {
    #[arg(long, value_enum, default_value_t)]
    pub test: TestArg,
    #[arg(id = "in", long = "in")]
    #[serde(rename = "in")]
    pub input: Option<PathBuf>,
    /// Fail on an ill-conditioned covariance instead of adding a ridge.
    #[arg(long)]
    pub no_ridge: bool,
    /// Accepted for compatibility; output is always JSON.
    #[arg(long)]
    pub json: bool,
}

pub fn normality(a: &NormalityArgs) -> anyhow::Result<Value> {
    let x = load_features(required(&a.input, "in")?)?;
    let results = normality_tests(&x, &a.test.tests(), !a.no_ridge)?;
    Ok(json!({ "n": x.rows(), "d": x.cols(), "tests": results }))
}

// reduce

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Pca,
    Lda,
    Ae,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlanArg {
    /// i3d for 400-D input, vit otherwise.
    #[default]
    Auto,
    I3d,
    Vit,
}

#[derive(Args, Debug, Serialize, Deserialize)]
pub struct ReduceArgs {
    /// Reduction to fit. Not needed with --model-in.
    #[arg(long, value_enum)]
    pub method: Option<Method>,
    #[arg(id = "in", long = "in")]
    #[serde(rename = "in")]
    pub input: Option<PathBuf>,
    /// Output dimension for pca and lda (lda defaults to classes - 1).
    #[arg(long)]
    pub k: Option<usize>,
    /// Integer class labels (.npy) for lda.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Autoencoder layer plan.
    #[arg(long, value_enum, default_value_t)]
    pub plan: PlanArg,
    #[arg(long, default_value_t = AeTrainConfig::default().epochs)]
    pub epochs: usize,
    #[arg(long, default_value_t = AeTrainConfig::default().lr)]
    pub lr: f64,
    #[arg(long, default_value_t = AeTrainConfig::default().batch_size)]
    pub batch_size: usize,
    #[arg(long, default_value_t = AeTrainConfig::default().val_fraction)]
    pub val_fraction: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Fail on singular within-class scatter instead of adding a ridge.
    #[arg(long)]
    pub no_ridge: bool,
    /// Apply a saved model instead of fitting one.
    #[arg(long)]
    pub model_in: Option<PathBuf>,
    /// Save the fitted model here (a JSON sidecar is written next to it).
    #[arg(long)]
    pub model_out: Option<PathBuf>,
    /// Write the reduced features here.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t)]
    pub precision: PrecisionArg,
}

fn fit_reducer(a: &ReduceArgs, x: &FeatureMatrix) -> anyhow::Result<ReducerModel> {
    let method = a
        .method
        .ok_or_else(|| UsageError("--method is required unless --model-in is given".into()))?;
    Ok(match method {
        Method::Pca => {
            let k = *required(&a.k, "k")?;
            ReducerModel::Pca(pca_fit(x, k)?)
        }
        Method::Lda => {
            let labels = npy::read_labels(required(&a.labels, "labels")?)
                .context("reading labels")?;
            let data = LabeledFeatures::new(x.clone(), labels)?;
            let k = a.k.unwrap_or(data.classes().len().saturating_sub(1));
            ReducerModel::Lda(lda_fit_with(&data, k, !a.no_ridge)?)
        }
        Method::Ae => {
            let plan = match a.plan {
                PlanArg::Auto => AePlan::for_dim(x.cols()),
                PlanArg::I3d => AePlan::I3d,
                PlanArg::Vit => AePlan::Vit,
            };
            let arch = AeArchitecture::new(x.cols(), plan)?;
            let cfg = AeTrainConfig {
                lr: a.lr,
                batch_size: a.batch_size,
                epochs: a.epochs,
                val_fraction: a.val_fraction,
                ..AeTrainConfig::default()
            };
            ReducerModel::Ae(ae_train(x, arch, &cfg, a.seed)?)
        }
    })
}

fn model_summary(m: &ReducerModel) -> Value {
    match m {
        ReducerModel::Pca(p) => json!({
            "explained_variance_ratio": p.explained_variance_ratio.as_slice(),
        }),
        ReducerModel::Lda(l) => json!({
            "classes": l.classes,
            "eigenvalues": l.eigenvalues.as_slice(),
        }),
        ReducerModel::Ae(ae) => json!({
            "layers": ae.architecture.encoder_dims(),
            "train_mse": ae.train_stats.as_ref().map(|s| s.train_mse),
            "val_mse": ae.train_stats.as_ref().map(|s| s.val_mse),
            "best_epoch": ae.train_stats.as_ref().map(|s| s.best_epoch),
        }),
    }
}

pub fn reduce(a: &ReduceArgs) -> anyhow::Result<Value> {
    let x = load_features(required(&a.input, "in")?)?;
    let model = match &a.model_in {
        Some(p) => load_model(p).with_context(|| format!("loading model {}", p.display()))?,
        None => fit_reducer(a, &x)?,
    };
    let z = model.transform(&x)?;
    if let Some(p) = &a.model_out {
        save_model(&model, p).with_context(|| format!("saving model {}", p.display()))?;
    }
    if let Some(p) = &a.out {
        write_features(&z, p, a.precision)?;
    }
    Ok(json!({
        "kind": model.kind(),
        "in_dim": model.in_dim(),
        "out_dim": model.out_dim(),
        "rows": z.rows(),
        "model": model_summary(&model),
    }))
}

// fit-gmm

#[derive(Args, Debug, Serialize, Deserialize)]
pub struct FitGmmArgs {
    #[arg(id = "in", long = "in")]
    #[serde(rename = "in")]
    pub input: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_COMPONENTS)]
    pub clusters: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = GmmOptions::default().max_iter)]
    pub max_iter: usize,
    #[arg(long, default_value_t = GmmOptions::default().tol)]
    pub tol: f64,
    /// Write the fitted model as JSON here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn fit_gmm(a: &FitGmmArgs) -> anyhow::Result<Value> {
    let x = load_features(required(&a.input, "in")?)?;
    let opts = GmmOptions {
        max_iter: a.max_iter,
        tol: a.tol,
        ..GmmOptions::default()
    };
    let fit = fit_gmm_with(&x, a.clusters, a.seed, &opts)?;
    if let Some(p) = &a.out {
        write_text(p, &fit.model.to_json()?)?;
    }
    Ok(json!({
        "components": fit.model.components(),
        "dim": fit.model.dim(),
        "weights": fit.model.weights,
        "iterations": fit.iterations,
        "converged": fit.converged,
        "restarts": fit.restarts,
        "mean_log_likelihood": fit.model.mean_log_likelihood(&x)?,
    }))
}

// align

#[derive(Args, Debug, Serialize, Deserialize)]
pub struct AlignArgs {
    /// Pairwise preference matrix (.json or .csv).
    #[arg(long)]
    pub pairwise: Option<PathBuf>,
    /// JSON object mapping each item label to its metric value.
    #[arg(long)]
    pub metrics: Option<PathBuf>,
}

pub fn align(a: &AlignArgs) -> anyhow::Result<Value> {
    let human = PairwiseMatrix::load(required(&a.pairwise, "pairwise")?)?;
    let path = required(&a.metrics, "metrics")?;
    let values: BTreeMap<String, f64> = serde_json::from_str(&read_text(path)?)
        .with_context(|| format!("{} must be an object of label: value", path.display()))?;
    Ok(serde_json::to_value(align_report(&human, &values)?)?)
}

// rankcorr

#[derive(Args, Debug, Serialize, Deserialize)]
pub struct RankcorrArgs {
    /// Comma-separated values.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    #[serde(default)]
    pub xs: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    #[serde(default)]
    pub ys: Vec<f64>,
    /// Read both columns from a CSV file with a header row instead.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long)]
    pub x_col: Option<String>,
    #[arg(long)]
    pub y_col: Option<String>,
}

fn csv_columns(path: &Path, x: &str, y: &str) -> anyhow::Result<(Vec<f64>, Vec<f64>)> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let header = reader.headers()?.clone();
    let find = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| UsageError(format!("column '{name}' not found in {}", path.display())))
    };
    let (ix, iy) = (find(x)?, find(y)?);
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for rec in reader.records() {
        let rec = rec?;
        let get = |i: usize| -> anyhow::Result<f64> {
            let cell = rec.get(i).unwrap_or_default();
            cell.parse()
                .with_context(|| format!("bad number '{cell}' in {}", path.display()))
        };
        xs.push(get(ix)?);
        ys.push(get(iy)?);
    }
    Ok((xs, ys))
}

pub fn rankcorr(a: &RankcorrArgs) -> anyhow::Result<Value> {
    let (xs, ys) = match &a.csv {
        Some(p) => csv_columns(p, required(&a.x_col, "x-col")?, required(&a.y_col, "y-col")?)?,
        None => (a.xs.clone(), a.ys.clone()),
    };
    if xs.len() != ys.len() {
        return Err(UsageError(format!(
            "xs has {} values but ys has {}",
            xs.len(),
            ys.len()
        ))
        .into());
    }
    let rho = spearman(&xs, &ys)?;
    Ok(json!({ "n": xs.len(), "spearman": rho }))
}

// synth

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SynthDist {
    /// Cumulative-sum Gaussian toy.
    #[default]
    Mg,
    /// Five-component mixture toy.
    Gmm,
}

#[derive(Args, Debug, Serialize, Deserialize)]
pub struct SynthArgs {
    #[arg(long, value_enum, default_value_t)]
    pub dist: SynthDist,
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t)]
    pub precision: PrecisionArg,
    /// Write the mixture component of each row here (gmm only).
    #[arg(long)]
    pub labels_out: Option<PathBuf>,
    /// Write a manifest describing the output here.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

pub fn synth(a: &SynthArgs) -> anyhow::Result<Value> {
    let out = required(&a.out, "out")?;
    let (x, labels) = match a.dist {
        SynthDist::Mg => (synth_mg(a.n, a.seed)?, None),
        SynthDist::Gmm => {
            let l = synth_gmm_labeled(a.n, a.seed)?;
            (l.matrix, Some(l.labels))
        }
    };
    if let Some(p) = &a.labels_out {
        let labels = labels
            .as_ref()
            .ok_or_else(|| UsageError("--labels-out needs --dist gmm".into()))?;
        npy::write_labels(labels, p).with_context(|| format!("writing {}", p.display()))?;
    }
    write_features(&x, out, a.precision)?;
    if let Some(p) = &a.manifest {
        let same_dir = out.parent() == p.parent();
        let file = if same_dir {
            PathBuf::from(out.file_name().expect("output path names a file"))
        } else {
            std::path::absolute(out)?
        };
        let name = match a.dist {
            SynthDist::Mg => "synth_mg",
            SynthDist::Gmm => "synth_gmm",
        };
        Manifest {
            dataset: name.into(),
            extractor: Extractor::Synthetic,
            clip_len: 0,
            dim: x.cols(),
            files: vec![file],
            seed: Some(a.seed),
        }
        .save(p)?;
    }
    Ok(json!({ "rows": x.rows(), "cols": x.cols() }))
}

// info

#[derive(Args, Debug, Serialize, Deserialize)]
pub struct InfoArgs {}

pub fn info(_: &InfoArgs) -> anyhow::Result<Value> {
    let extractors: Vec<Value> = Extractor::ALL
        .iter()
        .map(|e| json!({ "name": e.name(), "dim": e.expected_dim() }))
        .collect();
    let metrics: Vec<Value> = MetricId::ALL
        .iter()
        .map(|&id| {
            let spec = MetricSpec::new(id);
            json!({
                "id": id.as_str(),
                "kernel": id.default_kernel(),
                "scale": spec.effective_scale(),
            })
        })
        .collect();
    let presets: BTreeMap<&str, (f64, f64)> = [
        ("low", BlurPreset::Low.sigma_range()),
        ("medium", BlurPreset::Medium.sigma_range()),
        ("high", BlurPreset::High.sigma_range()),
    ]
    .into();
    Ok(json!({
        "version": env!("CARGO_PKG_VERSION"),
        "extractors": extractors,
        "metrics": metrics,
        "jedi_scale": vdmkit::two_sample::JEDI_SCALE,
        "mmd_block": vdmkit::two_sample::BLOCK,
        "fd": {
            "estimator": CovEstimator::default(),
            "psd_tolerance": vdmkit::linalg::PSD_TOL,
            "cov_term_clamp": vdmkit::frechet::COV_TERM_CLAMP,
        },
        "gmm": {
            "components": DEFAULT_COMPONENTS,
            "variance_floor": VARIANCE_FLOOR,
            "options": {
                "max_iter": GmmOptions::default().max_iter,
                "tol": GmmOptions::default().tol,
                "max_restarts": GmmOptions::default().max_restarts,
            },
        },
        "normality": { "alpha": 0.05, "max_condition": vdmkit::linalg::MAX_CONDITION },
        "protocols": {
            "converge": ConvergenceConfig::default(),
            "rate_curve_repeats": ConvergenceConfig::rate_default(MetricId::Fd).repeats,
            "rate_epsilon": RATE_EPSILON,
            "min_grid_start": 50,
            "blur_presets": presets,
        },
        "autoencoder": {
            "train": AeTrainConfig::default(),
            "min_train_rows": vdmkit::reduce::MIN_TRAIN_ROWS,
        },
        "synthetic": {
            "dim": vdmkit::protocols::TOY_DIM,
            "gmm_components": vdmkit::protocols::GMM_COMPONENTS,
            "gmm_layout_seed": vdmkit::protocols::GMM_LAYOUT_SEED,
        },
    }))
}
