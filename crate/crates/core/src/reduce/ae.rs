//! Fully connected autoencoders trained with Adam on mean-squared
//! reconstruction error.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dims, invalid, Error, Result};
use crate::features::FeatureMatrix;
use crate::rng::{derive_seed, stream};

/// Fewest rows `ae_train` accepts.
pub const MIN_TRAIN_ROWS: usize = 256;

/// Encoder layer-size rule; the decoder mirrors it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AePlan {
    /// `d → d/2 → d/4 → d/6`.
    I3d,
    /// `d → d/3 → d/4 → d/8`.
    Vit,
    /// Explicit hidden sizes after the input, ending at the bottleneck.
    Custom(Vec<usize>),
}

impl AePlan {
    /// Picks the plan conventionally used for an extractor's feature size.
    pub fn for_dim(d: usize) -> Self {
        if d == 400 {
            AePlan::I3d
        } else {
            AePlan::Vit
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AeArchitecture {
    pub in_dim: usize,
    pub plan: AePlan,
}

impl AeArchitecture {
    pub fn new(in_dim: usize, plan: AePlan) -> Result<Self> {
        let a = Self { in_dim, plan };
        let dims = a.encoder_dims();
        if dims.iter().any(|&v| v == 0) {
            return Err(invalid(format!(
                "layer plan {dims:?} for input dimension {in_dim} has an empty layer"
            )));
        }
        Ok(a)
    }

    /// Sizes from the input to the bottleneck, floor division throughout.
    pub fn encoder_dims(&self) -> Vec<usize> {
        let d = self.in_dim;
        match &self.plan {
            AePlan::I3d => vec![d, d / 2, d / 4, d / 6],
            AePlan::Vit => vec![d, d / 3, d / 4, d / 8],
            AePlan::Custom(h) => std::iter::once(d).chain(h.iter().copied()).collect(),
        }
    }

    pub fn bottleneck(&self) -> usize {
        *self.encoder_dims().last().expect("non-empty plan")
    }

    /// `(fan_in, fan_out)` of every linear layer, encoder then decoder.
    pub fn layer_shapes(&self) -> Vec<(usize, usize)> {
        let enc = self.encoder_dims();
        let mut dec = enc.clone();
        dec.reverse();
        enc.windows(2)
            .chain(dec.windows(2))
            .map(|w| (w[0], w[1]))
            .collect()
    }

    pub fn encoder_layers(&self) -> usize {
        self.encoder_dims().len() - 1
    }

    /// ReLU follows every layer except the bottleneck and the output.
    fn relu_after(&self, layer: usize) -> bool {
        let e = self.encoder_layers();
        layer + 1 != e && layer + 1 != 2 * e
    }
}

/// `y = W x + b` with `W` stored `fan_out × fan_in`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub weight: DMatrix<f64>,
    pub bias: DVector<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AeTrainConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub val_fraction: f64,
}

impl Default for AeTrainConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            batch_size: 256,
            epochs: 50,
            val_fraction: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainStats {
    /// Reconstruction MSE of the kept checkpoint on the training split.
    pub train_mse: f64,
    pub val_mse: f64,
    /// Epoch (1-based) whose weights were kept.
    pub best_epoch: usize,
    pub epochs: usize,
    /// Per-epoch mean training loss and validation MSE.
    pub history: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AeModel {
    pub architecture: AeArchitecture,
    pub layers: Vec<Dense>,
    pub train_stats: Option<TrainStats>,
    pub config: AeTrainConfig,
    pub seed: u64,
}

impl AeModel {
    /// He-uniform weights, zero biases.
    pub fn init(architecture: AeArchitecture, seed: u64) -> Self {
        let mut rng = stream(derive_seed(seed, &[0]));
        let layers = architecture
            .layer_shapes()
            .into_iter()
            .map(|(fan_in, fan_out)| {
                let bound = (6.0 / fan_in as f64).sqrt();
                Dense {
                    weight: DMatrix::from_fn(fan_out, fan_in, |_, _| rng.random_range(-bound..bound)),
                    bias: DVector::zeros(fan_out),
                }
            })
            .collect();
        Self {
            architecture,
            layers,
            train_stats: None,
            config: AeTrainConfig::default(),
            seed,
        }
    }

    pub fn in_dim(&self) -> usize {
        self.architecture.in_dim
    }

    pub fn bottleneck(&self) -> usize {
        self.architecture.bottleneck()
    }

    fn run(&self, range: std::ops::Range<usize>, mut a: DMatrix<f64>) -> DMatrix<f64> {
        for l in range {
            a = affine(&self.layers[l], &a);
            if self.architecture.relu_after(l) {
                a.apply(|v| *v = v.max(0.0));
            }
        }
        a
    }
}

fn affine(layer: &Dense, a: &DMatrix<f64>) -> DMatrix<f64> {
    let mut z = &layer.weight * a;
    for mut col in z.column_iter_mut() {
        col += &layer.bias;
    }
    z
}

/// Rows of `x` as the columns of a `d × n` matrix.
fn columns(x: &FeatureMatrix) -> DMatrix<f64> {
    DMatrix::from_column_slice(x.cols(), x.rows(), x.as_slice())
}

fn columns_of(x: &FeatureMatrix, idx: &[usize]) -> DMatrix<f64> {
    let d = x.cols();
    let mut data = Vec::with_capacity(idx.len() * d);
    for &i in idx {
        data.extend_from_slice(x.row(i));
    }
    DMatrix::from_vec(d, idx.len(), data)
}

fn rows_of(m: &DMatrix<f64>) -> Result<FeatureMatrix> {
    FeatureMatrix::new(m.ncols(), m.nrows(), m.as_slice().to_vec())
}

pub fn ae_encode(model: &AeModel, x: &FeatureMatrix) -> Result<FeatureMatrix> {
    check_dims(model.in_dim(), x.cols())?;
    rows_of(&model.run(0..model.architecture.encoder_layers(), columns(x)))
}

pub fn ae_decode(model: &AeModel, z: &FeatureMatrix) -> Result<FeatureMatrix> {
    check_dims(model.bottleneck(), z.cols())?;
    let e = model.architecture.encoder_layers();
    rows_of(&model.run(e..2 * e, columns(z)))
}

pub fn ae_reconstruct(model: &AeModel, x: &FeatureMatrix) -> Result<FeatureMatrix> {
    check_dims(model.in_dim(), x.cols())?;
    rows_of(&model.run(0..model.layers.len(), columns(x)))
}

fn mse(model: &AeModel, a0: &DMatrix<f64>) -> f64 {
    let out = model.run(0..model.layers.len(), a0.clone());
    (out - a0).norm_squared() / a0.len() as f64
}

/// Seeded train/validation row split used by [`ae_train`].
pub fn ae_split(n: usize, val_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut stream(derive_seed(seed, &[1])));
    let n_val = ((n as f64 * val_fraction).round() as usize).min(n.saturating_sub(1));
    let val = idx.split_off(n - n_val);
    (idx, val)
}

/// Reconstruction MSE of `x` and its gradient for every layer, as used by
/// one training step on the batch `x`.
pub fn ae_loss_and_grads(model: &AeModel, x: &FeatureMatrix) -> Result<(f64, Vec<Dense>)> {
    check_dims(model.in_dim(), x.cols())?;
    Ok(loss_and_grads(model, &columns(x)))
}

/// Loss and per-layer `(∂W, ∂b)` for one batch (`d × B`, one sample per
/// column).
pub(crate) fn loss_and_grads(model: &AeModel, a0: &DMatrix<f64>) -> (f64, Vec<Dense>) {
    let arch = &model.architecture;
    let mut acts = vec![a0.clone()];
    let mut pre = Vec::with_capacity(model.layers.len());
    for (l, layer) in model.layers.iter().enumerate() {
        let z = affine(layer, acts.last().expect("input"));
        let mut a = z.clone();
        if arch.relu_after(l) {
            a.apply(|v| *v = v.max(0.0));
        }
        pre.push(z);
        acts.push(a);
    }
    let out = acts.last().expect("output");
    let diff = out - a0;
    let count = a0.len() as f64;
    let loss = diff.norm_squared() / count;
    let mut delta = diff * (2.0 / count);
    let mut grads = Vec::with_capacity(model.layers.len());
    for l in (0..model.layers.len()).rev() {
        if arch.relu_after(l) {
            delta.zip_apply(&pre[l], |g, z| {
                if z <= 0.0 {
                    *g = 0.0;
                }
            });
        }
        let gw = &delta * acts[l].transpose();
        let gb = delta.column_sum();
        if l > 0 {
            delta = model.layers[l].weight.transpose() * &delta;
        }
        grads.push(Dense { weight: gw, bias: gb });
    }
    grads.reverse();
    (loss, grads)
}

struct Adam {
    m: Vec<Dense>,
    v: Vec<Dense>,
    t: i32,
}

impl Adam {
    fn new(layers: &[Dense]) -> Self {
        let zero = |l: &Dense| Dense {
            weight: DMatrix::zeros(l.weight.nrows(), l.weight.ncols()),
            bias: DVector::zeros(l.bias.len()),
        };
        Self {
            m: layers.iter().map(zero).collect(),
            v: layers.iter().map(zero).collect(),
            t: 0,
        }
    }

    fn step(&mut self, layers: &mut [Dense], grads: &[Dense], cfg: &AeTrainConfig) {
        self.t += 1;
        let c1 = 1.0 - cfg.beta1.powi(self.t);
        let c2 = 1.0 - cfg.beta2.powi(self.t);
        let update = |p: &mut [f64], g: &[f64], m: &mut [f64], v: &mut [f64]| {
            for i in 0..p.len() {
                m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
                v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
                let mh = m[i] / c1;
                let vh = v[i] / c2;
                p[i] -= cfg.lr * mh / (vh.sqrt() + cfg.eps);
            }
        };
        for (l, layer) in layers.iter_mut().enumerate() {
            update(
                layer.weight.as_mut_slice(),
                grads[l].weight.as_slice(),
                self.m[l].weight.as_mut_slice(),
                self.v[l].weight.as_mut_slice(),
            );
            update(
                layer.bias.as_mut_slice(),
                grads[l].bias.as_slice(),
                self.m[l].bias.as_mut_slice(),
                self.v[l].bias.as_mut_slice(),
            );
        }
    }
}

/// Trains an autoencoder and keeps the weights from the epoch with the lowest
/// validation MSE.
pub fn ae_train(
    x: &FeatureMatrix,
    arch: AeArchitecture,
    cfg: &AeTrainConfig,
    seed: u64,
) -> Result<AeModel> {
    check_dims(arch.in_dim, x.cols())?;
    if x.rows() < MIN_TRAIN_ROWS {
        return Err(invalid(format!(
            "autoencoder training needs at least {MIN_TRAIN_ROWS} rows, got {}",
            x.rows()
        )));
    }
    if cfg.batch_size == 0 || cfg.epochs == 0 || !(cfg.lr > 0.0) {
        return Err(invalid("batch size, epochs and learning rate must be positive"));
    }
    if !(0.0..1.0).contains(&cfg.val_fraction) {
        return Err(invalid("validation fraction must be in [0, 1)"));
    }
    let (train, val) = ae_split(x.rows(), cfg.val_fraction, seed);
    let val_cols = (!val.is_empty()).then(|| columns_of(x, &val));
    let train_cols = columns_of(x, &train);

    let mut model = AeModel::init(arch, seed);
    model.config = *cfg;
    let mut adam = Adam::new(&model.layers);
    let mut order = train.clone();
    let mut rng = stream(derive_seed(seed, &[2]));
    let mut best: Option<(f64, usize, Vec<Dense>)> = None;
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut last_finite = f64::NAN;

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let a0 = columns_of(x, batch);
            let (loss, grads) = loss_and_grads(&model, &a0);
            if !loss.is_finite() || grads.iter().any(|g| !g.weight.iter().all(|v| v.is_finite())) {
                return Err(Error::Diverged {
                    epoch,
                    last_finite_loss: last_finite,
                });
            }
            last_finite = loss;
            total += loss * batch.len() as f64;
            adam.step(&mut model.layers, &grads, cfg);
        }
        let train_loss = total / order.len() as f64;
        let val_loss = match &val_cols {
            Some(v) => mse(&model, v),
            None => mse(&model, &train_cols),
        };
        if !val_loss.is_finite() {
            return Err(Error::Diverged {
                epoch,
                last_finite_loss: last_finite,
            });
        }
        log::debug!("epoch {epoch}: train {train_loss:.6} val {val_loss:.6}");
        history.push((train_loss, val_loss));
        if best.as_ref().is_none_or(|b| val_loss < b.0) {
            best = Some((val_loss, epoch, model.layers.clone()));
        }
    }
    let (val_mse, best_epoch, layers) = best.expect("at least one epoch");
    model.layers = layers;
    model.train_stats = Some(TrainStats {
        train_mse: mse(&model, &train_cols),
        val_mse,
        best_epoch,
        epochs: cfg.epochs,
        history,
    });
    Ok(model)
}
