//! Dimensionality reduction: PCA, Fisher LDA and MLP autoencoders, plus a
//! binary container for fitted models.

mod ae;
mod container;
mod lda;
mod pca;

pub use ae::{
    ae_decode, ae_encode, ae_loss_and_grads, ae_reconstruct, ae_split, ae_train, AeArchitecture, AeModel, AePlan,
    AeTrainConfig, Dense, TrainStats, MIN_TRAIN_ROWS,
};
pub use container::{load_model, save_model, ReducerModel, MAGIC, VERSION};
pub use lda::{lda_fit, lda_fit_with, lda_transform, LdaModel};
pub use pca::{pca_fit, pca_transform, PcaModel};
