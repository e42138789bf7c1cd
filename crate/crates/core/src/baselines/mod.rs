//! Flat six-way baselines: k-nearest-neighbors, decision tree, random forest
//! and a single-hidden-layer perceptron.

pub mod forest;
pub mod knn;
pub mod tree;

pub use forest::{forest_fit, ForestModel, ForestParams};
pub use knn::KnnModel;
pub use tree::{tree_fit, TreeModel, TreeNode};

use crate::error::Result;
use crate::hierarchy::{train_flat, FlatModel};
use crate::ingest::{Dataset, Preprocessing};
use crate::nn::{MlpConfig, TrainReport};

pub const KNN_K: usize = 10;
pub const TREE_MAX_DEPTH: usize = 20;

/// `base` with one hidden layer of 64 units and no dropout.
pub fn mlp64_config(base: &MlpConfig) -> MlpConfig {
    MlpConfig {
        hidden_dims: vec![64],
        dropout_rate: 0.0,
        ..base.clone()
    }
}

/// Trains the perceptron baseline. `config` is used as given; see [`mlp64_config`].
pub fn mlp64_train(
    train: &Dataset,
    val: &Dataset,
    config: &MlpConfig,
    leaf_names: Vec<String>,
    preprocessing: Preprocessing,
) -> Result<(FlatModel, TrainReport)> {
    train_flat(train, val, config, leaf_names, preprocessing)
}
