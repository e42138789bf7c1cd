//! Run configuration: a commented TOML document read by every CLI subcommand.
//!
//! ```toml
//! manifest = "data/manifest.txt"
//! seed = 42
//!
//! [nn]
//! hidden_dims = [256, 512, 128]
//! dropout_rate = 0.3
//!
//! [root]          # overrides [nn] for the stationary / non-stationary node
//! max_epochs = 30
//! ```
//!
//! Network sections `[flat]`, `[root]`, `[stationary]`, `[non_stationary]` and
//! `[mlp64]` override individual fields of `[nn]`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::baselines::{self, ForestParams};
use crate::error::{Error, Result};
use crate::hierarchy::{HierarchySpec, LcpnConfigs};
use crate::ingest::{LabelConfig, SplitSpec, DEFAULT_FEATURE_COUNT};
use crate::nn::{MlpConfig, OptimizerKind, OutputActivation};
use crate::seed;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSection {
    pub train_fraction: f64,
    pub val_fraction_of_train: f64,
}

impl Default for SplitSection {
    fn default() -> Self {
        let d = SplitSpec::default();
        SplitSection {
            train_fraction: d.train_fraction,
            val_fraction_of_train: d.val_fraction_of_train,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LabelSection {
    pub feature_count: usize,
    /// Source columns of the six leaves, in leaf order. Empty keeps the defaults.
    pub columns: Vec<String>,
}

impl Default for LabelSection {
    fn default() -> Self {
        LabelSection {
            feature_count: DEFAULT_FEATURE_COUNT,
            columns: Vec::new(),
        }
    }
}

/// Training settings shared by every network.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NnSection {
    pub hidden_dims: Vec<usize>,
    pub dropout_rate: f64,
    pub optimizer: OptimizerKind,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
}

impl Default for NnSection {
    fn default() -> Self {
        let d = MlpConfig::default();
        NnSection {
            hidden_dims: d.hidden_dims,
            dropout_rate: d.dropout_rate,
            optimizer: d.optimizer,
            learning_rate: d.learning_rate,
            batch_size: d.batch_size,
            max_epochs: d.max_epochs,
            patience: d.patience,
        }
    }
}

/// Per-network overrides of [`NnSection`].
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NnOverride {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hidden_dims: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dropout_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub optimizer: Option<OptimizerKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub learning_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub batch_size: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_epochs: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub patience: Option<usize>,
}

impl NnOverride {
    fn apply(&self, base: &NnSection) -> NnSection {
        NnSection {
            hidden_dims: self.hidden_dims.clone().unwrap_or_else(|| base.hidden_dims.clone()),
            dropout_rate: self.dropout_rate.unwrap_or(base.dropout_rate),
            optimizer: self.optimizer.unwrap_or(base.optimizer),
            learning_rate: self.learning_rate.unwrap_or(base.learning_rate),
            batch_size: self.batch_size.unwrap_or(base.batch_size),
            max_epochs: self.max_epochs.unwrap_or(base.max_epochs),
            patience: self.patience.unwrap_or(base.patience),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineSection {
    pub knn_k: usize,
    pub tree_max_depth: usize,
    pub forest_trees: usize,
    pub forest_max_depth: usize,
    /// Candidate features per forest split; unset means `ceil(sqrt(features))`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub forest_max_features: Option<usize>,
}

impl Default for BaselineSection {
    fn default() -> Self {
        BaselineSection {
            knn_k: baselines::KNN_K,
            tree_max_depth: baselines::TREE_MAX_DEPTH,
            forest_trees: 10,
            forest_max_depth: 10,
            forest_max_features: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    /// Bootstrap resamples for the per-class intervals; 0 disables them.
    pub bootstrap_resamples: usize,
}

impl Default for EvalSection {
    fn default() -> Self {
        EvalSection {
            bootstrap_resamples: 200,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub layer_counts: Vec<usize>,
    pub widths: Vec<usize>,
    /// Every per-layer width assignment instead of uniform-width networks.
    pub exhaustive: bool,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection {
            layer_counts: vec![2, 3],
            widths: vec![64, 128, 256, 512],
            exhaustive: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub manifest: PathBuf,
    /// Not part of the config hash; `--out` overrides it.
    pub output_dir: PathBuf,
    pub seed: u64,
    pub standardize: bool,
    pub split: SplitSection,
    pub labels: LabelSection,
    pub nn: NnSection,
    pub flat: NnOverride,
    pub root: NnOverride,
    pub stationary: NnOverride,
    pub non_stationary: NnOverride,
    pub mlp64: NnOverride,
    pub baselines: BaselineSection,
    pub eval: EvalSection,
    pub gridsearch: GridSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            manifest: PathBuf::from("manifest.txt"),
            output_dir: PathBuf::from("out"),
            seed: 42,
            standardize: true,
            split: SplitSection::default(),
            labels: LabelSection::default(),
            nn: NnSection::default(),
            flat: NnOverride::default(),
            root: NnOverride::default(),
            stationary: NnOverride::default(),
            non_stationary: NnOverride::default(),
            mlp64: NnOverride {
                hidden_dims: Some(vec![64]),
                dropout_rate: Some(0.0),
                ..Default::default()
            },
            baselines: BaselineSection::default(),
            eval: EvalSection::default(),
            gridsearch: GridSection::default(),
        }
    }
}

/// First 16 hex digits of the SHA-256 of `bytes`.
pub fn short_sha(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().take(8).map(|b| format!("{b:02x}")).collect()
}

fn nn_config(section: &NnSection, input_dim: usize, output_dim: usize, head: OutputActivation, seed: u64) -> MlpConfig {
    MlpConfig {
        input_dim,
        hidden_dims: section.hidden_dims.clone(),
        output_dim,
        output_activation: head,
        dropout_rate: section.dropout_rate,
        optimizer: section.optimizer,
        learning_rate: section.learning_rate,
        batch_size: section.batch_size,
        max_epochs: section.max_epochs,
        patience: section.patience,
        seed,
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: RunConfig =
            toml::from_str(text).map_err(|e| Error::Config(format!("config: {}", e.message())))?;
        config.validate()?;
        Ok(config)
    }

    /// Reads a config file; a relative `manifest` is resolved against the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config = Self::from_toml(&text)?;
        if config.manifest.is_relative() {
            if let Some(dir) = path.parent() {
                config.manifest = dir.join(&config.manifest);
            }
        }
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.seed > i64::MAX as u64 {
            return Err(Error::Config("seed must fit in 63 bits".into()));
        }
        self.split_spec().validate()?;
        self.label_config()?;
        if (1..100).contains(&self.eval.bootstrap_resamples) {
            return Err(Error::Config("eval.bootstrap_resamples must be 0 or at least 100".into()));
        }
        if self.baselines.knn_k == 0 || self.baselines.forest_trees == 0 {
            return Err(Error::Config("knn_k and forest_trees must be positive".into()));
        }
        if self.gridsearch.layer_counts.contains(&0) || self.gridsearch.widths.contains(&0) {
            return Err(Error::Config("gridsearch layer counts and widths must be positive".into()));
        }
        let d = self.labels.feature_count;
        self.flat_config(d).validate()?;
        self.mlp64_config(d).validate()?;
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 (first 16 hex digits) of the canonical config, excluding `output_dir`.
    pub fn hash(&self) -> String {
        let canonical = RunConfig {
            output_dir: PathBuf::new(),
            ..self.clone()
        };
        short_sha(canonical.to_toml().as_bytes())
    }

    /// Hash of the settings that determine the prepared datasets only.
    pub fn data_hash(&self) -> String {
        #[derive(Serialize)]
        struct DataKey<'a> {
            manifest: &'a Path,
            seed: u64,
            standardize: bool,
            split: &'a SplitSection,
            labels: &'a LabelSection,
        }
        let key = DataKey {
            manifest: &self.manifest,
            seed: self.seed,
            standardize: self.standardize,
            split: &self.split,
            labels: &self.labels,
        };
        short_sha(toml::to_string(&key).expect("data key serializes").as_bytes())
    }

    pub fn label_config(&self) -> Result<LabelConfig> {
        let mut labels = LabelConfig::default();
        labels.set_feature_count(self.labels.feature_count)?;
        if !self.labels.columns.is_empty() {
            if self.labels.columns.len() != LabelConfig::LEAF_COUNT {
                return Err(Error::Config(format!(
                    "labels.columns needs {} entries, got {}",
                    LabelConfig::LEAF_COUNT,
                    self.labels.columns.len()
                )));
            }
            for (i, c) in self.labels.columns.iter().enumerate() {
                labels.set_column(i, c.clone())?;
            }
        }
        Ok(labels)
    }

    pub fn split_spec(&self) -> SplitSpec {
        SplitSpec {
            train_fraction: self.split.train_fraction,
            val_fraction_of_train: self.split.val_fraction_of_train,
            seed: seed::derive(self.seed, seed::SPLIT),
        }
    }

    pub fn flat_config(&self, input_dim: usize) -> MlpConfig {
        nn_config(
            &self.flat.apply(&self.nn),
            input_dim,
            LabelConfig::LEAF_COUNT,
            OutputActivation::Softmax,
            seed::derive(self.seed, seed::FLAT),
        )
    }

    pub fn mlp64_config(&self, input_dim: usize) -> MlpConfig {
        nn_config(
            &self.mlp64.apply(&self.nn),
            input_dim,
            LabelConfig::LEAF_COUNT,
            OutputActivation::Softmax,
            seed::derive(self.seed, seed::MLP64),
        )
    }

    pub fn lcpn_configs(&self, input_dim: usize, spec: &HierarchySpec) -> LcpnConfigs {
        let root = nn_config(
            &self.root.apply(&self.nn),
            input_dim,
            1,
            OutputActivation::Sigmoid,
            seed::derive(self.seed, seed::ROOT),
        );
        let children = spec
            .parents
            .iter()
            .enumerate()
            .map(|(p, group)| {
                let section = match p {
                    0 => self.stationary.apply(&self.nn),
                    _ => self.non_stationary.apply(&self.nn),
                };
                nn_config(
                    &section,
                    input_dim,
                    group.leaves.len(),
                    OutputActivation::Softmax,
                    seed::derive(self.seed, seed::CHILD + p as u64),
                )
            })
            .collect();
        LcpnConfigs { root, children }
    }

    pub fn forest_params(&self, input_dim: usize) -> ForestParams {
        let mut p = ForestParams::for_features(input_dim, seed::derive(self.seed, seed::FOREST));
        p.n_trees = self.baselines.forest_trees;
        p.max_depth = self.baselines.forest_max_depth;
        if let Some(m) = self.baselines.forest_max_features {
            p.max_features = Some(m);
        }
        p
    }

    pub fn bootstrap_seed(&self) -> u64 {
        seed::derive(self.seed, seed::BOOTSTRAP)
    }

    pub fn grid_seed(&self) -> u64 {
        seed::derive(self.seed, seed::GRID)
    }

    /// Every seed a run can use, by component.
    pub fn seeds(&self) -> BTreeMap<String, u64> {
        let mut s = BTreeMap::new();
        s.insert("master".into(), self.seed);
        for (name, stream) in [
            ("split", seed::SPLIT),
            ("flat", seed::FLAT),
            ("root", seed::ROOT),
            ("child0", seed::CHILD),
            ("child1", seed::CHILD + 1),
            ("mlp64", seed::MLP64),
            ("forest", seed::FOREST),
            ("bootstrap", seed::BOOTSTRAP),
            ("gridsearch", seed::GRID),
        ] {
            s.insert(name.into(), seed::derive(self.seed, stream));
        }
        s
    }
}
