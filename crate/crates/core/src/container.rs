//! Model and dataset persistence.
//!
//! Models are stored as a versioned TOML document. Numeric arrays are encoded
//! as `{ shape = [..], data = "<base64>" }` where `data` holds little-endian
//! IEEE-754 doubles, so every parameter round-trips bit-exactly. Every file
//! carries a `[provenance]` table with the run's config hash and seeds.
//!
//! Prepared datasets use a flat binary layout (see [`write_dataset`]).

use std::collections::BTreeMap;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use ndarray::{Array1, Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::baselines::{ForestModel, ForestParams, KnnModel, TreeModel};
use crate::error::{Error, Result};
use crate::hierarchy::{FlatModel, HierarchySpec, LcpnModel};
use crate::ingest::{Dataset, Preprocessing, Standardizer};
use crate::nn::{Layer, MlpConfig, MlpModel};

pub const FORMAT: &str = "hharnet-model";
pub const PREPROCESSING_FORMAT: &str = "hharnet-preprocessing";
pub const VERSION: u32 = 1;

const DATASET_MAGIC: &[u8; 8] = b"HHARDS\x00\x01";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct F64Array {
    shape: Vec<usize>,
    data: String,
}

impl F64Array {
    fn encode(shape: Vec<usize>, values: impl Iterator<Item = f64>) -> Self {
        let bytes: Vec<u8> = values.flat_map(f64::to_le_bytes).collect();
        F64Array {
            shape,
            data: B64.encode(bytes),
        }
    }

    fn vector(values: &[f64]) -> Self {
        Self::encode(vec![values.len()], values.iter().copied())
    }

    fn matrix(m: &Array2<f64>) -> Self {
        Self::encode(vec![m.nrows(), m.ncols()], m.iter().copied())
    }

    fn decode(&self) -> Result<Vec<f64>> {
        let bytes = B64
            .decode(&self.data)
            .map_err(|e| Error::Format(format!("bad base64 array: {e}")))?;
        let expected: usize = self.shape.iter().product();
        if bytes.len() != expected * 8 {
            return Err(Error::Format(format!(
                "array of shape {:?} holds {} bytes",
                self.shape,
                bytes.len()
            )));
        }
        Ok(bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect())
    }

    fn to_vector(&self) -> Result<Vec<f64>> {
        if self.shape.len() != 1 {
            return Err(Error::Format(format!("expected a vector, got shape {:?}", self.shape)));
        }
        self.decode()
    }

    fn to_matrix(&self) -> Result<Array2<f64>> {
        match self.shape[..] {
            [r, c] => Array2::from_shape_vec((r, c), self.decode()?)
                .map_err(|e| Error::Format(e.to_string())),
            _ => Err(Error::Format(format!("expected a matrix, got shape {:?}", self.shape))),
        }
    }
}

/// Config hash and seeds of the run that produced a file.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub seeds: BTreeMap<String, u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct PreprocessingRecord {
    means: F64Array,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    scaler_mean: Option<F64Array>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    scaler_std: Option<F64Array>,
}

impl PreprocessingRecord {
    fn from_model(p: &Preprocessing) -> Self {
        PreprocessingRecord {
            means: F64Array::vector(&p.means),
            scaler_mean: p.scaler.as_ref().map(|s| F64Array::vector(&s.mean)),
            scaler_std: p.scaler.as_ref().map(|s| F64Array::vector(&s.std)),
        }
    }

    fn to_model(&self) -> Result<Preprocessing> {
        let means = self.means.to_vector()?;
        let scaler = match (&self.scaler_mean, &self.scaler_std) {
            (Some(m), Some(s)) => Some(Standardizer {
                mean: m.to_vector()?,
                std: s.to_vector()?,
            }),
            (None, None) => None,
            _ => return Err(Error::Format("incomplete standardization parameters".into())),
        };
        if let Some(s) = &scaler {
            if s.mean.len() != means.len() || s.std.len() != means.len() {
                return Err(Error::Format("preprocessing arrays differ in length".into()));
            }
        }
        Ok(Preprocessing { means, scaler })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct LayerRecord {
    weights: F64Array,
    bias: F64Array,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct MlpRecord {
    config: MlpConfig,
    class_weights: F64Array,
    layers: Vec<LayerRecord>,
}

impl MlpRecord {
    fn from_model(m: &MlpModel) -> Self {
        MlpRecord {
            config: m.config.clone(),
            class_weights: F64Array::vector(&m.class_weights),
            layers: m
                .layers
                .iter()
                .map(|l| LayerRecord {
                    weights: F64Array::matrix(&l.weights),
                    bias: F64Array::vector(l.bias.as_slice().expect("contiguous bias")),
                })
                .collect(),
        }
    }

    fn to_model(&self) -> Result<MlpModel> {
        let layers = self
            .layers
            .iter()
            .map(|l| {
                Ok(Layer {
                    weights: l.weights.to_matrix()?,
                    bias: Array1::from(l.bias.to_vector()?),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        MlpModel::from_parts(self.config.clone(), layers, self.class_weights.to_vector()?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct LcpnRecord {
    hierarchy: HierarchySpec,
    root: MlpRecord,
    children: Vec<MlpRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct ForestRecord {
    params: ForestParams,
    tree_seeds: Vec<u64>,
    trees: Vec<TreeModel>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct KnnRecord {
    k: usize,
    n_classes: usize,
    /// Prepared training split, relative to the model file's directory.
    train_ref: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct Document {
    format: String,
    version: u32,
    kind: String,
    name: String,
    leaf_names: Vec<String>,
    provenance: Provenance,
    preprocessing: PreprocessingRecord,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    mlp: Option<MlpRecord>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    lcpn: Option<LcpnRecord>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    tree: Option<TreeModel>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    forest: Option<ForestRecord>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    knn: Option<KnnRecord>,
}

/// Any trained classifier that can be persisted.
#[derive(Clone, Debug, PartialEq)]
pub enum Classifier {
    Flat(FlatModel),
    Lcpn(LcpnModel),
    /// One node of a hierarchy, predicting over its own classes.
    Node(MlpModel),
    Tree(TreeModel),
    Forest(ForestModel),
    /// `train_ref` is where the training split lives on disk.
    Knn { model: KnnModel, train_ref: PathBuf },
}

impl Classifier {
    pub fn kind(&self) -> &'static str {
        match self {
            Classifier::Flat(_) => "flat",
            Classifier::Lcpn(_) => "lcpn",
            Classifier::Node(_) => "node",
            Classifier::Tree(_) => "tree",
            Classifier::Forest(_) => "forest",
            Classifier::Knn { .. } => "knn",
        }
    }
}

/// A classifier plus what is needed to feed it raw feature vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct SavedModel {
    pub name: String,
    /// Names of the classes the model outputs.
    pub leaf_names: Vec<String>,
    pub provenance: Provenance,
    pub preprocessing: Preprocessing,
    pub classifier: Classifier,
}

impl SavedModel {
    pub fn input_dim(&self) -> usize {
        self.preprocessing.dim()
    }

    pub fn n_classes(&self) -> usize {
        self.leaf_names.len()
    }

    /// Predictions for already-preprocessed rows.
    pub fn predict_batch(&self, x: ArrayView2<f64>) -> Result<Vec<usize>> {
        match &self.classifier {
            Classifier::Flat(m) => m.predict_flat_batch(x),
            Classifier::Lcpn(m) => Ok(m.predict_topdown_batch(x)?.leaves),
            Classifier::Node(m) => m.predict_batch(x),
            Classifier::Knn { model, .. } => model.predict_batch(x),
            Classifier::Tree(t) => {
                use rayon::prelude::*;
                let rows: Vec<_> = x.rows().into_iter().collect();
                rows.par_iter().map(|r| t.tree_predict(&r.to_vec())).collect()
            }
            Classifier::Forest(f) => {
                use rayon::prelude::*;
                let rows: Vec<_> = x.rows().into_iter().collect();
                rows.par_iter().map(|r| f.forest_predict(&r.to_vec())).collect()
            }
        }
    }

    /// Imputes and standardizes `raw` (non-finite cells count as missing), then predicts.
    pub fn predict_raw(&self, raw: &[f64]) -> Result<usize> {
        let mut x = raw.to_vec();
        self.preprocessing.apply_row(&mut x)?;
        let view = ArrayView2::from_shape((1, x.len()), &x).expect("contiguous row");
        Ok(self.predict_batch(view)?[0])
    }

    /// Class probabilities for network models; `None` for trees and kNN.
    /// A hierarchy reports the product of root and child probabilities.
    pub fn predict_proba_raw(&self, raw: &[f64]) -> Result<Option<Vec<f64>>> {
        let mut x = raw.to_vec();
        self.preprocessing.apply_row(&mut x)?;
        let probs = match &self.classifier {
            Classifier::Flat(m) => Some(m.mlp.predict_proba(&x)?),
            Classifier::Node(m) => Some(expand_binary(m, m.predict_proba(&x)?)),
            Classifier::Lcpn(m) => {
                let root = expand_binary(&m.root, m.root.predict_proba(&x)?);
                let mut out = vec![0.0; m.hierarchy.n_leaves()];
                for (p, child) in m.children.iter().enumerate() {
                    for (local, q) in child.predict_proba(&x)?.into_iter().enumerate() {
                        out[m.hierarchy.parents[p].leaves[local]] = root[p] * q;
                    }
                }
                Some(out)
            }
            _ => None,
        };
        Ok(probs)
    }

    pub fn to_toml(&self, model_dir: &Path) -> Result<String> {
        let mut doc = Document {
            format: FORMAT.into(),
            version: VERSION,
            kind: self.classifier.kind().into(),
            name: self.name.clone(),
            leaf_names: self.leaf_names.clone(),
            provenance: self.provenance.clone(),
            preprocessing: PreprocessingRecord::from_model(&self.preprocessing),
            mlp: None,
            lcpn: None,
            tree: None,
            forest: None,
            knn: None,
        };
        match &self.classifier {
            Classifier::Flat(m) => doc.mlp = Some(MlpRecord::from_model(&m.mlp)),
            Classifier::Node(m) => doc.mlp = Some(MlpRecord::from_model(m)),
            Classifier::Lcpn(m) => {
                doc.lcpn = Some(LcpnRecord {
                    hierarchy: m.hierarchy.clone(),
                    root: MlpRecord::from_model(&m.root),
                    children: m.children.iter().map(MlpRecord::from_model).collect(),
                })
            }
            Classifier::Tree(t) => doc.tree = Some(t.clone()),
            Classifier::Forest(f) => {
                doc.forest = Some(ForestRecord {
                    params: f.params.clone(),
                    tree_seeds: f.tree_seeds.clone(),
                    trees: f.trees.clone(),
                })
            }
            Classifier::Knn { model, train_ref } => {
                let rel = train_ref.strip_prefix(model_dir).unwrap_or(train_ref);
                doc.knn = Some(KnnRecord {
                    k: model.k,
                    n_classes: model.n_classes,
                    train_ref: rel.to_string_lossy().into_owned(),
                })
            }
        }
        toml::to_string(&doc).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn from_toml(text: &str, model_dir: &Path) -> Result<Self> {
        let doc: Document = toml::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        if doc.format != FORMAT {
            return Err(Error::Format(format!("not a model file (format `{}`)", doc.format)));
        }
        if doc.version != VERSION {
            return Err(Error::Format(format!(
                "unsupported version {} (expected {VERSION})",
                doc.version
            )));
        }
        let preprocessing = doc.preprocessing.to_model()?;
        let missing = |what: &str| Error::Format(format!("`{}` model without [{what}] section", doc.kind));
        let classifier = match doc.kind.as_str() {
            "flat" => Classifier::Flat(FlatModel {
                mlp: doc.mlp.as_ref().ok_or_else(|| missing("mlp"))?.to_model()?,
                leaf_names: doc.leaf_names.clone(),
                preprocessing: preprocessing.clone(),
            }),
            "node" => Classifier::Node(doc.mlp.as_ref().ok_or_else(|| missing("mlp"))?.to_model()?),
            "lcpn" => {
                let rec = doc.lcpn.as_ref().ok_or_else(|| missing("lcpn"))?;
                rec.hierarchy.validate()?;
                Classifier::Lcpn(LcpnModel {
                    hierarchy: rec.hierarchy.clone(),
                    root: rec.root.to_model()?,
                    children: rec.children.iter().map(MlpRecord::to_model).collect::<Result<_>>()?,
                    preprocessing: preprocessing.clone(),
                })
            }
            "tree" => {
                let t = doc.tree.clone().ok_or_else(|| missing("tree"))?;
                t.validate()?;
                Classifier::Tree(t)
            }
            "forest" => {
                let rec = doc.forest.clone().ok_or_else(|| missing("forest"))?;
                if rec.trees.is_empty() || rec.trees.len() != rec.tree_seeds.len() {
                    return Err(Error::Format("forest tree count mismatch".into()));
                }
                for t in &rec.trees {
                    t.validate()?;
                }
                Classifier::Forest(ForestModel {
                    trees: rec.trees,
                    tree_seeds: rec.tree_seeds,
                    params: rec.params,
                })
            }
            "knn" => {
                let rec = doc.knn.as_ref().ok_or_else(|| missing("knn"))?;
                let train_ref = model_dir.join(&rec.train_ref);
                let data = read_dataset(&train_ref)?;
                let model = KnnModel::new(data.features, data.leaves, rec.k, rec.n_classes)?;
                Classifier::Knn { model, train_ref }
            }
            other => return Err(Error::Format(format!("unknown model kind `{other}`"))),
        };
        let model = SavedModel {
            name: doc.name,
            leaf_names: doc.leaf_names,
            provenance: doc.provenance,
            preprocessing,
            classifier,
        };
        model.check_dims()?;
        Ok(model)
    }

    fn check_dims(&self) -> Result<()> {
        let dim = self.input_dim();
        let inner = match &self.classifier {
            Classifier::Flat(m) => m.mlp.input_dim(),
            Classifier::Node(m) => m.input_dim(),
            Classifier::Lcpn(m) => m.input_dim(),
            Classifier::Tree(t) => t.n_features,
            Classifier::Forest(f) => f.trees[0].n_features,
            Classifier::Knn { model, .. } => model.train.ncols(),
        };
        if inner != dim {
            return Err(Error::Dimension {
                expected: dim,
                got: inner,
            });
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let dir = path.parent().unwrap_or(Path::new("."));
        std::fs::write(path, self.to_toml(dir)?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text, path.parent().unwrap_or(Path::new(".")))
    }
}

#[derive(Serialize, Deserialize)]
struct PreprocessingDocument {
    format: String,
    version: u32,
    provenance: Provenance,
    preprocessing: PreprocessingRecord,
}

/// Stores the imputation means and scaler fitted on the training split.
pub fn save_preprocessing(path: &Path, preprocessing: &Preprocessing, provenance: &Provenance) -> Result<()> {
    let doc = PreprocessingDocument {
        format: PREPROCESSING_FORMAT.into(),
        version: VERSION,
        provenance: provenance.clone(),
        preprocessing: PreprocessingRecord::from_model(preprocessing),
    };
    let text = toml::to_string(&doc).map_err(|e| Error::Format(e.to_string()))?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn load_preprocessing(path: &Path) -> Result<Preprocessing> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let doc: PreprocessingDocument = toml::from_str(&text).map_err(|e| Error::Format(e.to_string()))?;
    if doc.format != PREPROCESSING_FORMAT || doc.version != VERSION {
        return Err(Error::Format(format!(
            "{}: expected {PREPROCESSING_FORMAT} version {VERSION}",
            path.display()
        )));
    }
    doc.preprocessing.to_model()
}

fn expand_binary(model: &MlpModel, probs: Vec<f64>) -> Vec<f64> {
    if model.config.output_dim == 1 {
        vec![1.0 - probs[0], probs[0]]
    } else {
        probs
    }
}

/// Writes `magic, rows: u64, cols: u64, features (row-major f64), leaves (u32),
/// parents (u32)`, all little-endian.
pub fn write_dataset(path: &Path, data: &Dataset) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut put = |bytes: &[u8]| w.write_all(bytes).map_err(|e| Error::io(path, e));
    put(DATASET_MAGIC)?;
    put(&(data.len() as u64).to_le_bytes())?;
    put(&(data.dim() as u64).to_le_bytes())?;
    for v in data.features.iter() {
        put(&v.to_le_bytes())?;
    }
    for &l in &data.leaves {
        put(&(l as u32).to_le_bytes())?;
    }
    for &p in &data.parents {
        put(&(p as u32).to_le_bytes())?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_dataset(path: &Path) -> Result<Dataset> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = BufReader::new(file);
    let mut take = |n: usize| -> Result<Vec<u8>> {
        let mut buf = vec![0u8; n];
        r.read_exact(&mut buf).map_err(|e| Error::io(path, e))?;
        Ok(buf)
    };
    if take(8)? != DATASET_MAGIC {
        return Err(Error::Format(format!("{} is not a prepared dataset", path.display())));
    }
    let word = |b: Vec<u8>| u64::from_le_bytes(b.try_into().expect("8 bytes")) as usize;
    let rows = word(take(8)?);
    let cols = word(take(8)?);
    let cells = rows
        .checked_mul(cols)
        .filter(|c| *c < (1 << 36))
        .ok_or_else(|| Error::Format("implausible dataset size".into()))?;
    let features: Vec<f64> = take(cells * 8)?
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    let labels = |b: Vec<u8>| -> Vec<usize> {
        b.chunks_exact(4)
            .map(|c| u32::from_le_bytes(c.try_into().expect("4 bytes")) as usize)
            .collect()
    };
    let leaves = labels(take(rows * 4)?);
    let parents = labels(take(rows * 4)?);
    Ok(Dataset {
        features: Array2::from_shape_vec((rows, cols), features)
            .map_err(|e| Error::Format(e.to_string()))?,
        leaves,
        parents,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::tree_fit;
    use crate::ingest::LabelConfig;
    use crate::nn::{MlpConfig, OutputActivation};
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn provenance() -> Provenance {
        Provenance {
            config_hash: "abc".into(),
            seeds: [("master".to_string(), 42u64)].into_iter().collect(),
        }
    }

    fn preprocessing(d: usize) -> Preprocessing {
        Preprocessing {
            means: (0..d).map(|i| i as f64 / 3.0).collect(),
            scaler: Some(Standardizer {
                mean: vec![0.1; d],
                std: vec![std::f64::consts::PI; d],
            }),
        }
    }

    #[test]
    fn flat_model_round_trip_is_bit_exact() {
        let config = MlpConfig {
            input_dim: 4,
            hidden_dims: vec![5, 3],
            output_dim: 6,
            seed: 9,
            ..Default::default()
        };
        let mut mlp = MlpModel::init(config, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        mlp.class_weights = vec![0.1, 1.0 / 3.0, 2.0, 5.5, 1e-7, 0.7];
        let saved = SavedModel {
            name: "flat".into(),
            leaf_names: LabelConfig::default().leaf_names(),
            provenance: provenance(),
            preprocessing: preprocessing(4),
            classifier: Classifier::Flat(FlatModel {
                mlp,
                leaf_names: LabelConfig::default().leaf_names(),
                preprocessing: preprocessing(4),
            }),
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("flat.model");
        saved.save(&path).unwrap();
        let loaded = SavedModel::load(&path).unwrap();
        assert_eq!(loaded, saved);
        // Saving again reproduces the same bytes.
        let first = std::fs::read(&path).unwrap();
        loaded.save(&path).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), first);
    }

    #[test]
    fn tree_and_knn_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let x = array![[0.1, 1.0], [0.35, -2.0], [0.9, 0.3], [0.7, 0.2]];
        let data = Dataset {
            features: x.clone(),
            leaves: vec![0, 0, 4, 4],
            parents: vec![0, 0, 1, 1],
        };
        let train_path = dir.path().join("train.hds");
        write_dataset(&train_path, &data).unwrap();
        assert_eq!(read_dataset(&train_path).unwrap(), data);

        let tree = tree_fit(x.view(), &data.leaves, 6, 20).unwrap();
        let knn = KnnModel::new(x.clone(), data.leaves.clone(), 3, 6).unwrap();
        for classifier in [
            Classifier::Tree(tree),
            Classifier::Knn {
                model: knn,
                train_ref: train_path.clone(),
            },
        ] {
            let saved = SavedModel {
                name: "b".into(),
                leaf_names: LabelConfig::default().leaf_names(),
                provenance: provenance(),
                preprocessing: Preprocessing::identity(2),
                classifier,
            };
            let path = dir.path().join(format!("{}.model", saved.classifier.kind()));
            saved.save(&path).unwrap();
            assert_eq!(SavedModel::load(&path).unwrap(), saved);
        }
        let text = std::fs::read_to_string(dir.path().join("knn.model")).unwrap();
        assert!(text.contains("train_ref = \"train.hds\""));
    }

    #[test]
    fn rejects_wrong_format_and_version() {
        let dir = Path::new(".");
        assert!(matches!(SavedModel::from_toml("format = \"x\"", dir), Err(Error::Format(_))));
        let saved = SavedModel {
            name: "n".into(),
            leaf_names: vec!["a".into(), "b".into()],
            provenance: provenance(),
            preprocessing: Preprocessing::identity(2),
            classifier: Classifier::Node(
                MlpModel::zeros(MlpConfig {
                    input_dim: 2,
                    hidden_dims: vec![],
                    output_dim: 1,
                    output_activation: OutputActivation::Sigmoid,
                    ..Default::default()
                })
                .unwrap(),
            ),
        };
        let text = saved.to_toml(dir).unwrap().replace("version = 1", "version = 99");
        assert!(SavedModel::from_toml(&text, dir).unwrap_err().to_string().contains("version 99"));
    }

    #[test]
    fn preprocessing_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("preprocessing.toml");
        save_preprocessing(&path, &preprocessing(3), &provenance()).unwrap();
        assert_eq!(load_preprocessing(&path).unwrap(), preprocessing(3));
        std::fs::write(&path, "format = \"other\"").unwrap();
        assert!(load_preprocessing(&path).is_err());
    }

    #[test]
    fn dimension_mismatch_is_reported_on_load() {
        let dir = Path::new(".");
        let mlp = MlpModel::zeros(MlpConfig {
            input_dim: 3,
            hidden_dims: vec![],
            output_dim: 2,
            ..Default::default()
        })
        .unwrap();
        let saved = SavedModel {
            name: "n".into(),
            leaf_names: vec!["a".into(), "b".into()],
            provenance: provenance(),
            preprocessing: Preprocessing::identity(5),
            classifier: Classifier::Node(mlp),
        };
        let text = saved.to_toml(dir).unwrap();
        assert!(matches!(SavedModel::from_toml(&text, dir), Err(Error::Dimension { .. })));
    }
}
