//! Local classifier per parent node: a binary root network picks the parent
//! group, then that group's own network picks the leaf.

use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{Dataset, LabelConfig, ParentGroup, Preprocessing};
use crate::nn::{self, MlpConfig, MlpModel, OutputActivation, TrainReport};

/// Two-level label tree. Within each parent, leaf order follows `leaves`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HierarchySpec {
    pub root_name: String,
    pub parents: Vec<ParentGroup>,
    pub leaf_names: Vec<String>,
}

impl HierarchySpec {
    pub fn from_labels(config: &LabelConfig) -> Self {
        HierarchySpec {
            root_name: "activity".into(),
            parents: config.parents().to_vec(),
            leaf_names: config.leaf_names(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.parents.len() != 2 {
            return Err(Error::Format(format!(
                "hierarchy needs 2 parents, found {}",
                self.parents.len()
            )));
        }
        let mut seen = vec![false; self.leaf_names.len()];
        for group in &self.parents {
            for &leaf in &group.leaves {
                match seen.get_mut(leaf) {
                    Some(s) if !*s => *s = true,
                    _ => return Err(Error::Format(format!("leaf {leaf} is not partitioned"))),
                }
            }
        }
        if seen.contains(&false) {
            return Err(Error::Format("some leaf has no parent".into()));
        }
        Ok(())
    }

    pub fn n_leaves(&self) -> usize {
        self.leaf_names.len()
    }

    /// `(parent, index within parent)` of a global leaf id.
    pub fn locate(&self, leaf: usize) -> Option<(usize, usize)> {
        self.parents.iter().enumerate().find_map(|(p, g)| {
            g.leaves.iter().position(|&l| l == leaf).map(|i| (p, i))
        })
    }

    /// Parent id of each leaf.
    pub fn leaf_to_parent(&self) -> Vec<usize> {
        (0..self.n_leaves())
            .map(|l| self.locate(l).map_or(usize::MAX, |(p, _)| p))
            .collect()
    }
}

/// Samples routed to one child node, labeled by their index within the parent.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeSet {
    pub features: Array2<f64>,
    pub labels: Vec<usize>,
}

impl NodeSet {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Training data for every node. The root reuses the full feature matrix.
pub struct NodeDatasets<'a> {
    pub root_features: ArrayView2<'a, f64>,
    pub root_labels: &'a [usize],
    pub children: Vec<NodeSet>,
}

/// Routes each sample to its true parent's node set.
pub fn build_node_datasets<'a>(data: &'a Dataset, spec: &HierarchySpec) -> Result<NodeDatasets<'a>> {
    let mut routed: Vec<(Vec<usize>, Vec<usize>)> = vec![Default::default(); spec.parents.len()];
    for (i, &leaf) in data.leaves.iter().enumerate() {
        let (p, local) = spec
            .locate(leaf)
            .ok_or_else(|| Error::Config(format!("leaf {leaf} is not in the hierarchy")))?;
        if data.parents[i] != p {
            return Err(Error::Config(format!(
                "sample {i}: parent label {} disagrees with leaf {leaf}",
                data.parents[i]
            )));
        }
        routed[p].0.push(i);
        routed[p].1.push(local);
    }
    let children = routed
        .into_iter()
        .zip(&spec.parents)
        .map(|((rows, labels), group)| {
            if rows.is_empty() {
                return Err(Error::EmptyClass(group.name.clone()));
            }
            Ok(NodeSet {
                features: data.features.select(Axis(0), &rows),
                labels,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(NodeDatasets {
        root_features: data.features.view(),
        root_labels: &data.parents,
        children,
    })
}

/// Network settings for each node of the hierarchy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LcpnConfigs {
    pub root: MlpConfig,
    pub children: Vec<MlpConfig>,
}

impl LcpnConfigs {
    /// Same architecture and training settings everywhere; heads sized per node.
    pub fn from_base(base: &MlpConfig, spec: &HierarchySpec, root_seed: u64, child_seeds: &[u64]) -> Self {
        let root = MlpConfig {
            output_dim: 1,
            output_activation: OutputActivation::Sigmoid,
            seed: root_seed,
            ..base.clone()
        };
        let children = spec
            .parents
            .iter()
            .zip(child_seeds)
            .map(|(g, &seed)| MlpConfig {
                output_dim: g.leaves.len(),
                output_activation: OutputActivation::Softmax,
                seed,
                ..base.clone()
            })
            .collect();
        LcpnConfigs { root, children }
    }

    fn validate(&self, spec: &HierarchySpec) -> Result<()> {
        if self.root.output_activation != OutputActivation::Sigmoid || self.root.output_dim != 1 {
            return Err(Error::Config("root node needs a single sigmoid output".into()));
        }
        if self.children.len() != spec.parents.len() {
            return Err(Error::Config(format!(
                "expected {} child configs, got {}",
                spec.parents.len(),
                self.children.len()
            )));
        }
        for (c, g) in self.children.iter().zip(&spec.parents) {
            if c.output_activation != OutputActivation::Softmax || c.output_dim != g.leaves.len() {
                return Err(Error::Config(format!(
                    "child `{}` needs a {}-way softmax head",
                    g.name,
                    g.leaves.len()
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LcpnModel {
    pub hierarchy: HierarchySpec,
    pub root: MlpModel,
    /// Indexed like `hierarchy.parents`.
    pub children: Vec<MlpModel>,
    pub preprocessing: Preprocessing,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LcpnTraining {
    pub model: LcpnModel,
    pub root_report: TrainReport,
    pub child_reports: Vec<TrainReport>,
}

/// Top-down decisions for a batch.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TopDown {
    pub parents: Vec<usize>,
    pub leaves: Vec<usize>,
}

fn train_node(
    name: &str,
    config: &MlpConfig,
    train: (ArrayView2<f64>, &[usize]),
    val: (ArrayView2<f64>, &[usize]),
) -> Result<(MlpModel, TrainReport)> {
    let run = || {
        let mut counts = vec![0; config.n_classes()];
        for &y in train.1 {
            counts[y] += 1;
        }
        let weights = nn::class_weights(&counts)?;
        nn::train(config, train.0, train.1, val.0, val.1, &weights)
    };
    run().map_err(|e| e.in_node(name))
}

/// Trains the root and every child independently; each gets inverse-frequency
/// class weights from its own node data. The three trainings run concurrently.
pub fn train_lcpn(
    train: &Dataset,
    val: &Dataset,
    spec: &HierarchySpec,
    configs: &LcpnConfigs,
    preprocessing: Preprocessing,
) -> Result<LcpnTraining> {
    spec.validate()?;
    configs.validate(spec)?;
    let train_nodes = build_node_datasets(train, spec)?;
    let val_nodes = build_node_datasets(val, spec).map_err(|e| e.in_node("validation"))?;

    let (root, children) = rayon::join(
        || {
            train_node(
                &spec.root_name,
                &configs.root,
                (train_nodes.root_features, train_nodes.root_labels),
                (val_nodes.root_features, val_nodes.root_labels),
            )
        },
        || {
            use rayon::prelude::*;
            (0..spec.parents.len())
                .into_par_iter()
                .map(|p| {
                    let t = &train_nodes.children[p];
                    let v = &val_nodes.children[p];
                    train_node(
                        &spec.parents[p].name,
                        &configs.children[p],
                        (t.features.view(), &t.labels),
                        (v.features.view(), &v.labels),
                    )
                })
                .collect::<Result<Vec<_>>>()
        },
    );
    let (root, root_report) = root?;
    let (children, child_reports): (Vec<_>, Vec<_>) = children?.into_iter().unzip();
    Ok(LcpnTraining {
        model: LcpnModel {
            hierarchy: spec.clone(),
            root,
            children,
            preprocessing,
        },
        root_report,
        child_reports,
    })
}

impl LcpnModel {
    pub fn input_dim(&self) -> usize {
        self.root.input_dim()
    }

    /// Root decides the parent (sigmoid >= 0.5 selects parent 1); only that
    /// parent's child is evaluated.
    pub fn predict_topdown(&self, x: &[f64]) -> Result<usize> {
        let parent = self.root.predict(x)?;
        let local = self.children[parent].predict(x)?;
        Ok(self.hierarchy.parents[parent].leaves[local])
    }

    pub fn predict_topdown_batch(&self, x: ArrayView2<f64>) -> Result<TopDown> {
        let parents = self.root.predict_batch(x)?;
        let mut leaves = vec![0; parents.len()];
        for (p, child) in self.children.iter().enumerate() {
            let rows: Vec<usize> = (0..parents.len()).filter(|&i| parents[i] == p).collect();
            if rows.is_empty() {
                continue;
            }
            let local = child.predict_batch(x.select(Axis(0), &rows).view())?;
            for (&i, l) in rows.iter().zip(local) {
                leaves[i] = self.hierarchy.parents[p].leaves[l];
            }
        }
        Ok(TopDown { parents, leaves })
    }
}

/// Single six-way network over all leaves.
#[derive(Clone, Debug, PartialEq)]
pub struct FlatModel {
    pub mlp: MlpModel,
    pub leaf_names: Vec<String>,
    pub preprocessing: Preprocessing,
}

impl FlatModel {
    pub fn predict_flat(&self, x: &[f64]) -> Result<usize> {
        self.mlp.predict(x)
    }

    pub fn predict_flat_batch(&self, x: ArrayView2<f64>) -> Result<Vec<usize>> {
        self.mlp.predict_batch(x)
    }
}

/// Trains a softmax network over all leaves with inverse-frequency class weights.
pub fn train_flat(
    train: &Dataset,
    val: &Dataset,
    config: &MlpConfig,
    leaf_names: Vec<String>,
    preprocessing: Preprocessing,
) -> Result<(FlatModel, TrainReport)> {
    if config.output_activation != OutputActivation::Softmax || config.output_dim != leaf_names.len() {
        return Err(Error::Config(format!(
            "flat model needs a {}-way softmax head",
            leaf_names.len()
        )));
    }
    let counts = train.leaf_counts(leaf_names.len());
    let weights = nn::class_weights(&counts).map_err(|e| match e {
        Error::EmptyClass(k) => {
            let name = k.parse::<usize>().ok().and_then(|i| leaf_names.get(i).cloned());
            Error::EmptyClass(name.unwrap_or(k))
        }
        other => other,
    })?;
    let (mlp, report) = nn::train(
        config,
        train.features.view(),
        &train.leaves,
        val.features.view(),
        &val.leaves,
        &weights,
    )?;
    Ok((
        FlatModel {
            mlp,
            leaf_names,
            preprocessing,
        },
        report,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Layer;
    use ndarray::{array, Array1};

    fn labels() -> LabelConfig {
        LabelConfig::default()
    }

    fn dataset(leaves: Vec<usize>) -> Dataset {
        let n = leaves.len();
        let features = Array2::from_shape_fn((n, 2), |(i, j)| (i * 2 + j) as f64);
        Dataset::new(features, leaves, &labels()).unwrap()
    }

    #[test]
    fn node_partition_counts() {
        let mut leaves = vec![0, 1, 2, 0, 1, 2, 0, 1, 2, 1];
        leaves.extend([3, 4, 5, 3, 5]);
        let data = dataset(leaves);
        let spec = HierarchySpec::from_labels(&labels());
        let nodes = build_node_datasets(&data, &spec).unwrap();
        assert_eq!(nodes.root_labels.len(), 15);
        assert_eq!(nodes.children[0].len(), 10);
        assert_eq!(nodes.children[1].len(), 5);
        assert_eq!(nodes.children[1].labels, vec![0, 1, 2, 0, 2]);
        // Row 10 (walking) is the first non-stationary sample.
        assert_eq!(nodes.children[1].features.row(0), data.features.row(10));
    }

    #[test]
    fn walking_is_first_within_non_stationary() {
        let spec = HierarchySpec::from_labels(&labels());
        assert_eq!(spec.locate(3), Some((1, 0)));
        assert_eq!(spec.locate(5), Some((1, 2)));
        assert_eq!(spec.locate(0), Some((0, 0)));
    }

    #[test]
    fn empty_parent_is_named() {
        let data = dataset(vec![0, 1, 2, 1]);
        let spec = HierarchySpec::from_labels(&labels());
        match build_node_datasets(&data, &spec) {
            Err(Error::EmptyClass(name)) => assert_eq!(name, "non-stationary"),
            other => panic!("unexpected {:?}", other.map(|_| ())),
        }
    }

    /// A model whose outputs are fixed by biases alone.
    fn constant_model(head: OutputActivation, bias: Vec<f64>) -> MlpModel {
        let config = MlpConfig {
            input_dim: 2,
            hidden_dims: vec![],
            output_dim: bias.len(),
            output_activation: head,
            ..Default::default()
        };
        let layers = vec![Layer {
            weights: Array2::zeros((2, bias.len())),
            bias: Array1::from(bias),
        }];
        let n = config.n_classes();
        MlpModel::from_parts(config, layers, vec![1.0; n]).unwrap()
    }

    fn routed(root_logit: f64) -> LcpnModel {
        LcpnModel {
            hierarchy: HierarchySpec::from_labels(&labels()),
            root: constant_model(OutputActivation::Sigmoid, vec![root_logit]),
            // stationary child favors lying down, non-stationary child favors running
            children: vec![
                constant_model(OutputActivation::Softmax, vec![2.0, 0.0, 0.0]),
                constant_model(OutputActivation::Softmax, vec![0.0, 2.0, 0.0]),
            ],
            preprocessing: Preprocessing::identity(2),
        }
    }

    #[test]
    fn topdown_routing_examples() {
        // sigmoid(2.2) ~ 0.9, sigmoid(-2.2) ~ 0.1
        assert_eq!(routed(2.2).predict_topdown(&[0.0, 0.0]).unwrap(), 4);
        assert_eq!(routed(-2.2).predict_topdown(&[0.0, 0.0]).unwrap(), 0);
        let batch = routed(2.2).predict_topdown_batch(array![[0.0, 1.0], [2.0, 3.0]].view()).unwrap();
        assert_eq!(batch.parents, vec![1, 1]);
        assert_eq!(batch.leaves, vec![4, 4]);
    }

    #[test]
    fn config_shapes_checked() {
        let spec = HierarchySpec::from_labels(&labels());
        let base = MlpConfig::default();
        let mut c = LcpnConfigs::from_base(&base, &spec, 1, &[2, 3]);
        assert!(c.validate(&spec).is_ok());
        assert_eq!(c.children[1].output_dim, 3);
        c.children[0].output_dim = 6;
        assert!(c.validate(&spec).is_err());
    }
}
