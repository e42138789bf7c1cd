//! Training behavior of the networks, the hierarchy and the baselines on
//! small generated datasets.

mod common;

use hharnet::baselines::{forest_fit, tree_fit, ForestParams};
use hharnet::hierarchy::{train_flat, train_lcpn, HierarchySpec, LcpnConfigs};
use hharnet::ingest::{LabelConfig, Preprocessing};
use hharnet::metrics::{accuracy, confusion};
use hharnet::nn::{class_weights, train, MlpConfig, OutputActivation};

fn quick(input_dim: usize, output_dim: usize, head: OutputActivation, seed: u64) -> MlpConfig {
    MlpConfig {
        input_dim,
        hidden_dims: vec![16, 8],
        output_dim,
        output_activation: head,
        dropout_rate: 0.1,
        learning_rate: 1e-2,
        batch_size: 32,
        max_epochs: 40,
        patience: 5,
        seed,
        ..Default::default()
    }
}

#[test]
fn two_blobs_are_learned() {
    let centers = vec![vec![-2.0, -1.0], vec![2.0, 1.0]];
    let (x, y) = common::blobs(&centers, 100, 1.5, 11);
    let (vx, vy) = common::blobs(&centers, 50, 1.5, 12);
    // The oracle shows the blobs are separable enough for the target.
    let oracle = common::nearest_centroid_accuracy(&x, &y, &vx, &vy, 2);
    assert!(oracle >= 0.98, "nearest-centroid oracle reached only {oracle}");

    let config = quick(2, 2, OutputActivation::Softmax, 5);
    let weights = class_weights(&[100, 100]).unwrap();
    let (model, report) = train(&config, x.view(), &y, vx.view(), &vy, &weights).unwrap();
    let acc = report.val_accuracy[report.best_epoch];
    assert!(acc >= 0.98, "validation accuracy {acc}");
    let preds = model.predict_batch(vx.view()).unwrap();
    let hits = preds.iter().zip(&vy).filter(|(p, t)| p == t).count();
    assert_eq!(hits as f64 / vy.len() as f64, acc);
}

#[test]
fn training_is_bit_reproducible() {
    let data = common::six_class_dataset(30, 4, 1.0, 3);
    let val = common::six_class_dataset(5, 4, 1.0, 4);
    let config = quick(4, 6, OutputActivation::Softmax, 77);
    let names = LabelConfig::default().leaf_names();
    let run = || train_flat(&data, &val, &config, names.clone(), Preprocessing::identity(4)).unwrap();
    let (a, ra) = run();
    let (b, rb) = run();
    assert_eq!(ra, rb);
    for (la, lb) in a.mlp.layers.iter().zip(&b.mlp.layers) {
        assert!(la.weights.iter().zip(&lb.weights).all(|(p, q)| p.to_bits() == q.to_bits()));
        assert!(la.bias.iter().zip(&lb.bias).all(|(p, q)| p.to_bits() == q.to_bits()));
    }
    let (c, _) = train_flat(
        &data,
        &val,
        &MlpConfig { seed: 78, ..config },
        names,
        Preprocessing::identity(4),
    )
    .unwrap();
    assert_ne!(a.mlp.layers, c.mlp.layers);
}

#[test]
fn inference_leaves_the_model_untouched() {
    let data = common::six_class_dataset(10, 3, 1.0, 8);
    let config = quick(3, 6, OutputActivation::Softmax, 1);
    let names = LabelConfig::default().leaf_names();
    let (model, _) = train_flat(&data, &data, &config, names, Preprocessing::identity(3)).unwrap();
    let before = model.clone();
    model.predict_flat_batch(data.features.view()).unwrap();
    model.predict_flat(&[0.0, 1.0, 2.0]).unwrap();
    assert_eq!(model, before);
}

fn lcpn_configs(d: usize, spec: &HierarchySpec, child_seeds: [u64; 2]) -> LcpnConfigs {
    LcpnConfigs::from_base(&quick(d, 6, OutputActivation::Softmax, 0), spec, 21, &child_seeds)
}

#[test]
fn retraining_one_child_leaves_the_others_bit_identical() {
    let spec = HierarchySpec::from_labels(&LabelConfig::default());
    let train_set = common::six_class_dataset(20, 3, 1.5, 31);
    let val = common::six_class_dataset(4, 3, 1.5, 32);
    let a = train_lcpn(&train_set, &val, &spec, &lcpn_configs(3, &spec, [1, 2]), Preprocessing::identity(3)).unwrap();
    let b = train_lcpn(&train_set, &val, &spec, &lcpn_configs(3, &spec, [1, 99]), Preprocessing::identity(3)).unwrap();
    assert_eq!(a.model.root, b.model.root);
    assert_eq!(a.model.children[0], b.model.children[0]);
    assert_ne!(a.model.children[1], b.model.children[1]);
    let again = train_lcpn(&train_set, &val, &spec, &lcpn_configs(3, &spec, [1, 2]), Preprocessing::identity(3)).unwrap();
    assert_eq!(again.model, a.model);
}

#[test]
fn level0_accuracy_equals_coarsened_topdown_accuracy() {
    let spec = HierarchySpec::from_labels(&LabelConfig::default());
    // Wide spread so the root makes some mistakes.
    let train_set = common::six_class_dataset(20, 3, 7.0, 41);
    let val = common::six_class_dataset(5, 3, 7.0, 42);
    let test = common::six_class_dataset(30, 3, 7.0, 43);
    let t = train_lcpn(&train_set, &val, &spec, &lcpn_configs(3, &spec, [5, 6]), Preprocessing::identity(3)).unwrap();
    let root_only = t.model.root.predict_batch(test.features.view()).unwrap();
    let td = t.model.predict_topdown_batch(test.features.view()).unwrap();
    let owner = spec.leaf_to_parent();
    let coarse: Vec<usize> = td.leaves.iter().map(|&l| owner[l]).collect();
    assert_eq!(coarse, root_only);
    let a = accuracy(&confusion(&test.parents, &root_only, 2).unwrap()).unwrap();
    let b = accuracy(&confusion(&test.parents, &coarse, 2).unwrap()).unwrap();
    assert_eq!(a, b);
    assert!(a < 1.0, "spread should produce some root errors");
}

#[test]
fn flat_and_topdown_agree_when_both_are_right() {
    let spec = HierarchySpec::from_labels(&LabelConfig::default());
    let train_set = common::six_class_dataset(25, 3, 0.8, 51);
    let val = common::six_class_dataset(5, 3, 0.8, 52);
    let test = common::six_class_dataset(20, 3, 0.8, 53);
    let names = LabelConfig::default().leaf_names();
    let (flat, _) = train_flat(
        &train_set,
        &val,
        &quick(3, 6, OutputActivation::Softmax, 8),
        names,
        Preprocessing::identity(3),
    )
    .unwrap();
    let t = train_lcpn(&train_set, &val, &spec, &lcpn_configs(3, &spec, [9, 10]), Preprocessing::identity(3)).unwrap();
    let f = flat.predict_flat_batch(test.features.view()).unwrap();
    let h = t.model.predict_topdown_batch(test.features.view()).unwrap().leaves;
    assert_eq!(f, test.leaves);
    assert_eq!(h, test.leaves);
    assert_eq!(f, h);
}

#[test]
fn tree_training_accuracy_grows_with_depth() {
    let data = common::six_class_dataset(40, 4, 6.0, 61);
    let mut last = 0.0;
    for depth in 0..=12 {
        let tree = tree_fit(data.features.view(), &data.leaves, 6, depth).unwrap();
        let preds: Vec<usize> = data
            .features
            .rows()
            .into_iter()
            .map(|r| tree.tree_predict(&r.to_vec()).unwrap())
            .collect();
        let acc = accuracy(&confusion(&data.leaves, &preds, 6).unwrap()).unwrap();
        assert!(acc >= last, "depth {depth}: {acc} < {last}");
        assert!(tree.depth() <= depth);
        last = acc;
    }
    assert!(last > 0.9);
}

#[test]
fn forest_is_deterministic_and_scheduling_independent() {
    let data = common::six_class_dataset(30, 5, 3.0, 71);
    let params = ForestParams::for_features(5, 123);
    let a = forest_fit(data.features.view(), &data.leaves, 6, &params).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let b = pool.install(|| forest_fit(data.features.view(), &data.leaves, 6, &params).unwrap());
    assert_eq!(a, b);
}
