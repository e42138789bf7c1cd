//! The subcommands behind the `hharnet` binary.
//!
//! Every command reads a [`RunConfig`] and works inside one output directory:
//!
//! | command    | reads                               | writes                                   |
//! |------------|-------------------------------------|------------------------------------------|
//! | prepare    | manifest and user files             | `{train,val,test}.hds`, `preprocessing.toml`, `prepared.toml` |
//! | train      | prepared splits                     | `<model>.model`, `<model>.train.toml`    |
//! | evaluate   | a model file, `test.hds`            | `<model>.eval.txt`, `<model>.eval.toml`  |
//! | compare    | every `<model>.model`               | `compare.txt`, `compare.toml`            |
//! | gridsearch | prepared splits                     | `gridsearch.txt`, `gridsearch.toml`      |
//!
//! Outputs are byte-identical across reruns with the same config hash.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;

use crate::baselines::{forest_fit, tree_fit, KnnModel};
use crate::config::{short_sha, GridSection, RunConfig};
use crate::container::{
    load_preprocessing, read_dataset, save_preprocessing, write_dataset, Classifier, Provenance, SavedModel, FORMAT,
    VERSION,
};
use crate::error::{Error, Result};
use crate::evaluate::evaluate;
use crate::hierarchy::{train_flat, train_lcpn, HierarchySpec};
use crate::ingest::{self, Dataset, LabelConfig, Preprocessing};
use crate::nn::{MlpConfig, TrainReport};
use crate::report::{key, kv_get, kv_metric, parse_kv, pct, render_benchmark, KvDoc, RowResult, TextTable, REFERENCE};
use crate::synth::{write_synthetic, SynthSpec};

pub const TRAIN_FILE: &str = "train.hds";
pub const VAL_FILE: &str = "val.hds";
pub const TEST_FILE: &str = "test.hds";
pub const PREPROCESSING_FILE: &str = "preprocessing.toml";
pub const PREPARED_FILE: &str = "prepared.toml";

pub const MODEL_NAMES: [&str; 6] = ["flat", "hhar", "dt", "knn", "rf", "mlp64"];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelName {
    Flat,
    Hhar,
    Dt,
    Knn,
    Rf,
    Mlp64,
}

impl ModelName {
    pub fn as_str(&self) -> &'static str {
        match self {
            ModelName::Flat => "flat",
            ModelName::Hhar => "hhar",
            ModelName::Dt => "dt",
            ModelName::Knn => "knn",
            ModelName::Rf => "rf",
            ModelName::Mlp64 => "mlp64",
        }
    }
}

impl FromStr for ModelName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "flat" => ModelName::Flat,
            "hhar" => ModelName::Hhar,
            "dt" => ModelName::Dt,
            "knn" => ModelName::Knn,
            "rf" => ModelName::Rf,
            "mlp64" => ModelName::Mlp64,
            _ => {
                return Err(Error::Usage(format!(
                    "unknown model `{s}`; valid models: {}",
                    MODEL_NAMES.join(", ")
                )))
            }
        })
    }
}

fn provenance(config: &RunConfig) -> Provenance {
    Provenance {
        config_hash: config.hash(),
        seeds: config.seeds(),
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn create_out(out: &Path) -> Result<()> {
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))
}

fn hyphenated(dims: &[usize]) -> String {
    dims.iter().map(usize::to_string).collect::<Vec<_>>().join("-")
}

/// Reads the manifest, ingests every user file and writes the prepared splits.
/// Returns the class-count summary.
pub fn cmd_prepare(config: &RunConfig, out: &Path) -> Result<String> {
    let files = ingest::read_manifest(&config.manifest)?;
    let labels = config.label_config()?;
    let prepared = ingest::prepare(&files, &labels, &config.split_spec(), config.standardize)?;
    create_out(out)?;
    let prov = provenance(config);
    write_dataset(&out.join(TRAIN_FILE), &prepared.train)?;
    write_dataset(&out.join(VAL_FILE), &prepared.val)?;
    write_dataset(&out.join(TEST_FILE), &prepared.test)?;
    save_preprocessing(&out.join(PREPROCESSING_FILE), &prepared.preprocessing, &prov)?;

    let names = labels.leaf_names();
    let n = names.len();
    let splits = [("train", &prepared.train), ("val", &prepared.val), ("test", &prepared.test)];
    let counts: Vec<Vec<usize>> = splits.iter().map(|(_, d)| d.leaf_counts(n)).collect();

    let mut doc = KvDoc::new("prepared", &prov);
    doc.text("data_hash", &config.data_hash());
    let s = &prepared.stats;
    doc.int("ingest.files", s.files as u64);
    doc.int("ingest.rows", s.rows as u64);
    doc.int("ingest.kept", s.kept as u64);
    doc.int("ingest.unlabeled", s.unlabeled as u64);
    doc.int("ingest.conflicts", s.conflicts as u64);
    doc.int("features", prepared.train.dim() as u64);
    doc.flag("standardize", config.standardize);
    for ((split, data), c) in splits.iter().zip(&counts) {
        doc.int(&format!("counts.{split}.total"), data.len() as u64);
        for (name, k) in names.iter().zip(c) {
            doc.int(&format!("counts.{split}.{}", key(name)), *k as u64);
        }
    }
    write_file(&out.join(PREPARED_FILE), &doc.render())?;

    let mut t = TextTable::new(["class", "train", "val", "test", "total"]);
    for (i, name) in names.iter().enumerate() {
        let row: Vec<usize> = counts.iter().map(|c| c[i]).collect();
        let total: usize = row.iter().sum();
        t.row(std::iter::once(name.clone()).chain(row.iter().chain([&total]).map(usize::to_string)));
    }
    let totals: Vec<usize> = splits.iter().map(|(_, d)| d.len()).collect();
    t.row(
        std::iter::once("total".to_string())
            .chain(totals.iter().chain([&s.kept]).map(usize::to_string)),
    );
    let mut text = format!(
        "Read {} rows from {} files: kept {}, dropped {} unlabeled and {} with conflicting labels\n\n",
        s.rows, s.files, s.kept, s.unlabeled, s.conflicts
    );
    text.push_str(&t.render());
    Ok(text)
}

fn missing_prepared(out: &Path) -> Error {
    Error::Config(format!(
        "no prepared data in {}; run `hharnet prepare --config <file> --out {}` first",
        out.display(),
        out.display()
    ))
}

/// Checks that `out` holds prepared data built from this config's data settings.
fn check_prepared(config: &RunConfig, out: &Path) -> Result<()> {
    let path = out.join(PREPARED_FILE);
    if !path.is_file() {
        return Err(missing_prepared(out));
    }
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let doc = parse_kv(&text)?;
    let found = kv_get(&doc, "data_hash").and_then(|v| v.as_str()).unwrap_or("");
    if found != config.data_hash() {
        return Err(Error::Config(format!(
            "prepared data in {} was built with other data settings (data hash {found}, config wants {}); rerun `hharnet prepare`",
            out.display(),
            config.data_hash()
        )));
    }
    Ok(())
}

fn load_split(out: &Path, file: &str) -> Result<Dataset> {
    let path = out.join(file);
    if !path.is_file() {
        return Err(missing_prepared(out));
    }
    read_dataset(&path)
}

struct TrainingData {
    train: Dataset,
    val: Dataset,
    preprocessing: Preprocessing,
}

fn load_training(config: &RunConfig, out: &Path) -> Result<TrainingData> {
    check_prepared(config, out)?;
    let train = load_split(out, TRAIN_FILE)?;
    let val = load_split(out, VAL_FILE)?;
    let preprocessing = load_preprocessing(&out.join(PREPROCESSING_FILE))?;
    if preprocessing.dim() != train.dim() || val.dim() != train.dim() {
        return Err(Error::Dimension {
            expected: train.dim(),
            got: preprocessing.dim(),
        });
    }
    Ok(TrainingData {
        train,
        val,
        preprocessing,
    })
}

fn put_history(doc: &mut KvDoc, prefix: &str, config: &MlpConfig, report: &TrainReport) {
    doc.text(&format!("{prefix}.hidden_dims"), &hyphenated(&config.hidden_dims));
    doc.int(&format!("{prefix}.seed"), config.seed);
    doc.int(&format!("{prefix}.epochs"), report.epochs() as u64);
    doc.int(&format!("{prefix}.best_epoch"), report.best_epoch as u64);
    doc.flag(&format!("{prefix}.stopped_early"), report.stopped_early);
    doc.float(&format!("{prefix}.best_val_loss"), report.val_loss[report.best_epoch]);
    doc.float(&format!("{prefix}.best_val_accuracy"), report.val_accuracy[report.best_epoch]);
    for e in 0..report.epochs() {
        doc.float(&format!("{prefix}.epoch.{e:03}.train_loss"), report.train_loss[e]);
        doc.float(&format!("{prefix}.epoch.{e:03}.val_loss"), report.val_loss[e]);
        doc.float(&format!("{prefix}.epoch.{e:03}.val_accuracy"), report.val_accuracy[e]);
    }
}

fn history_line(name: &str, config: &MlpConfig, report: &TrainReport) -> String {
    format!(
        "{name}: hidden {} | {} epochs, best epoch {} (val loss {:.4}, val accuracy {})\n",
        hyphenated(&config.hidden_dims),
        report.epochs(),
        report.best_epoch,
        report.val_loss[report.best_epoch],
        pct(Some(report.val_accuracy[report.best_epoch])),
    )
}

/// Trains one model on the prepared splits in `out` and saves it there.
pub fn cmd_train(config: &RunConfig, out: &Path, model: ModelName) -> Result<String> {
    let data = load_training(config, out)?;
    let labels = config.label_config()?;
    let spec = HierarchySpec::from_labels(&labels);
    let leaf_names = labels.leaf_names();
    let n = leaf_names.len();
    let d = data.train.dim();
    let prov = provenance(config);
    let name = model.as_str();
    let saved = |classifier: Classifier, name: &str, leaf_names: Vec<String>| SavedModel {
        name: name.to_string(),
        leaf_names,
        provenance: prov.clone(),
        preprocessing: data.preprocessing.clone(),
        classifier,
    };
    let mut doc = KvDoc::new("training", &prov);
    doc.text("model", name);
    doc.int("train_samples", data.train.len() as u64);
    doc.int("val_samples", data.val.len() as u64);
    let mut text = String::new();

    match model {
        ModelName::Flat | ModelName::Mlp64 => {
            let cfg = match model {
                ModelName::Flat => config.flat_config(d),
                _ => config.mlp64_config(d),
            };
            let (m, report) = train_flat(&data.train, &data.val, &cfg, leaf_names.clone(), data.preprocessing.clone())?;
            saved(Classifier::Flat(m), name, leaf_names).save(&out.join(format!("{name}.model")))?;
            put_history(&mut doc, "network", &cfg, &report);
            text.push_str(&history_line(name, &cfg, &report));
        }
        ModelName::Hhar => {
            let configs = config.lcpn_configs(d, &spec);
            let t = train_lcpn(&data.train, &data.val, &spec, &configs, data.preprocessing.clone())?;
            let parent_names: Vec<String> = spec.parents.iter().map(|g| g.name.clone()).collect();
            let root_name = format!("{name}.root");
            saved(Classifier::Node(t.model.root.clone()), &root_name, parent_names)
                .save(&out.join(format!("{root_name}.model")))?;
            put_history(&mut doc, "root", &configs.root, &t.root_report);
            text.push_str(&history_line(&root_name, &configs.root, &t.root_report));
            for (p, group) in spec.parents.iter().enumerate() {
                let node = format!("{name}.{}", key(&group.name));
                let names = group.leaves.iter().map(|&l| leaf_names[l].clone()).collect();
                saved(Classifier::Node(t.model.children[p].clone()), &node, names)
                    .save(&out.join(format!("{node}.model")))?;
                put_history(&mut doc, &key(&group.name), &configs.children[p], &t.child_reports[p]);
                text.push_str(&history_line(&node, &configs.children[p], &t.child_reports[p]));
            }
            saved(Classifier::Lcpn(t.model), name, leaf_names).save(&out.join(format!("{name}.model")))?;
        }
        ModelName::Dt => {
            let tree = tree_fit(data.train.features.view(), &data.train.leaves, n, config.baselines.tree_max_depth)?;
            doc.int("tree.max_depth", config.baselines.tree_max_depth as u64);
            doc.int("tree.depth", tree.depth() as u64);
            doc.int("tree.nodes", tree.nodes.len() as u64);
            text.push_str(&format!("{name}: depth {}, {} nodes\n", tree.depth(), tree.nodes.len()));
            saved(Classifier::Tree(tree), name, leaf_names).save(&out.join(format!("{name}.model")))?;
        }
        ModelName::Knn => {
            let k = config.baselines.knn_k;
            let knn = KnnModel::new(data.train.features.clone(), data.train.leaves.clone(), k, n)?;
            doc.int("knn.k", k as u64);
            doc.text("knn.train_ref", TRAIN_FILE);
            text.push_str(&format!("{name}: k = {k} over {} training samples\n", data.train.len()));
            let classifier = Classifier::Knn {
                model: knn,
                train_ref: out.join(TRAIN_FILE),
            };
            saved(classifier, name, leaf_names).save(&out.join(format!("{name}.model")))?;
        }
        ModelName::Rf => {
            let params = config.forest_params(d);
            let forest = forest_fit(data.train.features.view(), &data.train.leaves, n, &params)?;
            doc.int("forest.trees", params.n_trees as u64);
            doc.int("forest.max_depth", params.max_depth as u64);
            doc.int("forest.max_features", params.max_features.unwrap_or(d) as u64);
            doc.flag("forest.bootstrap", params.bootstrap);
            for (t, s) in forest.tree_seeds.iter().enumerate() {
                doc.int(&format!("forest.tree_seed.{t:03}"), *s);
            }
            text.push_str(&format!(
                "{name}: {} trees, depth <= {}, {} features per split\n",
                params.n_trees,
                params.max_depth,
                params.max_features.unwrap_or(d)
            ));
            saved(Classifier::Forest(forest), name, leaf_names).save(&out.join(format!("{name}.model")))?;
        }
    }
    write_file(&out.join(format!("{name}.train.toml")), &doc.render())?;
    Ok(text)
}

fn model_stem(model_file: &Path) -> String {
    let file = model_file.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default();
    file.strip_suffix(".model").unwrap_or(&file).to_string()
}

/// Scores a model file on the prepared test split. The model file is only read.
pub fn cmd_evaluate(config: &RunConfig, out: &Path, model_file: &Path) -> Result<String> {
    let bytes = std::fs::read(model_file).map_err(|e| Error::io(model_file, e))?;
    let model = SavedModel::load(model_file)?;
    check_prepared(config, out)?;
    let test = load_split(out, TEST_FILE)?;
    if test.dim() != model.input_dim() {
        return Err(Error::Format(format!(
            "{} ({FORMAT} version {VERSION}) expects {} features but the prepared test split has {}",
            model_file.display(),
            model.input_dim(),
            test.dim()
        )));
    }
    let spec = HierarchySpec::from_labels(&config.label_config()?);
    let resamples = config.eval.bootstrap_resamples;
    let bootstrap = (resamples > 0).then(|| (resamples, config.bootstrap_seed()));
    let ev = evaluate(&model, &test, &spec, bootstrap)?;

    let prov = provenance(config);
    let stem = model_stem(model_file);
    let mut doc = KvDoc::new("evaluation", &prov);
    doc.text("model", &model.name);
    doc.text("model_kind", model.classifier.kind());
    doc.text("model_file", &format!("{stem}.model"));
    doc.text("model_digest", &short_sha(&bytes));
    doc.text("model_config_hash", &model.provenance.config_hash);
    ev.write_kv(&mut doc, &spec);

    let mut text = ev.render_text(
        &format!("Evaluation of {} ({} model)", model.name, model.classifier.kind()),
        &spec,
    );
    let _ = writeln!(text, "\nconfig hash {}", prov.config_hash);
    create_out(out)?;
    write_file(&out.join(format!("{stem}.eval.toml")), &doc.render())?;
    write_file(&out.join(format!("{stem}.eval.txt")), &text)?;
    Ok(text)
}

struct Summary {
    accuracy: f64,
    balanced_accuracy: Option<f64>,
    misclassifications: u64,
    cross: Option<u64>,
    level0: Option<f64>,
}

/// Reuses `<name>.eval.toml` when it was produced from the same model bytes
/// under the same config; evaluates afresh otherwise.
fn summary_for(config: &RunConfig, out: &Path, name: &str) -> Result<Summary> {
    let model_file = out.join(format!("{name}.model"));
    let bytes = std::fs::read(&model_file).map_err(|e| Error::io(&model_file, e))?;
    let eval_file = out.join(format!("{name}.eval.toml"));
    let fresh = |doc: &toml::Table| {
        kv_get(doc, "model_digest").and_then(|v| v.as_str()) == Some(short_sha(&bytes).as_str())
            && kv_get(doc, "config_hash").and_then(|v| v.as_str()) == Some(config.hash().as_str())
    };
    let cached = std::fs::read_to_string(&eval_file)
        .ok()
        .and_then(|t| parse_kv(&t).ok())
        .filter(fresh);
    let doc = match cached {
        Some(doc) => doc,
        None => {
            cmd_evaluate(config, out, &model_file)?;
            let text = std::fs::read_to_string(&eval_file).map_err(|e| Error::io(&eval_file, e))?;
            parse_kv(&text)?
        }
    };
    let int = |k: &str| kv_get(&doc, k).and_then(|v| v.as_integer()).map(|v| v as u64);
    Ok(Summary {
        accuracy: kv_metric(&doc, "accuracy")?.ok_or_else(|| Error::Format("accuracy undefined".into()))?,
        balanced_accuracy: kv_metric(&doc, "balanced_accuracy")?,
        misclassifications: int("misclassifications").ok_or_else(|| Error::Format("report lacks misclassifications".into()))?,
        cross: int("blocks.cross"),
        level0: kv_metric(&doc, "hierarchy.level0_accuracy").ok().flatten(),
    })
}

/// Benchmarks every trained model against the reference numbers. Models that
/// are missing or fail to evaluate are reported in their row.
pub fn cmd_compare(config: &RunConfig, out: &Path) -> Result<String> {
    check_prepared(config, out)?;
    let results: Vec<(RowResult, Option<Summary>)> = REFERENCE
        .par_iter()
        .map(|r| match r.model {
            None => (RowResult::OutOfScope, None),
            Some(name) if !out.join(format!("{name}.model")).is_file() => {
                (RowResult::Missing(format!("no {name}.model")), None)
            }
            Some(name) => match summary_for(config, out, name) {
                Ok(s) => (
                    RowResult::Measured {
                        accuracy: s.accuracy,
                        balanced_accuracy: s.balanced_accuracy,
                    },
                    Some(s),
                ),
                Err(e) => (RowResult::Missing(format!("error[{}]: {e}", e.kind())), None),
            },
        })
        .collect();

    let prov = provenance(config);
    let mut doc = KvDoc::new("comparison", &prov);
    let mut rows = Vec::new();
    for (r, (result, summary)) in REFERENCE.iter().zip(&results) {
        let k = key(r.model.unwrap_or(r.label));
        doc.float(&format!("rows.{k}.reference_accuracy"), r.accuracy / 100.0);
        doc.float(&format!("rows.{k}.reference_balanced_accuracy"), r.balanced_accuracy / 100.0);
        match (result, summary) {
            (RowResult::Measured { .. }, Some(s)) => {
                doc.text(&format!("rows.{k}.status"), "measured");
                doc.float(&format!("rows.{k}.accuracy"), s.accuracy);
                doc.metric(&format!("rows.{k}.balanced_accuracy"), s.balanced_accuracy);
                doc.int(&format!("rows.{k}.misclassifications"), s.misclassifications);
                if let Some(c) = s.cross {
                    doc.int(&format!("rows.{k}.cross_block"), c);
                }
                if let Some(l) = s.level0 {
                    doc.float(&format!("rows.{k}.level0_accuracy"), l);
                }
            }
            (RowResult::Missing(why), _) => {
                doc.text(&format!("rows.{k}.status"), "missing");
                doc.text(&format!("rows.{k}.reason"), why);
            }
            _ => doc.text(&format!("rows.{k}.status"), "out_of_scope"),
        }
        rows.push((*r, result.clone()));
    }

    let mut text = String::from("Accuracy and balanced accuracy (%) on the test split\n\n");
    text.push_str(&render_benchmark(&rows));
    let find = |m: &str| {
        REFERENCE
            .iter()
            .position(|r| r.model == Some(m))
            .and_then(|i| results[i].1.as_ref())
    };
    if let (Some(flat), Some(hhar)) = (find("flat"), find("hhar")) {
        text.push_str("\nHHAR-Net against Flat DNN\n");
        let _ = writeln!(
            text,
            "accuracy: {} -> {} ({:+.2} points)",
            pct(Some(flat.accuracy)),
            pct(Some(hhar.accuracy)),
            100.0 * (hhar.accuracy - flat.accuracy)
        );
        let _ = writeln!(
            text,
            "misclassifications: {} -> {}",
            flat.misclassifications, hhar.misclassifications
        );
        if let (Some(a), Some(b)) = (flat.cross, hhar.cross) {
            let _ = writeln!(text, "cross-block misclassifications: {a} -> {b}");
        }
        if let Some(l) = hhar.level0 {
            let _ = writeln!(text, "level-0 accuracy: {}", pct(Some(l)));
        }
        doc.flag("checks.hhar_more_accurate", hhar.accuracy > flat.accuracy);
        doc.flag("checks.fewer_misclassifications", hhar.misclassifications < flat.misclassifications);
        if let (Some(a), Some(b)) = (flat.cross, hhar.cross) {
            doc.flag("checks.fewer_cross_block", b < a);
        }
    }
    let _ = writeln!(text, "\nconfig hash {}", prov.config_hash);
    write_file(&out.join("compare.toml"), &doc.render())?;
    write_file(&out.join("compare.txt"), &text)?;
    Ok(text)
}

/// Hidden-layer shapes searched by `gridsearch`: one uniform-width network per
/// (layer count, width) pair, or every per-layer width assignment when
/// `exhaustive` is set. Order is lexicographic in the configured lists.
pub fn grid_architectures(grid: &GridSection) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for &layers in &grid.layer_counts {
        if grid.exhaustive {
            let mut shapes: Vec<Vec<usize>> = vec![Vec::new()];
            for _ in 0..layers {
                shapes = shapes
                    .into_iter()
                    .flat_map(|s| {
                        grid.widths.iter().map(move |&w| {
                            let mut next = s.clone();
                            next.push(w);
                            next
                        })
                    })
                    .collect();
            }
            out.extend(shapes);
        } else {
            out.extend(grid.widths.iter().map(|&w| vec![w; layers]));
        }
    }
    out
}

/// Trains the flat network for every architecture of the grid and ranks them
/// by best-epoch validation accuracy; ties keep enumeration order.
pub fn cmd_gridsearch(config: &RunConfig, out: &Path) -> Result<String> {
    let data = load_training(config, out)?;
    let leaf_names = config.label_config()?.leaf_names();
    let archs = grid_architectures(&config.gridsearch);
    let base = MlpConfig {
        seed: config.grid_seed(),
        ..config.flat_config(data.train.dim())
    };
    let reports = archs
        .par_iter()
        .map(|h| {
            let cfg = MlpConfig {
                hidden_dims: h.clone(),
                ..base.clone()
            };
            train_flat(&data.train, &data.val, &cfg, leaf_names.clone(), data.preprocessing.clone()).map(|(_, r)| r)
        })
        .collect::<Result<Vec<_>>>()?;
    let score = |i: usize| reports[i].val_accuracy[reports[i].best_epoch];
    let mut order: Vec<usize> = (0..archs.len()).collect();
    order.sort_by(|&a, &b| score(b).total_cmp(&score(a)).then(a.cmp(&b)));

    let prov = provenance(config);
    let mut doc = KvDoc::new("gridsearch", &prov);
    doc.text("policy", if config.gridsearch.exhaustive { "exhaustive" } else { "uniform" });
    doc.int("runs", archs.len() as u64);
    let mut t = TextTable::new(["rank", "hidden layers", "val accuracy", "val loss", "best epoch", "epochs"]);
    for (rank, &i) in order.iter().enumerate() {
        let r = &reports[i];
        let arch = hyphenated(&archs[i]);
        doc.text(&format!("rank.{:03}.hidden_dims", rank + 1), &arch);
        doc.float(&format!("rank.{:03}.val_accuracy", rank + 1), score(i));
        doc.float(&format!("rank.{:03}.val_loss", rank + 1), r.val_loss[r.best_epoch]);
        doc.int(&format!("rank.{:03}.best_epoch", rank + 1), r.best_epoch as u64);
        t.row([
            (rank + 1).to_string(),
            arch,
            pct(Some(score(i))),
            format!("{:.4}", r.val_loss[r.best_epoch]),
            r.best_epoch.to_string(),
            r.epochs().to_string(),
        ]);
    }
    let mut text = format!(
        "Flat network architectures ranked by validation accuracy ({} runs, seed {})\n\n",
        archs.len(),
        base.seed
    );
    text.push_str(&t.render());
    if let Some(&best) = order.first() {
        doc.text("best.hidden_dims", &hyphenated(&archs[best]));
        doc.float("best.val_accuracy", score(best));
        let _ = writeln!(
            text,
            "\nbest: {} (val accuracy {})",
            hyphenated(&archs[best]),
            pct(Some(score(best)))
        );
    }
    let _ = writeln!(text, "config hash {}", prov.config_hash);
    write_file(&out.join("gridsearch.toml"), &doc.render())?;
    write_file(&out.join("gridsearch.txt"), &text)?;
    Ok(text)
}

/// Run configuration for data written by [`cmd_synth`]. Training is shortened
/// because the classes are far apart.
pub fn synthetic_config(spec: &SynthSpec) -> String {
    format!(
        "# Configuration for the synthetic mini-dataset.\n\
         manifest = \"manifest.txt\"\n\
         output_dir = \"out\"\n\
         seed = 42\n\
         \n\
         [labels]\n\
         feature_count = {}\n\
         \n\
         [nn]\n\
         max_epochs = 20\n\
         patience = 3\n",
        spec.feature_count
    )
}

/// Writes synthetic user files, a manifest and a matching `config.toml`.
pub fn cmd_synth(out: &Path, spec: &SynthSpec) -> Result<String> {
    let manifest = write_synthetic(out, spec)?;
    let config_path = out.join("config.toml");
    write_file(&config_path, &synthetic_config(spec))?;
    let counts = spec.class_counts();
    let names = LabelConfig::default().leaf_names();
    let mut text = format!(
        "Wrote {} labeled samples ({} features) for {} users to {}\n",
        spec.samples,
        spec.feature_count,
        spec.users,
        out.display()
    );
    for (n, c) in names.iter().zip(counts) {
        let _ = writeln!(text, "  {n}: {c}");
    }
    let _ = writeln!(text, "manifest: {}", manifest.display());
    let _ = writeln!(text, "config: {}", config_path.display());
    Ok(text)
}

/// Resolves the output directory: `--out` wins over the config's `output_dir`.
pub fn output_dir(config: &RunConfig, out: Option<PathBuf>) -> PathBuf {
    out.unwrap_or_else(|| config.output_dir.clone())
}
