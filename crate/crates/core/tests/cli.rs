//! End-to-end runs of the `hharnet` binary on the bundled synthetic data with
//! a small network so each test finishes in seconds.

mod common;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_hharnet");

struct Workspace {
    _dir: TempDir,
    config: PathBuf,
    out: PathBuf,
}

fn workspace(extra: &str) -> Workspace {
    let dir = tempfile::tempdir().unwrap();
    let manifest = common::bundled_dir().join("manifest.txt");
    let config = dir.path().join("run.toml");
    let text = format!(
        "manifest = {:?}\nseed = 42\n\n[labels]\nfeature_count = 16\n\n\
         [nn]\nhidden_dims = [32, 16]\nmax_epochs = 6\npatience = 2\n\n\
         [baselines]\nforest_trees = 10\n\n{extra}",
        manifest.display().to_string()
    );
    fs::write(&config, text).unwrap();
    let out = dir.path().join("out");
    Workspace { _dir: dir, config, out }
}

impl Workspace {
    fn run(&self, args: &[&str]) -> Output {
        Command::new(BIN)
            .args(args)
            .arg("--config")
            .arg(&self.config)
            .arg("--out")
            .arg(&self.out)
            .output()
            .unwrap()
    }

    fn ok(&self, args: &[&str]) -> String {
        let o = self.run(args);
        assert!(o.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&o.stderr));
        String::from_utf8(o.stdout).unwrap()
    }

    fn read(&self, name: &str) -> Vec<u8> {
        fs::read(self.out.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
    }
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn prepare_is_byte_identical_across_runs() {
    let ws = workspace("");
    let summary = ws.ok(&["prepare"]);
    let first = snapshot(&ws.out);
    fs::remove_dir_all(&ws.out).unwrap();
    assert_eq!(ws.ok(&["prepare"]), summary);
    assert_eq!(snapshot(&ws.out), first);
    let names: Vec<_> = first.iter().map(|(n, _)| n.as_str()).collect();
    assert_eq!(names, ["prepared.toml", "preprocessing.toml", "test.hds", "train.hds", "val.hds"]);
}

#[test]
fn prepared_counts_partition_the_kept_rows() {
    let ws = workspace("");
    ws.ok(&["prepare"]);
    let doc = hharnet::report::parse_kv(&String::from_utf8(ws.read("prepared.toml")).unwrap()).unwrap();
    let int = |k: &str| hharnet::report::kv_get(&doc, k).and_then(|v| v.as_integer()).unwrap();
    let leaves = ["lying_down", "sitting", "standing_in_place", "walking", "running", "bicycling"];
    let mut total = 0;
    for split in ["train", "val", "test"] {
        let per_class: i64 = leaves.iter().map(|l| int(&format!("counts.{split}.{l}"))).sum();
        let n = int(&format!("counts.{split}.total"));
        assert_eq!(per_class, n, "{split}");
        total += n;
    }
    assert_eq!(total, int("ingest.kept"));
    // 6000 generated samples; unlabeled and conflicting extras are dropped.
    assert_eq!(total, 6000);
}

#[test]
fn train_twice_writes_identical_files() {
    let ws = workspace("");
    ws.ok(&["prepare"]);
    ws.ok(&["train", "flat"]);
    let model = ws.read("flat.model");
    let report = ws.read("flat.train.toml");
    ws.ok(&["train", "flat"]);
    assert_eq!(ws.read("flat.model"), model);
    assert_eq!(ws.read("flat.train.toml"), report);
    let text = String::from_utf8(report).unwrap();
    assert!(text.starts_with("format = \"hharnet-report\""));
    assert!(text.contains("config_hash = "));
    assert!(text.contains("seeds."));
}

#[test]
fn hierarchy_training_writes_node_and_combined_models() {
    let ws = workspace("");
    ws.ok(&["prepare"]);
    ws.ok(&["train", "hhar"]);
    for f in [
        "hhar.model",
        "hhar.root.model",
        "hhar.stationary.model",
        "hhar.non_stationary.model",
        "hhar.train.toml",
    ] {
        assert!(ws.out.join(f).is_file(), "missing {f}");
    }
    // Every node model is evaluable on its own.
    let root = ws.out.join("hhar.root.model");
    let text = ws.ok(&["evaluate", root.to_str().unwrap()]);
    assert!(text.contains("stationary"));
}

#[test]
fn evaluate_does_not_touch_the_model_and_is_repeatable() {
    let ws = workspace("");
    ws.ok(&["prepare"]);
    ws.ok(&["train", "hhar"]);
    let path = ws.out.join("hhar.model");
    let before = fs::read(&path).unwrap();
    ws.ok(&["evaluate", path.to_str().unwrap()]);
    let toml = ws.read("hhar.eval.toml");
    let txt = ws.read("hhar.eval.txt");
    ws.ok(&["evaluate", path.to_str().unwrap()]);
    assert_eq!(fs::read(&path).unwrap(), before);
    assert_eq!(ws.read("hhar.eval.toml"), toml);
    assert_eq!(ws.read("hhar.eval.txt"), txt);
    let toml = String::from_utf8(toml).unwrap();
    for key in ["hierarchy.level0_accuracy", "hierarchy.routing_exact = true", "blocks.cross", "model_digest"] {
        assert!(toml.contains(key), "missing {key}");
    }
}

#[test]
fn empty_manifest_is_reported() {
    let ws = workspace("");
    let manifest = ws.config.with_file_name("empty.txt");
    fs::write(&manifest, "# nothing here\n").unwrap();
    let text = fs::read_to_string(&ws.config).unwrap();
    let first = text.lines().next().unwrap();
    fs::write(&ws.config, text.replacen(first, "manifest = \"empty.txt\"", 1)).unwrap();
    let o = ws.run(&["prepare"]);
    assert!(!o.status.success());
    let err = stderr(&o);
    assert!(err.starts_with("error["), "{err}");
    assert!(err.contains("no input files"), "{err}");
    assert_eq!(err.trim_end().lines().count(), 1);
}

#[test]
fn unknown_model_is_a_usage_error_listing_valid_names() {
    let ws = workspace("");
    let o = ws.run(&["train", "svm"]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.starts_with("error[usage]:"), "{err}");
    for name in hharnet::cli::MODEL_NAMES {
        assert!(err.contains(name), "{name} not listed in {err}");
    }
    assert_eq!(err.trim_end().lines().count(), 1);
}

#[test]
fn training_before_prepare_is_instructive() {
    let ws = workspace("");
    let o = ws.run(&["train", "flat"]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.starts_with("error["), "{err}");
    assert!(err.contains("prepare"), "{err}");
}

#[test]
fn dimension_mismatch_is_a_format_error() {
    let narrow = workspace("");
    narrow.ok(&["prepare"]);
    narrow.ok(&["train", "dt"]);

    // A dataset with fewer features, prepared elsewhere.
    let synth = tempfile::tempdir().unwrap();
    let o = Command::new(BIN)
        .args(["synth", "--samples", "600", "--features", "8", "--out"])
        .arg(synth.path())
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let other_out = synth.path().join("out");
    let cfg = synth.path().join("config.toml");
    let run = |args: &[&str]| {
        Command::new(BIN)
            .args(args)
            .arg("--config")
            .arg(&cfg)
            .arg("--out")
            .arg(&other_out)
            .output()
            .unwrap()
    };
    assert!(run(&["prepare"]).status.success());
    let model = narrow.out.join("dt.model");
    let o = run(&["evaluate", model.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.starts_with("error[format]:"), "{err}");
    assert!(err.contains("version"), "{err}");
}

#[test]
fn compare_lists_every_row_and_is_repeatable() {
    let ws = workspace("");
    ws.ok(&["prepare"]);
    for m in ["flat", "hhar", "dt", "knn"] {
        ws.ok(&["train", m]);
    }
    let text = ws.ok(&["compare"]);
    for label in hharnet::report::REFERENCE.iter().map(|r| r.label) {
        assert!(text.contains(label), "row {label} missing:\n{text}");
    }
    assert!(text.contains("out of scope (reference: 87.7)"));
    // rf and mlp64 were never trained; their rows say so and the rest still print.
    assert!(text.matches("missing").count() >= 2, "{text}");
    let table = ws.read("compare.txt");
    let doc = ws.read("compare.toml");
    ws.ok(&["compare"]);
    assert_eq!(ws.read("compare.txt"), table);
    assert_eq!(ws.read("compare.toml"), doc);
}

#[test]
fn gridsearch_runs_the_uniform_grid() {
    let ws = workspace("[gridsearch]\nwidths = [8, 16, 24, 32]\n");
    ws.ok(&["prepare"]);
    let text = ws.ok(&["gridsearch"]);
    let doc = String::from_utf8(ws.read("gridsearch.toml")).unwrap();
    let doc = hharnet::report::parse_kv(&doc).unwrap();
    assert_eq!(hharnet::report::kv_get(&doc, "runs").and_then(|v| v.as_integer()), Some(8));
    assert!(text.contains("best: "));
    let table = ws.read("gridsearch.txt");
    ws.ok(&["gridsearch"]);
    assert_eq!(ws.read("gridsearch.txt"), table);
}
