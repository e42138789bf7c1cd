//! Deterministic synthetic user files in the Extrasensory CSV layout.
//!
//! Each of the six activities is an isotropic unit Gaussian around its own
//! mean. Means are drawn hierarchically (parent center plus a leaf offset), so
//! both the parent split and the within-parent splits are learnable. The files
//! also carry the blemishes ingestion must cope with: missing and `nan`
//! feature cells, missing label cells, rows with no target label and rows with
//! two.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use flate2::write::GzEncoder;
use flate2::Compression;
use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::error::{Error, Result};
use crate::ingest::LabelConfig;

const SAMPLE_STREAM: u64 = 0x5eed_da7a;
const BLEMISH_STREAM: u64 = 0xb1e_3415;

/// Share of each leaf among labeled rows, in leaf order.
pub const CLASS_SHARES: [f64; 6] = [0.25, 0.30, 0.15, 0.15, 0.05, 0.10];

#[derive(Clone, Debug, PartialEq)]
pub struct SynthSpec {
    pub samples: usize,
    pub users: usize,
    pub feature_count: usize,
    pub seed: u64,
    /// Spread of the two parent centers around the origin.
    pub parent_scale: f64,
    /// Spread of leaf means around their parent center.
    pub leaf_scale: f64,
    /// Probability that a feature cell is written as missing.
    pub missing_rate: f64,
    /// Extra rows with no target label.
    pub unlabeled: usize,
    /// Extra rows with two target labels.
    pub conflicts: usize,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            samples: 6000,
            users: 6,
            feature_count: 16,
            seed: 7,
            parent_scale: 3.0,
            leaf_scale: 1.5,
            missing_rate: 0.01,
            unlabeled: 60,
            conflicts: 30,
        }
    }
}

impl SynthSpec {
    fn validate(&self) -> Result<()> {
        if self.samples < 60 || self.users == 0 || self.feature_count == 0 {
            return Err(Error::Config(
                "synthetic data needs at least 60 samples, one user and one feature".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.missing_rate) {
            return Err(Error::Config("missing_rate must lie in [0, 1)".into()));
        }
        Ok(())
    }

    /// Labeled rows per leaf; the remainder of the rounding goes to leaf 0.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts: Vec<usize> = CLASS_SHARES
            .iter()
            .map(|s| (s * self.samples as f64).floor() as usize)
            .collect();
        counts[0] += self.samples - counts.iter().sum::<usize>();
        counts
    }

    /// Leaf means, one row per leaf.
    pub fn class_means(&self) -> Array2<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let d = self.feature_count;
        let config = LabelConfig::default();
        let parent = Normal::new(0.0, self.parent_scale).expect("finite scale");
        let leaf = Normal::new(0.0, self.leaf_scale).expect("finite scale");
        let centers: Vec<Vec<f64>> = config
            .parents()
            .iter()
            .map(|_| (0..d).map(|_| parent.sample(&mut rng)).collect())
            .collect();
        let mut means = Array2::zeros((LabelConfig::LEAF_COUNT, d));
        for l in 0..LabelConfig::LEAF_COUNT {
            let p = config.parent_of(l).expect("default leaves all have parents");
            for j in 0..d {
                means[[l, j]] = centers[p][j] + leaf.sample(&mut rng);
            }
        }
        means
    }
}

/// One labeled synthetic row: clean features and its leaf.
#[derive(Clone, Debug, PartialEq)]
pub struct SynthRow {
    pub features: Vec<f64>,
    pub leaf: usize,
}

enum RowKind {
    Labeled(usize),
    Unlabeled,
    Conflict(usize, usize),
}

/// Clean labeled samples in shuffled order, before any file blemishes.
pub fn generate(spec: &SynthSpec) -> Result<Vec<SynthRow>> {
    spec.validate()?;
    Ok(draw_rows(spec)
        .into_iter()
        .filter_map(|(kind, features)| match kind {
            RowKind::Labeled(leaf) => Some(SynthRow { features, leaf }),
            _ => None,
        })
        .collect())
}

fn draw_rows(spec: &SynthSpec) -> Vec<(RowKind, Vec<f64>)> {
    let means = spec.class_means();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ SAMPLE_STREAM);
    let mut kinds: Vec<RowKind> = Vec::new();
    for (leaf, &n) in spec.class_counts().iter().enumerate() {
        kinds.extend((0..n).map(|_| RowKind::Labeled(leaf)));
    }
    kinds.extend((0..spec.unlabeled).map(|_| RowKind::Unlabeled));
    for i in 0..spec.conflicts {
        kinds.push(RowKind::Conflict(i % 3, 3 + (i + 1) % 3));
    }
    kinds.shuffle(&mut rng);
    kinds
        .into_iter()
        .map(|kind| {
            let center = match kind {
                RowKind::Labeled(l) | RowKind::Conflict(l, _) => l,
                RowKind::Unlabeled => rng.gen_range(0..LabelConfig::LEAF_COUNT),
            };
            let features = means
                .row(center)
                .iter()
                .map(|m| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    m + z
                })
                .collect();
            (kind, features)
        })
        .collect()
}

/// Writes `users` gzip CSV files plus `manifest.txt` into `dir` and returns
/// the manifest path. Output bytes depend only on `spec`.
pub fn write_synthetic(dir: &Path, spec: &SynthSpec) -> Result<PathBuf> {
    spec.validate()?;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let config = LabelConfig::default();
    let rows = draw_rows(spec);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ BLEMISH_STREAM);

    let mut header = vec!["timestamp".to_string()];
    header.extend((0..spec.feature_count).map(|j| format!("synth:feature_{j:03}")));
    header.extend(config.leaves().iter().map(|l| l.column.clone()));
    header.push("label:PHONE_IN_POCKET".into());
    header.push("label_source".into());

    let mut names = Vec::with_capacity(spec.users);
    let per_user = rows.len().div_ceil(spec.users);
    for (u, chunk) in rows.chunks(per_user).enumerate() {
        let name = format!("user_{u:02}.features_labels.csv.gz");
        let path = dir.join(&name);
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut out = GzEncoder::new(BufWriter::new(file), Compression::default());
        let mut text = header.join(",");
        text.push('\n');
        for (i, (kind, features)) in chunk.iter().enumerate() {
            let mut cells = vec![(1_440_000_000 + 60 * i as i64).to_string()];
            for v in features {
                let r: f64 = rng.gen();
                cells.push(if r < spec.missing_rate / 2.0 {
                    String::new()
                } else if r < spec.missing_rate {
                    "nan".into()
                } else {
                    format!("{v:.4}")
                });
            }
            for leaf in 0..LabelConfig::LEAF_COUNT {
                let relevant = match *kind {
                    RowKind::Labeled(l) => l == leaf,
                    RowKind::Unlabeled => false,
                    RowKind::Conflict(a, b) => leaf == a || leaf == b,
                };
                cells.push(if relevant {
                    "1".into()
                } else if rng.gen_bool(0.2) {
                    "nan".into()
                } else {
                    "0".into()
                });
            }
            cells.push(if rng.gen_bool(0.5) { "1" } else { "0" }.into());
            cells.push("2".into());
            text.push_str(&cells.join(","));
            text.push('\n');
        }
        out.write_all(text.as_bytes()).map_err(|e| Error::io(&path, e))?;
        out.finish()
            .and_then(|mut w| w.flush())
            .map_err(|e| Error::io(&path, e))?;
        names.push(name);
    }

    let manifest = dir.join("manifest.txt");
    let mut text = String::from("# synthetic user files, one per line\n");
    for n in &names {
        text.push_str(n);
        text.push('\n');
    }
    std::fs::write(&manifest, text).map_err(|e| Error::io(&manifest, e))?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{filter_target_samples, load_user_file, read_manifest};

    fn small() -> SynthSpec {
        SynthSpec {
            samples: 300,
            users: 2,
            feature_count: 4,
            unlabeled: 7,
            conflicts: 5,
            missing_rate: 0.1,
            ..Default::default()
        }
    }

    #[test]
    fn class_counts_sum_to_samples() {
        let s = SynthSpec::default();
        assert_eq!(s.class_counts().iter().sum::<usize>(), s.samples);
        assert_eq!(s.class_counts(), vec![1500, 1800, 900, 900, 300, 600]);
    }

    #[test]
    fn files_load_with_expected_blemishes() {
        let dir = tempfile::tempdir().unwrap();
        let spec = small();
        let manifest = write_synthetic(dir.path(), &spec).unwrap();
        let files = read_manifest(&manifest).unwrap();
        assert_eq!(files.len(), 2);
        let mut config = LabelConfig::default();
        config.set_feature_count(4).unwrap();
        let mut rows = Vec::new();
        for f in &files {
            rows.extend(load_user_file(f, &config).unwrap());
        }
        assert_eq!(rows.len(), 312);
        assert!(rows.iter().any(|r| r.features.iter().any(Option::is_none)));
        let out = filter_target_samples(rows);
        assert_eq!((out.kept.len(), out.unlabeled, out.conflicts), (300, 7, 5));
        let mut counts = vec![0; 6];
        for r in &out.kept {
            counts[r.leaf] += 1;
        }
        assert_eq!(counts, spec.class_counts());
    }

    #[test]
    fn output_bytes_are_deterministic() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        write_synthetic(a.path(), &small()).unwrap();
        write_synthetic(b.path(), &small()).unwrap();
        for name in ["manifest.txt", "user_00.features_labels.csv.gz", "user_01.features_labels.csv.gz"] {
            assert_eq!(
                std::fs::read(a.path().join(name)).unwrap(),
                std::fs::read(b.path().join(name)).unwrap()
            );
        }
    }

    #[test]
    fn generate_matches_labeled_rows() {
        let rows = generate(&small()).unwrap();
        assert_eq!(rows.len(), 300);
        assert!(rows.iter().all(|r| r.features.len() == 4 && r.leaf < 6));
    }
}
