//! Helpers shared by the integration test targets. The oracles here recount
//! everything from the raw label vectors and never touch a confusion matrix.
#![allow(dead_code)]

use std::path::PathBuf;

use hharnet::ingest::{Dataset, LabelConfig};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn bundled_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/synthetic")
}

/// Gaussian blobs: `per_class` samples around each center with per-coordinate
/// uniform noise of half-width `spread`.
pub fn blobs(centers: &[Vec<f64>], per_class: usize, spread: f64, seed: u64) -> (Array2<f64>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = centers[0].len();
    let n = centers.len() * per_class;
    let mut x = Array2::zeros((n, d));
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let c = i % centers.len();
        for j in 0..d {
            x[[i, j]] = centers[c][j] + rng.gen_range(-spread..spread);
        }
        y.push(c);
    }
    (x, y)
}

/// Six well-separated centers in `d` dimensions, grouped so that leaves 0-2
/// and 3-5 sit on opposite sides of the first coordinate.
pub fn six_centers(d: usize) -> Vec<Vec<f64>> {
    (0..6)
        .map(|c| {
            let mut v = vec![0.0; d];
            v[0] = if c < 3 { -6.0 } else { 6.0 };
            v[1 % d] += 4.0 * (c % 3) as f64;
            if d > 2 {
                v[2] = (c % 3) as f64 * -3.0;
            }
            v
        })
        .collect()
}

pub fn six_class_dataset(per_class: usize, d: usize, spread: f64, seed: u64) -> Dataset {
    let (x, y) = blobs(&six_centers(d), per_class, spread, seed);
    Dataset::new(x, y, &LabelConfig::default()).unwrap()
}

/// Brute-force recount of per-class quantities for class `c`.
pub struct Recount {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
}

pub fn recount(y_true: &[usize], y_pred: &[usize], c: usize) -> Recount {
    let mut r = Recount { tp: 0, fp: 0, fn_: 0, tn: 0 };
    for (&t, &p) in y_true.iter().zip(y_pred) {
        match (t == c, p == c) {
            (true, true) => r.tp += 1,
            (false, true) => r.fp += 1,
            (true, false) => r.fn_ += 1,
            (false, false) => r.tn += 1,
        }
    }
    r
}

pub fn frac(num: u64, den: u64) -> Option<f64> {
    if den == 0 {
        None
    } else {
        Some(num as f64 / den as f64)
    }
}

pub fn oracle_accuracy(y_true: &[usize], y_pred: &[usize]) -> Option<f64> {
    let hits = y_true.iter().zip(y_pred).filter(|(t, p)| t == p).count();
    frac(hits as u64, y_true.len() as u64)
}

pub fn oracle_balanced(y_true: &[usize], y_pred: &[usize], n: usize) -> Option<f64> {
    let mut sum = 0.0;
    for c in 0..n {
        let r = recount(y_true, y_pred, c);
        sum += frac(r.tp, r.tp + r.fn_)?;
    }
    Some(sum / n as f64)
}

/// `[within first, first to second, second to first, within second]`.
pub fn oracle_blocks(y_true: &[usize], y_pred: &[usize], in_second: &dyn Fn(usize) -> bool) -> [u64; 4] {
    let mut b = [0u64; 4];
    for (&t, &p) in y_true.iter().zip(y_pred) {
        if t == p {
            continue;
        }
        let idx = 2 * usize::from(in_second(t)) + usize::from(in_second(p));
        b[idx] += 1;
    }
    b
}

/// Index of the nearest class centroid computed from training data.
pub fn nearest_centroid_accuracy(train_x: &Array2<f64>, train_y: &[usize], x: &Array2<f64>, y: &[usize], k: usize) -> f64 {
    let d = train_x.ncols();
    let mut sums = vec![vec![0.0; d]; k];
    let mut counts = vec![0usize; k];
    for (row, &c) in train_x.rows().into_iter().zip(train_y) {
        counts[c] += 1;
        for j in 0..d {
            sums[c][j] += row[j];
        }
    }
    let centroids: Vec<Vec<f64>> = sums
        .iter()
        .zip(&counts)
        .map(|(s, &n)| s.iter().map(|v| v / n.max(1) as f64).collect())
        .collect();
    let mut hits = 0;
    for (row, &c) in x.rows().into_iter().zip(y) {
        let best = (0..k)
            .min_by(|&a, &b| {
                let da: f64 = (0..d).map(|j| (row[j] - centroids[a][j]).powi(2)).sum();
                let db: f64 = (0..d).map(|j| (row[j] - centroids[b][j]).powi(2)).sum();
                da.total_cmp(&db)
            })
            .unwrap();
        hits += usize::from(best == c);
    }
    hits as f64 / y.len() as f64
}
