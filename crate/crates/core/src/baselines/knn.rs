use ndarray::{Array2, ArrayView2, Axis};
use rayon::prelude::*;

use crate::error::{Error, Result};

const QUERY_BLOCK: usize = 64;
const TRAIN_BLOCK: usize = 512;

/// Exact brute-force k-nearest-neighbors classifier (Euclidean distance).
#[derive(Clone, Debug, PartialEq)]
pub struct KnnModel {
    pub train: Array2<f64>,
    pub labels: Vec<usize>,
    pub k: usize,
    pub n_classes: usize,
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4 * 4;
    for (ca, cb) in a[..chunks].chunks_exact(4).zip(b[..chunks].chunks_exact(4)) {
        for l in 0..4 {
            let d = ca[l] - cb[l];
            acc[l] += d * d;
        }
    }
    let mut tail = 0.0;
    for (x, y) in a[chunks..].iter().zip(&b[chunks..]) {
        tail += (x - y) * (x - y);
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// The `k` nearest training rows seen so far, ordered by (distance, index).
struct Nearest {
    k: usize,
    items: Vec<(f64, usize)>,
}

impl Nearest {
    fn new(k: usize) -> Self {
        Nearest {
            k,
            items: Vec::with_capacity(k + 1),
        }
    }

    /// Offers training rows in increasing index order, so an equal distance
    /// never displaces an earlier row.
    fn offer(&mut self, dist: f64, index: usize) {
        if self.items.len() == self.k && dist >= self.items[self.k - 1].0 {
            return;
        }
        let pos = self.items.partition_point(|&(d, _)| d <= dist);
        self.items.insert(pos, (dist, index));
        self.items.truncate(self.k);
    }
}

impl KnnModel {
    pub fn new(train: Array2<f64>, labels: Vec<usize>, k: usize, n_classes: usize) -> Result<Self> {
        if train.nrows() == 0 {
            return Err(Error::Config("kNN needs a non-empty training set".into()));
        }
        if labels.len() != train.nrows() {
            return Err(Error::Dimension {
                expected: train.nrows(),
                got: labels.len(),
            });
        }
        if k == 0 || k > train.nrows() {
            return Err(Error::Config(format!(
                "k must lie in 1..={}, got {k}",
                train.nrows()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&c| c >= n_classes) {
            return Err(Error::Config(format!("label {bad} out of range 0..{n_classes}")));
        }
        let train = if train.is_standard_layout() {
            train
        } else {
            train.as_standard_layout().into_owned()
        };
        Ok(KnnModel {
            train,
            labels,
            k,
            n_classes,
        })
    }

    fn vote(&self, nearest: &Nearest) -> usize {
        let mut votes = vec![0usize; self.n_classes];
        for &(_, i) in &nearest.items {
            votes[self.labels[i]] += 1;
        }
        let mut best = 0;
        for (c, &v) in votes.iter().enumerate() {
            if v > votes[best] {
                best = c;
            }
        }
        best
    }

    /// Majority vote of the `k` nearest rows; distance ties favor the lower
    /// training index, vote ties the lower class.
    pub fn knn_predict(&self, x: &[f64]) -> Result<usize> {
        let view = ArrayView2::from_shape((1, x.len()), x).expect("contiguous slice");
        Ok(self.predict_batch(view)?[0])
    }

    /// Blocked scan: each block of queries walks the training set in
    /// cache-sized tiles. Blocks run in parallel.
    pub fn predict_batch(&self, queries: ArrayView2<f64>) -> Result<Vec<usize>> {
        if queries.ncols() != self.train.ncols() {
            return Err(Error::Dimension {
                expected: self.train.ncols(),
                got: queries.ncols(),
            });
        }
        let queries = queries.as_standard_layout();
        let blocks: Vec<_> = queries.axis_chunks_iter(Axis(0), QUERY_BLOCK).collect();
        let out: Vec<Vec<usize>> = blocks
            .par_iter()
            .map(|block| {
                let mut nearest: Vec<Nearest> = (0..block.nrows()).map(|_| Nearest::new(self.k)).collect();
                for (b, tile) in self.train.axis_chunks_iter(Axis(0), TRAIN_BLOCK).enumerate() {
                    let offset = b * TRAIN_BLOCK;
                    for (q, best) in block.rows().into_iter().zip(nearest.iter_mut()) {
                        let q = q.as_slice().expect("standard layout");
                        for (i, t) in tile.rows().into_iter().enumerate() {
                            let d = squared_distance(q, t.as_slice().expect("standard layout"));
                            best.offer(d, offset + i);
                        }
                    }
                }
                nearest.iter().map(|n| self.vote(n)).collect()
            })
            .collect();
        Ok(out.concat())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn k1_exact_match_returns_its_label() {
        let m = KnnModel::new(array![[0.0, 0.0], [5.0, 5.0], [1.0, 0.0]], vec![0, 3, 1], 1, 4).unwrap();
        assert_eq!(m.knn_predict(&[5.0, 5.0]).unwrap(), 3);
        assert_eq!(m.knn_predict(&[1.0, 0.0]).unwrap(), 1);
    }

    #[test]
    fn k3_majority() {
        let m = KnnModel::new(
            array![[0.0], [0.1], [0.2], [10.0], [11.0]],
            vec![2, 5, 2, 5, 5],
            3,
            6,
        )
        .unwrap();
        assert_eq!(m.knn_predict(&[0.05]).unwrap(), 2);
    }

    #[test]
    fn distance_ties_prefer_lower_index() {
        // rows 1 and 2 are equidistant from the query; k = 1 keeps row 1
        let m = KnnModel::new(array![[9.0], [1.0], [-1.0]], vec![0, 4, 2], 1, 5).unwrap();
        assert_eq!(m.knn_predict(&[0.0]).unwrap(), 4);
    }

    #[test]
    fn vote_ties_prefer_lower_class() {
        let m = KnnModel::new(array![[1.0], [-1.0]], vec![3, 1], 2, 4).unwrap();
        assert_eq!(m.knn_predict(&[0.0]).unwrap(), 1);
    }

    #[test]
    fn invalid_k_rejected() {
        assert!(KnnModel::new(array![[1.0]], vec![0], 2, 1).is_err());
        assert!(KnnModel::new(array![[1.0]], vec![0], 0, 1).is_err());
        assert!(KnnModel::new(Array2::zeros((0, 1)), vec![], 1, 1).is_err());
    }

    #[test]
    fn distance_matches_naive_sum() {
        let a: Vec<f64> = (0..11).map(|i| i as f64 * 0.3).collect();
        let b: Vec<f64> = (0..11).map(|i| (i as f64).sin()).collect();
        let naive: f64 = a.iter().zip(&b).map(|(x, y)| (x - y) * (x - y)).sum();
        assert!((squared_distance(&a, &b) - naive).abs() < 1e-12);
    }
}
