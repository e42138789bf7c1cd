use ndarray::ArrayView2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{fit_rows, TreeModel};
use crate::error::{Error, Result};
use crate::seed;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: usize,
    /// Candidate features per split; `None` uses all of them.
    pub max_features: Option<usize>,
    pub bootstrap: bool,
    pub seed: u64,
}

impl ForestParams {
    /// 10 trees of depth 10, `ceil(sqrt(d))` candidate features, bootstrap on.
    pub fn for_features(d: usize, seed: u64) -> Self {
        ForestParams {
            n_trees: 10,
            max_depth: 10,
            max_features: Some((d as f64).sqrt().ceil() as usize),
            bootstrap: true,
            seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<TreeModel>,
    /// Seed each tree was grown with, derived from `params.seed`.
    pub tree_seeds: Vec<u64>,
    pub params: ForestParams,
}

/// Grows each tree from its own derived seed, so the forest does not depend on
/// how trees are scheduled across threads.
pub fn forest_fit(x: ArrayView2<f64>, y: &[usize], n_classes: usize, params: &ForestParams) -> Result<ForestModel> {
    if params.n_trees == 0 {
        return Err(Error::Config("forest needs at least one tree".into()));
    }
    let n = x.nrows();
    let tree_seeds: Vec<u64> = (0..params.n_trees as u64)
        .map(|t| seed::derive(params.seed, t))
        .collect();
    let trees = tree_seeds
        .par_iter()
        .map(|&s| {
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            let rows = if params.bootstrap {
                (0..n).map(|_| rng.gen_range(0..n.max(1))).collect()
            } else {
                (0..n).collect()
            };
            fit_rows(x, y, rows, n_classes, params.max_depth, params.max_features, Some(&mut rng))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ForestModel {
        trees,
        tree_seeds,
        params: params.clone(),
    })
}

impl ForestModel {
    /// Majority vote of the trees; ties go to the lowest class.
    pub fn forest_predict(&self, x: &[f64]) -> Result<usize> {
        let n_classes = self.trees[0].n_classes;
        let mut votes = vec![0usize; n_classes];
        for t in &self.trees {
            votes[t.tree_predict(x)?] += 1;
        }
        let mut best = 0;
        for (c, &v) in votes.iter().enumerate() {
            if v > votes[best] {
                best = c;
            }
        }
        Ok(best)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::tree::tree_fit;
    use ndarray::Array2;

    fn data() -> (Array2<f64>, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = Array2::from_shape_fn((120, 6), |_| rng.gen_range(-1.0..1.0));
        let y = x
            .rows()
            .into_iter()
            .map(|r| usize::from(r[0] + 0.5 * r[3] > 0.0) + usize::from(r[2] > 0.6))
            .collect();
        (x, y)
    }

    #[test]
    fn degenerate_forest_equals_tree() {
        let (x, y) = data();
        let params = ForestParams {
            n_trees: 1,
            max_depth: 6,
            max_features: None,
            bootstrap: false,
            seed: 11,
        };
        let forest = forest_fit(x.view(), &y, 3, &params).unwrap();
        let tree = tree_fit(x.view(), &y, 3, 6).unwrap();
        assert_eq!(forest.trees[0], tree);
    }

    #[test]
    fn seeded_forest_is_deterministic() {
        let (x, y) = data();
        let params = ForestParams::for_features(6, 3);
        assert_eq!(params.max_features, Some(3));
        let a = forest_fit(x.view(), &y, 3, &params).unwrap();
        let b = forest_fit(x.view(), &y, 3, &params).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.trees.len(), 10);
        assert!(a.trees.iter().all(|t| t.depth() <= 10));
        let c = forest_fit(x.view(), &y, 3, &ForestParams { seed: 4, ..params }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn default_subsampling_for_225_features() {
        assert_eq!(ForestParams::for_features(225, 0).max_features, Some(15));
    }
}
