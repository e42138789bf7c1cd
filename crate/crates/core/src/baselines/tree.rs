//! CART-style classification tree with Gini impurity.

use ndarray::ArrayView2;
use rand::seq::index::sample;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Nodes with at least this many samples scan candidate features in parallel.
const PARALLEL_SCAN_MIN: usize = 4096;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum TreeNode {
    /// Samples with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        class: usize,
        counts: Vec<usize>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeModel {
    /// `nodes[0]` is the root.
    pub nodes: Vec<TreeNode>,
    pub max_depth: usize,
    pub n_classes: usize,
    pub n_features: usize,
}

struct Candidate {
    feature: usize,
    threshold: f64,
    impurity: f64,
}

fn majority(counts: &[usize]) -> usize {
    let mut best = 0;
    for (c, &n) in counts.iter().enumerate() {
        if n > counts[best] {
            best = c;
        }
    }
    best
}

/// Sum over both sides of `n_side * gini(side)`, from per-side class counts.
fn weighted_gini(n: usize, sum_sq: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        n as f64 - sum_sq as f64 / n as f64
    }
}

/// Lowest weighted Gini split on one feature, thresholds at midpoints between
/// consecutive distinct values.
fn best_split_on(
    x: &ArrayView2<f64>,
    y: &[usize],
    rows: &[usize],
    feature: usize,
    n_classes: usize,
    totals: &[usize],
) -> Option<Candidate> {
    let mut pairs: Vec<(f64, usize)> = rows.iter().map(|&r| (x[[r, feature]], y[r])).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));

    let n = pairs.len();
    let mut left = vec![0usize; n_classes];
    let mut left_sq = 0usize;
    let mut right_sq: usize = totals.iter().map(|c| c * c).sum();
    let mut right_counts = totals.to_vec();
    let mut best: Option<Candidate> = None;
    for i in 0..n - 1 {
        let c = pairs[i].1;
        left_sq += 2 * left[c] + 1;
        left[c] += 1;
        right_sq -= 2 * right_counts[c] - 1;
        right_counts[c] -= 1;

        let (a, b) = (pairs[i].0, pairs[i + 1].0);
        if a >= b {
            continue;
        }
        let n_left = i + 1;
        let impurity =
            (weighted_gini(n_left, left_sq) + weighted_gini(n - n_left, right_sq)) / n as f64;
        if best.as_ref().is_none_or(|b| impurity < b.impurity) {
            let mut threshold = a + (b - a) / 2.0;
            if threshold >= b || !threshold.is_finite() {
                threshold = a;
            }
            best = Some(Candidate {
                feature,
                threshold,
                impurity,
            });
        }
    }
    best
}

struct Builder<'a> {
    x: ArrayView2<'a, f64>,
    y: &'a [usize],
    n_classes: usize,
    max_depth: usize,
    max_features: Option<usize>,
    rng: Option<&'a mut ChaCha8Rng>,
    nodes: Vec<TreeNode>,
}

impl Builder<'_> {
    fn leaf(&mut self, counts: Vec<usize>) -> usize {
        self.nodes.push(TreeNode::Leaf {
            class: majority(&counts),
            counts,
        });
        self.nodes.len() - 1
    }

    fn candidate_features(&mut self) -> Vec<usize> {
        let d = self.x.ncols();
        match (self.max_features, self.rng.as_deref_mut()) {
            (Some(m), Some(rng)) if m < d => {
                let mut f = sample(rng, d, m).into_vec();
                f.sort_unstable();
                f
            }
            _ => (0..d).collect(),
        }
    }

    fn grow(&mut self, rows: Vec<usize>, depth: usize) -> usize {
        let mut counts = vec![0usize; self.n_classes];
        for &r in &rows {
            counts[self.y[r]] += 1;
        }
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        if pure || rows.len() < 2 || depth >= self.max_depth {
            return self.leaf(counts);
        }

        let features = self.candidate_features();
        let scan = |&f: &usize| best_split_on(&self.x, self.y, &rows, f, self.n_classes, &counts);
        let found: Vec<Option<Candidate>> = if rows.len() >= PARALLEL_SCAN_MIN {
            features.par_iter().map(scan).collect()
        } else {
            features.iter().map(scan).collect()
        };
        let mut best: Option<Candidate> = None;
        for c in found.into_iter().flatten() {
            if best.as_ref().is_none_or(|b| c.impurity < b.impurity) {
                best = Some(c);
            }
        }
        let Some(split) = best else {
            return self.leaf(counts);
        };

        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
            .iter()
            .partition(|&&r| self.x[[r, split.feature]] <= split.threshold);
        drop(rows);
        let id = self.nodes.len();
        self.nodes.push(TreeNode::Leaf {
            class: 0,
            counts: Vec::new(),
        });
        let left = self.grow(left_rows, depth + 1);
        let right = self.grow(right_rows, depth + 1);
        self.nodes[id] = TreeNode::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        id
    }
}

fn check_inputs(x: &ArrayView2<f64>, y: &[usize], n_classes: usize) -> Result<()> {
    if x.nrows() == 0 {
        return Err(Error::Config("cannot fit a tree on an empty training set".into()));
    }
    if y.len() != x.nrows() {
        return Err(Error::Dimension {
            expected: x.nrows(),
            got: y.len(),
        });
    }
    if let Some(&bad) = y.iter().find(|&&c| c >= n_classes) {
        return Err(Error::Config(format!("label {bad} out of range 0..{n_classes}")));
    }
    Ok(())
}

/// Fits on the given rows (duplicates allowed, as in a bootstrap resample).
pub(crate) fn fit_rows(
    x: ArrayView2<f64>,
    y: &[usize],
    rows: Vec<usize>,
    n_classes: usize,
    max_depth: usize,
    max_features: Option<usize>,
    rng: Option<&mut ChaCha8Rng>,
) -> Result<TreeModel> {
    check_inputs(&x, y, n_classes)?;
    let n_features = x.ncols();
    let mut builder = Builder {
        x,
        y,
        n_classes,
        max_depth,
        max_features,
        rng,
        nodes: Vec::new(),
    };
    builder.grow(rows, 0);
    Ok(TreeModel {
        nodes: builder.nodes,
        max_depth,
        n_classes,
        n_features,
    })
}

pub fn tree_fit(x: ArrayView2<f64>, y: &[usize], n_classes: usize, max_depth: usize) -> Result<TreeModel> {
    fit_rows(x, y, (0..x.nrows()).collect(), n_classes, max_depth, None, None)
}

impl TreeModel {
    pub fn tree_predict(&self, x: &[f64]) -> Result<usize> {
        if x.len() != self.n_features {
            return Err(Error::Dimension {
                expected: self.n_features,
                got: x.len(),
            });
        }
        let mut id = 0;
        loop {
            match &self.nodes[id] {
                TreeNode::Leaf { class, .. } => return Ok(*class),
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => id = if x[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[TreeNode], id: usize) -> usize {
            match &nodes[id] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }

    /// Checks node references form a tree rooted at 0 that reaches every node.
    pub fn validate(&self) -> Result<()> {
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![(0usize, 0usize)];
        while let Some((id, depth)) = stack.pop() {
            match seen.get_mut(id) {
                Some(s) if !*s => *s = true,
                _ => return Err(Error::Format(format!("tree node {id} is missing or shared"))),
            }
            match &self.nodes[id] {
                TreeNode::Leaf { class, .. } if *class >= self.n_classes => {
                    return Err(Error::Format(format!("leaf class {class} out of range")))
                }
                TreeNode::Leaf { .. } => {}
                TreeNode::Split { feature, left, right, .. } => {
                    if *feature >= self.n_features || depth >= self.max_depth {
                        return Err(Error::Format(format!("invalid split at node {id}")));
                    }
                    stack.push((*left, depth + 1));
                    stack.push((*right, depth + 1));
                }
            }
        }
        if seen.contains(&false) {
            return Err(Error::Format("unreachable tree nodes".into()));
        }
        Ok(())
    }
}
