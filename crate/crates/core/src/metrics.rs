//! Confusion matrices and the scalar metrics derived from them.
//!
//! Orientation is fixed: rows are true classes, columns are predictions.
//! Ratios whose denominator is zero are `None` ("undefined"), never 0.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    n: usize,
    counts: Vec<u64>,
    class_names: Vec<String>,
}

/// Counts `(true, predicted)` pairs over `n` classes.
pub fn confusion(y_true: &[usize], y_pred: &[usize], n: usize) -> Result<ConfusionMatrix> {
    if y_true.len() != y_pred.len() {
        return Err(Error::Dimension {
            expected: y_true.len(),
            got: y_pred.len(),
        });
    }
    let mut counts = vec![0u64; n * n];
    for (idx, (&t, &p)) in y_true.iter().zip(y_pred).enumerate() {
        if t >= n || p >= n {
            return Err(Error::Metric(format!(
                "label out of range 0..{n} at index {idx} (true {t}, predicted {p})"
            )));
        }
        counts[t * n + p] += 1;
    }
    Ok(ConfusionMatrix {
        n,
        counts,
        class_names: (0..n).map(|i| i.to_string()).collect(),
    })
}

impl ConfusionMatrix {
    pub fn from_counts(rows: Vec<Vec<u64>>) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Metric("confusion matrix must be square".into()));
        }
        Ok(ConfusionMatrix {
            n,
            counts: rows.concat(),
            class_names: (0..n).map(|i| i.to_string()).collect(),
        })
    }

    pub fn with_names(mut self, names: &[String]) -> Self {
        if names.len() == self.n {
            self.class_names = names.to_vec();
        }
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn get(&self, true_class: usize, predicted: usize) -> u64 {
        self.counts[true_class * self.n + predicted]
    }

    pub fn row_sum(&self, i: usize) -> u64 {
        self.counts[i * self.n..(i + 1) * self.n].iter().sum()
    }

    pub fn col_sum(&self, j: usize) -> u64 {
        (0..self.n).map(|i| self.get(i, j)).sum()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn misclassifications(&self) -> u64 {
        self.total() - self.trace()
    }

    pub fn rows(&self) -> Vec<Vec<u64>> {
        self.counts.chunks(self.n.max(1)).map(<[u64]>::to_vec).collect()
    }
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

pub fn accuracy(cm: &ConfusionMatrix) -> Result<f64> {
    ratio(cm.trace(), cm.total()).ok_or_else(|| Error::Metric("empty confusion matrix".into()))
}

/// Mean of per-class sensitivities.
pub fn balanced_accuracy(cm: &ConfusionMatrix) -> Result<f64> {
    if cm.total() == 0 {
        return Err(Error::Metric("empty confusion matrix".into()));
    }
    let mut sum = 0.0;
    for i in 0..cm.n {
        sum += ratio(cm.get(i, i), cm.row_sum(i)).ok_or_else(|| {
            Error::Metric(format!("class `{}` has no true samples", cm.class_names[i]))
        })?;
    }
    Ok(sum / cm.n as f64)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: Option<f64>,
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    pub f1: Option<f64>,
}

fn class_metrics(cm: &ConfusionMatrix, i: usize) -> ClassMetrics {
    let total = cm.total();
    let tp = cm.get(i, i);
    let fp = cm.col_sum(i) - tp;
    let fn_ = cm.row_sum(i) - tp;
    let tn = total - tp - fp - fn_;
    let precision = ratio(tp, tp + fp);
    let sensitivity = ratio(tp, tp + fn_);
    let f1 = match (precision, sensitivity) {
        (Some(p), Some(s)) if p + s > 0.0 => Some(2.0 * p * s / (p + s)),
        _ => None,
    };
    ClassMetrics {
        precision,
        sensitivity,
        specificity: ratio(tn, tn + fp),
        f1,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub class_names: Vec<String>,
    pub accuracy: f64,
    /// `None` when some class has no true samples.
    pub balanced_accuracy: Option<f64>,
    pub classes: Vec<ClassMetrics>,
}

pub fn per_class_metrics(cm: &ConfusionMatrix) -> Result<MetricsReport> {
    let accuracy = accuracy(cm)?;
    let classes: Vec<ClassMetrics> = (0..cm.n).map(|i| class_metrics(cm, i)).collect();
    let balanced_accuracy = classes
        .iter()
        .map(|c| c.sensitivity)
        .sum::<Option<f64>>()
        .map(|s| s / cm.n as f64);
    Ok(MetricsReport {
        class_names: cm.class_names.clone(),
        accuracy,
        balanced_accuracy,
        classes,
    })
}

/// Off-diagonal counts aggregated over a two-group partition of the classes.
/// `first_to_second` counts samples of the first group predicted into the second.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockTable {
    pub within_first: u64,
    pub first_to_second: u64,
    pub second_to_first: u64,
    pub within_second: u64,
}

impl BlockTable {
    pub fn total(&self) -> u64 {
        self.within_first + self.first_to_second + self.second_to_first + self.within_second
    }

    pub fn cross(&self) -> u64 {
        self.first_to_second + self.second_to_first
    }
}

pub fn block_misclassification(cm: &ConfusionMatrix, partition: &[Vec<usize>]) -> Result<BlockTable> {
    if partition.len() != 2 {
        return Err(Error::Metric(format!(
            "block table needs 2 groups, got {}",
            partition.len()
        )));
    }
    let mut group = vec![None; cm.n];
    for (g, members) in partition.iter().enumerate() {
        for &c in members {
            match group.get_mut(c) {
                Some(slot @ None) => *slot = Some(g),
                _ => return Err(Error::Metric(format!("class {c} is out of range or repeated"))),
            }
        }
    }
    if group.contains(&None) {
        return Err(Error::Metric("partition does not cover every class".into()));
    }
    let mut blocks = [[0u64; 2]; 2];
    for i in 0..cm.n {
        for j in (0..cm.n).filter(|&j| j != i) {
            blocks[group[i].unwrap()][group[j].unwrap()] += cm.get(i, j);
        }
    }
    Ok(BlockTable {
        within_first: blocks[0][0],
        first_to_second: blocks[0][1],
        second_to_first: blocks[1][0],
        within_second: blocks[1][1],
    })
}

/// A scalar metric that can be recomputed on resampled data.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Metric {
    Accuracy,
    BalancedAccuracy,
    Precision(usize),
    Sensitivity(usize),
    Specificity(usize),
    F1(usize),
}

impl Metric {
    pub fn eval(&self, cm: &ConfusionMatrix) -> Option<f64> {
        match *self {
            Metric::Accuracy => accuracy(cm).ok(),
            Metric::BalancedAccuracy => balanced_accuracy(cm).ok(),
            Metric::Precision(c) => (c < cm.n).then(|| class_metrics(cm, c).precision).flatten(),
            Metric::Sensitivity(c) => (c < cm.n).then(|| class_metrics(cm, c).sensitivity).flatten(),
            Metric::Specificity(c) => (c < cm.n).then(|| class_metrics(cm, c).specificity).flatten(),
            Metric::F1(c) => (c < cm.n).then(|| class_metrics(cm, c).f1).flatten(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BootstrapInterval {
    pub mean: f64,
    /// 1.96 standard deviations of the resampled metric.
    pub half_width: f64,
    pub used: usize,
    /// Resamples on which the metric was undefined.
    pub discarded: usize,
}

/// Nonparametric bootstrap over test samples. Resample `r` draws from its own
/// generator seeded by `(seed, r)`, so results do not depend on scheduling.
pub fn bootstrap_interval(
    y_true: &[usize],
    y_pred: &[usize],
    n_classes: usize,
    metric: Metric,
    n_resamples: usize,
    seed: u64,
) -> Result<BootstrapInterval> {
    if n_resamples < 100 {
        return Err(Error::Metric(format!("need at least 100 resamples, got {n_resamples}")));
    }
    confusion(y_true, y_pred, n_classes)?;
    let m = y_true.len();
    if m == 0 {
        return Err(Error::Metric("no samples to resample".into()));
    }
    let values: Vec<Option<f64>> = (0..n_resamples as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(seed, r));
            let mut counts = vec![0u64; n_classes * n_classes];
            for _ in 0..m {
                let i = rng.gen_range(0..m);
                counts[y_true[i] * n_classes + y_pred[i]] += 1;
            }
            let cm = ConfusionMatrix {
                n: n_classes,
                counts,
                class_names: Vec::new(),
            };
            metric.eval(&cm)
        })
        .collect();
    let kept: Vec<f64> = values.iter().flatten().copied().collect();
    let discarded = n_resamples - kept.len();
    if kept.len() < 2 {
        return Err(Error::Metric("metric undefined on nearly every resample".into()));
    }
    let mean = kept.iter().sum::<f64>() / kept.len() as f64;
    let var = kept.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (kept.len() - 1) as f64;
    Ok(BootstrapInterval {
        mean,
        half_width: 1.96 * var.sqrt(),
        used: kept.len(),
        discarded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn confusion_examples() {
        let cm = confusion(&[0, 1, 1], &[0, 1, 0], 2).unwrap();
        assert_eq!(cm.rows(), vec![vec![1, 0], vec![1, 1]]);
        let cm = confusion(&[0, 2, 1, 2], &[0, 2, 1, 2], 3).unwrap();
        assert_eq!(cm.rows(), vec![vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 2]]);
        let cm = confusion(&[], &[], 4).unwrap();
        assert_eq!(cm.total(), 0);
        assert!(matches!(confusion(&[0, 3], &[0, 1], 3), Err(Error::Metric(m)) if m.contains("index 1")));
    }

    #[test]
    fn accuracy_examples() {
        let cm = ConfusionMatrix::from_counts(vec![vec![9, 1], vec![4, 6]]).unwrap();
        assert_abs_diff_eq!(accuracy(&cm).unwrap(), 0.75, epsilon = 1e-15);
        assert_abs_diff_eq!(balanced_accuracy(&cm).unwrap(), 0.75, epsilon = 1e-15);
        let diag = ConfusionMatrix::from_counts(vec![vec![3, 0], vec![0, 8]]).unwrap();
        assert_eq!(accuracy(&diag).unwrap(), 1.0);
        assert_eq!(balanced_accuracy(&diag).unwrap(), 1.0);
    }

    #[test]
    fn accuracy_errors() {
        let empty = confusion(&[], &[], 2).unwrap();
        assert!(accuracy(&empty).is_err());
        let zero_row = ConfusionMatrix::from_counts(vec![vec![3, 0], vec![0, 0]])
            .unwrap()
            .with_names(&["a".into(), "b".into()]);
        assert!(matches!(balanced_accuracy(&zero_row), Err(Error::Metric(m)) if m.contains("`b`")));
    }

    #[test]
    fn per_class_example() {
        // class 0: TP 8, FP 2, FN 2, TN 88
        let cm = ConfusionMatrix::from_counts(vec![vec![8, 2], vec![2, 88]]).unwrap();
        let r = per_class_metrics(&cm).unwrap();
        let c = r.classes[0];
        assert_abs_diff_eq!(c.precision.unwrap(), 0.8, epsilon = 1e-12);
        assert_abs_diff_eq!(c.sensitivity.unwrap(), 0.8, epsilon = 1e-12);
        assert_abs_diff_eq!(c.specificity.unwrap(), 0.9778, epsilon = 1e-4);
        assert_abs_diff_eq!(c.f1.unwrap(), 0.8, epsilon = 1e-12);
        // binary: sensitivity of class 1 equals specificity of class 0
        assert_eq!(r.classes[1].sensitivity, r.classes[0].specificity);
    }

    #[test]
    fn absent_class_is_undefined() {
        let cm = ConfusionMatrix::from_counts(vec![vec![5, 0, 0], vec![0, 3, 0], vec![0, 0, 0]]).unwrap();
        let r = per_class_metrics(&cm).unwrap();
        let c = r.classes[2];
        assert_eq!((c.precision, c.sensitivity, c.f1), (None, None, None));
        assert_eq!(c.specificity, Some(1.0));
        assert_eq!(r.balanced_accuracy, None);
    }

    #[test]
    fn class_metrics_on_empty_matrix_are_undefined() {
        let cm = ConfusionMatrix::from_counts(vec![vec![0, 0], vec![0, 0]]).unwrap();
        let c = class_metrics(&cm, 1);
        assert_eq!(c, ClassMetrics::default());
    }

    #[test]
    fn block_table_counts() {
        // Flat-model shape: S = {0,1,2}, Non-S = {3,4,5}.
        let mut rows = vec![vec![0u64; 6]; 6];
        rows[0][1] = 300;
        rows[1][2] = 298;
        rows[1][3] = 167;
        rows[3][1] = 200;
        rows[5][0] = 26;
        rows[4][3] = 44;
        for (i, row) in rows.iter_mut().enumerate() {
            row[i] = 1000;
        }
        let cm = ConfusionMatrix::from_counts(rows).unwrap();
        let groups = vec![vec![0, 1, 2], vec![3, 4, 5]];
        let b = block_misclassification(&cm, &groups).unwrap();
        assert_eq!((b.within_first, b.first_to_second, b.second_to_first, b.within_second), (598, 167, 226, 44));
        assert_eq!(b.total(), 1035);
        assert_eq!(b.total(), cm.misclassifications());

        let diag = ConfusionMatrix::from_counts(vec![vec![4, 0], vec![0, 2]]).unwrap();
        assert_eq!(block_misclassification(&diag, &[vec![0], vec![1]]).unwrap().total(), 0);
        assert!(block_misclassification(&cm, &[vec![0, 1], vec![3, 4, 5]]).is_err());
        assert!(block_misclassification(&cm, &[vec![0, 1, 2, 3], vec![3, 4, 5]]).is_err());
    }

    #[test]
    fn bootstrap_constant_predictions() {
        let y = vec![1usize; 50];
        let b = bootstrap_interval(&y, &y, 3, Metric::Accuracy, 200, 7).unwrap();
        assert_eq!(b.mean, 1.0);
        assert_eq!(b.half_width, 0.0);
        assert_eq!(b.discarded, 0);
        let again = bootstrap_interval(&y, &y, 3, Metric::Accuracy, 200, 7).unwrap();
        assert_eq!(b, again);
    }

    #[test]
    fn bootstrap_counts_discarded_resamples() {
        // class 2 appears once; many resamples miss it, making its sensitivity undefined
        let t = [0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 1, 1, 1, 1, 2];
        let b = bootstrap_interval(&t, &t, 3, Metric::Sensitivity(2), 300, 1).unwrap();
        assert!(b.discarded > 50);
        assert_eq!(b.used + b.discarded, 300);
        assert!(bootstrap_interval(&t, &t, 3, Metric::Accuracy, 99, 1).is_err());
    }
}
