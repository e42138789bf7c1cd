//! Test-set evaluation of a saved model.

use rayon::prelude::*;

use crate::container::{Classifier, SavedModel};
use crate::error::{Error, Result};
use crate::hierarchy::HierarchySpec;
use crate::ingest::{Dataset, ParentGroup};
use crate::metrics::{
    accuracy, block_misclassification, bootstrap_interval, confusion, per_class_metrics, BlockTable,
    BootstrapInterval, ConfusionMatrix, Metric, MetricsReport,
};
use crate::report::{key, pct, render_blocks, render_class_metrics, render_confusion, ClassIntervals, KvDoc};

/// Extra results for a two-level hierarchy.
#[derive(Clone, Debug, PartialEq)]
pub struct HierarchyEval {
    /// Root decisions against true parents.
    pub level0: ConfusionMatrix,
    pub level0_accuracy: f64,
    /// Child `p` on the test samples whose true parent is `p`; `None` if there are none.
    pub parent_accuracy: Vec<Option<f64>>,
    /// Every predicted leaf lies under the parent the root chose.
    pub routing_exact: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Intervals {
    pub resamples: usize,
    pub accuracy: Option<BootstrapInterval>,
    pub balanced_accuracy: Option<BootstrapInterval>,
    pub classes: ClassIntervals,
}

/// What the model was scored against.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Target {
    Leaves,
    Parents,
    /// Within-parent labels of one child, on that parent's samples only.
    Child(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub target: Target,
    pub y_true: Vec<usize>,
    pub y_pred: Vec<usize>,
    pub confusion: ConfusionMatrix,
    pub report: MetricsReport,
    /// Present when the model predicts leaves.
    pub blocks: Option<BlockTable>,
    pub hierarchy: Option<HierarchyEval>,
    pub intervals: Option<Intervals>,
}

fn target_of(model: &SavedModel, spec: &HierarchySpec) -> Result<Target> {
    if !matches!(model.classifier, Classifier::Node(_)) {
        return if model.leaf_names == spec.leaf_names {
            Ok(Target::Leaves)
        } else {
            Err(Error::Format(format!(
                "model classes {:?} do not match the configured leaves",
                model.leaf_names
            )))
        };
    }
    let parent_names: Vec<String> = spec.parents.iter().map(|p| p.name.clone()).collect();
    if model.leaf_names == parent_names {
        return Ok(Target::Parents);
    }
    spec.parents
        .iter()
        .position(|g| g.leaves.iter().map(|&l| &spec.leaf_names[l]).eq(model.leaf_names.iter()))
        .map(Target::Child)
        .ok_or_else(|| Error::Format(format!("node classes {:?} match no hierarchy node", model.leaf_names)))
}

fn bootstrap_all(y_true: &[usize], y_pred: &[usize], n: usize, resamples: usize, seed: u64) -> Result<Intervals> {
    let mut metrics = vec![Metric::Accuracy, Metric::BalancedAccuracy];
    for c in 0..n {
        metrics.extend([Metric::Precision(c), Metric::Sensitivity(c), Metric::Specificity(c), Metric::F1(c)]);
    }
    let results: Vec<Option<BootstrapInterval>> = metrics
        .par_iter()
        .map(|&m| match bootstrap_interval(y_true, y_pred, n, m, resamples, seed) {
            Ok(i) => Ok(Some(i)),
            Err(Error::Metric(_)) => Ok(None),
            Err(e) => Err(e),
        })
        .collect::<Result<_>>()?;
    let per = |offset: usize| (0..n).map(|c| results[2 + 4 * c + offset]).collect();
    Ok(Intervals {
        resamples,
        accuracy: results[0],
        balanced_accuracy: results[1],
        classes: ClassIntervals {
            precision: per(0),
            sensitivity: per(1),
            specificity: per(2),
            f1: per(3),
        },
    })
}

/// Scores `model` on the prepared `test` split. `bootstrap` is
/// `(resamples, seed)`; resamples below 100 are rejected by the bootstrap.
pub fn evaluate(
    model: &SavedModel,
    test: &Dataset,
    spec: &HierarchySpec,
    bootstrap: Option<(usize, u64)>,
) -> Result<Evaluation> {
    if test.dim() != model.input_dim() {
        return Err(Error::Dimension {
            expected: model.input_dim(),
            got: test.dim(),
        });
    }
    let target = target_of(model, spec)?;
    let (y_true, y_pred, hierarchy) = match (&target, &model.classifier) {
        (Target::Leaves, Classifier::Lcpn(m)) => {
            let td = m.predict_topdown_batch(test.features.view())?;
            let level0 = confusion(&test.parents, &td.parents, spec.parents.len())?;
            let owner = spec.leaf_to_parent();
            let routing_exact = td.leaves.iter().zip(&td.parents).all(|(&l, &p)| owner[l] == p);
            let parent_accuracy = spec
                .parents
                .iter()
                .enumerate()
                .map(|(p, group)| child_accuracy(&m.children[p], test, p, group))
                .collect::<Result<_>>()?;
            let h = HierarchyEval {
                level0_accuracy: accuracy(&level0)?,
                level0: level0.with_names(&spec.parents.iter().map(|g| g.name.clone()).collect::<Vec<_>>()),
                parent_accuracy,
                routing_exact,
            };
            (test.leaves.clone(), td.leaves, Some(h))
        }
        (Target::Leaves, _) => (test.leaves.clone(), model.predict_batch(test.features.view())?, None),
        (Target::Parents, _) => (test.parents.clone(), model.predict_batch(test.features.view())?, None),
        (Target::Child(p), _) => {
            let group = &spec.parents[*p];
            let rows: Vec<usize> = (0..test.len()).filter(|&i| test.parents[i] == *p).collect();
            let sub = test.select(&rows);
            let local = sub
                .leaves
                .iter()
                .map(|l| group.leaves.iter().position(|x| x == l).expect("leaf in its parent"))
                .collect();
            (local, model.predict_batch(sub.features.view())?, None)
        }
    };
    let n = model.n_classes();
    let cm = confusion(&y_true, &y_pred, n)?.with_names(&model.leaf_names);
    let report = per_class_metrics(&cm)?;
    let blocks = match target {
        Target::Leaves => {
            let partition: Vec<Vec<usize>> = spec.parents.iter().map(|g| g.leaves.clone()).collect();
            Some(block_misclassification(&cm, &partition)?)
        }
        _ => None,
    };
    let intervals = match bootstrap {
        Some((resamples, seed)) if !y_true.is_empty() => Some(bootstrap_all(&y_true, &y_pred, n, resamples, seed)?),
        _ => None,
    };
    Ok(Evaluation {
        target,
        y_true,
        y_pred,
        confusion: cm,
        report,
        blocks,
        hierarchy,
        intervals,
    })
}

fn child_accuracy(child: &crate::nn::MlpModel, test: &Dataset, p: usize, group: &ParentGroup) -> Result<Option<f64>> {
    let rows: Vec<usize> = (0..test.len()).filter(|&i| test.parents[i] == p).collect();
    if rows.is_empty() {
        return Ok(None);
    }
    let sub = test.select(&rows);
    let pred = child.predict_batch(sub.features.view())?;
    let hits = sub
        .leaves
        .iter()
        .zip(&pred)
        .filter(|(&leaf, &local)| group.leaves[local] == leaf)
        .count();
    Ok(Some(hits as f64 / rows.len() as f64))
}

impl Evaluation {
    /// Display groups: parents for leaf targets, a single group otherwise.
    fn groups(&self, spec: &HierarchySpec) -> Vec<ParentGroup> {
        match self.target {
            Target::Leaves => spec.parents.clone(),
            Target::Parents => vec![ParentGroup {
                name: spec.root_name.clone(),
                leaves: (0..spec.parents.len()).collect(),
            }],
            Target::Child(p) => vec![ParentGroup {
                name: spec.parents[p].name.clone(),
                leaves: (0..spec.parents[p].leaves.len()).collect(),
            }],
        }
    }

    pub fn render_text(&self, title: &str, spec: &HierarchySpec) -> String {
        let mut out = format!("{title}\n\n");
        out.push_str(&format!("Test samples: {}\n", self.y_true.len()));
        out.push_str(&format!("Accuracy: {}\n", pct(Some(self.report.accuracy))));
        out.push_str(&format!("Balanced accuracy: {}\n", pct(self.report.balanced_accuracy)));
        if let Some(iv) = &self.intervals {
            if let Some(a) = iv.accuracy {
                out.push_str(&format!("Accuracy bootstrap: {} ± {:.2}\n", pct(Some(a.mean)), 100.0 * a.half_width));
            }
        }
        if let Some(h) = &self.hierarchy {
            out.push_str(&format!("Level-0 accuracy: {}\n", pct(Some(h.level0_accuracy))));
            for (g, a) in spec.parents.iter().zip(&h.parent_accuracy) {
                out.push_str(&format!("Parent accuracy ({}): {}\n", g.name, pct(*a)));
            }
            out.push_str(&format!("Routing exact: {}\n", h.routing_exact));
        }
        out.push_str("\nConfusion matrix\n");
        out.push_str(&render_confusion(&self.confusion));
        if let Some(h) = &self.hierarchy {
            out.push_str("\nLevel-0 confusion matrix\n");
            out.push_str(&render_confusion(&h.level0));
        }
        if let Some(b) = &self.blocks {
            out.push_str("\nMisclassification blocks\n");
            let short: Vec<String> = spec.parents.iter().map(|g| g.name.clone()).collect();
            out.push_str(&render_blocks(b, [short[0].as_str(), short[1].as_str()]));
        }
        out.push_str("\nPer-class metrics (%)\n");
        out.push_str(&render_class_metrics(
            &self.report,
            &self.groups(spec),
            self.intervals.as_ref().map(|i| &i.classes),
        ));
        out
    }

    /// Appends every result to `doc` under flat dotted keys.
    pub fn write_kv(&self, doc: &mut KvDoc, spec: &HierarchySpec) {
        doc.text(
            "target",
            match self.target {
                Target::Leaves => "leaves".into(),
                Target::Parents => "parents".into(),
                Target::Child(p) => format!("child.{}", key(&spec.parents[p].name)),
            }
            .as_str(),
        );
        doc.int("test_samples", self.y_true.len() as u64);
        doc.float("accuracy", self.report.accuracy);
        doc.metric("balanced_accuracy", self.report.balanced_accuracy);
        doc.int("misclassifications", self.confusion.misclassifications());
        let names: Vec<String> = self.report.class_names.iter().map(|n| key(n)).collect();
        for (i, ni) in names.iter().enumerate() {
            for (j, nj) in names.iter().enumerate() {
                doc.int(&format!("confusion.{ni}.{nj}"), self.confusion.get(i, j));
            }
        }
        for (c, m) in self.report.classes.iter().enumerate() {
            let n = &names[c];
            doc.metric(&format!("class.{n}.precision"), m.precision);
            doc.metric(&format!("class.{n}.sensitivity"), m.sensitivity);
            doc.metric(&format!("class.{n}.specificity"), m.specificity);
            doc.metric(&format!("class.{n}.f1"), m.f1);
        }
        if let Some(b) = &self.blocks {
            doc.int("blocks.within_first", b.within_first);
            doc.int("blocks.first_to_second", b.first_to_second);
            doc.int("blocks.second_to_first", b.second_to_first);
            doc.int("blocks.within_second", b.within_second);
            doc.int("blocks.total", b.total());
            doc.int("blocks.cross", b.cross());
        }
        if let Some(h) = &self.hierarchy {
            doc.float("hierarchy.level0_accuracy", h.level0_accuracy);
            for (g, a) in spec.parents.iter().zip(&h.parent_accuracy) {
                doc.metric(&format!("hierarchy.parent_accuracy.{}", key(&g.name)), *a);
            }
            doc.flag("hierarchy.routing_exact", h.routing_exact);
        }
        if let Some(iv) = &self.intervals {
            doc.int("bootstrap.resamples", iv.resamples as u64);
            let mut put = |name: &str, i: Option<BootstrapInterval>| {
                doc.metric(&format!("bootstrap.{name}.mean"), i.map(|i| i.mean));
                doc.metric(&format!("bootstrap.{name}.half_width"), i.map(|i| i.half_width));
            };
            put("accuracy", iv.accuracy);
            put("balanced_accuracy", iv.balanced_accuracy);
            for (c, n) in names.iter().enumerate() {
                put(&format!("{n}.precision"), iv.classes.precision[c]);
                put(&format!("{n}.sensitivity"), iv.classes.sensitivity[c]);
                put(&format!("{n}.specificity"), iv.classes.specificity[c]);
                put(&format!("{n}.f1"), iv.classes.f1[c]);
            }
        }
    }
}
