use ndarray::{ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{decide, Dropout, MlpConfig, MlpModel, Optimizer};
use crate::error::{Error, Result};

/// Inverse-frequency class weights `N / (K * count_k)`; their mean is 1.
pub fn class_weights(counts: &[usize]) -> Result<Vec<f64>> {
    if let Some(k) = counts.iter().position(|&c| c == 0) {
        return Err(Error::EmptyClass(k.to_string()));
    }
    let total: usize = counts.iter().sum();
    let k = counts.len() as f64;
    Ok(counts
        .iter()
        .map(|&c| total as f64 / (k * c as f64))
        .collect())
}

/// Per-epoch training history. Epoch indices are zero-based.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub train_loss: Vec<f64>,
    pub val_loss: Vec<f64>,
    pub val_accuracy: Vec<f64>,
    pub best_epoch: usize,
    pub stopped_early: bool,
}

impl TrainReport {
    pub fn epochs(&self) -> usize {
        self.val_loss.len()
    }
}

fn check_labels(y: &[usize], n_classes: usize, rows: usize) -> Result<()> {
    if y.len() != rows {
        return Err(Error::Dimension {
            expected: rows,
            got: y.len(),
        });
    }
    if let Some(&bad) = y.iter().find(|&&c| c >= n_classes) {
        return Err(Error::Config(format!("label {bad} out of range 0..{n_classes}")));
    }
    Ok(())
}

/// Mini-batch training with early stopping on validation loss.
///
/// One seeded generator drives initialization, per-epoch shuffling and
/// dropout, so the result is a pure function of the inputs. The returned model
/// carries the parameters of the epoch with the lowest validation loss.
pub fn train(
    config: &MlpConfig,
    train_x: ArrayView2<f64>,
    train_y: &[usize],
    val_x: ArrayView2<f64>,
    val_y: &[usize],
    class_weights: &[f64],
) -> Result<(MlpModel, TrainReport)> {
    config.validate()?;
    let n_classes = config.n_classes();
    if train_x.nrows() == 0 || val_x.nrows() == 0 {
        return Err(Error::Config("training and validation sets must be non-empty".into()));
    }
    for x in [&train_x, &val_x] {
        if x.ncols() != config.input_dim {
            return Err(Error::Dimension {
                expected: config.input_dim,
                got: x.ncols(),
            });
        }
    }
    check_labels(train_y, n_classes, train_x.nrows())?;
    check_labels(val_y, n_classes, val_x.nrows())?;
    if class_weights.len() != n_classes {
        return Err(Error::Dimension {
            expected: n_classes,
            got: class_weights.len(),
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut model = MlpModel::init(config.clone(), &mut rng)?;
    model.class_weights = class_weights.to_vec();
    let mut optimizer = Optimizer::new(config, &model.layers);

    let mut report = TrainReport::default();
    let mut best_layers = model.layers.clone();
    let mut best_loss = f64::INFINITY;
    let mut since_best = 0;
    let mut order: Vec<usize> = (0..train_x.nrows()).collect();

    for epoch in 0..config.max_epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for batch in order.chunks(config.batch_size) {
            let xb = train_x.select(Axis(0), batch);
            let yb: Vec<usize> = batch.iter().map(|&i| train_y[i]).collect();
            let cache = model.forward_batch(xb.view(), Dropout::Sample(&mut rng))?;
            loss_sum += model.batch_loss(&cache.output, &yb)? * batch.len() as f64;
            let grads = model.backward(&cache, &yb)?;
            optimizer.step(&mut model.layers, &grads);
        }
        let train_loss = loss_sum / train_x.nrows() as f64;

        let val_out = model.predict_proba_batch(val_x)?;
        let val_loss = model.batch_loss(&val_out, val_y)?;
        if !train_loss.is_finite() || !val_loss.is_finite() {
            return Err(Error::Diverged { epoch });
        }
        let correct = val_out
            .rows()
            .into_iter()
            .zip(val_y)
            .filter(|(row, &y)| {
                decide(row.as_slice().expect("standard layout"), config.output_activation) == y
            })
            .count();

        report.train_loss.push(train_loss);
        report.val_loss.push(val_loss);
        report.val_accuracy.push(correct as f64 / val_y.len() as f64);

        if val_loss < best_loss {
            best_loss = val_loss;
            best_layers.clone_from(&model.layers);
            report.best_epoch = epoch;
            since_best = 0;
        } else {
            since_best += 1;
        }
        if since_best >= config.patience && epoch + 1 < config.max_epochs {
            report.stopped_early = true;
            break;
        }
    }

    model.layers = best_layers;
    Ok((model, report))
}
