//! Feedforward network with ReLU hidden layers and a softmax or single-sigmoid
//! head, trained with class-weighted cross-entropy.
//!
//! Weights of layer `l` are stored input-major (`dims[l] x dims[l+1]`), so a
//! batch forward pass is `Z = A W + b` with samples as rows.

mod optim;
mod train;

use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::DEFAULT_FEATURE_COUNT;

pub use optim::Optimizer;
pub use train::{class_weights, train, TrainReport};

const PROB_CLAMP: f64 = 1e-12;
const PREDICT_CHUNK: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputActivation {
    Softmax,
    /// One output unit; class 1 when the output is at least 0.5.
    Sigmoid,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Adam,
    Sgd,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlpConfig {
    pub input_dim: usize,
    pub hidden_dims: Vec<usize>,
    pub output_dim: usize,
    pub output_activation: OutputActivation,
    pub dropout_rate: f64,
    pub optimizer: OptimizerKind,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub seed: u64,
}

impl Default for MlpConfig {
    fn default() -> Self {
        MlpConfig {
            input_dim: DEFAULT_FEATURE_COUNT,
            hidden_dims: vec![256, 512, 128],
            output_dim: 6,
            output_activation: OutputActivation::Softmax,
            dropout_rate: 0.3,
            optimizer: OptimizerKind::Adam,
            learning_rate: 1e-3,
            batch_size: 256,
            max_epochs: 50,
            patience: 5,
            seed: 0,
        }
    }
}

impl MlpConfig {
    /// Number of classes the head distinguishes (2 for a sigmoid head).
    pub fn n_classes(&self) -> usize {
        match self.output_activation {
            OutputActivation::Softmax => self.output_dim,
            OutputActivation::Sigmoid => 2,
        }
    }

    /// Layer widths from input to output.
    pub fn dims(&self) -> Vec<usize> {
        let mut dims = Vec::with_capacity(self.hidden_dims.len() + 2);
        dims.push(self.input_dim);
        dims.extend(&self.hidden_dims);
        dims.push(self.output_dim);
        dims
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.input_dim == 0 || self.hidden_dims.contains(&0) {
            return fail("layer widths must be positive".into());
        }
        match self.output_activation {
            OutputActivation::Sigmoid if self.output_dim != 1 => {
                return fail(format!("sigmoid head needs output_dim 1, got {}", self.output_dim))
            }
            OutputActivation::Softmax if self.output_dim < 2 => {
                return fail(format!("softmax head needs output_dim >= 2, got {}", self.output_dim))
            }
            _ => {}
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return fail(format!("dropout_rate must lie in [0, 1), got {}", self.dropout_rate));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return fail(format!("learning_rate must be positive, got {}", self.learning_rate));
        }
        if self.batch_size == 0 || self.max_epochs == 0 {
            return fail("batch_size and max_epochs must be positive".into());
        }
        Ok(())
    }
}

/// Weights (`in x out`) and bias of one dense layer.
#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Layer {
    fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Layer {
            weights: Array2::zeros((fan_in, fan_out)),
            bias: Array1::zeros(fan_out),
        }
    }

    fn zeros_like(other: &Layer) -> Self {
        Layer::zeros(other.weights.nrows(), other.weights.ncols())
    }
}

/// How dropout is applied during a forward pass.
pub enum Dropout<'a> {
    Off,
    /// Draw fresh inverted-dropout masks at the configured rate.
    Sample(&'a mut ChaCha8Rng),
    /// Reuse masks (one per hidden layer, entries 0 or `1/(1-rate)`).
    Fixed(&'a [Array2<f64>]),
}

/// Intermediate values of a forward pass, kept for backpropagation.
#[derive(Clone, Debug)]
pub struct ForwardCache {
    /// Input to each layer: the batch itself, then each post-dropout hidden activation.
    pub inputs: Vec<Array2<f64>>,
    /// Pre-activation of each hidden layer.
    pub pre_activations: Vec<Array2<f64>>,
    /// Dropout mask of each hidden layer, when one was applied.
    pub masks: Vec<Array2<f64>>,
    /// Head output: row-wise softmax probabilities or sigmoid outputs.
    pub output: Array2<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MlpModel {
    pub config: MlpConfig,
    pub layers: Vec<Layer>,
    /// One weight per class (two for a sigmoid head).
    pub class_weights: Vec<f64>,
}

impl MlpModel {
    /// All parameters zero, unit class weights.
    pub fn zeros(config: MlpConfig) -> Result<Self> {
        config.validate()?;
        let layers = config.dims().windows(2).map(|w| Layer::zeros(w[0], w[1])).collect();
        let class_weights = vec![1.0; config.n_classes()];
        Ok(MlpModel {
            config,
            layers,
            class_weights,
        })
    }

    /// He-uniform weights for ReLU layers, Glorot-uniform for the head, zero biases.
    pub fn init(config: MlpConfig, rng: &mut impl Rng) -> Result<Self> {
        let mut model = Self::zeros(config)?;
        let last = model.layers.len() - 1;
        for (l, layer) in model.layers.iter_mut().enumerate() {
            let (fan_in, fan_out) = layer.weights.dim();
            let limit = if l == last {
                (6.0 / (fan_in + fan_out) as f64).sqrt()
            } else {
                (6.0 / fan_in as f64).sqrt()
            };
            layer
                .weights
                .mapv_inplace(|_| rng.gen_range(-limit..limit));
        }
        Ok(model)
    }

    /// Rebuilds a model from stored parts, checking shapes and finiteness.
    pub fn from_parts(config: MlpConfig, layers: Vec<Layer>, class_weights: Vec<f64>) -> Result<Self> {
        config.validate()?;
        let dims = config.dims();
        if layers.len() != dims.len() - 1 {
            return Err(Error::Format(format!(
                "expected {} layers, found {}",
                dims.len() - 1,
                layers.len()
            )));
        }
        for (l, layer) in layers.iter().enumerate() {
            if layer.weights.dim() != (dims[l], dims[l + 1]) || layer.bias.len() != dims[l + 1] {
                return Err(Error::Format(format!("layer {l} has the wrong shape")));
            }
            if layer.weights.iter().chain(layer.bias.iter()).any(|v| !v.is_finite()) {
                return Err(Error::Format(format!("layer {l} has non-finite parameters")));
            }
        }
        if class_weights.len() != config.n_classes() {
            return Err(Error::Format(format!(
                "expected {} class weights, found {}",
                config.n_classes(),
                class_weights.len()
            )));
        }
        Ok(MlpModel {
            config,
            layers,
            class_weights,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.config.input_dim
    }

    pub fn n_classes(&self) -> usize {
        self.config.n_classes()
    }

    pub fn forward_batch(&self, x: ArrayView2<f64>, mut dropout: Dropout) -> Result<ForwardCache> {
        if x.ncols() != self.input_dim() {
            return Err(Error::Dimension {
                expected: self.input_dim(),
                got: x.ncols(),
            });
        }
        let hidden = self.layers.len() - 1;
        let rate = self.config.dropout_rate;
        if let Dropout::Fixed(masks) = &dropout {
            if masks.len() != hidden {
                return Err(Error::Dimension {
                    expected: hidden,
                    got: masks.len(),
                });
            }
        }

        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre_activations = Vec::with_capacity(hidden);
        let mut masks = Vec::new();
        inputs.push(x.to_owned());

        for (l, layer) in self.layers[..hidden].iter().enumerate() {
            let z = inputs[l].dot(&layer.weights) + &layer.bias;
            let mut a = z.mapv(|v| v.max(0.0));
            let mask = match &mut dropout {
                Dropout::Off => None,
                Dropout::Sample(_) if rate == 0.0 => None,
                Dropout::Sample(rng) => {
                    let keep = 1.0 - rate;
                    Some(a.mapv(|_| if rng.gen::<f64>() < keep { 1.0 / keep } else { 0.0 }))
                }
                Dropout::Fixed(fixed) => {
                    if fixed[l].dim() != a.dim() {
                        return Err(Error::Dimension {
                            expected: a.ncols(),
                            got: fixed[l].ncols(),
                        });
                    }
                    Some(fixed[l].clone())
                }
            };
            if let Some(mask) = mask {
                a *= &mask;
                masks.push(mask);
            }
            pre_activations.push(z);
            inputs.push(a);
        }

        let head = &self.layers[hidden];
        let mut output = inputs[hidden].dot(&head.weights) + &head.bias;
        match self.config.output_activation {
            OutputActivation::Softmax => output.rows_mut().into_iter().for_each(|mut row| {
                let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
                row.mapv_inplace(|v| (v - max).exp());
                let sum = row.sum();
                row.mapv_inplace(|v| open_unit(v / sum));
            }),
            OutputActivation::Sigmoid => output.mapv_inplace(|z| open_unit(sigmoid(z))),
        }

        Ok(ForwardCache {
            inputs,
            pre_activations,
            masks,
            output,
        })
    }

    /// Single-sample forward pass. `training` enables dropout drawn from `rng`.
    pub fn forward(&self, x: &[f64], training: bool, rng: &mut ChaCha8Rng) -> Result<ForwardCache> {
        let view = ArrayView2::from_shape((1, x.len()), x).expect("contiguous slice");
        let dropout = if training {
            Dropout::Sample(rng)
        } else {
            Dropout::Off
        };
        self.forward_batch(view, dropout)
    }

    /// Mean class-weighted loss over a batch, with gradients of that mean.
    pub fn backward(&self, cache: &ForwardCache, targets: &[usize]) -> Result<Gradients> {
        let batch = cache.output.nrows();
        if targets.len() != batch {
            return Err(Error::Dimension {
                expected: batch,
                got: targets.len(),
            });
        }
        let n_classes = self.n_classes();
        if let Some(&bad) = targets.iter().find(|&&t| t >= n_classes) {
            return Err(Error::Config(format!("target class {bad} out of range 0..{n_classes}")));
        }

        // d(loss)/d(logits) for both heads is w_y (p - onehot(y)) / batch.
        let scale = 1.0 / batch as f64;
        let mut delta = cache.output.clone();
        for (mut row, &t) in delta.rows_mut().into_iter().zip(targets) {
            match self.config.output_activation {
                OutputActivation::Softmax => row[t] -= 1.0,
                OutputActivation::Sigmoid => row[0] -= t as f64,
            }
            row *= self.class_weights[t] * scale;
        }

        let hidden = self.layers.len() - 1;
        let mut grads: Vec<Layer> = self.layers.iter().map(Layer::zeros_like).collect();
        for l in (0..=hidden).rev() {
            grads[l].weights = cache.inputs[l].t().dot(&delta);
            grads[l].bias = delta.sum_axis(Axis(0));
            if l == 0 {
                break;
            }
            let mut upstream = delta.dot(&self.layers[l].weights.t());
            if let Some(mask) = cache.masks.get(l - 1) {
                upstream *= mask;
            }
            Zip::from(&mut upstream)
                .and(&cache.pre_activations[l - 1])
                .for_each(|g, &z| {
                    if z <= 0.0 {
                        *g = 0.0;
                    }
                });
            delta = upstream;
        }
        Ok(Gradients { layers: grads })
    }

    /// Mean class-weighted loss of a forward output against `targets`.
    pub fn batch_loss(&self, output: &Array2<f64>, targets: &[usize]) -> Result<f64> {
        let mut total = 0.0;
        for (row, &t) in output.rows().into_iter().zip(targets) {
            total += weighted_cross_entropy(
                row.as_slice().expect("standard layout"),
                t,
                &self.class_weights,
                self.config.output_activation,
            )?;
        }
        Ok(total / output.nrows().max(1) as f64)
    }

    pub fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>> {
        let view = ArrayView2::from_shape((1, x.len()), x).expect("contiguous slice");
        Ok(self.forward_batch(view, Dropout::Off)?.output.row(0).to_vec())
    }

    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        Ok(decide(&self.predict_proba(x)?, self.config.output_activation))
    }

    /// Head outputs for every row, evaluated in chunks.
    pub fn predict_proba_batch(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        let mut out = Array2::zeros((x.nrows(), self.config.output_dim));
        for (chunk, mut dst) in x
            .axis_chunks_iter(Axis(0), PREDICT_CHUNK)
            .zip(out.axis_chunks_iter_mut(Axis(0), PREDICT_CHUNK))
        {
            dst.assign(&self.forward_batch(chunk, Dropout::Off)?.output);
        }
        Ok(out)
    }

    pub fn predict_batch(&self, x: ArrayView2<f64>) -> Result<Vec<usize>> {
        let probs = self.predict_proba_batch(x)?;
        Ok(probs
            .rows()
            .into_iter()
            .map(|r| decide(r.as_slice().expect("standard layout"), self.config.output_activation))
            .collect())
    }
}

/// Parameter gradients, shaped like [`MlpModel::layers`].
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Layer>,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Keeps a saturated probability strictly inside (0, 1). Moves a value by at
/// most one ulp of 1, so softmax rows still sum to 1 within 1e-15.
fn open_unit(p: f64) -> f64 {
    p.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}

/// Class decision from head outputs: argmax with ties to the lowest index for
/// softmax, `p >= 0.5` for a sigmoid head.
pub fn decide(probs: &[f64], head: OutputActivation) -> usize {
    match head {
        OutputActivation::Sigmoid => usize::from(probs[0] >= 0.5),
        OutputActivation::Softmax => {
            let mut best = 0;
            for (i, &p) in probs.iter().enumerate().skip(1) {
                if p > probs[best] {
                    best = i;
                }
            }
            best
        }
    }
}

/// Class-weighted cross-entropy of one prediction. Probabilities are clamped to
/// `[1e-12, 1 - 1e-12]` before the logarithm.
pub fn weighted_cross_entropy(
    probs: &[f64],
    true_class: usize,
    class_weights: &[f64],
    head: OutputActivation,
) -> Result<f64> {
    let clamp = |p: f64| p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
    let n_classes = match head {
        OutputActivation::Softmax => probs.len(),
        OutputActivation::Sigmoid => 2,
    };
    if true_class >= n_classes || true_class >= class_weights.len() {
        return Err(Error::Config(format!(
            "true class {true_class} out of range 0..{n_classes}"
        )));
    }
    let w = class_weights[true_class];
    Ok(match head {
        OutputActivation::Softmax => -w * clamp(probs[true_class]).ln(),
        OutputActivation::Sigmoid => {
            let p = clamp(probs[0]);
            if true_class == 1 {
                -w * p.ln()
            } else {
                -w * (1.0 - p).ln()
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use rand::SeedableRng;

    fn cfg(input: usize, hidden: &[usize], output: usize, head: OutputActivation) -> MlpConfig {
        MlpConfig {
            input_dim: input,
            hidden_dims: hidden.to_vec(),
            output_dim: output,
            output_activation: head,
            ..Default::default()
        }
    }

    #[test]
    fn saturated_heads_stay_inside_the_open_interval() {
        let mut m = MlpModel::zeros(cfg(2, &[3], 3, OutputActivation::Softmax)).unwrap();
        m.layers[1].bias = array![1000.0, 0.0, -1000.0];
        let p = m.predict_proba(&[0.0, 0.0]).unwrap();
        assert!(p.iter().all(|&v| v > 0.0 && v < 1.0), "{p:?}");
        assert_abs_diff_eq!(p.iter().sum::<f64>(), 1.0, epsilon = 1e-15);
        assert_eq!(m.predict(&[0.0, 0.0]).unwrap(), 0);

        let mut s = MlpModel::zeros(cfg(2, &[3], 1, OutputActivation::Sigmoid)).unwrap();
        for (bias, class) in [(1000.0, 1), (-1000.0, 0)] {
            s.layers[1].bias = array![bias];
            let p = s.predict_proba(&[0.0, 0.0]).unwrap()[0];
            assert!(p > 0.0 && p < 1.0, "{p}");
            assert_eq!(s.predict(&[0.0, 0.0]).unwrap(), class);
        }
    }

    #[test]
    fn zero_model_softmax_is_uniform() {
        let m = MlpModel::zeros(cfg(4, &[3], 6, OutputActivation::Softmax)).unwrap();
        let p = m.predict_proba(&[1.0, -2.0, 0.5, 3.0]).unwrap();
        for v in &p {
            assert_abs_diff_eq!(*v, 1.0 / 6.0, epsilon = 1e-15);
        }
        assert_eq!(m.predict(&[1.0, -2.0, 0.5, 3.0]).unwrap(), 0);
    }

    #[test]
    fn zero_model_sigmoid_is_half_and_positive() {
        let m = MlpModel::zeros(cfg(2, &[3], 1, OutputActivation::Sigmoid)).unwrap();
        assert_eq!(m.predict_proba(&[0.3, 0.1]).unwrap(), vec![0.5]);
        assert_eq!(m.predict(&[0.3, 0.1]).unwrap(), 1);
    }

    #[test]
    fn dropout_zero_matches_eval_mode() {
        let mut c = cfg(5, &[8, 4], 3, OutputActivation::Softmax);
        c.dropout_rate = 0.0;
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = MlpModel::init(c, &mut rng).unwrap();
        let x = [0.1, -0.4, 2.0, 0.0, 1.5];
        let train = m.forward(&x, true, &mut rng).unwrap();
        let eval = m.forward(&x, false, &mut rng).unwrap();
        assert_eq!(train.output, eval.output);
        assert!(train.masks.is_empty());
    }

    #[test]
    fn dropout_masks_are_inverted_scaling() {
        let mut c = cfg(5, &[200], 3, OutputActivation::Softmax);
        c.dropout_rate = 0.25;
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let m = MlpModel::init(c, &mut rng).unwrap();
        let cache = m.forward(&[1.0; 5], true, &mut rng).unwrap();
        let mask = &cache.masks[0];
        assert!(mask.iter().all(|&v| v == 0.0 || (v - 1.0 / 0.75).abs() < 1e-15));
        let dropped = mask.iter().filter(|&&v| v == 0.0).count();
        assert!(dropped > 20 && dropped < 80, "dropped {dropped}");
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let m = MlpModel::zeros(cfg(4, &[3], 2, OutputActivation::Softmax)).unwrap();
        assert!(matches!(
            m.predict(&[1.0, 2.0]),
            Err(Error::Dimension { expected: 4, got: 2 })
        ));
    }

    #[test]
    fn loss_examples() {
        let w = [1.0, 2.0];
        let sm = OutputActivation::Softmax;
        let e1 = (-1.0f64).exp();
        assert_abs_diff_eq!(weighted_cross_entropy(&[1.0, 0.0], 0, &w, sm).unwrap(), 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(weighted_cross_entropy(&[0.0, 1.0], 1, &w, sm).unwrap(), 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(weighted_cross_entropy(&[e1, 1.0 - e1], 0, &w, sm).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(weighted_cross_entropy(&[1.0 - e1, e1], 1, &w, sm).unwrap(), 2.0, epsilon = 1e-12);
        assert!(weighted_cross_entropy(&[0.5, 0.5], 2, &w, sm).is_err());
    }

    #[test]
    fn sigmoid_loss_is_binary_cross_entropy() {
        let w = [3.0, 0.5];
        let sg = OutputActivation::Sigmoid;
        assert_abs_diff_eq!(weighted_cross_entropy(&[0.8], 1, &w, sg).unwrap(), -0.5 * 0.8f64.ln(), epsilon = 1e-15);
        assert_abs_diff_eq!(weighted_cross_entropy(&[0.8], 0, &w, sg).unwrap(), -3.0 * 0.2f64.ln(), epsilon = 1e-12);
        assert!(weighted_cross_entropy(&[0.8], 2, &w, sg).is_err());
    }

    #[test]
    fn unit_weights_equal_plain_cross_entropy() {
        let p = [0.2, 0.5, 0.3];
        for t in 0..3 {
            let got = weighted_cross_entropy(&p, t, &[1.0; 3], OutputActivation::Softmax).unwrap();
            assert_eq!(got, -p[t].ln());
        }
    }

    #[test]
    fn logistic_regression_gradient_closed_form() {
        // x = [1], two classes, W = 0: dL/dW = [p0 - 1, p1] * w0 * x.
        for w0 in [1.0, 2.5] {
            let mut m = MlpModel::zeros(cfg(1, &[], 2, OutputActivation::Softmax)).unwrap();
            m.class_weights = vec![w0, 1.0];
            let cache = m.forward_batch(array![[1.0]].view(), Dropout::Off).unwrap();
            let g = m.backward(&cache, &[0]).unwrap();
            assert_eq!(g.layers[0].weights, array![[-0.5 * w0, 0.5 * w0]]);
        }
    }

    #[test]
    fn masked_unit_has_zero_gradient() {
        let mut c = cfg(3, &[4], 2, OutputActivation::Softmax);
        c.dropout_rate = 0.5;
        let m = MlpModel::init(c, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let mask = array![[2.0, 0.0, 2.0, 2.0]];
        let x = array![[0.3, -1.0, 0.8]];
        let cache = m
            .forward_batch(x.view(), Dropout::Fixed(std::slice::from_ref(&mask)))
            .unwrap();
        let g = m.backward(&cache, &[1]).unwrap();
        assert!(g.layers[0].weights.column(1).iter().all(|&v| v == 0.0));
        assert_eq!(g.layers[0].bias[1], 0.0);
        assert!(g.layers[1].weights.row(1).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn decide_rules() {
        assert_eq!(decide(&[0.1, 0.7, 0.2], OutputActivation::Softmax), 1);
        assert_eq!(decide(&[1.0 / 6.0; 6], OutputActivation::Softmax), 0);
        assert_eq!(decide(&[0.5], OutputActivation::Sigmoid), 1);
        assert_eq!(decide(&[0.4999], OutputActivation::Sigmoid), 0);
    }

    #[test]
    fn config_validation() {
        assert!(cfg(3, &[2], 2, OutputActivation::Sigmoid).validate().is_err());
        assert!(cfg(3, &[2], 1, OutputActivation::Softmax).validate().is_err());
        let c = MlpConfig {
            dropout_rate: 1.0,
            ..Default::default()
        };
        assert!(c.validate().is_err());
        assert!(MlpConfig::default().validate().is_ok());
    }

    #[test]
    fn from_parts_rejects_bad_shapes() {
        let m = MlpModel::zeros(cfg(3, &[2], 2, OutputActivation::Softmax)).unwrap();
        let mut layers = m.layers.clone();
        layers[0].weights = Array2::zeros((2, 2));
        assert!(MlpModel::from_parts(m.config.clone(), layers, m.class_weights.clone()).is_err());
        let mut layers = m.layers.clone();
        layers[1].bias[0] = f64::NAN;
        assert!(MlpModel::from_parts(m.config.clone(), layers, m.class_weights.clone()).is_err());
        assert!(MlpModel::from_parts(m.config.clone(), m.layers.clone(), vec![1.0]).is_err());
    }
}
