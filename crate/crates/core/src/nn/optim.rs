use ndarray::Zip;

use super::{Gradients, Layer, MlpConfig, OptimizerKind};

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPSILON: f64 = 1e-8;

/// First-order update rule with its running state.
pub enum Optimizer {
    Sgd {
        lr: f64,
    },
    Adam {
        lr: f64,
        step: i32,
        m: Vec<Layer>,
        v: Vec<Layer>,
    },
}

impl Optimizer {
    pub fn new(config: &MlpConfig, layers: &[Layer]) -> Self {
        let lr = config.learning_rate;
        match config.optimizer {
            OptimizerKind::Sgd => Optimizer::Sgd { lr },
            OptimizerKind::Adam => Optimizer::Adam {
                lr,
                step: 0,
                m: layers.iter().map(Layer::zeros_like).collect(),
                v: layers.iter().map(Layer::zeros_like).collect(),
            },
        }
    }

    pub fn step(&mut self, layers: &mut [Layer], grads: &Gradients) {
        match self {
            Optimizer::Sgd { lr } => {
                let lr = *lr;
                for (p, g) in layers.iter_mut().zip(&grads.layers) {
                    p.weights.scaled_add(-lr, &g.weights);
                    p.bias.scaled_add(-lr, &g.bias);
                }
            }
            Optimizer::Adam { lr, step, m, v } => {
                *step += 1;
                let c1 = 1.0 - BETA1.powi(*step);
                let c2 = 1.0 - BETA2.powi(*step);
                let lr = *lr;
                let update = |p: &mut f64, m: &mut f64, v: &mut f64, &g: &f64| {
                    *m = BETA1 * *m + (1.0 - BETA1) * g;
                    *v = BETA2 * *v + (1.0 - BETA2) * g * g;
                    *p -= lr * (*m / c1) / ((*v / c2).sqrt() + EPSILON);
                };
                for (((p, g), m), v) in layers.iter_mut().zip(&grads.layers).zip(m).zip(v) {
                    Zip::from(&mut p.weights)
                        .and(&mut m.weights)
                        .and(&mut v.weights)
                        .and(&g.weights)
                        .for_each(update);
                    Zip::from(&mut p.bias)
                        .and(&mut m.bias)
                        .and(&mut v.bias)
                        .and(&g.bias)
                        .for_each(update);
                }
            }
        }
    }
}
