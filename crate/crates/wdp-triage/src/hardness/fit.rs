//! Optimizer and epoch loop behind [`super::train`]. Kept free of data
//! preparation: inputs arrive already standardized and split.

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;

use super::net::{mse, Net, IN, PARAM_COUNT};
use super::TrainConfig;

const ADAM_EPSILON: f64 = 1e-8;

/// AdamW with bias correction and decoupled weight decay: the decay term is
/// applied directly to the parameters, outside the moment estimates, and
/// covers every trainable parameter including batch-norm scale and shift.
struct AdamW {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
    lr: f64,
    beta1: f64,
    beta2: f64,
    weight_decay: f64,
}

impl AdamW {
    fn new(config: &TrainConfig) -> AdamW {
        AdamW {
            m: vec![0.0; PARAM_COUNT],
            v: vec![0.0; PARAM_COUNT],
            t: 0,
            lr: config.learning_rate,
            beta1: config.beta1,
            beta2: config.beta2,
            weight_decay: config.weight_decay,
        }
    }

    fn step(&mut self, theta: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for i in 0..PARAM_COUNT {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grad[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grad[i] * grad[i];
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            theta[i] -= self.lr * (m_hat / (v_hat.sqrt() + ADAM_EPSILON) + self.weight_decay * theta[i]);
        }
    }
}

pub(crate) struct FitOutcome {
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub best_val_mse: f64,
}

/// Runs the epoch loop and leaves `net` at the parameters of the epoch with
/// the lowest validation MSE. Validation uses inference mode (running
/// statistics), matching how the model will be applied later.
pub(crate) fn fit(
    net: &mut Net,
    x_train: &[f64],
    y_train: &[f64],
    x_val: &[f64],
    y_val: &[f64],
    config: &TrainConfig,
    rng: &mut ChaCha8Rng,
) -> FitOutcome {
    let n_train = y_train.len();
    let mut optimizer = AdamW::new(config);
    let mut order: Vec<usize> = (0..n_train).collect();
    let mut batch_x = Vec::new();
    let mut batch_y = Vec::new();

    let mut best = net.clone();
    let mut best_val_mse = f64::INFINITY;
    let mut best_epoch = 0;
    let mut epochs_without_improvement = 0;
    let mut epochs_run = 0;

    for epoch in 0..config.max_epochs {
        epochs_run = epoch + 1;
        order.shuffle(rng);
        for chunk in order.chunks(config.batch_size) {
            batch_x.clear();
            batch_y.clear();
            for &i in chunk {
                batch_x.extend_from_slice(&x_train[i * IN..(i + 1) * IN]);
                batch_y.push(y_train[i]);
            }
            let cache = net.forward_train(&batch_x, chunk.len());
            net.update_running(&cache);
            let (_, grad) = net.backward(&cache, &batch_y);
            optimizer.step(net.theta_mut(), &grad);
        }

        let val_mse = validation_mse(net, x_val, y_val);
        if val_mse < best_val_mse {
            best_val_mse = val_mse;
            best_epoch = epoch;
            best = net.clone();
            epochs_without_improvement = 0;
        } else {
            epochs_without_improvement += 1;
            if epochs_without_improvement >= config.patience {
                break;
            }
        }
    }

    *net = best;
    FitOutcome { epochs_run, best_epoch, best_val_mse }
}

fn validation_mse(net: &Net, x_val: &[f64], y_val: &[f64]) -> f64 {
    let preds: Vec<f64> =
        (0..y_val.len()).map(|k| net.forward_eval(&x_val[k * IN..(k + 1) * IN])).collect();
    mse(&preds, y_val)
}
