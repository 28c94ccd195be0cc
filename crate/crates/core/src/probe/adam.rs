use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::rng::stream_rng;

/// Optimisation settings for the iterative probe solvers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
    /// Ridge penalty of the closed-form regression solver.
    pub ridge: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { learning_rate: 1e-3, batch_size: 32, max_epochs: 50, patience: 5, ridge: 1e-6 }
    }
}

/// Mean loss and its gradient over a subset of rows.
pub(crate) trait Objective: Sync {
    fn num_params(&self) -> usize;
    fn loss(&self, params: &[f64], rows: &[usize]) -> f64;
    /// Overwrites `grad` with the gradient of the mean loss over `rows`.
    fn gradient(&self, params: &[f64], rows: &[usize], grad: &mut [f64]);
}

struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    fn new(lr: f64, n: usize) -> Self {
        Self { lr, beta1: 0.9, beta2: 0.999, eps: 1e-8, m: vec![0.0; n], v: vec![0.0; n], t: 0 }
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        for i in 0..params.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grad[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grad[i] * grad[i];
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            params[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
    }
}

/// Minibatch Adam from zero initialisation with early stopping on validation
/// loss. Returns the parameters of the best validation epoch.
pub(crate) fn fit_adam(
    objective: &dyn Objective,
    train: &[usize],
    val: &[usize],
    config: &TrainConfig,
    seed: u64,
) -> Vec<f64> {
    let n = objective.num_params();
    let mut params = vec![0.0; n];
    let mut grad = vec![0.0; n];
    let mut adam = Adam::new(config.learning_rate, n);
    let mut rng = stream_rng(seed, 1);
    let mut order = train.to_vec();
    let monitor = if val.is_empty() { train } else { val };

    let mut best = params.clone();
    let mut best_loss = f64::INFINITY;
    let mut stale = 0;
    for _ in 0..config.max_epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(config.batch_size.max(1)) {
            objective.gradient(&params, batch, &mut grad);
            adam.step(&mut params, &grad);
        }
        let loss = objective.loss(&params, monitor);
        if loss < best_loss {
            best_loss = loss;
            best.copy_from_slice(&params);
            stale = 0;
        } else {
            stale += 1;
            if stale >= config.patience {
                break;
            }
        }
    }
    best
}
