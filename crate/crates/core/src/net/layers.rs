use ndarray::{Array1, Array2, Axis, Zip};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    /// Shape (inputs, outputs).
    pub weights: Array2<f64>,
    pub biases: Array1<f64>,
}

impl Dense {
    pub fn inputs(&self) -> usize {
        self.weights.nrows()
    }

    pub fn outputs(&self) -> usize {
        self.weights.ncols()
    }

    pub(super) fn forward(&self, x: &Array2<f64>) -> Array2<f64> {
        x.dot(&self.weights) + &self.biases
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchNorm {
    pub gamma: Array1<f64>,
    pub beta: Array1<f64>,
    pub running_mean: Array1<f64>,
    /// Tracks the unbiased batch variance.
    pub running_var: Array1<f64>,
    pub eps: f64,
    pub momentum: f64,
}

/// What batch-norm backward needs from its forward pass.
#[derive(Debug, Clone)]
pub(super) struct BnCache {
    pub x_hat: Array2<f64>,
    pub inv_std: Array1<f64>,
}

impl BatchNorm {
    pub fn new(width: usize, eps: f64, momentum: f64) -> Self {
        Self {
            gamma: Array1::ones(width),
            beta: Array1::zeros(width),
            running_mean: Array1::zeros(width),
            running_var: Array1::ones(width),
            eps,
            momentum,
        }
    }

    pub fn width(&self) -> usize {
        self.gamma.len()
    }

    pub(super) fn forward_train(&mut self, x: &Array2<f64>) -> (Array2<f64>, BnCache) {
        let n = x.nrows() as f64;
        let mean = x.mean_axis(Axis(0)).expect("batch has rows");
        let centered = x - &mean;
        let var = centered.mapv(|v| v * v).sum_axis(Axis(0)) / n;
        let inv_std = var.mapv(|v| 1.0 / (v + self.eps).sqrt());
        let x_hat = centered * &inv_std;
        let out = &x_hat * &self.gamma + &self.beta;
        let m = self.momentum;
        Zip::from(&mut self.running_mean).and(&mean).for_each(|r, &b| *r = (1.0 - m) * *r + m * b);
        Zip::from(&mut self.running_var)
            .and(&var)
            .for_each(|r, &b| *r = (1.0 - m) * *r + m * b * n / (n - 1.0));
        (out, BnCache { x_hat, inv_std })
    }

    pub(super) fn forward_eval(&self, x: &Array2<f64>) -> Array2<f64> {
        let scale = Zip::from(&self.gamma)
            .and(&self.running_var)
            .map_collect(|&g, &v| g / (v + self.eps).sqrt());
        let shift = &self.beta - &(&self.running_mean * &scale);
        x * &scale + &shift
    }

    /// Returns (d input, d gamma, d beta).
    pub(super) fn backward(&self, g: &Array2<f64>, c: &BnCache) -> (Array2<f64>, Array1<f64>, Array1<f64>) {
        let n = g.nrows() as f64;
        let d_beta = g.sum_axis(Axis(0));
        let d_gamma = (g * &c.x_hat).sum_axis(Axis(0));
        let g_hat = g * &self.gamma;
        let sum_g = g_hat.sum_axis(Axis(0));
        let sum_gx = (&g_hat * &c.x_hat).sum_axis(Axis(0));
        let dx = (g_hat * n - &sum_g - &c.x_hat * &sum_gx) * &(&c.inv_std / n);
        (dx, d_gamma, d_beta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Sigmoid,
}

pub(super) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl Activation {
    pub(super) fn apply(self, x: &Array2<f64>) -> Array2<f64> {
        match self {
            Activation::Relu => x.mapv(|v| v.max(0.0)),
            Activation::Sigmoid => x.mapv(sigmoid),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Layer {
    Dense(Dense),
    BatchNorm(BatchNorm),
    /// Inverted dropout: kept units are scaled by `1 / (1 - rate)`.
    Dropout { rate: f64 },
    Activation { function: Activation },
}
