use ndarray::{ArrayD, Zip};
use serde::{Deserialize, Serialize};

use super::{GradientSet, NetError, Network};

/// Adam with bias correction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerState {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub step: u64,
    pub m: Vec<ArrayD<f64>>,
    pub v: Vec<ArrayD<f64>>,
}

impl OptimizerState {
    pub fn new(net: &Network, learning_rate: f64) -> Self {
        let zeros: Vec<ArrayD<f64>> = net.param_shapes().into_iter().map(ArrayD::zeros).collect();
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }

    /// One update. Non-finite gradients abort before anything changes.
    pub fn step(&mut self, net: &mut Network, grads: &GradientSet) -> Result<(), NetError> {
        let shapes = net.param_shapes();
        let congruent = grads.tensors.len() == shapes.len()
            && self.m.len() == shapes.len()
            && grads.tensors.iter().zip(&shapes).all(|(g, s)| g.shape() == s.as_slice())
            && self.m.iter().zip(&shapes).all(|(m, s)| m.shape() == s.as_slice());
        if !congruent {
            return Err(NetError::Shape);
        }
        if !grads.is_finite() {
            return Err(NetError::NonFinite("gradients"));
        }
        self.step += 1;
        let (b1, b2, eps, lr) = (self.beta1, self.beta2, self.eps, self.learning_rate);
        let c1 = 1.0 - b1.powf(self.step as f64);
        let c2 = 1.0 - b2.powf(self.step as f64);
        for (((mut p, g), m), v) in net.params_mut().into_iter().zip(&grads.tensors).zip(&mut self.m).zip(&mut self.v) {
            Zip::from(&mut p).and(g).and(m).and(v).for_each(|p, &g, m, v| {
                *m = b1 * *m + (1.0 - b1) * g;
                *v = b2 * *v + (1.0 - b2) * g * g;
                *p -= lr * (*m / c1) / ((*v / c2).sqrt() + eps);
            });
        }
        Ok(())
    }
}
