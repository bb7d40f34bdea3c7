//! Feedforward network: dense layers, batch normalization, inverted dropout,
//! ReLU and a sigmoid output, trained on binary cross-entropy with exact
//! backpropagation and Adam.

mod layers;
mod optim;

use ndarray::{Array1, Array2, ArrayD, ArrayViewMutD, Axis, Zip};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

pub use layers::{Activation, BatchNorm, Dense, Layer};
pub use optim::OptimizerState;

use layers::BnCache;

/// Probabilities are clamped to `[CLAMP, 1 - CLAMP]` inside the loss.
pub const CLAMP: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NetError {
    #[error("expected {expected} input columns, got {found}")]
    Dimension { expected: usize, found: usize },
    #[error("train-mode batch needs at least 2 rows, got {0}")]
    BatchTooSmall(usize),
    #[error("backward called without a cached train-mode forward pass")]
    NoCache,
    #[error("{0} and {1} values given")]
    Length(usize, usize),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("gradient shapes do not match the network parameters")]
    Shape,
    #[error("invalid topology: {0}")]
    Topology(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Train,
    #[default]
    Eval,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetConfig {
    pub hidden: Vec<usize>,
    pub dropout_rate: f64,
    pub bn_momentum: f64,
    pub bn_eps: f64,
}

impl Default for NetConfig {
    fn default() -> Self {
        Self { hidden: vec![300, 100], dropout_rate: 0.3, bn_momentum: 0.1, bn_eps: 1e-5 }
    }
}

#[derive(Debug, Clone)]
enum LayerCache {
    Dense { input: Array2<f64> },
    BatchNorm(BnCache),
    Dropout { mask: Array2<f64> },
    Relu { output: Array2<f64> },
    Sigmoid,
}

#[derive(Debug, Clone)]
struct ForwardCache {
    layers: Vec<LayerCache>,
    output: Array1<f64>,
}

/// Per-parameter gradients in [`Network::params_mut`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientSet {
    pub tensors: Vec<ArrayD<f64>>,
}

impl GradientSet {
    pub fn is_finite(&self) -> bool {
        self.tensors.iter().all(|t| t.iter().all(|v| v.is_finite()))
    }
}

fn fresh_rng() -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(0)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Network {
    pub layers: Vec<Layer>,
    #[serde(skip)]
    mode: Mode,
    #[serde(skip)]
    cache: Option<ForwardCache>,
    #[serde(skip)]
    frozen_masks: Option<Vec<Option<Array2<f64>>>>,
    #[serde(skip, default = "fresh_rng")]
    dropout_rng: ChaCha8Rng,
}

impl PartialEq for Network {
    fn eq(&self, other: &Self) -> bool {
        self.layers == other.layers
    }
}

impl Network {
    /// Dense → BatchNorm → ReLU → Dropout per hidden width, then Dense(1) →
    /// sigmoid. Weights are Kaiming fan-in normal, biases zero.
    pub fn new(input: usize, cfg: &NetConfig, seed: u64) -> Network {
        let mut rng = crate::seed::rng(seed, "init");
        let mut layers = Vec::new();
        let mut width = input;
        let dense = |fan_in: usize, out: usize, rng: &mut ChaCha8Rng| {
            let normal = Normal::new(0.0, (2.0 / fan_in as f64).sqrt()).expect("positive sd");
            Layer::Dense(Dense {
                weights: Array2::from_shape_simple_fn((fan_in, out), || normal.sample(rng)),
                biases: Array1::zeros(out),
            })
        };
        for &h in &cfg.hidden {
            layers.push(dense(width, h, &mut rng));
            layers.push(Layer::BatchNorm(BatchNorm::new(h, cfg.bn_eps, cfg.bn_momentum)));
            layers.push(Layer::Activation { function: Activation::Relu });
            if cfg.dropout_rate > 0.0 {
                layers.push(Layer::Dropout { rate: cfg.dropout_rate });
            }
            width = h;
        }
        layers.push(dense(width, 1, &mut rng));
        layers.push(Layer::Activation { function: Activation::Sigmoid });
        Network::from_layers(layers, crate::seed::derive(seed, "dropout"))
    }

    pub fn from_layers(layers: Vec<Layer>, dropout_seed: u64) -> Network {
        Network {
            layers,
            mode: Mode::Eval,
            cache: None,
            frozen_masks: None,
            dropout_rng: ChaCha8Rng::seed_from_u64(dropout_seed),
        }
    }

    pub fn reseed_dropout(&mut self, seed: u64) {
        self.dropout_rng = ChaCha8Rng::seed_from_u64(seed);
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn set_mode(&mut self, mode: Mode) {
        self.mode = mode;
        self.cache = None;
    }

    pub fn input_dim(&self) -> usize {
        match self.layers.first() {
            Some(Layer::Dense(d)) => d.inputs(),
            Some(Layer::BatchNorm(b)) => b.width(),
            _ => 0,
        }
    }

    /// Dimensions compose, parameters are finite, and the stack ends in
    /// Dense(·, 1) → sigmoid.
    pub fn validate(&self) -> Result<(), NetError> {
        let topo = |m: String| Err(NetError::Topology(m));
        let n = self.layers.len();
        if n < 2 {
            return topo("fewer than two layers".into());
        }
        match (&self.layers[n - 2], &self.layers[n - 1]) {
            (Layer::Dense(d), Layer::Activation { function: Activation::Sigmoid }) if d.outputs() == 1 => {}
            _ => return topo("must end with Dense(_, 1) followed by sigmoid".into()),
        }
        let mut width: Option<usize> = None;
        for (i, l) in self.layers.iter().enumerate() {
            match l {
                Layer::Dense(d) => {
                    if d.biases.len() != d.outputs() {
                        return topo(format!("layer {i}: bias length {} vs {} outputs", d.biases.len(), d.outputs()));
                    }
                    if width.is_some_and(|w| w != d.inputs()) {
                        return topo(format!("layer {i}: expects {} inputs, previous width {}", d.inputs(), width.unwrap()));
                    }
                    width = Some(d.outputs());
                }
                Layer::BatchNorm(b) => {
                    let w = b.width();
                    if [b.beta.len(), b.running_mean.len(), b.running_var.len()].iter().any(|&l| l != w)
                        || width.is_some_and(|x| x != w)
                    {
                        return topo(format!("layer {i}: batch-norm width mismatch"));
                    }
                    if !(b.eps > 0.0) || !(0.0..=1.0).contains(&b.momentum) || b.running_var.iter().any(|&v| v < 0.0) {
                        return topo(format!("layer {i}: invalid batch-norm constants"));
                    }
                    width = Some(w);
                }
                Layer::Dropout { rate } => {
                    if !(0.0..1.0).contains(rate) {
                        return topo(format!("layer {i}: dropout rate {rate} outside [0, 1)"));
                    }
                }
                Layer::Activation { .. } => {}
            }
        }
        let finite = self.layers.iter().all(|l| match l {
            Layer::Dense(d) => d.weights.iter().chain(&d.biases).all(|v| v.is_finite()),
            Layer::BatchNorm(b) => [&b.gamma, &b.beta, &b.running_mean, &b.running_var]
                .iter()
                .all(|a| a.iter().all(|v| v.is_finite())),
            _ => true,
        });
        if !finite {
            return Err(NetError::NonFinite("parameters"));
        }
        Ok(())
    }

    fn check_input(&self, x: &Array2<f64>) -> Result<(), NetError> {
        let expected = self.input_dim();
        if x.ncols() != expected {
            return Err(NetError::Dimension { expected, found: x.ncols() });
        }
        Ok(())
    }

    /// Eval-mode probabilities; never touches running statistics or caches.
    pub fn predict(&self, x: &Array2<f64>) -> Result<Array1<f64>, NetError> {
        self.check_input(x)?;
        let mut h = x.clone();
        for l in &self.layers {
            h = match l {
                Layer::Dense(d) => d.forward(&h),
                Layer::BatchNorm(b) => b.forward_eval(&h),
                Layer::Dropout { .. } => h,
                Layer::Activation { function } => function.apply(&h),
            };
        }
        Ok(h.column(0).to_owned())
    }

    /// Forward pass in the current mode. Train mode uses batch statistics,
    /// updates running statistics, draws dropout masks and caches what
    /// [`Network::backward`] needs.
    pub fn forward(&mut self, x: &Array2<f64>) -> Result<Array1<f64>, NetError> {
        if self.mode == Mode::Eval {
            return self.predict(x);
        }
        self.check_input(x)?;
        if x.nrows() < 2 {
            return Err(NetError::BatchTooSmall(x.nrows()));
        }
        let mut caches = Vec::with_capacity(self.layers.len());
        let mut h = x.clone();
        for (i, l) in self.layers.iter_mut().enumerate() {
            h = match l {
                Layer::Dense(d) => {
                    let out = d.forward(&h);
                    caches.push(LayerCache::Dense { input: h });
                    out
                }
                Layer::BatchNorm(b) => {
                    let (out, c) = b.forward_train(&h);
                    caches.push(LayerCache::BatchNorm(c));
                    out
                }
                Layer::Dropout { rate } => {
                    let frozen = self.frozen_masks.as_ref().and_then(|m| m[i].as_ref()).filter(|m| m.dim() == h.dim());
                    let mask = match frozen {
                        Some(m) => m.clone(),
                        None => {
                            let keep = 1.0 - *rate;
                            let rng = &mut self.dropout_rng;
                            Array2::from_shape_simple_fn(h.dim(), || if rng.random::<f64>() < keep { 1.0 / keep } else { 0.0 })
                        }
                    };
                    let out = &h * &mask;
                    caches.push(LayerCache::Dropout { mask });
                    out
                }
                Layer::Activation { function: Activation::Relu } => {
                    let out = h.mapv(|v| v.max(0.0));
                    caches.push(LayerCache::Relu { output: out.clone() });
                    out
                }
                Layer::Activation { function: Activation::Sigmoid } => {
                    caches.push(LayerCache::Sigmoid);
                    h.mapv(layers::sigmoid)
                }
            };
        }
        let output = h.column(0).to_owned();
        self.cache = Some(ForwardCache { layers: caches, output: output.clone() });
        Ok(output)
    }

    /// Keeps the dropout masks of the last train-mode forward pass for all
    /// later passes on same-shaped batches (used by gradient checks).
    pub fn freeze_dropout_masks(&mut self) -> Result<(), NetError> {
        let cache = self.cache.as_ref().ok_or(NetError::NoCache)?;
        self.frozen_masks = Some(
            cache
                .layers
                .iter()
                .map(|c| match c {
                    LayerCache::Dropout { mask } => Some(mask.clone()),
                    _ => None,
                })
                .collect(),
        );
        Ok(())
    }

    pub fn unfreeze_dropout_masks(&mut self) {
        self.frozen_masks = None;
    }

    /// Exact gradients of the mean binary cross-entropy of the cached
    /// forward pass against `labels`. The output layer uses the combined
    /// sigmoid/cross-entropy derivative `(p - y) / n`; it differs from the
    /// clamped loss only where `p` is within 1e-7 of 0 or 1.
    pub fn backward(&self, labels: &[f64]) -> Result<GradientSet, NetError> {
        let cache = self.cache.as_ref().ok_or(NetError::NoCache)?;
        let n = cache.output.len();
        if labels.len() != n {
            return Err(NetError::Length(n, labels.len()));
        }
        let mut g = Array2::from_shape_fn((n, 1), |(i, _)| (cache.output[i] - labels[i]) / n as f64);
        let mut grads: Vec<Vec<ArrayD<f64>>> = vec![Vec::new(); self.layers.len()];
        let last = self.layers.len() - 1;
        for (i, (l, c)) in self.layers.iter().zip(&cache.layers).enumerate().rev() {
            match (l, c) {
                (Layer::Activation { function: Activation::Sigmoid }, LayerCache::Sigmoid) => {
                    if i != last {
                        return Err(NetError::Topology("sigmoid only supported as the output".into()));
                    }
                }
                (Layer::Dense(d), LayerCache::Dense { input }) => {
                    let dw = input.t().dot(&g);
                    let db = g.sum_axis(Axis(0));
                    g = g.dot(&d.weights.t());
                    grads[i] = vec![dw.as_standard_layout().into_owned().into_dyn(), db.into_dyn()];
                }
                (Layer::BatchNorm(b), LayerCache::BatchNorm(bc)) => {
                    let (dx, dg, db) = b.backward(&g, bc);
                    g = dx;
                    grads[i] = vec![dg.into_dyn(), db.into_dyn()];
                }
                (Layer::Dropout { .. }, LayerCache::Dropout { mask }) => g *= mask,
                (Layer::Activation { function: Activation::Relu }, LayerCache::Relu { output }) => {
                    Zip::from(&mut g).and(output).for_each(|gv, &o| {
                        if o <= 0.0 {
                            *gv = 0.0
                        }
                    });
                }
                _ => return Err(NetError::NoCache),
            }
        }
        Ok(GradientSet { tensors: grads.into_iter().flatten().collect() })
    }

    /// Trainable parameters: per dense layer weights then biases, per
    /// batch-norm layer gamma then beta.
    pub fn params_mut(&mut self) -> Vec<ArrayViewMutD<'_, f64>> {
        let mut out = Vec::new();
        for l in &mut self.layers {
            match l {
                Layer::Dense(d) => {
                    out.push(d.weights.view_mut().into_dyn());
                    out.push(d.biases.view_mut().into_dyn());
                }
                Layer::BatchNorm(b) => {
                    out.push(b.gamma.view_mut().into_dyn());
                    out.push(b.beta.view_mut().into_dyn());
                }
                _ => {}
            }
        }
        out
    }

    pub fn param_shapes(&self) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        for l in &self.layers {
            match l {
                Layer::Dense(d) => {
                    out.push(d.weights.shape().to_vec());
                    out.push(d.biases.shape().to_vec());
                }
                Layer::BatchNorm(b) => {
                    out.push(b.gamma.shape().to_vec());
                    out.push(b.beta.shape().to_vec());
                }
                _ => {}
            }
        }
        out
    }
}

/// Mean binary cross-entropy with probabilities clamped to `[1e-7, 1 - 1e-7]`.
pub fn bce_loss(p: &[f64], y: &[f64]) -> Result<f64, NetError> {
    if p.len() != y.len() {
        return Err(NetError::Length(p.len(), y.len()));
    }
    if p.is_empty() {
        return Err(NetError::Length(0, 0));
    }
    let s: f64 = p
        .iter()
        .zip(y)
        .map(|(&p, &y)| {
            let p = p.clamp(CLAMP, 1.0 - CLAMP);
            -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
        })
        .sum();
    Ok(s / p.len() as f64)
}

pub fn labels_to_f64(labels: &[bool]) -> Vec<f64> {
    labels.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect()
}
