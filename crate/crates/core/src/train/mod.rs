//! Two-phase transfer training (hospital outcomes at a coarse rate, then ED
//! outcomes plus SMOTE positives at a fine rate), single-phase training,
//! prediction and artifact persistence.

mod artifact;

use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

pub use artifact::{load_artifact, save_artifact, write_atomic, ModelArtifact, FORMAT_VERSION};

use crate::domain::{AgeGroup, OutcomeScope, PatientRecord};
use crate::net::{bce_loss, labels_to_f64, Mode, NetConfig, NetError, Network, OptimizerState};
use crate::pipeline::{encode_features, smote_oversample, FeatureMatrix, PipelineError, UnseenCategory};
use crate::seed;

#[derive(Debug, thiserror::Error)]
pub enum TrainError {
    #[error("invalid training config: {0}")]
    Config(String),
    #[error("hospital and ED matrices were encoded with different schemas")]
    SchemaMismatch,
    #[error("{what} needs at least 2 positive rows, got {found}")]
    TooFewPositives { what: &'static str, found: usize },
    #[error("schema has {schema} columns but the network takes {network}")]
    SchemaWidth { schema: usize, network: usize },
    #[error("unsupported artifact format version {0} (expected {FORMAT_VERSION})")]
    UnsupportedVersion(u64),
    #[error("corrupt artifact: {0}")]
    Corrupt(String),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub coarse_lr: f64,
    pub fine_lr: f64,
    pub epochs_phase1: usize,
    pub epochs_phase2: usize,
    pub batch_size: usize,
    pub hidden: Vec<usize>,
    pub dropout_rate: f64,
    pub bn_momentum: f64,
    pub smote_k: usize,
    /// Phase-2 positives after oversampling, as a multiple of the real ED
    /// positives; 1 disables SMOTE.
    pub smote_multiplier: usize,
    pub threshold: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            coarse_lr: 1e-3,
            fine_lr: 1e-4,
            epochs_phase1: 30,
            epochs_phase2: 30,
            batch_size: 512,
            hidden: vec![300, 100],
            dropout_rate: 0.3,
            bn_momentum: 0.1,
            smote_k: 5,
            smote_multiplier: 10,
            threshold: 0.5,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |m: &str| Err(TrainError::Config(m.to_string()));
        if !(self.coarse_lr > 0.0 && self.fine_lr > 0.0 && self.fine_lr < self.coarse_lr) {
            return bad("need 0 < fine_lr < coarse_lr");
        }
        if self.batch_size < 2 {
            return bad("batch_size must be at least 2");
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return bad("threshold must lie in (0, 1)");
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return bad("dropout_rate must lie in [0, 1)");
        }
        if !(0.0..=1.0).contains(&self.bn_momentum) {
            return bad("bn_momentum must lie in [0, 1]");
        }
        if self.smote_k == 0 || self.smote_multiplier == 0 {
            return bad("smote_k and smote_multiplier must be at least 1");
        }
        if self.hidden.contains(&0) {
            return bad("hidden widths must be positive");
        }
        Ok(())
    }

    fn net_config(&self) -> NetConfig {
        NetConfig {
            hidden: self.hidden.clone(),
            dropout_rate: self.dropout_rate,
            bn_momentum: self.bn_momentum,
            ..NetConfig::default()
        }
    }
}

/// One row of the training log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub phase: u8,
    pub epoch: usize,
    pub learning_rate: f64,
    /// Mean train-mode loss over the epoch's batches.
    pub loss: f64,
    pub rows: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trained {
    pub artifact: ModelArtifact,
    pub log: Vec<EpochLog>,
}

/// Runs `epochs` passes of minibatch Adam over `(x, y)`. A trailing batch
/// of one row is skipped: batch norm needs two.
fn run_phase(
    net: &mut Network,
    x: &Array2<f64>,
    y: &[bool],
    lr: f64,
    epochs: usize,
    cfg: &TrainConfig,
    phase: u8,
    log: &mut Vec<EpochLog>,
) -> Result<Option<f64>, TrainError> {
    if epochs == 0 {
        return Ok(None);
    }
    let y = labels_to_f64(y);
    let mut opt = OptimizerState::new(net, lr);
    let mut order: Vec<usize> = (0..x.nrows()).collect();
    let mut last = None;
    net.set_mode(Mode::Train);
    for epoch in 0..epochs {
        let mut rng = seed::rng(seed::derive_indexed(cfg.seed, &format!("shuffle{phase}"), epoch as u64), "epoch");
        order.shuffle(&mut rng);
        let (mut total, mut rows) = (0.0, 0usize);
        for idx in order.chunks(cfg.batch_size) {
            if idx.len() < 2 {
                continue;
            }
            let xb = x.select(Axis(0), idx);
            let yb: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
            let p = net.forward(&xb)?;
            let loss = bce_loss(p.as_slice().expect("owned column"), &yb)?;
            if !loss.is_finite() {
                return Err(NetError::NonFinite("loss").into());
            }
            let g = net.backward(&yb)?;
            opt.step(net, &g)?;
            total += loss * idx.len() as f64;
            rows += idx.len();
        }
        let loss = if rows > 0 { total / rows as f64 } else { f64::NAN };
        log.push(EpochLog { phase, epoch: epoch + 1, learning_rate: lr, loss, rows });
        last = Some(loss);
    }
    net.set_mode(Mode::Eval);
    Ok(last)
}

fn positives(m: &FeatureMatrix) -> usize {
    m.positives()
}

fn fresh_network(width: usize, cfg: &TrainConfig) -> Network {
    Network::new(width, &cfg.net_config(), cfg.seed)
}

/// Phase 1 on `hospital` at `coarse_lr`, then phase 2 on `ed` plus SMOTE
/// positives at `fine_lr`, continuing the same weights with a fresh
/// optimizer state.
pub fn train_transfer(
    hospital: &FeatureMatrix,
    ed: &FeatureMatrix,
    cfg: &TrainConfig,
    age_group: AgeGroup,
) -> Result<Trained, TrainError> {
    cfg.validate()?;
    if hospital.schema != ed.schema {
        return Err(TrainError::SchemaMismatch);
    }
    let ed_pos = positives(ed);
    if ed_pos < 2 {
        return Err(TrainError::TooFewPositives { what: "ED fine-tuning set", found: ed_pos });
    }
    let mut net = fresh_network(hospital.schema.width(), cfg);
    let mut log = Vec::new();
    let phase1 = run_phase(&mut net, &hospital.data, &hospital.labels, cfg.coarse_lr, cfg.epochs_phase1, cfg, 1, &mut log)?;

    let mut augmented = ed.clone();
    let synthetic = ed_pos * (cfg.smote_multiplier - 1);
    if synthetic > 0 && cfg.epochs_phase2 > 0 {
        let pos_idx: Vec<usize> = (0..ed.rows()).filter(|&i| ed.labels[i]).collect();
        let minority = ed.data.select(Axis(0), &pos_idx);
        let rows = smote_oversample(minority.view(), cfg.smote_k, synthetic, seed::derive(cfg.seed, "smote"))?;
        augmented.append_positive(&rows)?;
    }
    let phase2 = run_phase(&mut net, &augmented.data, &augmented.labels, cfg.fine_lr, cfg.epochs_phase2, cfg, 2, &mut log)?;
    Ok(Trained {
        artifact: ModelArtifact {
            format_version: FORMAT_VERSION,
            schema: hospital.schema.clone(),
            network: net,
            config: cfg.clone(),
            phase1_loss: phase1,
            phase2_loss: phase2,
            age_group,
            scope: OutcomeScope::EdOnly,
            provenance: None,
        },
        log,
    })
}

/// One phase at `coarse_lr` on the combined outcome set; only
/// `epochs_phase1` is used.
pub fn train_single(data: &FeatureMatrix, cfg: &TrainConfig, age_group: AgeGroup) -> Result<Trained, TrainError> {
    cfg.validate()?;
    let pos = positives(data);
    if pos < 2 {
        return Err(TrainError::TooFewPositives { what: "training set", found: pos });
    }
    let mut net = fresh_network(data.schema.width(), cfg);
    let mut log = Vec::new();
    let phase1 = run_phase(&mut net, &data.data, &data.labels, cfg.coarse_lr, cfg.epochs_phase1, cfg, 1, &mut log)?;
    Ok(Trained {
        artifact: ModelArtifact {
            format_version: FORMAT_VERSION,
            schema: data.schema.clone(),
            network: net,
            config: cfg.clone(),
            phase1_loss: phase1,
            phase2_loss: None,
            age_group,
            scope: OutcomeScope::HospitalAndEd,
            provenance: None,
        },
        log,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub probability: f64,
    /// `probability >= threshold`.
    pub positive: bool,
}

/// Eval-mode probabilities for schema-encoded records.
pub fn predict_matrix(artifact: &ModelArtifact, x: &Array2<f64>) -> Result<Vec<f64>, TrainError> {
    Ok(artifact.network.predict(x)?.to_vec())
}

pub fn predict(artifact: &ModelArtifact, records: &[PatientRecord], mode: UnseenCategory) -> Result<Vec<Prediction>, TrainError> {
    let x = encode_features(records, &artifact.schema, mode)?;
    let t = artifact.config.threshold;
    Ok(predict_matrix(artifact, &x)?
        .into_iter()
        .map(|p| Prediction { probability: p, positive: p >= t })
        .collect())
}
