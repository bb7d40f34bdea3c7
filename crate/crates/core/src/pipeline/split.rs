use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{FeatureMatrix, PipelineError};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
    pub stratified: bool,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self { train_fraction: 0.7, seed: 0, stratified: true }
    }
}

/// Train and test row indices. Stratified: each class contributes
/// `round(train_fraction * class_count)` rows to train. Both index lists
/// come back shuffled.
pub fn split_indices(labels: &[bool], spec: &SplitSpec) -> Result<(Vec<usize>, Vec<usize>), PipelineError> {
    if !(spec.train_fraction > 0.0 && spec.train_fraction < 1.0) {
        return Err(PipelineError::TrainFraction(spec.train_fraction));
    }
    let mut rng = seed::rng(spec.seed, "split");
    let groups: Vec<Vec<usize>> = if spec.stratified {
        let pos: Vec<usize> = (0..labels.len()).filter(|&i| labels[i]).collect();
        let neg: Vec<usize> = (0..labels.len()).filter(|&i| !labels[i]).collect();
        if pos.is_empty() {
            return Err(PipelineError::EmptyClass { positive: true });
        }
        if neg.is_empty() {
            return Err(PipelineError::EmptyClass { positive: false });
        }
        vec![pos, neg]
    } else {
        if labels.is_empty() {
            return Err(PipelineError::Empty);
        }
        vec![(0..labels.len()).collect()]
    };
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for mut g in groups {
        g.shuffle(&mut rng);
        let k = (spec.train_fraction * g.len() as f64).round() as usize;
        train.extend_from_slice(&g[..k]);
        test.extend_from_slice(&g[k..]);
    }
    train.shuffle(&mut rng);
    test.shuffle(&mut rng);
    Ok((train, test))
}

pub fn stratified_split(m: &FeatureMatrix, spec: &SplitSpec) -> Result<(FeatureMatrix, FeatureMatrix), PipelineError> {
    let (train, test) = split_indices(&m.labels, spec)?;
    Ok((m.select(&train), m.select(&test)))
}

/// Splits any per-row items by their labels.
pub fn split_items<T: Clone>(items: &[T], labels: &[bool], spec: &SplitSpec) -> Result<(Vec<T>, Vec<T>), PipelineError> {
    let (train, test) = split_indices(labels, spec)?;
    let pick = |idx: Vec<usize>| idx.into_iter().map(|i| items[i].clone()).collect();
    Ok((pick(train), pick(test)))
}
