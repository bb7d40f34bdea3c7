use serde::{Deserialize, Serialize};

use super::EvalError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }
}

fn check_lengths(p: &[f64], y: &[bool]) -> Result<(), EvalError> {
    if p.len() != y.len() {
        return Err(EvalError::Length(p.len(), y.len()));
    }
    if p.is_empty() {
        return Err(EvalError::Empty);
    }
    Ok(())
}

/// Positive iff `p >= threshold`.
pub fn confusion_at_threshold(p: &[f64], y: &[bool], threshold: f64) -> Result<ConfusionCounts, EvalError> {
    check_lengths(p, y)?;
    let mut c = ConfusionCounts::default();
    for (&p, &y) in p.iter().zip(y) {
        match (p >= threshold, y) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, false) => c.tn += 1,
            (false, true) => c.fn_ += 1,
        }
    }
    Ok(c)
}

/// Sensitivity-specificity gap: distance from a perfect classifier.
pub fn gap(sensitivity: f64, specificity: f64) -> f64 {
    (1.0 - sensitivity) + (1.0 - specificity)
}

fn ratio(num: u64, den: u64, metric: &'static str) -> Result<f64, EvalError> {
    if den == 0 {
        Err(EvalError::Undefined(metric))
    } else {
        Ok(num as f64 / den as f64)
    }
}

pub fn sensitivity(c: &ConfusionCounts) -> Result<f64, EvalError> {
    ratio(c.tp, c.tp + c.fn_, "sensitivity")
}

pub fn specificity(c: &ConfusionCounts) -> Result<f64, EvalError> {
    ratio(c.tn, c.tn + c.fp, "specificity")
}

pub fn ppv(c: &ConfusionCounts) -> Result<f64, EvalError> {
    ratio(c.tp, c.tp + c.fp, "ppv")
}

pub fn npv(c: &ConfusionCounts) -> Result<f64, EvalError> {
    ratio(c.tn, c.tn + c.fn_, "npv")
}

/// Matthews correlation; 0 when any marginal is empty.
pub fn mcc(c: &ConfusionCounts) -> f64 {
    mcc_weighted(c.tp as f64, c.tn as f64, c.fp as f64, c.fn_ as f64)
}

pub(super) fn mcc_weighted(tp: f64, tn: f64, fp: f64, fn_: f64) -> f64 {
    let den = (tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_);
    if den == 0.0 {
        0.0
    } else {
        ((tp * tn - fp * fn_) / den.sqrt()).clamp(-1.0, 1.0)
    }
}

/// Indices sorted by score, ascending, with equal scores adjacent.
pub(super) fn score_order(p: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..p.len()).collect();
    idx.sort_by(|&a, &b| p[a].total_cmp(&p[b]));
    idx
}

/// Weighted Mann–Whitney over a precomputed ascending order: the share of
/// (positive, negative) weight pairs ranked correctly, ties counting one
/// half. `None` when either class has no weight.
pub(super) fn auc_weighted(p: &[f64], y: &[bool], w: &[f64], order: &[usize]) -> Option<f64> {
    let (mut neg_below, mut num) = (0.0, 0.0);
    let (mut tot_pos, mut tot_neg) = (0.0, 0.0);
    let mut i = 0;
    while i < order.len() {
        let s = p[order[i]];
        let (mut pos, mut neg) = (0.0, 0.0);
        while i < order.len() && p[order[i]] == s {
            let k = order[i];
            if y[k] {
                pos += w[k];
            } else {
                neg += w[k];
            }
            i += 1;
        }
        num += pos * neg_below + 0.5 * pos * neg;
        neg_below += neg;
        tot_pos += pos;
        tot_neg += neg;
    }
    if tot_pos == 0.0 || tot_neg == 0.0 {
        None
    } else {
        Some(num / (tot_pos * tot_neg))
    }
}

/// Mann–Whitney AUC.
pub fn auc(p: &[f64], y: &[bool]) -> Result<f64, EvalError> {
    check_lengths(p, y)?;
    let w = vec![1.0; p.len()];
    auc_weighted(p, y, &w, &score_order(p)).ok_or(EvalError::Undefined("auc"))
}

/// ROC points (false-positive rate, true-positive rate) from the strictest
/// threshold down, one per distinct score, starting at (0, 0).
pub fn roc_curve(p: &[f64], y: &[bool]) -> Result<Vec<(f64, f64)>, EvalError> {
    check_lengths(p, y)?;
    let pos = y.iter().filter(|&&v| v).count() as f64;
    let neg = p.len() as f64 - pos;
    if pos == 0.0 || neg == 0.0 {
        return Err(EvalError::Undefined("roc"));
    }
    let mut order = score_order(p);
    order.reverse();
    let mut pts = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0.0, 0.0);
    let mut i = 0;
    while i < order.len() {
        let s = p[order[i]];
        while i < order.len() && p[order[i]] == s {
            if y[order[i]] {
                tp += 1.0;
            } else {
                fp += 1.0;
            }
            i += 1;
        }
        pts.push((fp / neg, tp / pos));
    }
    Ok(pts)
}

/// Trapezoidal area under [`roc_curve`].
pub fn roc_auc_trapezoid(p: &[f64], y: &[bool]) -> Result<f64, EvalError> {
    let pts = roc_curve(p, y)?;
    Ok(pts.windows(2).map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0).sum())
}

/// Threshold maximising sensitivity + specificity − 1 over the observed
/// scores, with that J.
pub fn youden_threshold(p: &[f64], y: &[bool]) -> Result<(f64, f64), EvalError> {
    check_lengths(p, y)?;
    let pos = y.iter().filter(|&&v| v).count() as f64;
    let neg = p.len() as f64 - pos;
    if pos == 0.0 || neg == 0.0 {
        return Err(EvalError::Undefined("youden"));
    }
    let mut order = score_order(p);
    order.reverse();
    let (mut tp, mut fp) = (0.0, 0.0);
    let mut best = (f64::INFINITY, -1.0);
    let mut i = 0;
    while i < order.len() {
        let s = p[order[i]];
        while i < order.len() && p[order[i]] == s {
            if y[order[i]] {
                tp += 1.0;
            } else {
                fp += 1.0;
            }
            i += 1;
        }
        let j = tp / pos + (1.0 - fp / neg) - 1.0;
        if j > best.1 {
            best = (s, j);
        }
    }
    Ok(best)
}
