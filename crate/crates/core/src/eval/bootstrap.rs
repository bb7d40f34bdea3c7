use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::metrics::{auc_weighted, gap, mcc_weighted, score_order};
use super::EvalError;
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Auc,
    Sensitivity,
    Specificity,
    Gap,
    Ppv,
    Npv,
    Mcc,
}

impl Metric {
    pub const ALL: [Metric; 7] = [
        Metric::Auc,
        Metric::Sensitivity,
        Metric::Specificity,
        Metric::Gap,
        Metric::Ppv,
        Metric::Npv,
        Metric::Mcc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Auc => "auc",
            Metric::Sensitivity => "sensitivity",
            Metric::Specificity => "specificity",
            Metric::Gap => "gap",
            Metric::Ppv => "ppv",
            Metric::Npv => "npv",
            Metric::Mcc => "mcc",
        }
    }
}

/// Percentile interval plus the number of replicates where the metric was
/// undefined and therefore dropped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
    pub skipped: usize,
}

/// Every metric on multiplicity-weighted rows. `order` is the ascending
/// score order of all rows.
fn metrics_weighted(p: &[f64], y: &[bool], w: &[f64], order: &[usize], threshold: f64) -> [Option<f64>; 7] {
    let (mut tp, mut tn, mut fp, mut fn_) = (0.0, 0.0, 0.0, 0.0);
    for ((&p, &y), &w) in p.iter().zip(y).zip(w) {
        match (p >= threshold, y) {
            (true, true) => tp += w,
            (true, false) => fp += w,
            (false, false) => tn += w,
            (false, true) => fn_ += w,
        }
    }
    let div = |a: f64, b: f64| if b > 0.0 { Some(a / b) } else { None };
    let sens = div(tp, tp + fn_);
    let spec = div(tn, tn + fp);
    [
        auc_weighted(p, y, w, order),
        sens,
        spec,
        sens.zip(spec).map(|(a, b)| gap(a, b)),
        div(tp, tp + fp),
        div(tn, tn + fn_),
        Some(mcc_weighted(tp, tn, fp, fn_)),
    ]
}

/// Linear interpolation between order statistics.
fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Stratified percentile bootstrap for every metric at once: positives and
/// negatives are resampled separately with replacement, keeping their
/// counts. Replicate `r` draws from its own seed derived from `(seed, r)`,
/// so results do not depend on evaluation order. Each interval is widened
/// if needed to contain the full-sample estimate.
pub fn bootstrap_all(
    p: &[f64],
    y: &[bool],
    threshold: f64,
    n_boot: usize,
    seed_: u64,
) -> Result<BTreeMap<Metric, Result<Interval, EvalError>>, EvalError> {
    if p.len() != y.len() {
        return Err(EvalError::Length(p.len(), y.len()));
    }
    if p.is_empty() {
        return Err(EvalError::Empty);
    }
    if n_boot == 0 {
        return Err(EvalError::NoReplicates);
    }
    let order = score_order(p);
    let ones = vec![1.0; p.len()];
    let point = metrics_weighted(p, y, &ones, &order, threshold);
    let pos: Vec<usize> = (0..p.len()).filter(|&i| y[i]).collect();
    let neg: Vec<usize> = (0..p.len()).filter(|&i| !y[i]).collect();
    let mut samples: Vec<Vec<f64>> = vec![Vec::with_capacity(n_boot); 7];
    let mut w = vec![0.0; p.len()];
    for r in 0..n_boot {
        let mut rng = seed::rng(seed::derive_indexed(seed_, "bootstrap", r as u64), "replicate");
        w.iter_mut().for_each(|v| *v = 0.0);
        for class in [&pos, &neg] {
            for _ in 0..class.len() {
                w[class[rng.random_range(0..class.len())]] += 1.0;
            }
        }
        for (k, m) in metrics_weighted(p, y, &w, &order, threshold).into_iter().enumerate() {
            if let Some(v) = m {
                samples[k].push(v);
            }
        }
    }
    let mut out = BTreeMap::new();
    for (k, metric) in Metric::ALL.into_iter().enumerate() {
        let res = match point[k] {
            None => Err(EvalError::Undefined(metric.name())),
            Some(est) => {
                let s = &mut samples[k];
                let skipped = n_boot - s.len();
                if 2 * skipped > n_boot {
                    Err(EvalError::TooManyUndefined { metric: metric.name(), skipped, total: n_boot })
                } else {
                    s.sort_by(f64::total_cmp);
                    Ok(Interval {
                        lower: percentile(s, 0.025).min(est),
                        upper: percentile(s, 0.975).max(est),
                        skipped,
                    })
                }
            }
        };
        out.insert(metric, res);
    }
    Ok(out)
}

/// Single-metric form of [`bootstrap_all`].
pub fn bootstrap_ci(p: &[f64], y: &[bool], metric: Metric, threshold: f64, n_boot: usize, seed_: u64) -> Result<Interval, EvalError> {
    bootstrap_all(p, y, threshold, n_boot, seed_)?.remove(&metric).expect("every metric computed")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn degenerate_distribution_gives_point_interval() {
        let p = [1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0];
        let y = [true, true, true, false, false, false, false];
        for m in [Metric::Auc, Metric::Sensitivity, Metric::Specificity, Metric::Mcc, Metric::Gap] {
            let ci = bootstrap_ci(&p, &y, m, 0.5, 200, 1).unwrap();
            let expected = if m == Metric::Gap { 0.0 } else { 1.0 };
            assert_eq!((ci.lower, ci.upper), (expected, expected), "{m:?}");
        }
    }

    #[test]
    fn undefined_point_and_replicates() {
        // Nothing predicted positive: PPV undefined everywhere.
        let p = [0.1, 0.2, 0.3, 0.05];
        let y = [true, false, true, false];
        assert_eq!(bootstrap_ci(&p, &y, Metric::Ppv, 0.5, 50, 1), Err(EvalError::Undefined("ppv")));
        // One row predicted positive: a resample of the 8 positives misses it
        // with probability (7/8)^8, and those replicates are dropped.
        let p = [0.9, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.2, 0.3];
        let y = [true, true, true, true, true, true, true, true, false, false];
        let ci = bootstrap_ci(&p, &y, Metric::Ppv, 0.5, 400, 3).unwrap();
        let expected = 400.0 * (7.0f64 / 8.0).powi(8);
        let se = (400.0 * (7.0f64 / 8.0).powi(8) * (1.0 - (7.0f64 / 8.0).powi(8))).sqrt();
        assert!((ci.skipped as f64 - expected).abs() < 3.0 * se, "{}", ci.skipped);
        assert_eq!((ci.lower, ci.upper), (1.0, 1.0));
    }

    fn scores(n: usize, seed_: u64) -> (Vec<f64>, Vec<bool>) {
        let mut rng = seed::rng(seed_, "scores");
        let z = Normal::new(0.0, 1.0).unwrap();
        let y: Vec<bool> = (0..n).map(|i| i % 5 == 0).collect();
        let p = y.iter().map(|&y| z.sample(&mut rng) + if y { 1.0 } else { 0.0 }).collect();
        (p, y)
    }

    #[test]
    fn width_scales_like_inverse_root_n() {
        let width = |n: usize| {
            (0..5)
                .map(|s| {
                    let (p, y) = scores(n, s);
                    let ci = bootstrap_ci(&p, &y, Metric::Auc, 0.5, 1000, s).unwrap();
                    ci.upper - ci.lower
                })
                .sum::<f64>()
                / 5.0
        };
        let (w1, w2, w3) = (width(100), width(1000), width(10_000));
        for r in [w1 / w2, w2 / w3] {
            assert!((2.5..=4.5).contains(&r), "{w1} {w2} {w3}");
        }
        assert!((6.25..=20.25).contains(&(w1 / w3)));
    }

    #[test]
    fn deterministic_per_seed() {
        let (p, y) = scores(300, 2);
        assert_eq!(bootstrap_all(&p, &y, 0.5, 100, 9).unwrap(), bootstrap_all(&p, &y, 0.5, 100, 9).unwrap());
    }
}
