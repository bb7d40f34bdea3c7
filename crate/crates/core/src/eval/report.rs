use serde::{Deserialize, Serialize};

use super::bootstrap::{bootstrap_all, Metric};
use super::metrics::{confusion_at_threshold, youden_threshold, ConfusionCounts};
use super::EvalError;
use crate::domain::{label_mortality, passes_inclusion, AgeGroup, Categorical, Mechanism, OutcomeScope, PatientRecord};
use crate::pipeline::UnseenCategory;
use crate::provenance::Provenance;
use crate::seed;
use crate::train::{predict, ModelArtifact};

/// Test cohort minus every visit with `mechanism`.
pub fn ablate_mechanism(records: &[PatientRecord], mechanism: Mechanism) -> Vec<PatientRecord> {
    records.iter().filter(|r| r.injury_mechanism != mechanism).cloned().collect()
}

/// As [`ablate_mechanism`], naming the mechanism by code or label.
pub fn ablate_mechanism_str(records: &[PatientRecord], mechanism: &str) -> Result<Vec<PatientRecord>, EvalError> {
    let m = Mechanism::parse_level(mechanism).map_err(|_| EvalError::UnknownMechanism(mechanism.to_string()))?;
    Ok(ablate_mechanism(records, m))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    /// `None` when too many bootstrap resamples left the metric undefined.
    pub ci_lower: Option<f64>,
    pub ci_upper: Option<f64>,
    pub skipped_resamples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Youden {
    pub threshold: f64,
    pub j: f64,
}

/// One evaluated row set. Metrics undefined on the full sample are `null`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub label: String,
    pub n_rows: usize,
    pub n_positive: usize,
    pub threshold: f64,
    pub confusion: ConfusionCounts,
    pub auc: Option<Estimate>,
    pub sensitivity: Option<Estimate>,
    pub specificity: Option<Estimate>,
    pub gap: Option<Estimate>,
    pub ppv: Option<Estimate>,
    pub npv: Option<Estimate>,
    pub mcc: Option<Estimate>,
    pub youden: Option<Youden>,
    pub n_boot: usize,
    pub bootstrap_seed: u64,
}

impl MetricsReport {
    pub fn metric(&self, m: Metric) -> Option<Estimate> {
        match m {
            Metric::Auc => self.auc,
            Metric::Sensitivity => self.sensitivity,
            Metric::Specificity => self.specificity,
            Metric::Gap => self.gap,
            Metric::Ppv => self.ppv,
            Metric::Npv => self.npv,
            Metric::Mcc => self.mcc,
        }
    }

    fn metric_slot(&mut self, m: Metric) -> &mut Option<Estimate> {
        match m {
            Metric::Auc => &mut self.auc,
            Metric::Sensitivity => &mut self.sensitivity,
            Metric::Specificity => &mut self.specificity,
            Metric::Gap => &mut self.gap,
            Metric::Ppv => &mut self.ppv,
            Metric::Npv => &mut self.npv,
            Metric::Mcc => &mut self.mcc,
        }
    }

    /// Comma-separated row matching [`CSV_HEADER`]; undefined cells are empty.
    pub fn csv_row(&self) -> String {
        let f = |v: Option<f64>| v.map(|x| format!("{x}")).unwrap_or_default();
        let mut cells = vec![self.label.clone(), self.n_rows.to_string(), self.n_positive.to_string(), format!("{}", self.threshold)];
        for m in Metric::ALL {
            let e = self.metric(m);
            cells.push(f(e.map(|e| e.value)));
            cells.push(f(e.and_then(|e| e.ci_lower)));
            cells.push(f(e.and_then(|e| e.ci_upper)));
        }
        cells.push(f(self.youden.map(|y| y.threshold)));
        cells.join(",")
    }
}

pub const CSV_HEADER: &str = "label,n_rows,n_positive,threshold,auc,auc_lower,auc_upper,sensitivity,sensitivity_lower,sensitivity_upper,specificity,specificity_lower,specificity_upper,gap,gap_lower,gap_upper,ppv,ppv_lower,ppv_upper,npv,npv_lower,npv_upper,mcc,mcc_lower,mcc_upper,youden_threshold";

/// Metrics, intervals and Youden threshold for scored rows.
pub fn evaluate_scores(
    label: &str,
    p: &[f64],
    y: &[bool],
    threshold: f64,
    n_boot: usize,
    bootstrap_seed: u64,
) -> Result<MetricsReport, EvalError> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(EvalError::Threshold(threshold));
    }
    let confusion = confusion_at_threshold(p, y, threshold)?;
    let cis = bootstrap_all(p, y, threshold, n_boot, bootstrap_seed)?;
    let point = |m: Metric| -> Option<f64> {
        use super::metrics as mx;
        match m {
            Metric::Auc => mx::auc(p, y).ok(),
            Metric::Sensitivity => mx::sensitivity(&confusion).ok(),
            Metric::Specificity => mx::specificity(&confusion).ok(),
            Metric::Gap => mx::sensitivity(&confusion)
                .ok()
                .zip(mx::specificity(&confusion).ok())
                .map(|(a, b)| mx::gap(a, b)),
            Metric::Ppv => mx::ppv(&confusion).ok(),
            Metric::Npv => mx::npv(&confusion).ok(),
            Metric::Mcc => Some(mx::mcc(&confusion)),
        }
    };
    let mut r = MetricsReport {
        label: label.to_string(),
        n_rows: p.len(),
        n_positive: y.iter().filter(|&&v| v).count(),
        threshold,
        confusion,
        auc: None,
        sensitivity: None,
        specificity: None,
        gap: None,
        ppv: None,
        npv: None,
        mcc: None,
        youden: youden_threshold(p, y).ok().map(|(threshold, j)| Youden { threshold, j }),
        n_boot,
        bootstrap_seed,
    };
    for m in Metric::ALL {
        *r.metric_slot(m) = point(m).map(|value| {
            let ci = cis[&m].as_ref().ok();
            Estimate {
                value,
                ci_lower: ci.map(|c| c.lower),
                ci_upper: ci.map(|c| c.upper),
                skipped_resamples: match &cis[&m] {
                    Ok(c) => c.skipped,
                    Err(EvalError::TooManyUndefined { skipped, .. }) => *skipped,
                    Err(_) => n_boot,
                },
            }
        });
    }
    Ok(r)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalOptions {
    /// Overrides the artifact's threshold.
    pub threshold: Option<f64>,
    pub ablate: Option<Mechanism>,
    pub age_group: Option<AgeGroup>,
    pub n_boot: usize,
    pub seed: u64,
    pub encoding: UnseenCategory,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self { threshold: None, ablate: None, age_group: None, n_boot: 1000, seed: 0, encoding: UnseenCategory::Strict }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ablation {
    pub mechanism: Mechanism,
    pub rows_before: usize,
    pub rows_removed: usize,
    pub fraction_removed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
    pub model_age_group: AgeGroup,
    pub model_scope: OutcomeScope,
    pub age_filter: Option<AgeGroup>,
    /// Input rows failing the inclusion filter, dropped before scoring.
    pub excluded_rows: usize,
    pub ablation: Option<Ablation>,
    pub rows: Vec<MetricsReport>,
}

impl EvaluationReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from(CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.csv_row());
            s.push('\n');
        }
        s
    }

    /// Fixed-width table: one row per label, each metric as value and interval.
    pub fn render_table(&self) -> String {
        let ci = |e: Option<Estimate>| match e {
            None => "undefined".to_string(),
            Some(Estimate { value, ci_lower: Some(l), ci_upper: Some(u), .. }) if l >= 0.0 => {
                format!("{value:.2} ({l:.2}-{u:.2})")
            }
            Some(Estimate { value, ci_lower: Some(l), ci_upper: Some(u), .. }) => format!("{value:.2} ({l:.2}, {u:.2})"),
            Some(e) => format!("{:.2} (n/a)", e.value),
        };
        let mut s = format!(
            "{:<20} {:>8} {:>6} {:>18} {:>18} {:>18} {:>18} {:>18} {:>18} {:>18}\n",
            "Row", "N", "Deaths", "AUC (95% CI)", "Sensitivity", "Specificity", "Gap", "PPV", "NPV", "MCC"
        );
        for r in &self.rows {
            s.push_str(&format!(
                "{:<20} {:>8} {:>6} {:>18} {:>18} {:>18} {:>18} {:>18} {:>18} {:>18}\n",
                r.label,
                r.n_rows,
                r.n_positive,
                ci(r.auc),
                ci(r.sensitivity),
                ci(r.specificity),
                ci(r.gap),
                ci(r.ppv),
                ci(r.npv),
                ci(r.mcc)
            ));
        }
        if let Some(r) = self.rows.first() {
            s.push_str(&format!("threshold {}", r.threshold));
            if let Some(y) = r.youden {
                s.push_str(&format!("; Youden-optimal threshold {:.4} (J = {:.3})", y.threshold, y.j));
            }
            s.push('\n');
        }
        s
    }
}

fn score(
    artifact: &ModelArtifact,
    label: &str,
    records: &[PatientRecord],
    threshold: f64,
    opts: &EvalOptions,
) -> Result<MetricsReport, EvalError> {
    let preds = predict(artifact, records, opts.encoding).map_err(|e| EvalError::Model(e.to_string()))?;
    let p: Vec<f64> = preds.iter().map(|x| x.probability).collect();
    let y: Vec<bool> = records
        .iter()
        .map(|r| label_mortality(r.disposition).expect("inclusion filter ran"))
        .collect();
    evaluate_scores(label, &p, &y, threshold, opts.n_boot, seed::derive(opts.seed, label))
}

/// Scores `records` (after the inclusion filter and optional age filter).
/// With an ablation mechanism, emits the full-set row followed by the row
/// without that mechanism.
pub fn evaluate(artifact: &ModelArtifact, records: &[PatientRecord], opts: &EvalOptions) -> Result<EvaluationReport, EvalError> {
    let threshold = opts.threshold.unwrap_or(artifact.config.threshold);
    let included: Vec<PatientRecord> = records.iter().filter(|r| passes_inclusion(r)).cloned().collect();
    let excluded_rows = records.len() - included.len();
    let test: Vec<PatientRecord> = match opts.age_group {
        Some(g) => included.into_iter().filter(|r| g.contains_age(r.age)).collect(),
        None => included,
    };
    if test.is_empty() {
        return Err(EvalError::EmptyTestSet("inclusion and age filtering".into()));
    }
    let base_label = opts.age_group.unwrap_or(artifact.age_group).as_str().to_string();
    let mut rows = Vec::new();
    let mut ablation = None;
    match opts.ablate {
        None => rows.push(score(artifact, &base_label, &test, threshold, opts)?),
        Some(m) => {
            let kept = ablate_mechanism(&test, m);
            if kept.is_empty() {
                return Err(EvalError::EmptyTestSet(format!("removing mechanism `{m}`")));
            }
            rows.push(score(artifact, &format!("with_{m}"), &test, threshold, opts)?);
            rows.push(score(artifact, &format!("no_{m}"), &kept, threshold, opts)?);
            let removed = test.len() - kept.len();
            ablation = Some(Ablation {
                mechanism: m,
                rows_before: test.len(),
                rows_removed: removed,
                fraction_removed: removed as f64 / test.len() as f64,
            });
        }
    }
    Ok(EvaluationReport {
        provenance: None,
        model_age_group: artifact.age_group,
        model_scope: artifact.scope,
        age_filter: opts.age_group,
        excluded_rows,
        ablation,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::fixtures::complete_record;

    fn scored(n: usize) -> (Vec<f64>, Vec<bool>) {
        let y: Vec<bool> = (0..n).map(|i| i % 4 == 0).collect();
        let p = (0..n).map(|i| ((i * 37 % 101) as f64 / 101.0 + if y[i] { 0.3 } else { 0.0 }).min(0.999)).collect();
        (p, y)
    }

    #[test]
    fn report_is_complete_and_consistent() {
        let (p, y) = scored(400);
        let r = evaluate_scores("x", &p, &y, 0.5, 200, 1).unwrap();
        for m in Metric::ALL {
            let e = r.metric(m).unwrap();
            assert!(e.ci_lower.unwrap() <= e.value && e.value <= e.ci_upper.unwrap(), "{m:?}");
        }
        let (s, sp) = (r.sensitivity.unwrap().value, r.specificity.unwrap().value);
        assert_eq!(r.gap.unwrap().value, super::super::gap(s, sp));
        assert_eq!((s * (r.confusion.tp + r.confusion.fn_) as f64).round() as u64, r.confusion.tp);
        assert_eq!(r.confusion.total(), 400);
        assert_eq!(r, evaluate_scores("x", &p, &y, 0.5, 200, 1).unwrap());
        let json = serde_json::to_value(&r).unwrap();
        for k in ["auc", "sensitivity", "specificity", "gap", "ppv", "npv", "mcc", "n_rows", "n_positive", "threshold"] {
            assert!(json.get(k).is_some(), "{k}");
        }
    }

    #[test]
    fn undefined_metrics_are_null() {
        let r = evaluate_scores("x", &[0.1, 0.2, 0.3], &[true, false, false], 0.9, 50, 1).unwrap();
        assert_eq!(r.ppv, None);
        assert!(serde_json::to_value(&r).unwrap()["ppv"].is_null());
        assert!(r.csv_row().split(',').count() == CSV_HEADER.split(',').count());
    }

    #[test]
    fn ablation_contract() {
        let mut recs: Vec<PatientRecord> = (0..10).map(|_| complete_record()).collect();
        for r in recs.iter_mut().take(3) {
            r.injury_mechanism = Mechanism::Fall;
        }
        let kept = ablate_mechanism_str(&recs, "Fall").unwrap();
        assert_eq!(kept.len(), 7);
        assert!(kept.iter().all(|r| r.injury_mechanism != Mechanism::Fall));
        assert_eq!(ablate_mechanism_str(&recs, "drowning_submersion").unwrap(), recs);
        assert_eq!(ablate_mechanism_str(&recs, "tripped"), Err(EvalError::UnknownMechanism("tripped".into())));
    }

    #[test]
    fn rejects_bad_threshold() {
        assert_eq!(evaluate_scores("x", &[0.1], &[true], 1.0, 10, 1), Err(EvalError::Threshold(1.0)));
    }
}
