//! Classifier metrics with stratified bootstrap intervals, mechanism
//! ablation and the evaluation report.

mod bootstrap;
mod metrics;
mod report;

pub use bootstrap::{bootstrap_all, bootstrap_ci, Interval, Metric};
pub use metrics::{
    auc, confusion_at_threshold, gap, mcc, npv, ppv, roc_auc_trapezoid, roc_curve, sensitivity, specificity,
    youden_threshold, ConfusionCounts,
};
pub use report::{
    ablate_mechanism, ablate_mechanism_str, evaluate, evaluate_scores, Ablation, Estimate, EvalOptions,
    EvaluationReport, MetricsReport, Youden, CSV_HEADER,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("no rows to evaluate")]
    Empty,
    #[error("{0} probabilities but {1} labels")]
    Length(usize, usize),
    #[error("{0} is undefined: zero denominator or a single class")]
    Undefined(&'static str),
    #[error("{metric}: {skipped} of {total} bootstrap resamples undefined")]
    TooManyUndefined { metric: &'static str, skipped: usize, total: usize },
    #[error("bootstrap needs at least one replicate")]
    NoReplicates,
    #[error("threshold must lie in (0, 1), got {0}")]
    Threshold(f64),
    #[error("unknown injury mechanism `{0}`")]
    UnknownMechanism(String),
    #[error("test set is empty after {0}")]
    EmptyTestSet(String),
    #[error("{0}")]
    Model(String),
}
