//! The end-to-end training workflow shared by the CLI and the tests:
//! inclusion filter, age-group filter, a stratified split within each
//! outcome scope, schema fit on the training rows, then transfer or
//! single-phase training.

use crate::domain::{
    assign_scope, filter_cohort, label_mortality, AgeGroup, Categorical, ExclusionReason, OutcomeScope, PatientRecord,
};
use crate::pipeline::{encode, fit_schema, split_items, PipelineError, SplitSpec, UnseenCategory};
use crate::seed;
use crate::train::{train_single, train_transfer, TrainConfig, TrainError, Trained};

#[derive(Debug, thiserror::Error)]
pub enum WorkflowError {
    #[error("no included {0} visits")]
    Empty(&'static str),
    #[error("{scope} outcomes: {source}")]
    Split { scope: &'static str, source: PipelineError },
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Train(#[from] TrainError),
}

/// A filtered cohort split into train and test rows.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedCohort {
    pub age_group: AgeGroup,
    pub excluded: Vec<(PatientRecord, ExclusionReason)>,
    /// Included rows of the age group; rows of other ages are dropped.
    pub included: Vec<PatientRecord>,
    pub train: Vec<PatientRecord>,
    pub test: Vec<PatientRecord>,
}

fn mortality(records: &[PatientRecord]) -> Vec<bool> {
    records
        .iter()
        .map(|r| label_mortality(r.disposition).expect("included rows have a valid disposition"))
        .collect()
}

fn in_scope(records: &[PatientRecord], scope: OutcomeScope) -> Vec<PatientRecord> {
    records.iter().filter(|r| assign_scope(r) == scope).cloned().collect()
}

/// Filters and splits. Each outcome scope is split separately, stratified on
/// mortality, so both partitions keep the ED and hospital death rates.
pub fn prepare_cohort(records: &[PatientRecord], age_group: AgeGroup, split: &SplitSpec) -> Result<PreparedCohort, WorkflowError> {
    let (included, excluded) = filter_cohort(records);
    let included: Vec<PatientRecord> = included.into_iter().filter(|r| age_group.contains_age(r.age)).collect();
    if included.is_empty() {
        return Err(WorkflowError::Empty(age_group.as_str()));
    }
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for scope in [OutcomeScope::EdOnly, OutcomeScope::HospitalAndEd] {
        let rows = in_scope(&included, scope);
        let spec = SplitSpec { seed: seed::derive(split.seed, scope.as_str()), ..*split };
        let (tr, te) = split_items(&rows, &mortality(&rows), &spec)
            .map_err(|source| WorkflowError::Split { scope: scope.as_str(), source })?;
        train.extend(tr);
        test.extend(te);
    }
    Ok(PreparedCohort { age_group, excluded, included, train, test })
}

impl PreparedCohort {
    /// Test rows the model for `scope` is judged on: ED-outcome rows for the
    /// transfer model, every row for the combined model.
    pub fn test_for(&self, scope: OutcomeScope) -> Vec<PatientRecord> {
        match scope {
            OutcomeScope::EdOnly => in_scope(&self.test, OutcomeScope::EdOnly),
            OutcomeScope::HospitalAndEd => self.test.clone(),
        }
    }
}

/// Fits the schema on all training rows, then trains. `EdOnly` pretrains on
/// hospital outcomes and fine-tunes on ED outcomes; `HospitalAndEd` trains
/// once on everything.
pub fn train_scope(
    prepared: &PreparedCohort,
    scope: OutcomeScope,
    cfg: &TrainConfig,
    mode: UnseenCategory,
) -> Result<Trained, WorkflowError> {
    let schema = fit_schema(&prepared.train)?;
    Ok(match scope {
        OutcomeScope::EdOnly => {
            let hospital = encode(&in_scope(&prepared.train, OutcomeScope::HospitalAndEd), &schema, mode)?;
            let ed = encode(&in_scope(&prepared.train, OutcomeScope::EdOnly), &schema, mode)?;
            train_transfer(&hospital, &ed, cfg, prepared.age_group)?
        }
        OutcomeScope::HospitalAndEd => {
            let all = encode(&prepared.train, &schema, mode)?;
            train_single(&all, cfg, prepared.age_group)?
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{default_spec, generate};

    fn cohort() -> Vec<PatientRecord> {
        let mut spec = default_spec(AgeGroup::All);
        spec.n_records = 20_000;
        spec.mortality_rate = 0.02;
        spec.seed = 3;
        generate(&spec).unwrap()
    }

    #[test]
    fn split_partitions_each_scope() {
        let recs = cohort();
        let p = prepare_cohort(&recs, AgeGroup::Adults, &SplitSpec::default()).unwrap();
        assert_eq!(p.excluded.len() + p.included.len() + recs.iter().filter(|r| r.age < 18 && r.exclusion_reason().is_none()).count(), recs.len());
        assert!(p.included.iter().all(|r| r.age >= 18));
        assert_eq!(p.train.len() + p.test.len(), p.included.len());
        for scope in [OutcomeScope::EdOnly, OutcomeScope::HospitalAndEd] {
            let (a, b) = (in_scope(&p.train, scope), in_scope(&p.test, scope));
            let pos = |v: &[PatientRecord]| mortality(v).iter().filter(|&&y| y).count();
            let total = pos(&a) + pos(&b);
            assert_eq!(pos(&a), (0.7 * total as f64).round() as usize);
        }
        assert!(p.test_for(OutcomeScope::EdOnly).iter().all(|r| assign_scope(r) == OutcomeScope::EdOnly));
        assert_eq!(p, prepare_cohort(&recs, AgeGroup::Adults, &SplitSpec::default()).unwrap());
    }

    #[test]
    fn both_scopes_train() {
        let p = prepare_cohort(&cohort(), AgeGroup::All, &SplitSpec::default()).unwrap();
        let cfg = TrainConfig { epochs_phase1: 1, epochs_phase2: 1, hidden: vec![8], ..Default::default() };
        let ed = train_scope(&p, OutcomeScope::EdOnly, &cfg, UnseenCategory::Strict).unwrap();
        assert_eq!(ed.artifact.scope, OutcomeScope::EdOnly);
        assert_eq!(ed.log.len(), 2);
        let all = train_scope(&p, OutcomeScope::HospitalAndEd, &cfg, UnseenCategory::Strict).unwrap();
        assert_eq!(all.artifact.scope, OutcomeScope::HospitalAndEd);
        assert_eq!(all.log.len(), 1);
    }
}
