use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::enums::{
    Comorbidity, Disposition, InjuryIntent, InjuryType, Mechanism, OutcomeScope, Race, Sex,
};

/// Number of AIS body regions carried per visit.
pub const AIS_REGIONS: usize = 9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RecordError {
    #[error("{field} = {value} outside [{lo}, {hi}]")]
    OutOfRange {
        field: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },
    #[error("`no_comorbidities` combined with other comorbidity flags")]
    ContradictoryComorbidities,
    #[error("disposition `{0}` is not a valid outcome")]
    InvalidDisposition(Disposition),
}

/// One emergency-department visit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatientRecord {
    pub age: u32,
    pub sex: Sex,
    pub race: Race,
    pub oxygen_saturation: Option<f64>,
    pub systolic_bp: Option<f64>,
    pub pulse: Option<f64>,
    pub respiratory_rate: Option<f64>,
    /// Degrees Celsius.
    pub temperature: Option<f64>,
    pub gcs_eye: Option<u8>,
    pub gcs_verbal: Option<u8>,
    pub gcs_motor: Option<u8>,
    pub iss: u8,
    pub ais: [u8; AIS_REGIONS],
    /// Empty means a comorbidity outside the named list.
    pub comorbidities: BTreeSet<Comorbidity>,
    pub injury_intent: InjuryIntent,
    pub injury_type: InjuryType,
    pub injury_mechanism: Mechanism,
    pub arrived_by_ambulance: Option<bool>,
    pub transferred_in: Option<bool>,
    pub disposition: Disposition,
    /// Death happened in the emergency department (only meaningful for deaths).
    pub died_in_ed: bool,
}

/// Why a record failed the inclusion filter; the first failing criterion wins.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExclusionReason {
    MissingVital(&'static str),
    MissingGcs(&'static str),
    UnknownArrivalMode,
    UnknownTransferStatus,
    InvalidDisposition(Disposition),
}

impl std::fmt::Display for ExclusionReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ExclusionReason::MissingVital(v) => write!(f, "missing_{v}"),
            ExclusionReason::MissingGcs(v) => write!(f, "missing_{v}"),
            ExclusionReason::UnknownArrivalMode => f.write_str("missing_arrived_by_ambulance"),
            ExclusionReason::UnknownTransferStatus => f.write_str("missing_transferred_in"),
            ExclusionReason::InvalidDisposition(d) => write!(f, "invalid_disposition_{d}"),
        }
    }
}

impl PatientRecord {
    pub fn gcs_total(&self) -> Option<u8> {
        Some(self.gcs_eye? + self.gcs_verbal? + self.gcs_motor?)
    }

    pub fn has_comorbidity(&self) -> bool {
        !self.comorbidities.contains(&Comorbidity::None)
    }

    /// Checks the range invariants on every present field.
    pub fn validate(&self) -> Result<(), RecordError> {
        fn check(field: &'static str, v: f64, lo: f64, hi: f64) -> Result<(), RecordError> {
            if v.is_finite() && (lo..=hi).contains(&v) {
                Ok(())
            } else {
                Err(RecordError::OutOfRange { field, value: v, lo, hi })
            }
        }
        check("age", self.age as f64, 0.0, 120.0)?;
        for (name, bounds, value) in [
            ("gcs_eye", (1.0, 4.0), self.gcs_eye),
            ("gcs_verbal", (1.0, 5.0), self.gcs_verbal),
            ("gcs_motor", (1.0, 6.0), self.gcs_motor),
        ] {
            if let Some(v) = value {
                check(name, v as f64, bounds.0, bounds.1)?;
            }
        }
        check("iss", self.iss as f64, 0.0, 75.0)?;
        for &a in &self.ais {
            check("ais", a as f64, 0.0, 6.0)?;
        }
        for vital in super::Vital::ALL {
            if let Some(v) = vital.get(self) {
                let (lo, hi) = vital.bounds();
                check(vital.name(), v, lo, hi)?;
            }
        }
        if self.comorbidities.contains(&Comorbidity::None) && self.comorbidities.len() > 1 {
            return Err(RecordError::ContradictoryComorbidities);
        }
        Ok(())
    }

    /// First inclusion criterion this record fails, if any.
    pub fn exclusion_reason(&self) -> Option<ExclusionReason> {
        for vital in super::Vital::ALL {
            if vital.get(self).is_none() {
                return Some(ExclusionReason::MissingVital(vital.name()));
            }
        }
        for (name, v) in [
            ("gcs_eye", self.gcs_eye),
            ("gcs_verbal", self.gcs_verbal),
            ("gcs_motor", self.gcs_motor),
        ] {
            if v.is_none() {
                return Some(ExclusionReason::MissingGcs(name));
            }
        }
        if self.arrived_by_ambulance.is_none() {
            return Some(ExclusionReason::UnknownArrivalMode);
        }
        if self.transferred_in.is_none() {
            return Some(ExclusionReason::UnknownTransferStatus);
        }
        if !self.disposition.is_valid() {
            return Some(ExclusionReason::InvalidDisposition(self.disposition));
        }
        None
    }
}

/// Complete vitals and GCS, known arrival mode and transfer status, and a
/// usable disposition.
pub fn passes_inclusion(record: &PatientRecord) -> bool {
    record.exclusion_reason().is_none()
}

/// Mortality label. Errors on dispositions that should have been filtered out.
pub fn label_mortality(disposition: Disposition) -> Result<bool, RecordError> {
    if !disposition.is_valid() {
        return Err(RecordError::InvalidDisposition(disposition));
    }
    Ok(disposition.is_death())
}

/// ED-only when the final outcome was reached in the ED: death flagged as in
/// the ED, discharge from the ED, or transfer out from the ED. Everything
/// else happened after admission.
pub fn assign_scope(record: &PatientRecord) -> OutcomeScope {
    let ed = match record.disposition {
        Disposition::DeceasedExpired | Disposition::Expired => record.died_in_ed,
        Disposition::Discharged | Disposition::TransferredOut => true,
        _ => false,
    };
    if ed {
        OutcomeScope::EdOnly
    } else {
        OutcomeScope::HospitalAndEd
    }
}

/// Splits a cohort into (included, excluded-with-reason), preserving order.
pub fn filter_cohort(
    records: &[PatientRecord],
) -> (Vec<PatientRecord>, Vec<(PatientRecord, ExclusionReason)>) {
    let mut included = Vec::new();
    let mut excluded = Vec::new();
    for r in records {
        match r.exclusion_reason() {
            None => included.push(r.clone()),
            Some(reason) => excluded.push((r.clone(), reason)),
        }
    }
    (included, excluded)
}

/// Partition of included records by outcome scope: (ed_only, hospital).
pub fn partition_by_scope(records: &[PatientRecord]) -> (Vec<PatientRecord>, Vec<PatientRecord>) {
    records
        .iter()
        .cloned()
        .partition(|r| assign_scope(r) == OutcomeScope::EdOnly)
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    pub fn complete_record() -> PatientRecord {
        PatientRecord {
            age: 40,
            sex: Sex::Male,
            race: Race::White,
            oxygen_saturation: Some(97.0),
            systolic_bp: Some(130.0),
            pulse: Some(88.0),
            respiratory_rate: Some(18.0),
            temperature: Some(36.6),
            gcs_eye: Some(4),
            gcs_verbal: Some(5),
            gcs_motor: Some(6),
            iss: 9,
            ais: [1, 0, 0, 2, 0, 0, 1, 1, 0],
            comorbidities: [Comorbidity::None].into_iter().collect(),
            injury_intent: InjuryIntent::Unintentional,
            injury_type: InjuryType::Blunt,
            injury_mechanism: Mechanism::MvtOccupant,
            arrived_by_ambulance: Some(true),
            transferred_in: Some(false),
            disposition: Disposition::AdmittedIcu,
            died_in_ed: false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::complete_record;
    use super::*;
    use crate::domain::Categorical;

    #[test]
    fn missing_pulse_is_excluded() {
        let mut r = complete_record();
        r.pulse = None;
        assert!(!passes_inclusion(&r));
        assert_eq!(r.exclusion_reason(), Some(ExclusionReason::MissingVital("pulse")));
    }

    #[test]
    fn complete_admitted_icu_is_included() {
        assert!(passes_inclusion(&complete_record()));
    }

    #[test]
    fn left_ama_is_excluded() {
        let mut r = complete_record();
        r.disposition = Disposition::LeftAma;
        assert!(!passes_inclusion(&r));
    }

    #[test]
    fn unknown_transfer_status_is_excluded() {
        let mut r = complete_record();
        r.transferred_in = None;
        assert_eq!(r.exclusion_reason(), Some(ExclusionReason::UnknownTransferStatus));
    }

    #[test]
    fn mortality_labels() {
        assert!(label_mortality(Disposition::Hospice).unwrap());
        assert!(label_mortality(Disposition::Expired).unwrap());
        assert!(label_mortality(Disposition::DeceasedExpired).unwrap());
        assert!(!label_mortality(Disposition::AdmittedIcu).unwrap());
        assert!(!label_mortality(Disposition::Discharged).unwrap());
        assert_eq!(
            label_mortality(Disposition::NotKnown),
            Err(RecordError::InvalidDisposition(Disposition::NotKnown))
        );
    }

    #[test]
    fn label_never_errors_for_included_records() {
        for &d in Disposition::ALL {
            let mut r = complete_record();
            r.disposition = d;
            if passes_inclusion(&r) {
                assert!(label_mortality(d).is_ok());
            }
        }
    }

    #[test]
    fn scope_assignment() {
        let mut r = complete_record();
        r.disposition = Disposition::Expired;
        r.died_in_ed = true;
        assert_eq!(assign_scope(&r), OutcomeScope::EdOnly);
        r.died_in_ed = false;
        assert_eq!(assign_scope(&r), OutcomeScope::HospitalAndEd);
        r.disposition = Disposition::Discharged;
        assert_eq!(assign_scope(&r), OutcomeScope::EdOnly);
        r.disposition = Disposition::AdmittedGeneral;
        assert_eq!(assign_scope(&r), OutcomeScope::HospitalAndEd);
    }

    #[test]
    fn scope_partition_of_hundred_records() {
        let records: Vec<_> = (0..100)
            .map(|i| {
                let mut r = complete_record();
                r.disposition = Disposition::ALL[i % 8];
                r.died_in_ed = i % 3 == 0;
                r
            })
            .collect();
        let (ed, hosp) = partition_by_scope(&records);
        assert_eq!(ed.len() + hosp.len(), 100);
    }

    #[test]
    fn filtering_is_idempotent() {
        let mut records = vec![complete_record(); 5];
        records[1].pulse = None;
        records[3].disposition = Disposition::NotApplicable;
        let (once, excluded) = filter_cohort(&records);
        assert_eq!(excluded.len(), 2);
        let (twice, none) = filter_cohort(&once);
        assert_eq!(twice, once);
        assert!(none.is_empty());
    }

    #[test]
    fn validate_rejects_out_of_range() {
        let mut r = complete_record();
        r.gcs_eye = Some(5);
        assert!(r.validate().is_err());
        let mut r = complete_record();
        r.comorbidities.insert(Comorbidity::Obesity);
        assert_eq!(r.validate(), Err(RecordError::ContradictoryComorbidities));
        assert!(complete_record().validate().is_ok());
    }
}
