//! Visit data model, inclusion filter, outcome labeling and scope assignment.

mod csv_io;
mod enums;
mod record;

pub use csv_io::{read_cohort, write_cohort, write_cohort_with, CohortCsvError, COHORT_COLUMNS};
pub use enums::{
    AgeGroup, Categorical, Comorbidity, Disposition, InjuryIntent, InjuryType, Mechanism,
    OutcomeScope, Race, Sex, UnknownLevel, ADULT_AGE,
};
pub use record::{
    assign_scope, filter_cohort, label_mortality, partition_by_scope, passes_inclusion,
    ExclusionReason, PatientRecord, RecordError, AIS_REGIONS,
};

#[cfg(test)]
pub(crate) use record::fixtures;

/// The five ED vital signs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Vital {
    OxygenSaturation,
    SystolicBp,
    Pulse,
    RespiratoryRate,
    Temperature,
}

impl Vital {
    pub const ALL: [Vital; 5] = [
        Vital::OxygenSaturation,
        Vital::SystolicBp,
        Vital::Pulse,
        Vital::RespiratoryRate,
        Vital::Temperature,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Vital::OxygenSaturation => "oxygen_saturation",
            Vital::SystolicBp => "systolic_bp",
            Vital::Pulse => "pulse",
            Vital::RespiratoryRate => "respiratory_rate",
            Vital::Temperature => "temperature",
        }
    }

    /// Physiologic bounds, inclusive.
    pub fn bounds(self) -> (f64, f64) {
        match self {
            Vital::OxygenSaturation => (0.0, 100.0),
            Vital::SystolicBp => (0.0, 300.0),
            Vital::Pulse => (0.0, 300.0),
            Vital::RespiratoryRate => (0.0, 80.0),
            Vital::Temperature => (25.0, 45.0),
        }
    }

    pub fn get(self, r: &PatientRecord) -> Option<f64> {
        match self {
            Vital::OxygenSaturation => r.oxygen_saturation,
            Vital::SystolicBp => r.systolic_bp,
            Vital::Pulse => r.pulse,
            Vital::RespiratoryRate => r.respiratory_rate,
            Vital::Temperature => r.temperature,
        }
    }

    pub fn slot(self, r: &mut PatientRecord) -> &mut Option<f64> {
        match self {
            Vital::OxygenSaturation => &mut r.oxygen_saturation,
            Vital::SystolicBp => &mut r.systolic_bp,
            Vital::Pulse => &mut r.pulse,
            Vital::RespiratoryRate => &mut r.respiratory_rate,
            Vital::Temperature => &mut r.temperature,
        }
    }
}
