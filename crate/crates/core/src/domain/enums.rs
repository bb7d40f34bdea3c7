use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Error for a string that names no level of a categorical variable.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown {variable} level `{value}`")]
pub struct UnknownLevel {
    pub variable: &'static str,
    pub value: String,
}

/// Shared surface of every categorical variable in a visit record.
pub trait Categorical: Copy + Eq + Ord + fmt::Debug + 'static {
    /// Variable name as used in CSV headers and the feature schema.
    const VARIABLE: &'static str;
    /// Every level, in canonical order.
    const ALL: &'static [Self];

    /// Canonical snake_case spelling.
    fn as_str(self) -> &'static str;

    /// Human label matching the registry table row.
    fn label(self) -> &'static str;

    fn index(self) -> usize {
        Self::ALL.iter().position(|&v| v == self).expect("level listed in ALL")
    }

    /// Parses either the snake_case form or the human label, case-insensitively.
    fn parse_level(s: &str) -> Result<Self, UnknownLevel> {
        let t = s.trim();
        Self::ALL
            .iter()
            .copied()
            .find(|v| v.as_str().eq_ignore_ascii_case(t) || v.label().eq_ignore_ascii_case(t))
            .ok_or_else(|| UnknownLevel {
                variable: Self::VARIABLE,
                value: s.to_string(),
            })
    }
}

macro_rules! categorical {
    (
        $(#[$meta:meta])*
        $name:ident, $var:literal {
            $( $variant:ident => ($snake:literal, $label:literal) ),+ $(,)?
        }
    ) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(rename_all = "snake_case")]
        pub enum $name {
            $( $variant ),+
        }

        impl Categorical for $name {
            const VARIABLE: &'static str = $var;
            const ALL: &'static [Self] = &[$( $name::$variant ),+];

            fn as_str(self) -> &'static str {
                match self {
                    $( $name::$variant => $snake ),+
                }
            }

            fn label(self) -> &'static str {
                match self {
                    $( $name::$variant => $label ),+
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $name {
            type Err = UnknownLevel;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                <$name as Categorical>::parse_level(s)
            }
        }
    };
}

categorical! {
    Sex, "sex" {
        Female => ("female", "Female"),
        Male => ("male", "Male"),
    }
}

categorical! {
    Race, "race" {
        White => ("white", "White"),
        Black => ("black", "Black or African American"),
        Other => ("other", "Other Race"),
        Asian => ("asian", "Asian"),
        AmericanIndian => ("american_indian", "American Indian"),
        NotAvailable => ("race_na", "Race N/A"),
        PacificIslander => ("pacific_islander", "Native Hawaiian or Other Pacific Islander"),
    }
}

categorical! {
    InjuryIntent, "injury_intent" {
        Assault => ("assault", "Assault"),
        Other => ("other", "Other"),
        SelfInflicted => ("self_inflicted", "Self-inflicted"),
        Undetermined => ("undetermined", "Undetermined"),
        Unintentional => ("unintentional", "Unintentional"),
    }
}

categorical! {
    InjuryType, "injury_type" {
        Blunt => ("blunt", "Blunt"),
        Burn => ("burn", "Burn"),
        OtherUnspecified => ("other_unspecified", "Other/unspecified"),
        Penetrating => ("penetrating", "Penetrating"),
    }
}

categorical! {
    /// External-cause mechanism categories, already mapped from E-codes.
    Mechanism, "injury_mechanism" {
        AdverseEffectsDrugs => ("adverse_effects_drugs", "Adverse effects, drugs"),
        AdverseEffectsMedicalCare => ("adverse_effects_medical_care", "Adverse effects, medical care"),
        CutPierce => ("cut_pierce", "Cut/pierce"),
        DrowningSubmersion => ("drowning_submersion", "Drowning/submersion"),
        Fall => ("fall", "Fall"),
        FireFlame => ("fire_flame", "Fire/flame"),
        Firearm => ("firearm", "Firearm"),
        HotObjectSubstance => ("hot_object_substance", "Hot object/substance"),
        MvtMotorcyclist => ("mvt_motorcyclist", "MVT Motorcyclist"),
        MvtOccupant => ("mvt_occupant", "MVT Occupant"),
        MvtOther => ("mvt_other", "MVT Other"),
        MvtPedalCyclist => ("mvt_pedal_cyclist", "MVT Pedal cyclist"),
        MvtPedestrian => ("mvt_pedestrian", "MVT Pedestrian"),
        MvtUnspecified => ("mvt_unspecified", "MVT Unspecified"),
        Machinery => ("machinery", "Machinery"),
        NaturalBitesStings => ("natural_bites_stings", "Natural/environmental, Bites and stings"),
        NaturalOther => ("natural_other", "Natural/environmental, Other"),
        OtherSpecifiedClassifiable => ("other_specified_classifiable", "Other specified and classifiable"),
        OtherSpecifiedNec => ("other_specified_nec", "Other specified, not elsewhere classifiable"),
        Overexertion => ("overexertion", "Overexertion"),
        PedalCyclistOther => ("pedal_cyclist_other", "Pedal cyclist, other"),
        PedestrianOther => ("pedestrian_other", "Pedestrian, other"),
        Poisoning => ("poisoning", "Poisoning"),
        StruckByAgainst => ("struck_by_against", "Struck by, against"),
        Suffocation => ("suffocation", "Suffocation"),
        TransportOther => ("transport_other", "Transport, other"),
        Unspecified => ("unspecified", "Unspecified"),
    }
}

categorical! {
    /// Comorbidity flags. `None` is the explicit "No comorbidities" marker.
    Comorbidity, "comorbidity" {
        Alcoholism => ("alcoholism", "Alcoholism"),
        Angina => ("angina", "Angina"),
        Ascites => ("ascites", "Ascites within 30 days"),
        BleedingDisorder => ("bleeding_disorder", "Bleeding Disorder"),
        Chemotherapy => ("chemotherapy", "Chemotherapy"),
        CongenitalAnomalies => ("congenital_anomalies", "Congenital Anomalies"),
        CongestiveHeartFailure => ("congestive_heart_failure", "Congestive heart failure"),
        CurrentSmoker => ("current_smoker", "Current smoker"),
        Cva => ("cva", "CVA/residual neurological deficit"),
        Diabetes => ("diabetes", "Diabetes mellitus"),
        DisseminatedCancer => ("disseminated_cancer", "Disseminated cancer"),
        EsophagealVarices => ("esophageal_varices", "Esophageal varices"),
        FunctionallyDependent => ("functionally_dependent", "Functionally dependent health status"),
        Hypertension => ("hypertension", "Hypertension requiring medication"),
        MyocardialInfarction => ("myocardial_infarction", "Myocardial Infarction"),
        None => ("no_comorbidities", "No comorbidities"),
        Obesity => ("obesity", "Obesity"),
        Prematurity => ("prematurity", "Prematurity"),
        Pvd => ("pvd", "PVD"),
        RespiratoryDisease => ("respiratory_disease", "Respiratory Disease"),
        SteroidUse => ("steroid_use", "Steroid use"),
    }
}

categorical! {
    /// Recorded end state of the visit.
    Disposition, "disposition" {
        DeceasedExpired => ("deceased_expired", "Deceased/expired"),
        Expired => ("expired", "Expired"),
        Hospice => ("hospice", "Discharged/transferred to hospice care"),
        AdmittedGeneral => ("admitted_general", "Admitted to general floor"),
        AdmittedIcu => ("admitted_icu", "Admitted to intensive care unit"),
        AdmittedStepdown => ("admitted_stepdown", "Admitted to step-down unit"),
        TransferredOut => ("transferred_out", "Transferred to another hospital"),
        Discharged => ("discharged", "Discharged from the ED"),
        NotApplicable => ("not_applicable", "Not applicable"),
        NotKnown => ("not_known", "Not known/recorded"),
        LeftAma => ("left_ama", "Left against medical advice"),
    }
}

categorical! {
    /// Which outcome data set a visit belongs to.
    OutcomeScope, "scope" {
        EdOnly => ("ed_only", "ED Only"),
        HospitalAndEd => ("hospital_and_ed", "Hospital & ED"),
    }
}

categorical! {
    AgeGroup, "age_group" {
        Children => ("children", "Children"),
        Adults => ("adults", "Adults"),
        All => ("all", "All Ages"),
    }
}

/// First age, in whole years, counted as an adult.
pub const ADULT_AGE: u32 = 18;

impl AgeGroup {
    pub fn contains_age(self, age: u32) -> bool {
        match self {
            AgeGroup::Children => age < ADULT_AGE,
            AgeGroup::Adults => age >= ADULT_AGE,
            AgeGroup::All => true,
        }
    }
}

impl Disposition {
    /// Dispositions that exclude a visit: no usable outcome.
    pub fn is_valid(self) -> bool {
        !matches!(
            self,
            Disposition::NotApplicable | Disposition::NotKnown | Disposition::LeftAma
        )
    }

    pub fn is_death(self) -> bool {
        matches!(
            self,
            Disposition::DeceasedExpired | Disposition::Expired | Disposition::Hospice
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn level_counts_match_registry_tables() {
        assert_eq!(Race::ALL.len(), 7);
        assert_eq!(InjuryIntent::ALL.len(), 5);
        assert_eq!(InjuryType::ALL.len(), 4);
        assert_eq!(Mechanism::ALL.len(), 27);
        assert_eq!(Comorbidity::ALL.len(), 21);
        assert_eq!(Disposition::ALL.len(), 11);
    }

    #[test]
    fn parses_snake_case_and_labels() {
        assert_eq!("Fall".parse::<Mechanism>().unwrap(), Mechanism::Fall);
        assert_eq!("fall".parse::<Mechanism>().unwrap(), Mechanism::Fall);
        assert_eq!("MVT Occupant".parse::<Mechanism>().unwrap(), Mechanism::MvtOccupant);
        assert_eq!("race_na".parse::<Race>().unwrap(), Race::NotAvailable);
        let err = "skydiving".parse::<Mechanism>().unwrap_err();
        assert_eq!(err.variable, "injury_mechanism");
    }

    #[test]
    fn snake_case_names_are_unique() {
        let mut names: Vec<_> = Mechanism::ALL.iter().map(|m| m.as_str()).collect();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), Mechanism::ALL.len());
    }
}
