//! Published registry marginals used as calibration targets: percentages for
//! categorical rows, mean and SD for numeric rows. Children first, adults
//! second.

use crate::domain::{Comorbidity, InjuryIntent, InjuryType, Mechanism, Race};

pub(super) struct GroupTable {
    pub age: (f64, f64),
    pub female_pct: f64,
    pub race: [(Race, f64); 7],
    pub oxygen_saturation: (f64, f64),
    pub systolic_bp: (f64, f64),
    pub pulse: (f64, f64),
    pub respiratory_rate: (f64, f64),
    pub temperature: (f64, f64),
    pub gcs_eye: (f64, f64),
    pub gcs_verbal: (f64, f64),
    pub gcs_motor: (f64, f64),
    pub iss: (f64, f64),
    pub ais: [(f64, f64); 9],
    pub comorbidity: [(Comorbidity, f64); 21],
    pub intent: [(InjuryIntent, f64); 5],
    pub injury_type: [(InjuryType, f64); 4],
    pub mechanism: [(Mechanism, f64); 27],
    pub ambulance_pct: f64,
    pub transferred_pct: f64,
    pub mortality_pct: f64,
    pub count: f64,
}

pub(super) const CHILDREN: GroupTable = GroupTable {
    age: (10.42, 5.91),
    female_pct: 33.92,
    race: [
        (Race::White, 67.06),
        (Race::Black, 17.72),
        (Race::Other, 11.66),
        (Race::Asian, 1.73),
        (Race::AmericanIndian, 1.14),
        (Race::NotAvailable, 0.4),
        (Race::PacificIslander, 0.29),
    ],
    oxygen_saturation: (98.26, 6.93),
    systolic_bp: (122.48, 19.53),
    pulse: (102.42, 26.18),
    respiratory_rate: (21.32, 6.82),
    temperature: (36.67, 1.26),
    gcs_eye: (3.85, 0.62),
    gcs_verbal: (4.75, 0.87),
    gcs_motor: (5.79, 0.91),
    iss: (7.36, 7.21),
    ais: [
        (1.11, 1.73),
        (0.31, 0.63),
        (0.03, 0.36),
        (0.34, 1.00),
        (0.30, 0.95),
        (0.19, 0.69),
        (0.60, 0.96),
        (0.60, 1.07),
        (0.13, 0.42),
    ],
    comorbidity: [
        (Comorbidity::Alcoholism, 0.82),
        (Comorbidity::Angina, 0.0),
        (Comorbidity::Ascites, 0.02),
        (Comorbidity::BleedingDisorder, 0.23),
        (Comorbidity::Chemotherapy, 0.02),
        (Comorbidity::CongenitalAnomalies, 0.77),
        (Comorbidity::CongestiveHeartFailure, 0.03),
        (Comorbidity::CurrentSmoker, 3.44),
        (Comorbidity::Cva, 0.08),
        (Comorbidity::Diabetes, 0.37),
        (Comorbidity::DisseminatedCancer, 0.01),
        (Comorbidity::EsophagealVarices, 0.02),
        (Comorbidity::FunctionallyDependent, 0.22),
        (Comorbidity::Hypertension, 0.36),
        (Comorbidity::MyocardialInfarction, 0.01),
        (Comorbidity::None, 68.02),
        (Comorbidity::Obesity, 1.26),
        (Comorbidity::Prematurity, 0.57),
        (Comorbidity::Pvd, 0.0),
        (Comorbidity::RespiratoryDisease, 5.56),
        (Comorbidity::SteroidUse, 0.04),
    ],
    intent: [
        (InjuryIntent::Assault, 7.27),
        (InjuryIntent::Other, 0.08),
        (InjuryIntent::SelfInflicted, 0.83),
        (InjuryIntent::Undetermined, 0.62),
        (InjuryIntent::Unintentional, 90.48),
    ],
    injury_type: [
        (InjuryType::Blunt, 82.2),
        (InjuryType::Burn, 3.32),
        (InjuryType::OtherUnspecified, 7.33),
        (InjuryType::Penetrating, 6.43),
    ],
    mechanism: [
        (Mechanism::AdverseEffectsDrugs, 0.01),
        (Mechanism::AdverseEffectsMedicalCare, 0.01),
        (Mechanism::CutPierce, 3.02),
        (Mechanism::DrowningSubmersion, 0.09),
        (Mechanism::Fall, 32.45),
        (Mechanism::FireFlame, 0.98),
        (Mechanism::Firearm, 3.4),
        (Mechanism::HotObjectSubstance, 2.34),
        (Mechanism::MvtMotorcyclist, 1.35),
        (Mechanism::MvtOccupant, 17.5),
        (Mechanism::MvtOther, 0.32),
        (Mechanism::MvtPedalCyclist, 1.51),
        (Mechanism::MvtPedestrian, 4.34),
        (Mechanism::MvtUnspecified, 0.16),
        (Mechanism::Machinery, 0.38),
        (Mechanism::NaturalBitesStings, 1.69),
        (Mechanism::NaturalOther, 0.53),
        (Mechanism::OtherSpecifiedClassifiable, 2.99),
        (Mechanism::OtherSpecifiedNec, 0.47),
        (Mechanism::Overexertion, 0.51),
        (Mechanism::PedalCyclistOther, 4.05),
        (Mechanism::PedestrianOther, 0.53),
        (Mechanism::Poisoning, 0.11),
        (Mechanism::StruckByAgainst, 10.93),
        (Mechanism::Suffocation, 0.1),
        (Mechanism::TransportOther, 8.68),
        (Mechanism::Unspecified, 0.84),
    ],
    ambulance_pct: 76.16,
    transferred_pct: 37.06,
    mortality_pct: 0.36,
    count: 300_847.0,
};

pub(super) const ADULTS: GroupTable = GroupTable {
    age: (51.67, 20.93),
    female_pct: 37.95,
    race: [
        (Race::White, 75.54),
        (Race::Black, 13.76),
        (Race::Other, 7.41),
        (Race::Asian, 1.67),
        (Race::AmericanIndian, 0.89),
        (Race::NotAvailable, 0.51),
        (Race::PacificIslander, 0.2),
    ],
    oxygen_saturation: (96.85, 7.44),
    systolic_bp: (139.89, 26.35),
    pulse: (87.49, 19.13),
    respiratory_rate: (18.40, 4.63),
    temperature: (36.52, 1.45),
    gcs_eye: (3.84, 0.64),
    gcs_verbal: (4.69, 0.91),
    gcs_motor: (5.77, 0.96),
    iss: (9.08, 7.82),
    ais: [
        (1.09, 1.77),
        (0.34, 0.67),
        (0.04, 0.33),
        (0.62, 1.26),
        (0.24, 0.82),
        (0.43, 0.96),
        (0.52, 0.89),
        (0.87, 1.21),
        (0.10, 0.37),
    ],
    comorbidity: [
        (Comorbidity::Alcoholism, 9.16),
        (Comorbidity::Angina, 0.23),
        (Comorbidity::Ascites, 0.08),
        (Comorbidity::BleedingDisorder, 5.77),
        (Comorbidity::Chemotherapy, 0.26),
        (Comorbidity::CongenitalAnomalies, 0.28),
        (Comorbidity::CongestiveHeartFailure, 3.42),
        (Comorbidity::CurrentSmoker, 18.93),
        (Comorbidity::Cva, 2.32),
        (Comorbidity::Diabetes, 12.6),
        (Comorbidity::DisseminatedCancer, 0.7),
        (Comorbidity::EsophagealVarices, 0.24),
        (Comorbidity::FunctionallyDependent, 1.96),
        (Comorbidity::Hypertension, 31.64),
        (Comorbidity::MyocardialInfarction, 1.41),
        (Comorbidity::None, 26.58),
        (Comorbidity::Obesity, 6.64),
        (Comorbidity::Prematurity, 0.02),
        (Comorbidity::Pvd, 0.47),
        (Comorbidity::RespiratoryDisease, 8.24),
        (Comorbidity::SteroidUse, 0.52),
    ],
    intent: [
        (InjuryIntent::Assault, 10.65),
        (InjuryIntent::Other, 0.19),
        (InjuryIntent::SelfInflicted, 1.55),
        (InjuryIntent::Undetermined, 0.37),
        (InjuryIntent::Unintentional, 86.84),
    ],
    injury_type: [
        (InjuryType::Blunt, 85.64),
        (InjuryType::Burn, 1.55),
        (InjuryType::OtherUnspecified, 3.92),
        (InjuryType::Penetrating, 8.48),
    ],
    mechanism: [
        (Mechanism::AdverseEffectsDrugs, 0.02),
        (Mechanism::AdverseEffectsMedicalCare, 0.02),
        (Mechanism::CutPierce, 4.68),
        (Mechanism::DrowningSubmersion, 0.04),
        (Mechanism::Fall, 41.45),
        (Mechanism::FireFlame, 0.95),
        (Mechanism::Firearm, 3.79),
        (Mechanism::HotObjectSubstance, 0.6),
        (Mechanism::MvtMotorcyclist, 5.5),
        (Mechanism::MvtOccupant, 20.06),
        (Mechanism::MvtOther, 0.21),
        (Mechanism::MvtPedalCyclist, 0.8),
        (Mechanism::MvtPedestrian, 2.86),
        (Mechanism::MvtUnspecified, 0.25),
        (Mechanism::Machinery, 1.21),
        (Mechanism::NaturalBitesStings, 0.45),
        (Mechanism::NaturalOther, 0.32),
        (Mechanism::OtherSpecifiedClassifiable, 1.28),
        (Mechanism::OtherSpecifiedNec, 0.45),
        (Mechanism::Overexertion, 0.28),
        (Mechanism::PedalCyclistOther, 1.53),
        (Mechanism::PedestrianOther, 0.29),
        (Mechanism::Poisoning, 0.04),
        (Mechanism::StruckByAgainst, 6.67),
        (Mechanism::Suffocation, 0.08),
        (Mechanism::TransportOther, 4.83),
        (Mechanism::Unspecified, 0.93),
    ],
    ambulance_pct: 84.58,
    transferred_pct: 23.26,
    mortality_pct: 0.43,
    count: 1_706_638.0,
};
