//! Synthetic visit cohorts calibrated to published registry marginals, with
//! a known latent logistic mortality risk so models can be scored against
//! ground truth.
//!
//! Categorical fields are drawn independently from their frequency tables;
//! numeric fields from truncated normals whose rounded mean matches the
//! target. Death is drawn from `sigmoid(score + intercept)` where the
//! intercept is bisected so the mean risk equals `mortality_rate`.

mod spec_file;
mod tables;
mod truncnorm;

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::domain::{
    AgeGroup, Comorbidity, Disposition, InjuryIntent, InjuryType, Mechanism,
    PatientRecord, Race, Sex, Vital, AIS_REGIONS,
};
use crate::seed;

pub use spec_file::{apply_override, parse_spec_text, SPEC_KEYS};
pub use truncnorm::{CalibrationError, TruncatedNormal};

/// Records per independently seeded generation chunk.
pub const CHUNK: usize = 4096;
const FREQ_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SynthError {
    #[error("n_records must be at least 1")]
    NoRecords,
    #[error("mortality_rate must lie in (0, 1), got {0}")]
    MortalityRate(f64),
    #[error("{0} must lie in [0, 1], got {1}")]
    Fraction(String, f64),
    #[error("frequency table `{0}` sums to {1}, expected 1")]
    TableSum(String, f64),
    #[error("spec has no strata")]
    NoStrata,
    #[error("{0}: {1}")]
    Calibration(String, CalibrationError),
    #[error("intercept bracket [-30, 30] does not straddle target rate {target} (mean risk spans {low}..{high})")]
    Bracket { target: f64, low: f64, high: f64 },
    #[error("unknown spec key `{0}`")]
    UnknownKey(String),
    #[error("invalid value `{value}` for `{key}`: {reason}")]
    BadValue {
        key: String,
        value: String,
        reason: String,
    },
}

/// Target mean and SD of a numeric field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean: f64,
    pub sd: f64,
}

impl From<(f64, f64)> for Moments {
    fn from((mean, sd): (f64, f64)) -> Self {
        Self { mean, sd }
    }
}

/// Calibration targets for one age band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stratum {
    pub name: String,
    /// Share of the cohort drawn from this stratum.
    pub weight: f64,
    pub age_min: u32,
    pub age_max: u32,
    pub age: Moments,
    pub vitals: BTreeMap<String, Moments>,
    pub gcs_eye: Moments,
    pub gcs_verbal: Moments,
    pub gcs_motor: Moments,
    pub iss: Moments,
    pub ais: Vec<Moments>,
    pub sex: BTreeMap<Sex, f64>,
    pub race: BTreeMap<Race, f64>,
    pub injury_intent: BTreeMap<InjuryIntent, f64>,
    pub injury_type: BTreeMap<InjuryType, f64>,
    pub injury_mechanism: BTreeMap<Mechanism, f64>,
    /// Marginal prevalence of each flag; `no_comorbidities` is exclusive.
    pub comorbidity: BTreeMap<Comorbidity, f64>,
    pub arrived_by_ambulance: f64,
    pub transferred_in: f64,
}

/// Weights of the latent log-odds of death.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskCoefficients {
    /// Per ISS point.
    pub iss: f64,
    /// Per point of GCS deficit (15 - total).
    pub gcs_deficit: f64,
    /// Per decade of age.
    pub age_per_decade: f64,
    /// Per 10 mmHg of systolic pressure below 90.
    pub low_sbp: f64,
    /// Shift for falls in patients aged 65 and over.
    pub fall_elderly: f64,
    /// SD of the unobserved per-visit frailty term.
    pub frailty_sd: f64,
    /// Multiplier on frailty SD for elderly falls: outcomes there are less
    /// explained by the recorded predictors.
    pub fall_elderly_frailty_scale: f64,
}

impl RiskCoefficients {
    pub const ZERO: RiskCoefficients = RiskCoefficients {
        iss: 0.0,
        gcs_deficit: 0.0,
        age_per_decade: 0.0,
        low_sbp: 0.0,
        fall_elderly: 0.0,
        frailty_sd: 0.0,
        fall_elderly_frailty_scale: 1.0,
    };
}

impl Default for RiskCoefficients {
    fn default() -> Self {
        Self {
            iss: 0.18,
            gcs_deficit: 0.5,
            age_per_decade: 0.45,
            low_sbp: 0.5,
            fall_elderly: 0.6,
            frailty_sd: 0.8,
            fall_elderly_frailty_scale: 2.0,
        }
    }
}

/// How deaths and survivals are turned into dispositions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutcomeModel {
    /// Base log-odds that a death happens in the ED.
    pub ed_death_logit: f64,
    /// Added log-odds per frailty SD: sudden unexplained deaths tend to
    /// happen before admission.
    pub ed_death_frailty_weight: f64,
    /// Share of survivors whose visit ends in the ED.
    pub ed_survivor_fraction: f64,
    /// Share of ED-ending survivors transferred out rather than discharged,
    /// for a survivor at the cohort's mortality log-odds.
    pub transfer_out_fraction: f64,
    /// Added log-odds of transfer out per unit of the survivor's mortality
    /// log-odds above the cohort rate: sicker survivors are sent on to
    /// higher-level care.
    pub transfer_acuity_weight: f64,
    /// Share of post-admission deaths recorded as hospice discharge.
    pub hospice_fraction: f64,
}

impl Default for OutcomeModel {
    fn default() -> Self {
        Self {
            ed_death_logit: -1.2,
            ed_death_frailty_weight: 0.6,
            ed_survivor_fraction: 0.12,
            transfer_out_fraction: 0.3,
            transfer_acuity_weight: 0.6,
            hospice_fraction: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortSpec {
    pub n_records: usize,
    pub age_group: AgeGroup,
    pub strata: Vec<Stratum>,
    pub mortality_rate: f64,
    pub risk: RiskCoefficients,
    pub outcome: OutcomeModel,
    /// Probability that a visit gets one field blanked or an invalid disposition.
    pub missingness_rate: f64,
    /// Log-odds shift of missingness per SD of ISS above the stratum mean;
    /// 0 keeps missingness independent of everything.
    pub missingness_iss_bias: f64,
    /// Fixed intercept; `None` means calibrate.
    pub intercept: Option<f64>,
    pub calibration_samples: usize,
    pub seed: u64,
}

fn table<T: Copy + Ord>(rows: &[(T, f64)], catch_all: Option<T>) -> BTreeMap<T, f64> {
    let mut m: BTreeMap<T, f64> = rows.iter().map(|&(k, pct)| (k, pct / 100.0)).collect();
    if let Some(c) = catch_all {
        let residual = 1.0 - m.values().sum::<f64>();
        *m.get_mut(&c).expect("catch-all level present") += residual;
    }
    m
}

fn stratum_from(name: &str, t: &tables::GroupTable, age_min: u32, age_max: u32, weight: f64) -> Stratum {
    let vitals = [
        (Vital::OxygenSaturation, t.oxygen_saturation),
        (Vital::SystolicBp, t.systolic_bp),
        (Vital::Pulse, t.pulse),
        (Vital::RespiratoryRate, t.respiratory_rate),
        (Vital::Temperature, t.temperature),
    ]
    .into_iter()
    .map(|(v, m)| (v.name().to_string(), m.into()))
    .collect();
    let female = t.female_pct / 100.0;
    Stratum {
        name: name.to_string(),
        weight,
        age_min,
        age_max,
        age: t.age.into(),
        vitals,
        gcs_eye: t.gcs_eye.into(),
        gcs_verbal: t.gcs_verbal.into(),
        gcs_motor: t.gcs_motor.into(),
        iss: t.iss.into(),
        ais: t.ais.iter().map(|&m| m.into()).collect(),
        sex: [(Sex::Female, female), (Sex::Male, 1.0 - female)].into_iter().collect(),
        race: table(&t.race, Some(Race::NotAvailable)),
        injury_intent: table(&t.intent, Some(InjuryIntent::Other)),
        injury_type: table(&t.injury_type, Some(InjuryType::OtherUnspecified)),
        injury_mechanism: table(&t.mechanism, Some(Mechanism::Unspecified)),
        comorbidity: table(&t.comorbidity, None),
        arrived_by_ambulance: t.ambulance_pct / 100.0,
        transferred_in: t.transferred_pct / 100.0,
    }
}

/// Oldest age the adult stratum can produce.
pub const MAX_AGE: u32 = 99;

/// Built-in spec calibrated to the published marginals for an age group.
pub fn default_spec(age_group: AgeGroup) -> CohortSpec {
    let child_age_max = crate::domain::ADULT_AGE - 1;
    let children = || stratum_from("children", &tables::CHILDREN, 0, child_age_max, 1.0);
    let adults = || stratum_from("adults", &tables::ADULTS, crate::domain::ADULT_AGE, MAX_AGE, 1.0);
    let (strata, mortality_rate) = match age_group {
        AgeGroup::Children => (vec![children()], tables::CHILDREN.mortality_pct / 100.0),
        AgeGroup::Adults => (vec![adults()], tables::ADULTS.mortality_pct / 100.0),
        AgeGroup::All => {
            let (nc, na) = (tables::CHILDREN.count, tables::ADULTS.count);
            let mut c = children();
            let mut a = adults();
            c.weight = nc / (nc + na);
            a.weight = na / (nc + na);
            // Pooled rate: (1,053 + 7,145) deaths over both groups.
            let rate = (1_053.0 + 7_145.0) / (nc + na);
            (vec![c, a], rate)
        }
    };
    CohortSpec {
        n_records: 100_000,
        age_group,
        strata,
        mortality_rate,
        risk: RiskCoefficients::default(),
        outcome: OutcomeModel::default(),
        missingness_rate: 0.1,
        missingness_iss_bias: 0.0,
        intercept: None,
        calibration_samples: 50_000,
        seed: 0,
    }
}

fn check_fraction(name: &str, v: f64) -> Result<(), SynthError> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(SynthError::Fraction(name.to_string(), v))
    }
}

fn check_table<T>(name: &str, m: &BTreeMap<T, f64>) -> Result<(), SynthError> {
    for &v in m.values() {
        check_fraction(name, v)?;
    }
    let s: f64 = m.values().sum();
    if (s - 1.0).abs() > FREQ_TOL {
        return Err(SynthError::TableSum(name.to_string(), s));
    }
    Ok(())
}

impl CohortSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        if self.n_records == 0 {
            return Err(SynthError::NoRecords);
        }
        if !(self.mortality_rate > 0.0 && self.mortality_rate < 1.0) {
            return Err(SynthError::MortalityRate(self.mortality_rate));
        }
        if self.strata.is_empty() {
            return Err(SynthError::NoStrata);
        }
        check_fraction("missingness_rate", self.missingness_rate)?;
        check_fraction("outcome.ed_survivor_fraction", self.outcome.ed_survivor_fraction)?;
        check_fraction("outcome.transfer_out_fraction", self.outcome.transfer_out_fraction)?;
        check_fraction("outcome.hospice_fraction", self.outcome.hospice_fraction)?;
        let weights: BTreeMap<usize, f64> =
            self.strata.iter().enumerate().map(|(i, s)| (i, s.weight)).collect();
        check_table("stratum weights", &weights)?;
        for s in &self.strata {
            check_table(&format!("{}.freq.sex", s.name), &s.sex)?;
            check_table(&format!("{}.freq.race", s.name), &s.race)?;
            check_table(&format!("{}.freq.injury_intent", s.name), &s.injury_intent)?;
            check_table(&format!("{}.freq.injury_type", s.name), &s.injury_type)?;
            check_table(&format!("{}.freq.injury_mechanism", s.name), &s.injury_mechanism)?;
            let none = s.comorbidity.get(&Comorbidity::None).copied().unwrap_or(0.0);
            for (c, &p) in &s.comorbidity {
                check_fraction(&format!("{}.rate.{}", s.name, c), p)?;
                if *c != Comorbidity::None && p > 1.0 - none {
                    return Err(SynthError::Fraction(format!("{}.rate.{} (exceeds 1 - no_comorbidities)", s.name, c), p));
                }
            }
            check_fraction(&format!("{}.rate.arrived_by_ambulance", s.name), s.arrived_by_ambulance)?;
            check_fraction(&format!("{}.rate.transferred_in", s.name), s.transferred_in)?;
        }
        Ok(())
    }
}

/// Samplers resolved from a stratum's targets.
struct StratumSampler {
    age: TruncatedNormal,
    vitals: Vec<(Vital, TruncatedNormal)>,
    gcs: [TruncatedNormal; 3],
    iss: TruncatedNormal,
    ais: Vec<TruncatedNormal>,
    sex: LevelSampler<Sex>,
    race: LevelSampler<Race>,
    intent: LevelSampler<InjuryIntent>,
    injury_type: LevelSampler<InjuryType>,
    mechanism: LevelSampler<Mechanism>,
    p_none: f64,
    /// Conditional flag rates given at least some comorbidity.
    comorbidity: Vec<(Comorbidity, f64)>,
    ambulance: f64,
    transferred: f64,
    iss_mean: f64,
    iss_sd: f64,
}

/// Cumulative-table sampler over a frequency table.
struct LevelSampler<T> {
    levels: Vec<T>,
    cumulative: Vec<f64>,
}

impl<T: Copy> LevelSampler<T> {
    fn new(m: &BTreeMap<T, f64>) -> Self {
        let mut acc = 0.0;
        let mut levels = Vec::new();
        let mut cumulative = Vec::new();
        for (&k, &p) in m {
            acc += p;
            levels.push(k);
            cumulative.push(acc);
        }
        Self { levels, cumulative }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> T {
        let u = rng.random::<f64>() * self.cumulative.last().copied().unwrap_or(1.0);
        let i = self.cumulative.partition_point(|&c| c <= u).min(self.levels.len() - 1);
        self.levels[i]
    }
}

fn calibrated(name: &str, m: Moments, lo: f64, hi: f64, integer: bool) -> Result<TruncatedNormal, SynthError> {
    TruncatedNormal::calibrated(m.mean, m.sd, lo, hi, integer)
        .map_err(|e| SynthError::Calibration(name.to_string(), e))
}

impl StratumSampler {
    fn new(s: &Stratum) -> Result<Self, SynthError> {
        let mut vitals = Vec::new();
        for v in Vital::ALL {
            let m = *s.vitals.get(v.name()).ok_or_else(|| SynthError::UnknownKey(format!("{}.{}", s.name, v.name())))?;
            let (lo, hi) = v.bounds();
            let integer = v != Vital::Temperature;
            vitals.push((v, calibrated(v.name(), m, lo, hi, integer)?));
        }
        if s.ais.len() != AIS_REGIONS {
            return Err(SynthError::BadValue {
                key: format!("{}.ais", s.name),
                value: s.ais.len().to_string(),
                reason: format!("expected {AIS_REGIONS} regions"),
            });
        }
        let none = s.comorbidity.get(&Comorbidity::None).copied().unwrap_or(0.0);
        let some = 1.0 - none;
        let comorbidity = s
            .comorbidity
            .iter()
            .filter(|(c, _)| **c != Comorbidity::None)
            .map(|(&c, &p)| (c, if some > 0.0 { (p / some).min(1.0) } else { 0.0 }))
            .collect();
        Ok(Self {
            age: calibrated("age", s.age, s.age_min as f64, s.age_max as f64, true)?,
            vitals,
            gcs: [
                calibrated("gcs_eye", s.gcs_eye, 1.0, 4.0, true)?,
                calibrated("gcs_verbal", s.gcs_verbal, 1.0, 5.0, true)?,
                calibrated("gcs_motor", s.gcs_motor, 1.0, 6.0, true)?,
            ],
            iss: calibrated("iss", s.iss, 0.0, 75.0, true)?,
            ais: s
                .ais
                .iter()
                .map(|&m| calibrated("ais", m, 0.0, 6.0, true))
                .collect::<Result<_, _>>()?,
            sex: LevelSampler::new(&s.sex),
            race: LevelSampler::new(&s.race),
            intent: LevelSampler::new(&s.injury_intent),
            injury_type: LevelSampler::new(&s.injury_type),
            mechanism: LevelSampler::new(&s.injury_mechanism),
            p_none: none,
            comorbidity,
            ambulance: s.arrived_by_ambulance,
            transferred: s.transferred_in,
            iss_mean: s.iss.mean,
            iss_sd: s.iss.sd,
        })
    }

    /// A complete visit with a placeholder disposition.
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> PatientRecord {
        let mut r = PatientRecord {
            age: self.age.sample(rng) as u32,
            sex: self.sex.sample(rng),
            race: self.race.sample(rng),
            oxygen_saturation: None,
            systolic_bp: None,
            pulse: None,
            respiratory_rate: None,
            temperature: None,
            gcs_eye: Some(self.gcs[0].sample(rng) as u8),
            gcs_verbal: Some(self.gcs[1].sample(rng) as u8),
            gcs_motor: Some(self.gcs[2].sample(rng) as u8),
            iss: self.iss.sample(rng) as u8,
            ais: [0; AIS_REGIONS],
            comorbidities: BTreeSet::new(),
            injury_intent: self.intent.sample(rng),
            injury_type: self.injury_type.sample(rng),
            injury_mechanism: self.mechanism.sample(rng),
            arrived_by_ambulance: Some(rng.random::<f64>() < self.ambulance),
            transferred_in: Some(rng.random::<f64>() < self.transferred),
            disposition: Disposition::AdmittedGeneral,
            died_in_ed: false,
        };
        for &(v, d) in &self.vitals {
            let mut x = d.sample(rng);
            if v == Vital::Temperature {
                x = (x * 10.0).round() / 10.0;
            }
            *v.slot(&mut r) = Some(x);
        }
        for (slot, d) in r.ais.iter_mut().zip(&self.ais) {
            *slot = d.sample(rng) as u8;
        }
        if rng.random::<f64>() < self.p_none {
            r.comorbidities.insert(Comorbidity::None);
        } else {
            for &(c, q) in &self.comorbidity {
                if rng.random::<f64>() < q {
                    r.comorbidities.insert(c);
                }
            }
        }
        r
    }
}

/// Deterministic part of the latent log-odds of death (no intercept, no frailty).
pub fn latent_score(risk: &RiskCoefficients, r: &PatientRecord) -> f64 {
    let gcs_total = r.gcs_total().map(f64::from).unwrap_or(15.0);
    let sbp = r.systolic_bp.unwrap_or(120.0);
    let elderly_fall = r.injury_mechanism == Mechanism::Fall && r.age >= 65;
    risk.iss * r.iss as f64
        + risk.gcs_deficit * (15.0 - gcs_total)
        + risk.age_per_decade * r.age as f64 / 10.0
        + risk.low_sbp * (90.0 - sbp).max(0.0) / 10.0
        + if elderly_fall { risk.fall_elderly } else { 0.0 }
}

fn frailty_sd(risk: &RiskCoefficients, r: &PatientRecord) -> f64 {
    if r.injury_mechanism == Mechanism::Fall && r.age >= 65 {
        risk.frailty_sd * risk.fall_elderly_frailty_scale
    } else {
        risk.frailty_sd
    }
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

struct Resolved {
    strata: Vec<StratumSampler>,
    weights: LevelSampler<usize>,
}

fn resolve(spec: &CohortSpec) -> Result<Resolved, SynthError> {
    spec.validate()?;
    let strata = spec.strata.iter().map(StratumSampler::new).collect::<Result<Vec<_>, _>>()?;
    let weights = LevelSampler::new(&spec.strata.iter().enumerate().map(|(i, s)| (i, s.weight)).collect());
    Ok(Resolved { strata, weights })
}

/// A complete visit plus its latent quantities.
struct Draw {
    record: PatientRecord,
    stratum: usize,
    score: f64,
    /// Standardized frailty (in SD units of its own scale).
    frailty_z: f64,
}

fn draw(resolved: &Resolved, risk: &RiskCoefficients, rng: &mut ChaCha8Rng) -> Draw {
    let stratum = resolved.weights.sample(rng);
    let record = resolved.strata[stratum].draw(rng);
    let frailty_z: f64 = Normal::new(0.0, 1.0).expect("unit normal").sample(rng);
    let score = latent_score(risk, &record) + frailty_sd(risk, &record) * frailty_z;
    Draw { record, stratum, score, frailty_z }
}

fn mean_risk(scores: &[f64], b: f64) -> f64 {
    scores.iter().map(|&s| sigmoid(s + b)).sum::<f64>() / scores.len() as f64
}

/// Intercept `b` such that the mean of `sigmoid(score + b)` over a sample of
/// `calibration_samples` latent scores equals `mortality_rate`.
pub fn calibrate_intercept(spec: &CohortSpec) -> Result<f64, SynthError> {
    let resolved = resolve(spec)?;
    let mut rng = seed::rng(spec.seed, "calibration");
    let n = spec.calibration_samples.max(1);
    let scores: Vec<f64> = (0..n).map(|_| draw(&resolved, &spec.risk, &mut rng).score).collect();
    intercept_for_scores(&scores, spec.mortality_rate)
}

/// Bisection on [-30, 30] for the intercept hitting `target` mean risk.
pub fn intercept_for_scores(scores: &[f64], target: f64) -> Result<f64, SynthError> {
    let (mut lo, mut hi) = (-30.0, 30.0);
    let (f_lo, f_hi) = (mean_risk(scores, lo), mean_risk(scores, hi));
    if !(f_lo <= target && target <= f_hi) {
        return Err(SynthError::Bracket { target, low: f_lo, high: f_hi });
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mean_risk(scores, mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-13 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Probability that a survivor not discharged from the ED is transferred out.
fn transfer_probability(log_odds: f64, outcome: &OutcomeModel, mortality_rate: f64) -> f64 {
    let base = outcome.ed_survivor_fraction * outcome.transfer_out_fraction;
    let rest = 1.0 - outcome.ed_survivor_fraction * (1.0 - outcome.transfer_out_fraction);
    if base <= 0.0 {
        return 0.0;
    }
    let excess = log_odds - (mortality_rate / (1.0 - mortality_rate)).ln();
    let p = sigmoid((base / (1.0 - base)).ln() + outcome.transfer_acuity_weight * excess);
    p / rest
}

fn assign_outcome(d: &mut Draw, intercept: f64, outcome: &OutcomeModel, mortality_rate: f64, rng: &mut ChaCha8Rng) {
    let died = rng.random::<f64>() < sigmoid(d.score + intercept);
    let r = &mut d.record;
    let coin = rng.random::<f64>();
    if died {
        let p_ed = sigmoid(outcome.ed_death_logit + outcome.ed_death_frailty_weight * d.frailty_z);
        r.died_in_ed = rng.random::<f64>() < p_ed;
        r.disposition = if !r.died_in_ed && coin < outcome.hospice_fraction {
            Disposition::Hospice
        } else if rng.random::<f64>() < 0.5 {
            Disposition::DeceasedExpired
        } else {
            Disposition::Expired
        };
    } else if coin < outcome.ed_survivor_fraction * (1.0 - outcome.transfer_out_fraction) {
        r.disposition = Disposition::Discharged;
    } else if rng.random::<f64>() < transfer_probability(d.score + intercept, outcome, mortality_rate) {
        r.disposition = Disposition::TransferredOut;
    } else {
        // Sicker survivors land in higher-acuity units.
        let acuity = sigmoid(d.score + intercept + 4.0);
        let u = rng.random::<f64>();
        r.disposition = if u < 0.2 + 0.5 * acuity {
            Disposition::AdmittedIcu
        } else if u < 0.35 + 0.5 * acuity {
            Disposition::AdmittedStepdown
        } else {
            Disposition::AdmittedGeneral
        };
    }
}

const INVALID_DISPOSITIONS: [Disposition; 3] =
    [Disposition::NotApplicable, Disposition::NotKnown, Disposition::LeftAma];

fn inject_missingness(d: &mut Draw, spec: &CohortSpec, sampler: &StratumSampler, rng: &mut ChaCha8Rng) {
    let rate = spec.missingness_rate;
    let p = if spec.missingness_iss_bias == 0.0 || rate <= 0.0 || rate >= 1.0 {
        rate
    } else {
        let z = (d.record.iss as f64 - sampler.iss_mean) / sampler.iss_sd.max(1e-9);
        sigmoid((rate / (1.0 - rate)).ln() + spec.missingness_iss_bias * z)
    };
    if rng.random::<f64>() >= p {
        return;
    }
    let r = &mut d.record;
    match rng.random_range(0..11u32) {
        i @ 0..=4 => *Vital::ALL[i as usize].slot(r) = None,
        5 => r.gcs_eye = None,
        6 => r.gcs_verbal = None,
        7 => r.gcs_motor = None,
        8 => r.arrived_by_ambulance = None,
        9 => r.transferred_in = None,
        _ => r.disposition = INVALID_DISPOSITIONS[rng.random_range(0..3usize)],
    }
}

/// Generates `n_records` visits. Output depends only on the spec (seed
/// included): chunk `i` of [`CHUNK`] records uses its own derived stream, so
/// chunked or parallel generation concatenates to the same cohort.
pub fn generate(spec: &CohortSpec) -> Result<Vec<PatientRecord>, SynthError> {
    let resolved = resolve(spec)?;
    let intercept = match spec.intercept {
        Some(b) => b,
        None => calibrate_intercept(spec)?,
    };
    let mut out = Vec::with_capacity(spec.n_records);
    let chunks = spec.n_records.div_ceil(CHUNK);
    for c in 0..chunks {
        let mut rng = rand::SeedableRng::seed_from_u64(seed::derive_indexed(spec.seed, "generate", c as u64));
        let len = CHUNK.min(spec.n_records - c * CHUNK);
        for _ in 0..len {
            let mut d = draw(&resolved, &spec.risk, &mut rng);
            assign_outcome(&mut d, intercept, &spec.outcome, spec.mortality_rate, &mut rng);
            let sampler = &resolved.strata[d.stratum];
            inject_missingness(&mut d, spec, sampler, &mut rng);
            out.push(d.record);
        }
    }
    Ok(out)
}

/// Ground-truth probability of death for a complete record: the logistic
/// risk averaged over the unobserved frailty term.
pub fn true_mortality_probability(spec: &CohortSpec, intercept: f64, r: &PatientRecord) -> f64 {
    let base = latent_score(&spec.risk, r) + intercept;
    let sd = frailty_sd(&spec.risk, r);
    if sd == 0.0 {
        return sigmoid(base);
    }
    normal_expectation(|z| sigmoid(base + sd * z))
}

/// E[f(Z)] for standard normal Z. A fine trapezoid on [-8, 8] is accurate
/// to ~1e-12 for smooth bounded integrands.
fn normal_expectation(f: impl Fn(f64) -> f64) -> f64 {
    let n = 400;
    let h = 16.0 / n as f64;
    let mut acc = 0.0;
    for i in 0..=n {
        let z = -8.0 + i as f64 * h;
        let w = if i == 0 || i == n { 0.5 } else { 1.0 };
        acc += w * f(z) * crate::stats::special::normal_pdf(z);
    }
    acc * h
}

#[cfg(test)]
mod tests;
