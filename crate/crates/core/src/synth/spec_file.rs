//! Flat `key = value` spec files.
//!
//! Scalar keys address the top level (`n_records`, `seed`, `risk.iss`,
//! `outcome.hospice_fraction`, ...). Stratum keys are prefixed by the stratum
//! name: `adults.systolic_bp.mean`, `children.freq.injury_mechanism.fall`,
//! `adults.rate.diabetes`, `adults.ais.3.sd`. `age_group` selects the
//! built-in defaults and is applied before every other key.

use std::str::FromStr;

use super::{default_spec, CohortSpec, Moments, Stratum, SynthError};
use crate::domain::{AgeGroup, Categorical, Comorbidity, InjuryIntent, InjuryType, Mechanism, Race, Sex};

/// Top-level keys accepted by [`apply_override`].
pub const SPEC_KEYS: [&str; 21] = [
    "n_records",
    "age_group",
    "mortality_rate",
    "missingness_rate",
    "missingness_iss_bias",
    "intercept",
    "calibration_samples",
    "seed",
    "risk.iss",
    "risk.gcs_deficit",
    "risk.age_per_decade",
    "risk.low_sbp",
    "risk.fall_elderly",
    "risk.frailty_sd",
    "risk.fall_elderly_frailty_scale",
    "outcome.ed_death_logit",
    "outcome.ed_death_frailty_weight",
    "outcome.ed_survivor_fraction",
    "outcome.transfer_out_fraction",
    "outcome.transfer_acuity_weight",
    "outcome.hospice_fraction",
];

fn bad(key: &str, value: &str, reason: impl ToString) -> SynthError {
    SynthError::BadValue {
        key: key.to_string(),
        value: value.to_string(),
        reason: reason.to_string(),
    }
}

fn num<T: FromStr>(key: &str, value: &str) -> Result<T, SynthError>
where
    T::Err: std::fmt::Display,
{
    value.parse::<T>().map_err(|e| bad(key, value, e))
}

fn set_level<T: Categorical + Ord>(
    map: &mut std::collections::BTreeMap<T, f64>,
    key: &str,
    level: &str,
    value: &str,
) -> Result<(), SynthError> {
    let l = T::parse_level(level).map_err(|e| bad(key, value, e))?;
    map.insert(l, num(key, value)?);
    Ok(())
}

fn set_moment(m: &mut Moments, key: &str, field: &str, value: &str) -> Result<(), SynthError> {
    match field {
        "mean" => m.mean = num(key, value)?,
        "sd" => m.sd = num(key, value)?,
        _ => return Err(SynthError::UnknownKey(key.to_string())),
    }
    Ok(())
}

fn apply_stratum(s: &mut Stratum, key: &str, rest: &[&str], value: &str) -> Result<(), SynthError> {
    let unknown = || SynthError::UnknownKey(key.to_string());
    match rest {
        ["weight"] => s.weight = num(key, value)?,
        ["age_min"] => s.age_min = num(key, value)?,
        ["age_max"] => s.age_max = num(key, value)?,
        ["age", f] => set_moment(&mut s.age, key, f, value)?,
        ["gcs_eye", f] => set_moment(&mut s.gcs_eye, key, f, value)?,
        ["gcs_verbal", f] => set_moment(&mut s.gcs_verbal, key, f, value)?,
        ["gcs_motor", f] => set_moment(&mut s.gcs_motor, key, f, value)?,
        ["iss", f] => set_moment(&mut s.iss, key, f, value)?,
        ["ais", region, f] => {
            let i: usize = num(key, region)?;
            let m = i.checked_sub(1).and_then(|i| s.ais.get_mut(i)).ok_or_else(unknown)?;
            set_moment(m, key, f, value)?
        }
        ["freq", "sex", l] => set_level::<Sex>(&mut s.sex, key, l, value)?,
        ["freq", "race", l] => set_level::<Race>(&mut s.race, key, l, value)?,
        ["freq", "injury_intent", l] => set_level::<InjuryIntent>(&mut s.injury_intent, key, l, value)?,
        ["freq", "injury_type", l] => set_level::<InjuryType>(&mut s.injury_type, key, l, value)?,
        ["freq", "injury_mechanism", l] => set_level::<Mechanism>(&mut s.injury_mechanism, key, l, value)?,
        ["rate", "arrived_by_ambulance"] => s.arrived_by_ambulance = num(key, value)?,
        ["rate", "transferred_in"] => s.transferred_in = num(key, value)?,
        ["rate", l] => set_level::<Comorbidity>(&mut s.comorbidity, key, l, value)?,
        [vital, f] if s.vitals.contains_key(*vital) => {
            set_moment(s.vitals.get_mut(*vital).expect("checked"), key, f, value)?
        }
        _ => return Err(unknown()),
    }
    Ok(())
}

/// Sets one key on `spec`. `age_group` replaces the whole spec with that
/// group's defaults, keeping `n_records` and `seed`.
pub fn apply_override(spec: &mut CohortSpec, key: &str, value: &str) -> Result<(), SynthError> {
    let value = value.trim();
    match key {
        "n_records" => spec.n_records = num(key, value)?,
        "age_group" => {
            let g = AgeGroup::parse_level(value).map_err(|e| bad(key, value, e))?;
            let (n, seed) = (spec.n_records, spec.seed);
            *spec = default_spec(g);
            spec.n_records = n;
            spec.seed = seed;
        }
        "mortality_rate" => spec.mortality_rate = num(key, value)?,
        "missingness_rate" => spec.missingness_rate = num(key, value)?,
        "missingness_iss_bias" => spec.missingness_iss_bias = num(key, value)?,
        "intercept" => {
            spec.intercept = match value {
                "" | "auto" => None,
                v => Some(num(key, v)?),
            }
        }
        "calibration_samples" => spec.calibration_samples = num(key, value)?,
        "seed" => spec.seed = num(key, value)?,
        "risk.iss" => spec.risk.iss = num(key, value)?,
        "risk.gcs_deficit" => spec.risk.gcs_deficit = num(key, value)?,
        "risk.age_per_decade" => spec.risk.age_per_decade = num(key, value)?,
        "risk.low_sbp" => spec.risk.low_sbp = num(key, value)?,
        "risk.fall_elderly" => spec.risk.fall_elderly = num(key, value)?,
        "risk.frailty_sd" => spec.risk.frailty_sd = num(key, value)?,
        "risk.fall_elderly_frailty_scale" => spec.risk.fall_elderly_frailty_scale = num(key, value)?,
        "outcome.ed_death_logit" => spec.outcome.ed_death_logit = num(key, value)?,
        "outcome.ed_death_frailty_weight" => spec.outcome.ed_death_frailty_weight = num(key, value)?,
        "outcome.ed_survivor_fraction" => spec.outcome.ed_survivor_fraction = num(key, value)?,
        "outcome.transfer_out_fraction" => spec.outcome.transfer_out_fraction = num(key, value)?,
        "outcome.transfer_acuity_weight" => spec.outcome.transfer_acuity_weight = num(key, value)?,
        "outcome.hospice_fraction" => spec.outcome.hospice_fraction = num(key, value)?,
        _ => {
            let parts: Vec<&str> = key.split('.').collect();
            let stratum = spec
                .strata
                .iter_mut()
                .find(|s| s.name == parts[0])
                .ok_or_else(|| SynthError::UnknownKey(key.to_string()))?;
            apply_stratum(stratum, key, &parts[1..], value)?;
        }
    }
    Ok(())
}

/// Parses `key = value` lines (blank lines and `#` comments ignored) into
/// a spec starting from `base`.
pub fn parse_spec_text(text: &str, base: CohortSpec) -> Result<CohortSpec, SynthError> {
    let mut pairs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| bad(&format!("line {}", i + 1), line, "expected key = value"))?;
        pairs.push((k.trim().to_string(), v.trim().to_string()));
    }
    let mut spec = base;
    // The group resets defaults, so it goes first.
    for (k, v) in pairs.iter().filter(|(k, _)| k == "age_group") {
        apply_override(&mut spec, k, v)?;
    }
    for (k, v) in pairs.iter().filter(|(k, _)| k != "age_group") {
        apply_override(&mut spec, k, v)?;
    }
    Ok(spec)
}
