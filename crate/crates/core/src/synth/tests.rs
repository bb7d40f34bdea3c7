use super::*;
use crate::domain::{filter_cohort, label_mortality, Categorical};

fn small(group: AgeGroup, n: usize, seed: u64) -> CohortSpec {
    let mut s = default_spec(group);
    s.n_records = n;
    s.seed = seed;
    s.calibration_samples = 20_000;
    s
}

#[test]
fn defaults_match_registry_table() {
    let c = default_spec(AgeGroup::Children);
    assert_eq!(c.mortality_rate, 0.0036);
    assert_eq!(c.strata[0].age, Moments { mean: 10.42, sd: 5.91 });
    assert_eq!(c.strata[0].injury_mechanism[&Mechanism::Fall], 0.3245);
    let a = default_spec(AgeGroup::Adults);
    assert_eq!(a.mortality_rate, 0.0043);
    assert_eq!(a.strata[0].vitals["systolic_bp"], Moments { mean: 139.89, sd: 26.35 });
    for g in AgeGroup::ALL {
        default_spec(*g).validate().unwrap();
    }
}

#[test]
fn zero_coefficients_give_closed_form_intercept() {
    let mut s = small(AgeGroup::Adults, 10, 1);
    s.risk = RiskCoefficients::ZERO;
    s.calibration_samples = 100;
    s.mortality_rate = 0.5;
    assert!(calibrate_intercept(&s).unwrap().abs() < 1e-10);
    s.mortality_rate = 0.0043;
    let b = calibrate_intercept(&s).unwrap();
    assert!((b - (0.0043f64 / 0.9957).ln()).abs() < 1e-9, "{b}");
    assert!((b + 5.4448).abs() < 1e-3);
}

#[test]
fn calibrated_intercept_hits_target_by_direct_average() {
    let s = small(AgeGroup::Adults, 10, 5);
    let b = calibrate_intercept(&s).unwrap();
    // Re-draw the same calibration sample and average independently.
    let resolved = resolve(&s).unwrap();
    let mut rng = seed::rng(s.seed, "calibration");
    let mut acc = 0.0;
    for _ in 0..s.calibration_samples {
        let d = draw(&resolved, &s.risk, &mut rng);
        acc += 1.0 / (1.0 + (-(d.score + b)).exp());
    }
    let mean = acc / s.calibration_samples as f64;
    assert!((mean - s.mortality_rate).abs() < 1e-4, "{mean}");
}

#[test]
fn bracket_failure_is_reported() {
    let scores = vec![0.0; 10];
    assert!(matches!(intercept_for_scores(&scores, 1e-20), Err(SynthError::Bracket { .. })));
}

#[test]
fn generation_is_deterministic_and_sized() {
    let s = small(AgeGroup::Adults, 9_000, 7);
    let a = generate(&s).unwrap();
    let b = generate(&s).unwrap();
    assert_eq!(a.len(), 9_000);
    assert_eq!(a, b);
    let mut other = s.clone();
    other.seed = 8;
    assert_ne!(a, generate(&other).unwrap());
}

#[test]
fn rejects_empty_cohort() {
    let s = small(AgeGroup::Children, 0, 1);
    assert_eq!(generate(&s), Err(SynthError::NoRecords));
}

#[test]
fn children_mean_age_converges() {
    let s = small(AgeGroup::Children, 50_000, 3);
    let recs = generate(&s).unwrap();
    let mean = recs.iter().map(|r| r.age as f64).sum::<f64>() / recs.len() as f64;
    assert!((mean - 10.42).abs() < 0.1, "{mean}");
}

#[test]
fn adult_mortality_converges() {
    let s = small(AgeGroup::Adults, 200_000, 11);
    let recs = generate(&s).unwrap();
    let deaths = recs.iter().filter(|r| r.disposition.is_death()).count();
    let rate = deaths as f64 / recs.len() as f64;
    assert!((rate / 0.0043 - 1.0).abs() < 0.2, "{rate}");
}

#[test]
fn values_stay_in_bounds_and_records_validate() {
    let s = small(AgeGroup::All, 20_000, 2);
    for r in generate(&s).unwrap() {
        r.validate().unwrap();
        for v in Vital::ALL {
            if let Some(x) = v.get(&r) {
                let (lo, hi) = v.bounds();
                assert!(x >= lo && x <= hi);
            }
        }
        assert!(r.age <= MAX_AGE);
    }
}

#[test]
fn categorical_marginals_within_three_standard_errors() {
    let n = 100_000;
    let s = small(AgeGroup::Children, n, 13);
    let recs = generate(&s).unwrap();
    let st = &s.strata[0];
    let check = |name: &str, p: f64, count: usize| {
        let se = (p * (1.0 - p) / n as f64).sqrt();
        let f = count as f64 / n as f64;
        assert!((f - p).abs() <= 3.0 * se + 1e-12, "{name}: {f} vs {p}");
    };
    for (&m, &p) in &st.injury_mechanism {
        check(m.as_str(), p, recs.iter().filter(|r| r.injury_mechanism == m).count());
    }
    for (&m, &p) in &st.race {
        check(m.as_str(), p, recs.iter().filter(|r| r.race == m).count());
    }
    for (&m, &p) in &st.injury_type {
        check(m.as_str(), p, recs.iter().filter(|r| r.injury_type == m).count());
    }
    check("female", st.sex[&Sex::Female], recs.iter().filter(|r| r.sex == Sex::Female).count());
    for (&c, &p) in &st.comorbidity {
        check(c.as_str(), p, recs.iter().filter(|r| r.comorbidities.contains(&c)).count());
    }
}

#[test]
fn higher_iss_twin_has_higher_risk() {
    let s = small(AgeGroup::Adults, 10_000, 4);
    let b = calibrate_intercept(&s).unwrap();
    let recs = generate(&s).unwrap();
    let (mut lo, mut hi) = (0.0, 0.0);
    for r in recs.iter().filter(|r| r.iss <= 55) {
        let mut twin = r.clone();
        twin.iss += 20;
        lo += true_mortality_probability(&s, b, r);
        hi += true_mortality_probability(&s, b, &twin);
        assert!(latent_score(&s.risk, &twin) > latent_score(&s.risk, r));
    }
    assert!(hi > lo);
}

#[test]
fn latent_score_directions() {
    let risk = RiskCoefficients::default();
    let base = crate::domain::fixtures::complete_record();
    let mut worse_gcs = base.clone();
    worse_gcs.gcs_motor = Some(2);
    assert!(latent_score(&risk, &worse_gcs) > latent_score(&risk, &base));
    let mut older = base.clone();
    older.age += 20;
    assert!(latent_score(&risk, &older) > latent_score(&risk, &base));
    let mut shock = base.clone();
    shock.systolic_bp = Some(70.0);
    let mut shock2 = base.clone();
    shock2.systolic_bp = Some(60.0);
    assert!(latent_score(&risk, &shock2) > latent_score(&risk, &shock));
    assert!(latent_score(&risk, &shock) > latent_score(&risk, &base));
}

#[test]
fn missingness_rate_is_honoured() {
    let s = small(AgeGroup::Adults, 40_000, 9);
    let recs = generate(&s).unwrap();
    let (inc, exc) = filter_cohort(&recs);
    let f = exc.len() as f64 / recs.len() as f64;
    assert!((f - 0.1).abs() < 0.01, "{f}");
    for r in &inc {
        label_mortality(r.disposition).unwrap();
    }
}

#[test]
fn iss_biased_missingness_excludes_severe_visits() {
    let mut s = small(AgeGroup::Adults, 40_000, 9);
    s.missingness_iss_bias = 1.0;
    let recs = generate(&s).unwrap();
    let (inc, exc) = filter_cohort(&recs);
    let mean = |v: Vec<f64>| v.iter().sum::<f64>() / v.len() as f64;
    let m_inc = mean(inc.iter().map(|r| r.iss as f64).collect());
    let m_exc = mean(exc.iter().map(|(r, _)| r.iss as f64).collect());
    assert!(m_exc > m_inc + 2.0, "{m_exc} vs {m_inc}");
}

#[test]
fn chunk_streams_are_independent_of_total_size() {
    let a = generate(&small(AgeGroup::Children, CHUNK + 10, 21)).unwrap();
    let mut s = small(AgeGroup::Children, 2 * CHUNK, 21);
    s.intercept = Some(calibrate_intercept(&s).unwrap());
    let b = generate(&s).unwrap();
    assert_eq!(a[..], b[..CHUNK + 10]);
}

#[test]
fn spec_text_overrides_and_rejects_unknown_keys() {
    let text = "# comment\nage_group = children\nn_records = 123\nrisk.iss = 0.2\nchildren.freq.injury_mechanism.fall = 0.5\nchildren.freq.injury_mechanism.unspecified = 0.3\nchildren.ais.3.mean = 0.1\nchildren.rate.diabetes = 0.01\n";
    let s = parse_spec_text(text, default_spec(AgeGroup::Adults)).unwrap();
    assert_eq!(s.age_group, AgeGroup::Children);
    assert_eq!(s.n_records, 123);
    assert_eq!(s.risk.iss, 0.2);
    assert_eq!(s.strata[0].injury_mechanism[&Mechanism::Fall], 0.5);
    assert_eq!(s.strata[0].ais[2].mean, 0.1);
    // Mechanism table no longer sums to one.
    assert!(matches!(s.validate(), Err(SynthError::TableSum(..))));
    assert!(matches!(
        parse_spec_text("bogus = 1", default_spec(AgeGroup::Adults)),
        Err(SynthError::UnknownKey(_))
    ));
    assert!(matches!(
        parse_spec_text("seed = x", default_spec(AgeGroup::Adults)),
        Err(SynthError::BadValue { .. })
    ));
}

#[test]
fn sicker_survivors_are_transferred_out() {
    let mut s = small(AgeGroup::Adults, 100_000, 8);
    s.missingness_rate = 0.0;
    let mean_iss = |recs: &[PatientRecord], d: Disposition| {
        let v: Vec<f64> = recs.iter().filter(|r| r.disposition == d).map(|r| r.iss as f64).collect();
        (v.iter().sum::<f64>() / v.len() as f64, v.len())
    };
    let recs = generate(&s).unwrap();
    let (transfer, n_t) = mean_iss(&recs, Disposition::TransferredOut);
    let (discharge, n_d) = mean_iss(&recs, Disposition::Discharged);
    assert!(transfer > discharge + 1.0, "{transfer} vs {discharge}");
    let ed_share = (n_t + n_d) as f64 / recs.len() as f64;
    assert!((0.08..0.16).contains(&ed_share), "{ed_share}");

    s.outcome.transfer_acuity_weight = 0.0;
    let flat = generate(&s).unwrap();
    let (transfer, n_t) = mean_iss(&flat, Disposition::TransferredOut);
    let (discharge, n_d) = mean_iss(&flat, Disposition::Discharged);
    assert!((transfer - discharge).abs() < 0.5, "{transfer} vs {discharge}");
    let share = n_t as f64 / (n_t + n_d) as f64;
    assert!((share - 0.3).abs() < 0.02, "{share}");
}
