use trauma_triage::domain::{assign_scope, AgeGroup, OutcomeScope};
use trauma_triage::eval::auc;
use trauma_triage::pipeline::{SplitSpec, UnseenCategory};
use trauma_triage::synth::{default_spec, generate};
use trauma_triage::train::{predict, TrainConfig};
use trauma_triage::workflow::{prepare_cohort, train_scope, PreparedCohort};

fn prepared(n: usize, seed: u64) -> PreparedCohort {
    let mut spec = default_spec(AgeGroup::Adults);
    spec.n_records = n;
    spec.seed = seed;
    prepare_cohort(&generate(&spec).unwrap(), AgeGroup::Adults, &SplitSpec { seed, ..Default::default() }).unwrap()
}

fn ed_test_auc(p: &PreparedCohort, cfg: &TrainConfig) -> f64 {
    let model = train_scope(p, OutcomeScope::EdOnly, cfg, UnseenCategory::Lenient).unwrap();
    let test = p.test_for(OutcomeScope::EdOnly);
    let scores: Vec<f64> =
        predict(&model.artifact, &test, UnseenCategory::Lenient).unwrap().iter().map(|x| x.probability).collect();
    let y: Vec<bool> = test.iter().map(|r| r.disposition.is_death()).collect();
    auc(&scores, &y).unwrap()
}

#[test]
fn combined_model_is_calibrated_to_the_mortality_rate() {
    let p = prepared(60_000, 21);
    let cfg = TrainConfig { seed: 21, ..Default::default() };
    let model = train_scope(&p, OutcomeScope::HospitalAndEd, &cfg, UnseenCategory::Lenient).unwrap();
    let test = p.test_for(OutcomeScope::HospitalAndEd);
    let preds = predict(&model.artifact, &test, UnseenCategory::Lenient).unwrap();
    let mean_p = preds.iter().map(|x| x.probability).sum::<f64>() / preds.len() as f64;
    let rate = test.iter().filter(|r| r.disposition.is_death()).count() as f64 / test.len() as f64;
    let rel = (mean_p - rate).abs() / rate;
    println!("mean predicted {mean_p:.5}, observed {rate:.5}, relative error {rel:.3}");
    assert!(rel <= 0.30, "mean predicted {mean_p:.5} vs observed {rate:.5}");
}

#[test]
fn pretraining_helps_when_ed_deaths_are_scarce() {
    let mut gains = Vec::new();
    for seed in 1..=5u64 {
        let mut p = prepared(100_000, seed);
        // Keep only the first 30 ED deaths among the training rows.
        let mut kept = 0;
        p.train.retain(|r| {
            let ed_death = assign_scope(r) == OutcomeScope::EdOnly && r.disposition.is_death();
            kept += usize::from(ed_death);
            !ed_death || kept <= 30
        });
        let cfg = TrainConfig { epochs_phase1: 5, epochs_phase2: 5, seed, ..Default::default() };
        let transfer = ed_test_auc(&p, &cfg);
        let scratch = ed_test_auc(&p, &TrainConfig { epochs_phase1: 0, ..cfg });
        println!("seed {seed}: transfer {transfer:.4}, from scratch {scratch:.4}");
        gains.push(transfer - scratch);
    }
    let mean = gains.iter().sum::<f64>() / gains.len() as f64;
    println!("mean AUC gain from pretraining {mean:.4}");
    assert!(mean >= 0.0, "pretraining lowered mean ED AUC by {:.4}", -mean);
}
