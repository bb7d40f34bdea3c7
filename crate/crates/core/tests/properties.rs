use proptest::prelude::*;
use trauma_triage::domain::{assign_scope, filter_cohort, partition_by_scope, AgeGroup, OutcomeScope, PatientRecord};
use trauma_triage::eval::{auc, confusion_at_threshold, mcc, npv, ppv, sensitivity, specificity};
use trauma_triage::pipeline::{split_indices, SplitSpec};
use trauma_triage::stats::{t_test_with, VarianceModel};
use trauma_triage::synth::{default_spec, generate};

fn cohort(seed: u64, n: usize, missing: f64) -> Vec<PatientRecord> {
    let mut spec = default_spec(AgeGroup::All);
    spec.n_records = n;
    spec.seed = seed;
    spec.missingness_rate = missing;
    // Skip the intercept search; any fixed value exercises the same code.
    spec.intercept = Some(-5.0);
    generate(&spec).unwrap()
}

fn scored() -> impl Strategy<Value = (Vec<f64>, Vec<bool>)> {
    (2usize..200).prop_flat_map(|n| {
        (prop::collection::vec(0u8..=20, n), prop::collection::vec(any::<bool>(), n)).prop_map(|(p, mut y)| {
            y[0] = true;
            y[1] = false;
            (p.into_iter().map(|v| f64::from(v) / 20.0).collect(), y)
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn t_test_is_symmetric(
        a in prop::collection::vec(-50.0f64..50.0, 2..40),
        b in prop::collection::vec(-50.0f64..50.0, 2..40),
        welch in any::<bool>(),
    ) {
        let model = if welch { VarianceModel::Welch } else { VarianceModel::Pooled };
        let ab = t_test_with(&a, &b, 0.05, model).unwrap();
        let ba = t_test_with(&b, &a, 0.05, model).unwrap();
        prop_assert!((ab.p_value - ba.p_value).abs() <= 1e-12);
        prop_assert!((ab.statistic + ba.statistic).abs() <= 1e-9 * (1.0 + ab.statistic.abs()));
        prop_assert!((0.0..=1.0).contains(&ab.p_value));
    }

    #[test]
    fn split_is_a_stratified_partition(
        labels in prop::collection::vec(any::<bool>(), 1..400),
        seed in any::<u64>(),
        fraction in 0.1f64..0.9,
    ) {
        let spec = SplitSpec { train_fraction: fraction, seed, stratified: true };
        let (train, test) = split_indices(&labels, &spec).unwrap();
        let mut all: Vec<usize> = train.iter().chain(&test).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..labels.len()).collect::<Vec<_>>());
        for class in [true, false] {
            let total = labels.iter().filter(|&&l| l == class).count() as f64;
            let in_train = train.iter().filter(|&&i| labels[i] == class).count() as f64;
            prop_assert!((in_train - fraction * total).abs() <= 1.0);
        }
    }

    #[test]
    fn metrics_stay_in_range((p, y) in scored(), t in 0.01f64..0.99) {
        let a = auc(&p, &y).unwrap();
        prop_assert!((0.0..=1.0).contains(&a));
        let c = confusion_at_threshold(&p, &y, t).unwrap();
        let m = mcc(&c);
        prop_assert!((-1.0..=1.0).contains(&m));
        for v in [sensitivity(&c), specificity(&c), ppv(&c), npv(&c)].into_iter().flatten() {
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn auc_ignores_monotone_transforms((p, y) in scored()) {
        let squashed: Vec<f64> = p.iter().map(|v| (3.0 * v - 1.0).exp() / 10.0).collect();
        prop_assert!((auc(&p, &y).unwrap() - auc(&squashed, &y).unwrap()).abs() <= 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn filtering_is_idempotent(seed in any::<u64>(), missing in 0.0f64..0.5) {
        let records = cohort(seed, 300, missing);
        let (included, excluded) = filter_cohort(&records);
        prop_assert_eq!(included.len() + excluded.len(), records.len());
        let (again, dropped) = filter_cohort(&included);
        prop_assert!(dropped.is_empty());
        prop_assert_eq!(again, included);
    }

    #[test]
    fn scopes_partition_the_included_rows(seed in any::<u64>()) {
        let (included, _) = filter_cohort(&cohort(seed, 300, 0.1));
        let (ed, hospital) = partition_by_scope(&included);
        prop_assert_eq!(ed.len() + hospital.len(), included.len());
        prop_assert!(ed.iter().all(|r| assign_scope(r) == OutcomeScope::EdOnly));
        prop_assert!(hospital.iter().all(|r| assign_scope(r) == OutcomeScope::HospitalAndEd));
    }
}
