//! Included-vs-excluded cohort comparison: pooled two-sample Student's t and
//! Pearson chi-square, with p-values from the in-repo special functions.

pub mod special;

use serde::{Deserialize, Serialize};

use crate::domain::{PatientRecord, Sex};

/// Below this, p-values print as `<1e-300`; exact zero is never printed.
pub const P_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StatsError {
    #[error("sample `{0}` needs at least 2 observations, has {1}")]
    SampleTooSmall(&'static str, usize),
    #[error("contingency table needs at least 2 rows and 2 columns")]
    TableShape,
    #[error("contingency table rows have unequal lengths")]
    RaggedTable,
    #[error("expected count is zero in cell ({0}, {1})")]
    ZeroExpected(usize, usize),
    #[error("cohort `{0}` is empty")]
    EmptyCohort(&'static str),
    #[error("alpha must lie in (0, 1), got {0}")]
    Alpha(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub degrees_of_freedom: f64,
    pub p_value: f64,
    pub significant: bool,
}

impl TestResult {
    fn new(statistic: f64, degrees_of_freedom: f64, p_value: f64, alpha: f64) -> Self {
        let p_value = p_value.clamp(0.0, 1.0);
        Self {
            statistic,
            degrees_of_freedom,
            p_value,
            significant: p_value < alpha,
        }
    }

    /// p-value formatted for reports.
    pub fn p_display(&self) -> String {
        format_p(self.p_value)
    }
}

pub fn format_p(p: f64) -> String {
    if p < P_FLOOR {
        "<1e-300".to_string()
    } else if p < 1e-4 {
        format!("{p:.3e}")
    } else {
        format!("{p:.4}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarianceModel {
    /// Classic Student's t with pooled variance.
    #[default]
    Pooled,
    /// Welch's unequal-variance t with Satterthwaite df.
    Welch,
}

fn check_alpha(alpha: f64) -> Result<(), StatsError> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(StatsError::Alpha(alpha))
    }
}

fn mean_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let ss = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>();
    (mean, ss / (n - 1.0))
}

/// Two-sided two-sample t-test with the classic pooled variance.
pub fn t_test(a: &[f64], b: &[f64], alpha: f64) -> Result<TestResult, StatsError> {
    t_test_with(a, b, alpha, VarianceModel::Pooled)
}

/// Two-sided two-sample t-test. When both samples have zero variance the
/// statistic is 0 with p = 1 for equal means, and ±∞ with p = 0 otherwise.
pub fn t_test_with(
    a: &[f64],
    b: &[f64],
    alpha: f64,
    model: VarianceModel,
) -> Result<TestResult, StatsError> {
    check_alpha(alpha)?;
    if a.len() < 2 {
        return Err(StatsError::SampleTooSmall("a", a.len()));
    }
    if b.len() < 2 {
        return Err(StatsError::SampleTooSmall("b", b.len()));
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (ma, va) = mean_var(a);
    let (mb, vb) = mean_var(b);
    let diff = ma - mb;
    let (se, df) = match model {
        VarianceModel::Pooled => {
            let df = na + nb - 2.0;
            let pooled = ((na - 1.0) * va + (nb - 1.0) * vb) / df;
            ((pooled * (1.0 / na + 1.0 / nb)).sqrt(), df)
        }
        VarianceModel::Welch => {
            let (qa, qb) = (va / na, vb / nb);
            let df = if qa + qb > 0.0 {
                (qa + qb).powi(2) / (qa * qa / (na - 1.0) + qb * qb / (nb - 1.0))
            } else {
                na + nb - 2.0
            };
            ((qa + qb).sqrt(), df)
        }
    };
    if se == 0.0 {
        return Ok(if diff == 0.0 {
            TestResult::new(0.0, df, 1.0, alpha)
        } else {
            TestResult::new(diff.signum() * f64::INFINITY, df, 0.0, alpha)
        });
    }
    let t = diff / se;
    Ok(TestResult::new(t, df, special::t_two_sided_p(t, df), alpha))
}

/// Pearson chi-square test of independence on an r×k table of counts.
pub fn chi_square_test(table: &[Vec<f64>], alpha: f64) -> Result<TestResult, StatsError> {
    check_alpha(alpha)?;
    let rows = table.len();
    if rows < 2 {
        return Err(StatsError::TableShape);
    }
    let cols = table[0].len();
    if cols < 2 {
        return Err(StatsError::TableShape);
    }
    if table.iter().any(|r| r.len() != cols) {
        return Err(StatsError::RaggedTable);
    }
    let row_sums: Vec<f64> = table.iter().map(|r| r.iter().sum()).collect();
    let col_sums: Vec<f64> = (0..cols).map(|j| table.iter().map(|r| r[j]).sum()).collect();
    let total: f64 = row_sums.iter().sum();
    let mut stat = 0.0;
    for i in 0..rows {
        for j in 0..cols {
            let expected = row_sums[i] * col_sums[j] / total;
            if !(expected > 0.0) {
                return Err(StatsError::ZeroExpected(i, j));
            }
            let d = table[i][j] - expected;
            stat += d * d / expected;
        }
    }
    let df = ((rows - 1) * (cols - 1)) as f64;
    Ok(TestResult::new(stat, df, special::chi_square_sf(stat, df), alpha))
}

/// One labeled comparison in the included-vs-excluded analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledTest {
    pub variable: String,
    pub test: String,
    #[serde(flatten)]
    pub result: TestResult,
    pub p_display: String,
}

/// Variables compared between included and excluded visits, in report order.
pub const COMPARED_VARIABLES: [&str; 5] = ["age", "gcs_total", "iss", "sex", "comorbidity_presence"];

/// t-tests on age, GCS total and ISS; chi-square on sex and comorbidity
/// presence. Visits with an incomplete GCS are skipped for the GCS test.
pub fn compare_cohorts(
    included: &[PatientRecord],
    excluded: &[PatientRecord],
    alpha: f64,
    model: VarianceModel,
) -> Result<Vec<LabeledTest>, StatsError> {
    if included.is_empty() {
        return Err(StatsError::EmptyCohort("included"));
    }
    if excluded.is_empty() {
        return Err(StatsError::EmptyCohort("excluded"));
    }
    let column = |rs: &[PatientRecord], f: &dyn Fn(&PatientRecord) -> Option<f64>| -> Vec<f64> {
        rs.iter().filter_map(f).collect()
    };
    let age = |r: &PatientRecord| Some(r.age as f64);
    let gcs = |r: &PatientRecord| r.gcs_total().map(f64::from);
    let iss = |r: &PatientRecord| Some(r.iss as f64);

    let mut out = Vec::with_capacity(5);
    let mut push = |variable: &str, test: &str, result: TestResult| {
        out.push(LabeledTest {
            variable: variable.to_string(),
            test: test.to_string(),
            p_display: result.p_display(),
            result,
        })
    };
    for (name, f) in [
        ("age", &age as &dyn Fn(&PatientRecord) -> Option<f64>),
        ("gcs_total", &gcs),
        ("iss", &iss),
    ] {
        let r = t_test_with(&column(included, f), &column(excluded, f), alpha, model)?;
        push(name, "student_t", r);
    }
    let two_by_two = |pred: &dyn Fn(&PatientRecord) -> bool| -> Vec<Vec<f64>> {
        [included, excluded]
            .iter()
            .map(|rs| {
                let yes = rs.iter().filter(|r| pred(r)).count() as f64;
                vec![yes, rs.len() as f64 - yes]
            })
            .collect()
    };
    let sex = chi_square_test(&two_by_two(&|r| r.sex == Sex::Female), alpha)?;
    push("sex", "chi_square", sex);
    let como = chi_square_test(&two_by_two(&|r| r.has_comorbidity()), alpha)?;
    push("comorbidity_presence", "chi_square", como);
    Ok(out)
}

/// Plain-text table of a comparison.
pub fn render_table(results: &[LabeledTest], alpha: f64) -> String {
    let mut s = format!(
        "{:<22} {:<11} {:>12} {:>10} {:>12}  significant (alpha = {alpha})\n",
        "variable", "test", "statistic", "df", "p-value"
    );
    for r in results {
        s.push_str(&format!(
            "{:<22} {:<11} {:>12.4} {:>10.1} {:>12}  {}\n",
            r.variable,
            r.test,
            r.result.statistic,
            r.result.degrees_of_freedom,
            r.p_display,
            if r.result.significant { "yes" } else { "no" }
        ));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::fixtures::complete_record;
    use approx::assert_abs_diff_eq;

    #[test]
    fn identical_samples() {
        let r = t_test(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0], 0.05).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
        assert!(!r.significant);
    }

    #[test]
    fn pooled_t_hand_value() {
        // means 2.5 and 4.5, both variances 5/3, pooled SE = sqrt(5/3 * 1/2)
        let r = t_test(&[1.0, 2.0, 3.0, 4.0], &[3.0, 4.0, 5.0, 6.0], 0.05).unwrap();
        let expected = -2.0 / (5.0f64 / 6.0).sqrt();
        assert_abs_diff_eq!(r.statistic, expected, epsilon = 1e-12);
        assert_abs_diff_eq!(r.statistic, -2.191, epsilon = 5e-4);
        assert_eq!(r.degrees_of_freedom, 6.0);
        assert!((r.p_value - 0.071).abs() < 5e-4);
    }

    #[test]
    fn swapping_samples_flips_sign_keeps_p() {
        let a = [1.0, 4.0, 2.5, 7.0, 3.3];
        let b = [2.0, 9.0, 8.1, 6.6];
        let ab = t_test(&a, &b, 0.05).unwrap();
        let ba = t_test(&b, &a, 0.05).unwrap();
        assert_eq!(ab.statistic, -ba.statistic);
        assert_eq!(ab.p_value, ba.p_value);
    }

    #[test]
    fn zero_variance_conventions() {
        let same = t_test(&[2.0, 2.0], &[2.0, 2.0, 2.0], 0.05).unwrap();
        assert_eq!(same.p_value, 1.0);
        let diff = t_test(&[2.0, 2.0], &[3.0, 3.0], 0.05).unwrap();
        assert_eq!(diff.p_value, 0.0);
        assert!(diff.statistic.is_infinite() && diff.statistic < 0.0);
        assert_eq!(diff.p_display(), "<1e-300");
    }

    #[test]
    fn undersized_sample_errors() {
        assert_eq!(t_test(&[1.0], &[1.0, 2.0], 0.05), Err(StatsError::SampleTooSmall("a", 1)));
    }

    #[test]
    fn welch_matches_pooled_for_equal_sizes_and_variances() {
        let a = [1.0, 2.0, 3.0, 4.0];
        let b = [3.0, 4.0, 5.0, 6.0];
        let p = t_test_with(&a, &b, 0.05, VarianceModel::Pooled).unwrap();
        let w = t_test_with(&a, &b, 0.05, VarianceModel::Welch).unwrap();
        assert_abs_diff_eq!(p.statistic, w.statistic, epsilon = 1e-12);
        assert_abs_diff_eq!(w.degrees_of_freedom, 6.0, epsilon = 1e-12);
    }

    #[test]
    fn chi_square_hand_values() {
        let r = chi_square_test(&[vec![10.0, 20.0], vec![20.0, 10.0]], 0.05).unwrap();
        assert_abs_diff_eq!(r.statistic, 20.0 / 3.0, epsilon = 1e-12);
        assert_eq!(r.degrees_of_freedom, 1.0);
        assert!((r.p_value - 0.0098).abs() < 5e-5);
        assert!(r.significant);

        let r = chi_square_test(&[vec![10.0, 20.0], vec![20.0, 40.0]], 0.05).unwrap();
        assert_abs_diff_eq!(r.statistic, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.p_value, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn chi_square_rejects_zero_expected() {
        let e = chi_square_test(&[vec![0.0, 5.0], vec![0.0, 3.0]], 0.05).unwrap_err();
        assert_eq!(e, StatsError::ZeroExpected(0, 0));
    }

    #[test]
    fn cohort_self_comparison_is_not_significant() {
        let mut rs = Vec::new();
        for i in 0..20u32 {
            let mut r = complete_record();
            r.age = 20 + i;
            r.iss = (i % 7) as u8;
            r.sex = if i % 3 == 0 { Sex::Female } else { Sex::Male };
            if i % 4 == 0 {
                r.comorbidities.clear();
            }
            r.gcs_eye = Some(1 + (i % 4) as u8);
            rs.push(r);
        }
        let out = compare_cohorts(&rs, &rs, 0.05, VarianceModel::Pooled).unwrap();
        let names: Vec<_> = out.iter().map(|t| t.variable.as_str()).collect();
        assert_eq!(names, COMPARED_VARIABLES);
        for t in &out {
            assert_abs_diff_eq!(t.result.p_value, 1.0, epsilon = 1e-12);
            assert!(!t.result.significant);
        }
    }
}
