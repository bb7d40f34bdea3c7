use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::domain::{
    label_mortality, Categorical, Comorbidity, InjuryIntent, InjuryType, Mechanism, PatientRecord, Race, Sex,
    Vital, AIS_REGIONS,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NumericColumn {
    pub name: String,
    pub mean: f64,
    /// Population SD of the fitting rows; 1 when that SD was 0.
    pub sd: f64,
}

/// One-hot block for a categorical variable; one column per level seen at
/// fit time, in canonical level order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OneHotGroup {
    pub variable: String,
    pub levels: Vec<String>,
}

/// Column layout: numeric columns, then one-hot groups, then 0/1 flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub numeric: Vec<NumericColumn>,
    pub one_hot: Vec<OneHotGroup>,
    pub flags: Vec<String>,
}

/// How to treat a categorical level absent at fit time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnseenCategory {
    #[default]
    Strict,
    /// Encode as an all-zero group.
    Lenient,
}

/// Dense encoded rows plus mortality labels.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub schema: FeatureSchema,
    pub data: Array2<f64>,
    pub labels: Vec<bool>,
}

impl FeatureMatrix {
    pub fn rows(&self) -> usize {
        self.data.nrows()
    }

    pub fn positives(&self) -> usize {
        self.labels.iter().filter(|&&y| y).count()
    }

    /// Rows at `idx`, in that order.
    pub fn select(&self, idx: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            schema: self.schema.clone(),
            data: self.data.select(ndarray::Axis(0), idx),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    /// Appends `rows`, all labeled positive.
    pub fn append_positive(&mut self, rows: &Array2<f64>) -> Result<(), PipelineError> {
        if rows.ncols() != self.data.ncols() {
            return Err(PipelineError::Width { expected: self.data.ncols(), found: rows.ncols() });
        }
        let mut data = Array2::zeros((self.rows() + rows.nrows(), self.data.ncols()));
        data.slice_mut(ndarray::s![..self.rows(), ..]).assign(&self.data);
        data.slice_mut(ndarray::s![self.rows().., ..]).assign(rows);
        self.data = data;
        self.labels.extend(std::iter::repeat_n(true, rows.nrows()));
        Ok(())
    }
}

const NUMERIC_BASE: [&str; 10] = [
    "age",
    "oxygen_saturation",
    "systolic_bp",
    "pulse",
    "respiratory_rate",
    "temperature",
    "gcs_eye",
    "gcs_verbal",
    "gcs_motor",
    "iss",
];

fn numeric_names() -> Vec<String> {
    let mut v: Vec<String> = NUMERIC_BASE.iter().map(|s| s.to_string()).collect();
    v.extend((1..=AIS_REGIONS).map(|i| format!("ais_{i}")));
    v
}

fn flag_names() -> Vec<String> {
    let mut v: Vec<String> = Comorbidity::ALL.iter().map(|c| format!("comorbidity_{}", c.as_str())).collect();
    v.push("arrived_by_ambulance".into());
    v.push("transferred_in".into());
    v
}

fn missing(row: usize, field: &str) -> PipelineError {
    PipelineError::MissingValue { row, field: field.to_string() }
}

fn numeric_values(r: &PatientRecord, row: usize) -> Result<Vec<f64>, PipelineError> {
    let mut v = vec![r.age as f64];
    for vital in Vital::ALL {
        v.push(vital.get(r).ok_or_else(|| missing(row, vital.name()))?);
    }
    v.push(r.gcs_eye.ok_or_else(|| missing(row, "gcs_eye"))? as f64);
    v.push(r.gcs_verbal.ok_or_else(|| missing(row, "gcs_verbal"))? as f64);
    v.push(r.gcs_motor.ok_or_else(|| missing(row, "gcs_motor"))? as f64);
    v.push(r.iss as f64);
    v.extend(r.ais.iter().map(|&a| a as f64));
    Ok(v)
}

fn flag_values(r: &PatientRecord, row: usize) -> Result<Vec<f64>, PipelineError> {
    let b = |x: bool| if x { 1.0 } else { 0.0 };
    let mut v: Vec<f64> = Comorbidity::ALL.iter().map(|c| b(r.comorbidities.contains(c))).collect();
    v.push(b(r.arrived_by_ambulance.ok_or_else(|| missing(row, "arrived_by_ambulance"))?));
    v.push(b(r.transferred_in.ok_or_else(|| missing(row, "transferred_in"))?));
    Ok(v)
}

fn categorical_values(r: &PatientRecord) -> [(&'static str, &'static str); 5] {
    [
        (Sex::VARIABLE, r.sex.as_str()),
        (Race::VARIABLE, r.race.as_str()),
        (InjuryIntent::VARIABLE, r.injury_intent.as_str()),
        (InjuryType::VARIABLE, r.injury_type.as_str()),
        (Mechanism::VARIABLE, r.injury_mechanism.as_str()),
    ]
}

fn canonical_levels(variable: &str) -> Vec<&'static str> {
    fn all<T: Categorical>() -> Vec<&'static str> {
        T::ALL.iter().map(|l| l.as_str()).collect()
    }
    match variable {
        Sex::VARIABLE => all::<Sex>(),
        Race::VARIABLE => all::<Race>(),
        InjuryIntent::VARIABLE => all::<InjuryIntent>(),
        InjuryType::VARIABLE => all::<InjuryType>(),
        Mechanism::VARIABLE => all::<Mechanism>(),
        _ => unreachable!("fixed variable list"),
    }
}

/// Fits column statistics and category lists on `records` (the training
/// rows only).
pub fn fit_schema(records: &[PatientRecord]) -> Result<FeatureSchema, PipelineError> {
    if records.is_empty() {
        return Err(PipelineError::Empty);
    }
    let names = numeric_names();
    let rows = records
        .iter()
        .enumerate()
        .map(|(i, r)| numeric_values(r, i))
        .collect::<Result<Vec<_>, _>>()?;
    let n = rows.len() as f64;
    let numeric = names
        .into_iter()
        .enumerate()
        .map(|(j, name)| {
            let mean = rows.iter().map(|r| r[j]).sum::<f64>() / n;
            let var = rows.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / n;
            let sd = var.sqrt();
            NumericColumn { name, mean, sd: if sd > 0.0 { sd } else { 1.0 } }
        })
        .collect();
    let first = categorical_values(&records[0]);
    let one_hot = first
        .iter()
        .enumerate()
        .map(|(j, (variable, _))| {
            let seen: std::collections::BTreeSet<&str> = records.iter().map(|r| categorical_values(r)[j].1).collect();
            OneHotGroup {
                variable: variable.to_string(),
                levels: canonical_levels(variable)
                    .into_iter()
                    .filter(|l| seen.contains(l))
                    .map(String::from)
                    .collect(),
            }
        })
        .collect();
    for (i, r) in records.iter().enumerate() {
        flag_values(r, i)?;
    }
    Ok(FeatureSchema { numeric, one_hot, flags: flag_names() })
}

impl FeatureSchema {
    pub fn width(&self) -> usize {
        self.numeric.len() + self.one_hot.iter().map(|g| g.levels.len()).sum::<usize>() + self.flags.len()
    }

    /// Column names in matrix order; one-hot columns are `variable=level`.
    pub fn column_names(&self) -> Vec<String> {
        let mut v: Vec<String> = self.numeric.iter().map(|c| c.name.clone()).collect();
        for g in &self.one_hot {
            v.extend(g.levels.iter().map(|l| format!("{}={}", g.variable, l)));
        }
        v.extend(self.flags.iter().cloned());
        v
    }

    /// Checks that the schema describes the fixed record layout.
    pub fn check_layout(&self) -> Result<(), PipelineError> {
        let names: Vec<String> = self.numeric.iter().map(|c| c.name.clone()).collect();
        let vars: Vec<&str> = self.one_hot.iter().map(|g| g.variable.as_str()).collect();
        let ok = names == numeric_names()
            && vars == [Sex::VARIABLE, Race::VARIABLE, InjuryIntent::VARIABLE, InjuryType::VARIABLE, Mechanism::VARIABLE]
            && self.flags == flag_names()
            && self.numeric.iter().all(|c| c.mean.is_finite() && c.sd.is_finite() && c.sd > 0.0)
            && self.one_hot.iter().all(|g| {
                let canon = canonical_levels(&g.variable);
                g.levels.iter().all(|l| canon.contains(&l.as_str()))
            });
        if ok {
            Ok(())
        } else {
            Err(PipelineError::SchemaLayout)
        }
    }

    fn encode_row(&self, r: &PatientRecord, row: usize, mode: UnseenCategory, out: &mut [f64]) -> Result<(), PipelineError> {
        let mut k = 0;
        for (c, x) in self.numeric.iter().zip(numeric_values(r, row)?) {
            out[k] = (x - c.mean) / c.sd;
            k += 1;
        }
        for (g, (_, level)) in self.one_hot.iter().zip(categorical_values(r)) {
            match g.levels.iter().position(|l| l == level) {
                Some(p) => out[k + p] = 1.0,
                None if mode == UnseenCategory::Lenient => {}
                None => {
                    return Err(PipelineError::UnseenCategory {
                        row,
                        variable: g.variable.clone(),
                        level: level.to_string(),
                    })
                }
            }
            k += g.levels.len();
        }
        for x in flag_values(r, row)? {
            out[k] = x;
            k += 1;
        }
        Ok(())
    }

    /// Decodes the one-hot blocks of an encoded row: the level whose column
    /// is largest, or `None` for an all-zero block.
    pub fn decode_categories(&self, row: ArrayView1<f64>) -> Vec<(String, Option<String>)> {
        let mut k = self.numeric.len();
        let mut out = Vec::new();
        for g in &self.one_hot {
            let block = row.slice(ndarray::s![k..k + g.levels.len()]);
            let best = block
                .iter()
                .enumerate()
                .filter(|(_, &x)| x > 0.0)
                .max_by(|a, b| a.1.total_cmp(b.1))
                .map(|(i, _)| g.levels[i].clone());
            out.push((g.variable.clone(), best));
            k += g.levels.len();
        }
        out
    }
}

/// Encodes features only; labels are not required.
pub fn encode_features(
    records: &[PatientRecord],
    schema: &FeatureSchema,
    mode: UnseenCategory,
) -> Result<Array2<f64>, PipelineError> {
    let mut data = Array2::zeros((records.len(), schema.width()));
    for (i, (r, mut row)) in records.iter().zip(data.rows_mut()).enumerate() {
        let out = row.as_slice_mut().expect("standard layout rows are contiguous");
        schema.encode_row(r, i, mode, out)?;
    }
    Ok(data)
}

/// Encodes records and labels them by disposition.
pub fn encode(records: &[PatientRecord], schema: &FeatureSchema, mode: UnseenCategory) -> Result<FeatureMatrix, PipelineError> {
    let labels = records
        .iter()
        .enumerate()
        .map(|(row, r)| label_mortality(r.disposition).map_err(|source| PipelineError::Label { row, source }))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(FeatureMatrix {
        schema: schema.clone(),
        data: encode_features(records, schema, mode)?,
        labels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{fixtures::complete_record, Disposition};

    fn with_age(ages: &[u32]) -> Vec<PatientRecord> {
        ages.iter()
            .map(|&a| PatientRecord { age: a, ..complete_record() })
            .collect()
    }

    #[test]
    fn population_sd_and_zero_variance_guard() {
        let s = fit_schema(&with_age(&[1, 2, 3])).unwrap();
        assert_eq!(s.numeric[0].mean, 2.0);
        assert!((s.numeric[0].sd - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
        // Every record shares the same pulse.
        let pulse = s.numeric.iter().find(|c| c.name == "pulse").unwrap();
        assert_eq!(pulse.sd, 1.0);
        let m = encode(&with_age(&[1, 2, 3]), &s, UnseenCategory::Strict).unwrap();
        let col: Vec<f64> = m.data.column(0).to_vec();
        for (x, e) in col.iter().zip([-1.2247, 0.0, 1.2247]) {
            assert!((x - e).abs() < 1e-4);
        }
    }

    #[test]
    fn one_column_per_observed_level() {
        let mut recs = with_age(&[30, 40, 50, 60]);
        let races = [Race::White, Race::Black, Race::Other, Race::Asian];
        for (r, &race) in recs.iter_mut().zip(&races) {
            r.race = race;
        }
        let s = fit_schema(&recs).unwrap();
        let g = s.one_hot.iter().find(|g| g.variable == "race").unwrap();
        assert_eq!(g.levels, ["white", "black", "other", "asian"]);
        assert_eq!(s.width(), s.column_names().len());
    }

    #[test]
    fn one_hot_and_unseen_levels() {
        let mut recs = with_age(&[30, 40, 50]);
        recs[1].race = Race::Black;
        recs[2].race = Race::Other;
        let s = fit_schema(&recs).unwrap();
        let m = encode_features(&recs[..1], &s, UnseenCategory::Strict).unwrap();
        let start = s.numeric.len() + s.one_hot[0].levels.len();
        assert_eq!(m.row(0).slice(ndarray::s![start..start + 3]).to_vec(), [1.0, 0.0, 0.0]);

        let mut odd = recs[0].clone();
        odd.race = Race::PacificIslander;
        let err = encode_features(std::slice::from_ref(&odd), &s, UnseenCategory::Strict).unwrap_err();
        assert!(matches!(err, PipelineError::UnseenCategory { .. }));
        let m = encode_features(&[odd], &s, UnseenCategory::Lenient).unwrap();
        assert!(m.row(0).slice(ndarray::s![start..start + 3]).iter().all(|&x| x == 0.0));
        assert_eq!(s.decode_categories(m.row(0))[1], ("race".into(), None));
    }

    #[test]
    fn labels_follow_disposition() {
        let mut recs = with_age(&[30, 40]);
        recs[1].disposition = Disposition::Hospice;
        let s = fit_schema(&recs).unwrap();
        assert_eq!(encode(&recs, &s, UnseenCategory::Strict).unwrap().labels, [false, true]);
        recs[0].disposition = Disposition::NotKnown;
        assert!(matches!(encode(&recs, &s, UnseenCategory::Strict), Err(PipelineError::Label { row: 0, .. })));
    }

    #[test]
    fn missing_values_are_rejected() {
        let mut r = complete_record();
        r.pulse = None;
        assert!(matches!(fit_schema(&[r]), Err(PipelineError::MissingValue { .. })));
        assert_eq!(fit_schema(&[]), Err(PipelineError::Empty));
    }

    #[test]
    fn layout_check_catches_tampering() {
        let mut s = fit_schema(&with_age(&[1, 2])).unwrap();
        s.check_layout().unwrap();
        s.flags.pop();
        assert_eq!(s.check_layout(), Err(PipelineError::SchemaLayout));
    }
}
