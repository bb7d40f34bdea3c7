//! Cohort CSV: one visit per row, header required, empty cell = missing,
//! booleans as 0/1, enums as snake_case, comorbidities `;`-separated.
//! Lines starting with `#` are comments (provenance headers).

use std::collections::{BTreeSet, HashMap};
use std::io::{Read, Write};
use std::str::FromStr;

use super::enums::{Categorical, Comorbidity, UnknownLevel};
use super::record::{PatientRecord, RecordError, AIS_REGIONS};

pub const COHORT_COLUMNS: [&str; 29] = [
    "age",
    "sex",
    "race",
    "oxygen_saturation",
    "systolic_bp",
    "pulse",
    "respiratory_rate",
    "temperature",
    "gcs_eye",
    "gcs_verbal",
    "gcs_motor",
    "iss",
    "ais_1",
    "ais_2",
    "ais_3",
    "ais_4",
    "ais_5",
    "ais_6",
    "ais_7",
    "ais_8",
    "ais_9",
    "comorbidities",
    "injury_intent",
    "injury_type",
    "injury_mechanism",
    "arrived_by_ambulance",
    "transferred_in",
    "disposition",
    "died_in_ed",
];

#[derive(Debug, thiserror::Error)]
pub enum CohortCsvError {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("missing required column `{0}`")]
    MissingColumn(&'static str),
    #[error("line {line}: column `{column}`: {message}")]
    Cell {
        line: u64,
        column: &'static str,
        message: String,
    },
}

fn fmt_opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn fmt_bool(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

fn record_cells(r: &PatientRecord) -> Vec<String> {
    let mut cells = Vec::with_capacity(COHORT_COLUMNS.len());
    cells.push(r.age.to_string());
    cells.push(r.sex.as_str().into());
    cells.push(r.race.as_str().into());
    cells.push(fmt_opt(r.oxygen_saturation));
    cells.push(fmt_opt(r.systolic_bp));
    cells.push(fmt_opt(r.pulse));
    cells.push(fmt_opt(r.respiratory_rate));
    cells.push(fmt_opt(r.temperature));
    cells.push(fmt_opt(r.gcs_eye));
    cells.push(fmt_opt(r.gcs_verbal));
    cells.push(fmt_opt(r.gcs_motor));
    cells.push(r.iss.to_string());
    cells.extend(r.ais.iter().map(|a| a.to_string()));
    cells.push(
        r.comorbidities
            .iter()
            .map(|c| c.as_str())
            .collect::<Vec<_>>()
            .join(";"),
    );
    cells.push(r.injury_intent.as_str().into());
    cells.push(r.injury_type.as_str().into());
    cells.push(r.injury_mechanism.as_str().into());
    cells.push(r.arrived_by_ambulance.map(fmt_bool).unwrap_or_default().into());
    cells.push(r.transferred_in.map(fmt_bool).unwrap_or_default().into());
    cells.push(r.disposition.as_str().into());
    cells.push(fmt_bool(r.died_in_ed).into());
    cells
}

pub fn write_cohort<W: Write>(
    w: W,
    records: &[PatientRecord],
    provenance: Option<&str>,
) -> Result<(), CohortCsvError> {
    write_cohort_with(w, provenance, &[], records.iter().map(|r| (r, Vec::new())))
}

/// Writes cohort rows with extra trailing columns (scores, exclusion reasons).
pub fn write_cohort_with<'a, W, I>(
    mut w: W,
    provenance: Option<&str>,
    extra_headers: &[&str],
    rows: I,
) -> Result<(), CohortCsvError>
where
    W: Write,
    I: IntoIterator<Item = (&'a PatientRecord, Vec<String>)>,
{
    if let Some(p) = provenance {
        for line in p.lines() {
            writeln!(w, "# {line}")?;
        }
    }
    let mut out = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
    let mut header: Vec<&str> = COHORT_COLUMNS.to_vec();
    header.extend_from_slice(extra_headers);
    out.write_record(&header)?;
    for (r, extra) in rows {
        let mut cells = record_cells(r);
        cells.extend(extra);
        out.write_record(&cells)?;
    }
    out.flush()?;
    Ok(())
}

struct Row<'a> {
    rec: &'a csv::StringRecord,
    idx: &'a HashMap<&'static str, usize>,
    line: u64,
}

impl Row<'_> {
    fn cell(&self, column: &'static str) -> &str {
        self.idx
            .get(column)
            .and_then(|&i| self.rec.get(i))
            .map(str::trim)
            .unwrap_or("")
    }

    fn err(&self, column: &'static str, message: impl ToString) -> CohortCsvError {
        CohortCsvError::Cell {
            line: self.line,
            column,
            message: message.to_string(),
        }
    }

    fn opt<T: FromStr>(&self, column: &'static str) -> Result<Option<T>, CohortCsvError>
    where
        T::Err: std::fmt::Display,
    {
        let s = self.cell(column);
        if s.is_empty() {
            return Ok(None);
        }
        s.parse::<T>().map(Some).map_err(|e| self.err(column, e))
    }

    fn req<T: FromStr>(&self, column: &'static str) -> Result<T, CohortCsvError>
    where
        T::Err: std::fmt::Display,
    {
        self.opt(column)?.ok_or_else(|| self.err(column, "required value is empty"))
    }

    fn level<T: Categorical>(&self, column: &'static str) -> Result<T, CohortCsvError> {
        T::parse_level(self.cell(column)).map_err(|e: UnknownLevel| self.err(column, e))
    }

    fn opt_bool(&self, column: &'static str) -> Result<Option<bool>, CohortCsvError> {
        match self.cell(column) {
            "" => Ok(None),
            "1" => Ok(Some(true)),
            "0" => Ok(Some(false)),
            other => Err(self.err(column, format!("expected 0/1, got `{other}`"))),
        }
    }
}

pub fn read_cohort<R: Read>(r: R) -> Result<Vec<PatientRecord>, CohortCsvError> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .flexible(true)
        .from_reader(r);
    let headers = rdr.headers()?.clone();
    let mut idx = HashMap::new();
    for (i, h) in headers.iter().enumerate() {
        if let Some(&c) = COHORT_COLUMNS.iter().find(|&&c| c == h.trim()) {
            idx.insert(c, i);
        }
    }
    // `died_in_ed` is optional on input; absent means false.
    for c in COHORT_COLUMNS.iter().take(COHORT_COLUMNS.len() - 1) {
        if !idx.contains_key(c) {
            return Err(CohortCsvError::MissingColumn(c));
        }
    }

    let mut out = Vec::new();
    let mut rec = csv::StringRecord::new();
    while rdr.read_record(&mut rec)? {
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let row = Row { rec: &rec, idx: &idx, line };
        const AIS_COLS: [&str; AIS_REGIONS] = [
            "ais_1", "ais_2", "ais_3", "ais_4", "ais_5", "ais_6", "ais_7", "ais_8", "ais_9",
        ];
        let mut ais = [0u8; AIS_REGIONS];
        for (slot, col) in ais.iter_mut().zip(AIS_COLS) {
            *slot = row.req(col)?;
        }
        let mut comorbidities = BTreeSet::new();
        for part in row.cell("comorbidities").split(';').filter(|s| !s.trim().is_empty()) {
            let c = Comorbidity::parse_level(part).map_err(|e| row.err("comorbidities", e))?;
            comorbidities.insert(c);
        }
        let died_in_ed = row.opt_bool("died_in_ed")?.unwrap_or(false);
        let record = PatientRecord {
            age: row.req("age")?,
            sex: row.level("sex")?,
            race: row.level("race")?,
            oxygen_saturation: row.opt("oxygen_saturation")?,
            systolic_bp: row.opt("systolic_bp")?,
            pulse: row.opt("pulse")?,
            respiratory_rate: row.opt("respiratory_rate")?,
            temperature: row.opt("temperature")?,
            gcs_eye: row.opt("gcs_eye")?,
            gcs_verbal: row.opt("gcs_verbal")?,
            gcs_motor: row.opt("gcs_motor")?,
            iss: row.req("iss")?,
            ais,
            comorbidities,
            injury_intent: row.level("injury_intent")?,
            injury_type: row.level("injury_type")?,
            injury_mechanism: row.level("injury_mechanism")?,
            arrived_by_ambulance: row.opt_bool("arrived_by_ambulance")?,
            transferred_in: row.opt_bool("transferred_in")?,
            disposition: row.level("disposition")?,
            died_in_ed,
        };
        record.validate().map_err(|e: RecordError| CohortCsvError::Cell {
            line,
            column: "record",
            message: e.to_string(),
        })?;
        out.push(record);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::fixtures::complete_record;
    use crate::domain::Disposition;

    #[test]
    fn roundtrip_with_missing_cells() {
        let mut a = complete_record();
        a.pulse = None;
        a.transferred_in = None;
        a.comorbidities = [Comorbidity::Diabetes, Comorbidity::Obesity].into_iter().collect();
        let mut b = complete_record();
        b.comorbidities.clear();
        b.disposition = Disposition::Expired;
        b.died_in_ed = true;
        b.temperature = Some(36.6);
        let mut buf = Vec::new();
        write_cohort(&mut buf, &[a.clone(), b.clone()], Some("seed=1\nhash=abc")).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# seed=1\n# hash=abc\nage,sex,race"));
        let back = read_cohort(&buf[..]).unwrap();
        assert_eq!(back, vec![a, b]);
    }

    #[test]
    fn rejects_bad_cells_with_line_numbers() {
        let mut buf = Vec::new();
        write_cohort(&mut buf, &[complete_record()], None).unwrap();
        let text = String::from_utf8(buf).unwrap().replace("mvt_occupant", "jetpack");
        match read_cohort(text.as_bytes()) {
            Err(CohortCsvError::Cell { line, column, .. }) => {
                assert_eq!(line, 2);
                assert_eq!(column, "injury_mechanism");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn extra_columns_are_ignored() {
        let mut buf = Vec::new();
        let r = complete_record();
        write_cohort_with(&mut buf, None, &["exclusion_reason"], [(&r, vec!["x".into()])]).unwrap();
        assert_eq!(read_cohort(&buf[..]).unwrap(), vec![r]);
    }

    #[test]
    fn missing_column_is_reported() {
        let text = "age,sex\n4,male\n";
        assert!(matches!(read_cohort(text.as_bytes()), Err(CohortCsvError::MissingColumn("race"))));
    }
}
