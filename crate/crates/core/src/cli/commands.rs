use std::collections::BTreeMap;
use std::fs::File;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use super::{CliError, ConfigError, RunConfig};
use crate::domain::{filter_cohort, read_cohort, write_cohort, write_cohort_with, AgeGroup, Categorical, OutcomeScope, PatientRecord};
use crate::eval::{evaluate, EvalError, EvalOptions};
use crate::net::NetError;
use crate::pipeline::SplitSpec;
use crate::provenance::Provenance;
use crate::stats::{compare_cohorts, render_table, StatsError};
use crate::synth::{apply_override, calibrate_intercept, default_spec, generate, parse_spec_text, SynthError};
use crate::train::{load_artifact, predict, save_artifact, write_atomic, TrainError};
use crate::workflow::{prepare_cohort, train_scope, WorkflowError};

fn data(e: impl std::fmt::Display) -> CliError {
    CliError::Data(e.to_string())
}

fn from_train(e: TrainError) -> CliError {
    match e {
        TrainError::Config(_) => CliError::Usage(e.to_string()),
        TrainError::Net(NetError::NonFinite(_)) => CliError::Numeric(e.to_string()),
        e => data(e),
    }
}

fn from_workflow(e: WorkflowError) -> CliError {
    match e {
        WorkflowError::Train(t) => from_train(t),
        e => data(e),
    }
}

fn from_eval(e: EvalError) -> CliError {
    match e {
        EvalError::Threshold(_) | EvalError::UnknownMechanism(_) | EvalError::NoReplicates => CliError::Usage(e.to_string()),
        EvalError::Undefined(_) | EvalError::TooManyUndefined { .. } => CliError::Numeric(e.to_string()),
        e => data(e),
    }
}

fn from_synth(e: SynthError) -> CliError {
    match e {
        SynthError::Calibration(..) | SynthError::Bracket { .. } => CliError::Numeric(e.to_string()),
        e => CliError::Usage(e.to_string()),
    }
}

fn from_stats(e: StatsError) -> CliError {
    match e {
        StatsError::EmptyCohort(_) | StatsError::SampleTooSmall(..) => data(e),
        StatsError::Alpha(_) => CliError::Usage(e.to_string()),
        e => CliError::Numeric(e.to_string()),
    }
}

fn require<'a>(p: &'a Option<PathBuf>, key: &'static str) -> Result<&'a Path, CliError> {
    p.as_deref().ok_or_else(|| ConfigError::Missing(key).into())
}

fn read_records(path: &Path) -> Result<Vec<PatientRecord>, CliError> {
    let f = File::open(path).map_err(|e| data(format!("{}: {e}", path.display())))?;
    read_cohort(f).map_err(|e| data(format!("{}: {e}", path.display())))
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    write_atomic(path, bytes).map_err(|e| data(format!("cannot write {}: {e}", path.display())))
}

fn out_dir(cfg: &RunConfig) -> Result<&Path, CliError> {
    let dir = require(&cfg.out, "out")?;
    std::fs::create_dir_all(dir).map_err(|e| data(format!("cannot create {}: {e}", dir.display())))?;
    Ok(dir)
}

/// Provenance plus the comment header stamped on CSV and text outputs.
struct Stamp {
    provenance: Provenance,
    config: BTreeMap<String, String>,
    header: String,
}

fn stamp(command: &str, cfg: &RunConfig) -> Stamp {
    let canonical = cfg.canonical();
    let provenance = Provenance::new(command, &canonical, cfg.seed);
    let mut header = provenance.header_lines();
    for line in canonical.lines() {
        header.push_str("\nconfig: ");
        header.push_str(line);
    }
    Stamp { provenance, config: cfg.canonical_pairs().into_iter().collect(), header }
}

impl Stamp {
    fn comment(&self) -> String {
        self.header.lines().map(|l| format!("# {l}\n")).collect()
    }

    fn json(&self, mut body: Value) -> Value {
        if let Value::Object(m) = &mut body {
            m.insert("provenance".into(), serde_json::to_value(&self.provenance).expect("serializable"));
            m.insert("config".into(), serde_json::to_value(&self.config).expect("serializable"));
        }
        body
    }
}

fn pretty(v: &Value) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s.into_bytes()
}

fn cohort_csv(records: &[PatientRecord], header: &str) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    write_cohort(&mut buf, records, Some(header)).map_err(data)?;
    Ok(buf)
}

/// `generate`: cohort CSV at `out` plus `<stem>.spec.json` next to it.
pub fn cmd_generate(cfg: &RunConfig) -> Result<(), CliError> {
    let out = require(&cfg.out, "out")?;
    let mut spec = default_spec(cfg.age_group.unwrap_or(AgeGroup::All));
    if let Some(p) = &cfg.spec_file {
        let text = std::fs::read_to_string(p).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?;
        spec = parse_spec_text(&text, spec).map_err(from_synth)?;
    }
    // `age_group` resets the spec, so it goes first.
    if let Some(v) = cfg.spec_overrides.get("age_group") {
        apply_override(&mut spec, "age_group", v).map_err(from_synth)?;
    }
    for (k, v) in cfg.spec_overrides.iter().filter(|(k, _)| *k != "age_group") {
        apply_override(&mut spec, k, v).map_err(from_synth)?;
    }
    if let Some(n) = cfg.n_records {
        spec.n_records = n;
    }
    spec.seed = cfg.seed;
    if spec.n_records == 0 {
        return Err(CliError::Usage("n must be at least 1".into()));
    }
    spec.validate().map_err(from_synth)?;
    let intercept = match spec.intercept {
        Some(b) => b,
        None => calibrate_intercept(&spec).map_err(from_synth)?,
    };
    let records = generate(&spec).map_err(from_synth)?;
    let st = stamp("generate", cfg);
    write(out, &cohort_csv(&records, &st.header)?)?;
    let sidecar = st.json(json!({ "spec": spec, "calibrated_intercept": intercept }));
    write(&out.with_extension("spec.json"), &pretty(&sidecar))?;
    println!("wrote {} visits to {}", records.len(), out.display());
    Ok(())
}

fn split_spec(cfg: &RunConfig) -> SplitSpec {
    SplitSpec { train_fraction: cfg.train_fraction, seed: cfg.seed, stratified: true }
}

fn count_deaths(records: &[PatientRecord]) -> usize {
    records.iter().filter(|r| r.disposition.is_death()).count()
}

/// `preprocess`: filter and split only. Prints a JSON summary, also
/// written to `out` when given.
pub fn cmd_preprocess(cfg: &RunConfig) -> Result<(), CliError> {
    let records = read_records(require(&cfg.cohort, "cohort")?)?;
    let group = cfg.age_group.unwrap_or(AgeGroup::All);
    let p = prepare_cohort(&records, group, &split_spec(cfg)).map_err(from_workflow)?;
    let mut reasons: BTreeMap<String, usize> = BTreeMap::new();
    for (_, r) in &p.excluded {
        *reasons.entry(r.to_string()).or_default() += 1;
    }
    let mut scopes = serde_json::Map::new();
    for scope in [OutcomeScope::EdOnly, OutcomeScope::HospitalAndEd] {
        let of = |v: &[PatientRecord]| -> Vec<PatientRecord> {
            v.iter().filter(|r| crate::domain::assign_scope(r) == scope).cloned().collect()
        };
        let (tr, te) = (of(&p.train), of(&p.test));
        scopes.insert(
            scope.as_str().into(),
            json!({
                "train_rows": tr.len(), "train_deaths": count_deaths(&tr),
                "test_rows": te.len(), "test_deaths": count_deaths(&te),
            }),
        );
    }
    let st = stamp("preprocess", cfg);
    let summary = st.json(json!({
        "rows": records.len(),
        "excluded": p.excluded.len(),
        "exclusion_reasons": reasons,
        "age_group": group.as_str(),
        "included": p.included.len(),
        "train_rows": p.train.len(),
        "test_rows": p.test.len(),
        "scopes": scopes,
    }));
    let bytes = pretty(&summary);
    if let Some(out) = &cfg.out {
        write(out, &bytes)?;
    }
    print!("{}", String::from_utf8(bytes).expect("utf-8"));
    Ok(())
}

/// `train`: writes `artifact.json`, `training_log.csv`, `included.csv`,
/// `excluded.csv` (with reasons) and `test.csv` (held-out rows of the
/// model's outcome scope) into the `out` directory.
pub fn cmd_train(cfg: &RunConfig) -> Result<(), CliError> {
    let records = read_records(require(&cfg.cohort, "cohort")?)?;
    let dir = out_dir(cfg)?;
    let group = cfg.age_group.unwrap_or(AgeGroup::All);
    let p = prepare_cohort(&records, group, &split_spec(cfg)).map_err(from_workflow)?;
    let trained = train_scope(&p, cfg.scope, &cfg.train_config(), cfg.encoding).map_err(from_workflow)?;
    let st = stamp("train", cfg);

    let mut artifact = trained.artifact;
    artifact.provenance = Some(st.provenance.clone());
    save_artifact(&artifact, &dir.join("artifact.json")).map_err(from_train)?;

    let mut log = st.comment();
    log.push_str("phase,epoch,learning_rate,loss,rows\n");
    for l in &trained.log {
        log.push_str(&format!("{},{},{},{},{}\n", l.phase, l.epoch, l.learning_rate, l.loss, l.rows));
    }
    write(&dir.join("training_log.csv"), log.as_bytes())?;

    let mut buf = Vec::new();
    write_cohort_with(
        &mut buf,
        Some(&st.header),
        &["exclusion_reason"],
        p.excluded.iter().map(|(r, why)| (r, vec![why.to_string()])),
    )
    .map_err(data)?;
    write(&dir.join("excluded.csv"), &buf)?;
    write(&dir.join("included.csv"), &cohort_csv(&p.included, &st.header)?)?;
    write(&dir.join("test.csv"), &cohort_csv(&p.test_for(cfg.scope), &st.header)?)?;
    println!(
        "trained {} model ({}) on {} rows; {} excluded; artifact in {}",
        cfg.scope.as_str(),
        group.as_str(),
        p.train.len(),
        p.excluded.len(),
        dir.display()
    );
    Ok(())
}

/// `evaluate` and `ablate`: prints the text table; with `out`, writes
/// `report.json`, `report.txt` and `report.csv` there.
pub fn cmd_evaluate(cfg: &RunConfig) -> Result<(), CliError> {
    let artifact = load_artifact(require(&cfg.artifact, "artifact")?).map_err(from_train)?;
    let test_path = cfg.test.as_ref().or(cfg.cohort.as_ref()).ok_or(ConfigError::Missing("test"))?;
    let records = read_records(test_path)?;
    let opts = EvalOptions {
        threshold: cfg.threshold,
        ablate: cfg.ablate_mechanism,
        age_group: cfg.age_group,
        n_boot: cfg.n_boot,
        seed: cfg.seed,
        encoding: cfg.encoding,
    };
    let mut report = evaluate(&artifact, &records, &opts).map_err(from_eval)?;
    let st = stamp("evaluate", cfg);
    report.provenance = Some(st.provenance.clone());
    let mut text = report.render_table();
    if let Some(a) = &report.ablation {
        text.push_str(&format!(
            "removed {} of {} test rows with mechanism {} ({:.2}%)\n",
            a.rows_removed,
            a.rows_before,
            a.mechanism.as_str(),
            100.0 * a.fraction_removed
        ));
    }
    if cfg.out.is_some() {
        let dir = out_dir(cfg)?;
        let body = st.json(serde_json::to_value(&report).expect("serializable"));
        write(&dir.join("report.json"), &pretty(&body))?;
        write(&dir.join("report.txt"), format!("{}{text}", st.comment()).as_bytes())?;
        write(&dir.join("report.csv"), format!("{}{}", st.comment(), report.to_csv()).as_bytes())?;
    }
    print!("{text}");
    Ok(())
}

/// `stats`: included-vs-excluded tests. Prints the table; with `out`,
/// writes `stats.json` and `stats.txt` there.
pub fn cmd_stats(cfg: &RunConfig) -> Result<(), CliError> {
    let included = read_records(require(&cfg.included, "included")?)?;
    let excluded = read_records(require(&cfg.excluded, "excluded")?)?;
    let results = compare_cohorts(&included, &excluded, cfg.alpha, cfg.variance).map_err(from_stats)?;
    let st = stamp("stats", cfg);
    let text = render_table(&results, cfg.alpha);
    if cfg.out.is_some() {
        let dir = out_dir(cfg)?;
        write(&dir.join("stats.json"), &pretty(&st.json(json!({ "results": results }))))?;
        write(&dir.join("stats.txt"), format!("{}{text}", st.comment()).as_bytes())?;
    }
    print!("{text}");
    Ok(())
}

/// `predict`: input columns plus `probability` and `predicted_death` for
/// included rows at `out`; excluded rows with reasons at
/// `<stem>.excluded.csv`.
pub fn cmd_predict(cfg: &RunConfig) -> Result<(), CliError> {
    let mut artifact = load_artifact(require(&cfg.artifact, "artifact")?).map_err(from_train)?;
    if let Some(t) = cfg.threshold {
        if !(t > 0.0 && t < 1.0) {
            return Err(from_eval(EvalError::Threshold(t)));
        }
        artifact.config.threshold = t;
    }
    let records = read_records(require(&cfg.input, "input")?)?;
    let out = require(&cfg.out, "out")?;
    let (included, excluded) = filter_cohort(&records);
    let preds = predict(&artifact, &included, cfg.encoding).map_err(from_train)?;
    let st = stamp("predict", cfg);
    let mut buf = Vec::new();
    write_cohort_with(
        &mut buf,
        Some(&st.header),
        &["probability", "predicted_death"],
        included
            .iter()
            .zip(&preds)
            .map(|(r, p)| (r, vec![p.probability.to_string(), u8::from(p.positive).to_string()])),
    )
    .map_err(data)?;
    write(out, &buf)?;
    let mut side = Vec::new();
    write_cohort_with(
        &mut side,
        Some(&st.header),
        &["exclusion_reason"],
        excluded.iter().map(|(r, why)| (r, vec![why.to_string()])),
    )
    .map_err(data)?;
    write(&out.with_extension("excluded.csv"), &side)?;
    println!("scored {} visits; {} excluded", included.len(), excluded.len());
    Ok(())
}
