use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use trauma_triage::domain::{read_cohort, write_cohort, Mechanism};

fn triage(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_triage")).args(args).current_dir(dir).output().expect("run triage")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let o = triage(dir, args);
    assert_eq!(code(&o), 0, "`{}` failed: {}", args.join(" "), String::from_utf8_lossy(&o.stderr));
    o
}

/// Data rows of a CSV written by the tool, skipping `#` comments and the header.
fn data_rows(path: &Path) -> Vec<String> {
    fs::read_to_string(path).unwrap().lines().filter(|l| !l.starts_with('#')).skip(1).map(str::to_string).collect()
}

fn header(path: &Path) -> Vec<String> {
    let text = fs::read_to_string(path).unwrap();
    let line = text.lines().find(|l| !l.starts_with('#')).unwrap();
    line.split(',').map(str::to_string).collect()
}

fn generate(dir: &Path, group: &str, n: &str, seed: &str, out: &str) {
    ok(dir, &["generate", "--age-group", group, "--n", n, "--seed", seed, "--out", out]);
}

const QUICK: [&str; 6] = ["--hidden", "16,8", "--epochs-phase1", "2", "--epochs-phase2", "3"];

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&triage(d, &[])), 2);
    assert_eq!(code(&triage(d, &["--help"])), 0);
    assert_eq!(code(&triage(d, &["generate", "--n", "0", "--out", "x.csv"])), 2);
    assert_eq!(code(&triage(d, &["generate", "--n", "10", "--set", "no_such_key=1", "--out", "x.csv"])), 2);
    assert_eq!(code(&triage(d, &["generate", "--n", "ten", "--out", "x.csv"])), 2);
    assert_eq!(code(&triage(d, &["train", "--cohort", "missing.csv", "--out", "m"])), 3);
    fs::write(d.join("bad.csv"), "not,a,cohort\n1,2,3\n").unwrap();
    assert_eq!(code(&triage(d, &["train", "--cohort", "bad.csv", "--out", "m"])), 3);
    assert_eq!(code(&triage(d, &["train", "--out", "m"])), 2);
}

#[test]
fn config_file_then_set_then_flags() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("run.conf"), "# base\nseed = 5\nn = 300\nage_group = children\n").unwrap();
    ok(d, &["generate", "--config", "run.conf", "--set", "n=400", "--seed", "6", "--out", "c.csv"]);
    let side: serde_json::Value = serde_json::from_slice(&fs::read(d.join("c.spec.json")).unwrap()).unwrap();
    assert_eq!(side["spec"]["seed"], 6);
    assert_eq!(side["spec"]["n_records"], 400);
    assert_eq!(data_rows(&d.join("c.csv")).len(), 400);
    let records = read_cohort(fs::File::open(d.join("c.csv")).unwrap()).unwrap();
    assert!(records.iter().all(|r| r.age <= 17));
}

#[test]
fn generate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    generate(d, "all", "2000", "9", "a.csv");
    generate(d, "all", "2000", "9", "b.csv");
    generate(d, "all", "2000", "10", "c.csv");
    let read = |f: &str| fs::read(d.join(f)).unwrap();
    assert_eq!(read("a.csv"), read("b.csv"));
    assert_eq!(read("a.spec.json"), read("b.spec.json"));
    assert_ne!(read("a.csv"), read("c.csv"));
}

#[test]
fn train_writes_log_with_one_row_per_epoch() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    generate(d, "adults", "15000", "3", "cohort.csv");

    let mut args = vec!["train", "--cohort", "cohort.csv", "--seed", "3", "--out", "ed"];
    args.extend(QUICK);
    ok(d, &args);
    let log = data_rows(&d.join("ed/training_log.csv"));
    assert_eq!(log.len(), 5);
    let phases: Vec<&str> = log.iter().map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(phases.iter().filter(|p| **p == phases[0]).count(), 2);
    assert_ne!(phases[0], phases[4]);
    assert_eq!(header(&d.join("ed/training_log.csv")), ["phase", "epoch", "learning_rate", "loss", "rows"]);
    assert!(header(&d.join("ed/excluded.csv")).contains(&"exclusion_reason".to_string()));
    let excluded = data_rows(&d.join("ed/excluded.csv")).len();
    let included = data_rows(&d.join("ed/included.csv")).len();
    assert_eq!(excluded + included, 15000);

    let mut args = vec!["train", "--cohort", "cohort.csv", "--seed", "3", "--scope", "hospital_and_ed", "--out", "all"];
    args.extend(QUICK);
    ok(d, &args);
    // Single-phase training runs the phase-one schedule only.
    let log = data_rows(&d.join("all/training_log.csv"));
    assert_eq!(log.len(), 2);
    let first = log[0].split(',').next().unwrap();
    assert!(log.iter().all(|l| l.starts_with(first)));
    // The hospital&ED test set holds every scope, so it is larger.
    assert!(data_rows(&d.join("all/test.csv")).len() > data_rows(&d.join("ed/test.csv")).len());
}

#[test]
fn evaluate_and_stats_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    generate(d, "adults", "15000", "4", "cohort.csv");
    let mut args = vec!["train", "--cohort", "cohort.csv", "--seed", "4", "--scope", "hospital_and_ed", "--out", "m"];
    args.extend(QUICK);
    ok(d, &args);

    let o = ok(d, &["evaluate", "--artifact", "m/artifact.json", "--test", "m/test.csv", "--n-boot", "50", "--encoding", "lenient", "--out", "r"]);
    let table = String::from_utf8(o.stdout).unwrap();
    assert!(table.contains("AUC"), "{table}");
    let csv = fs::read_to_string(d.join("r/report.csv")).unwrap();
    assert!(csv.starts_with("# "));
    assert_eq!(data_rows(&d.join("r/report.csv")).len(), 1);
    let report: serde_json::Value = serde_json::from_slice(&fs::read(d.join("r/report.json")).unwrap()).unwrap();
    let auc = report["rows"][0]["auc"]["value"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&auc), "auc {auc}");
    assert!(report["provenance"].is_object());

    assert_eq!(
        code(&triage(d, &["evaluate", "--artifact", "m/artifact.json", "--test", "m/test.csv", "--threshold", "1.5", "--encoding", "lenient"])),
        2
    );
    assert_eq!(
        code(&triage(d, &["ablate", "--artifact", "m/artifact.json", "--test", "m/test.csv", "--mechanism", "Teleport", "--encoding", "lenient"])),
        2
    );

    ok(d, &["stats", "--included", "m/included.csv", "--excluded", "m/excluded.csv", "--out", "s"]);
    let stats: serde_json::Value = serde_json::from_slice(&fs::read(d.join("s/stats.json")).unwrap()).unwrap();
    let results = stats["results"].as_array().unwrap();
    let vars: Vec<&str> = results.iter().map(|r| r["variable"].as_str().unwrap()).collect();
    assert_eq!(vars, ["age", "gcs_total", "iss", "sex", "comorbidity_presence"]);
    assert!(results.iter().all(|r| (0.0..=1.0).contains(&r["p_value"].as_f64().unwrap())));
}

#[test]
fn predict_unseen_category_contract() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    generate(d, "adults", "15000", "5", "full.csv");
    let all = read_cohort(fs::File::open(d.join("full.csv")).unwrap()).unwrap();
    let no_firearm: Vec<_> = all.iter().filter(|r| r.injury_mechanism != Mechanism::Firearm).cloned().collect();
    assert!(no_firearm.len() < all.len());
    write_cohort(fs::File::create(d.join("train.csv")).unwrap(), &no_firearm, None).unwrap();
    let mut args = vec!["train", "--cohort", "train.csv", "--seed", "5", "--scope", "hospital_and_ed", "--out", "m"];
    args.extend(QUICK);
    ok(d, &args);

    let strict = triage(d, &["predict", "--artifact", "m/artifact.json", "--input", "full.csv", "--encoding", "strict", "--out", "p.csv"]);
    assert_eq!(code(&strict), 3, "{}", String::from_utf8_lossy(&strict.stderr));

    ok(d, &["predict", "--artifact", "m/artifact.json", "--input", "full.csv", "--encoding", "lenient", "--out", "p.csv"]);
    let cols = header(&d.join("p.csv"));
    assert_eq!(&cols[cols.len() - 2..], ["probability", "predicted_death"]);
    let scored = data_rows(&d.join("p.csv"));
    let side = data_rows(&d.join("p.excluded.csv"));
    assert_eq!(scored.len() + side.len(), all.len());
    assert!(!side.is_empty());
    for row in &scored {
        let f: Vec<&str> = row.rsplitn(3, ',').collect();
        let p: f64 = f[1].parse().unwrap();
        assert!((0.0..=1.0).contains(&p));
        assert!(f[0] == "0" || f[0] == "1");
    }
    assert!(header(&d.join("p.excluded.csv")).last().unwrap() == "exclusion_reason");
}
