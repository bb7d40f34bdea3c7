//! Run configuration: flat `key = value` files merged with command-line
//! flags, then rendered canonically for provenance hashing.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::domain::{AgeGroup, Categorical, Mechanism, OutcomeScope};
use crate::pipeline::UnseenCategory;
use crate::seed;
use crate::stats::VarianceModel;
use crate::train::TrainConfig;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("config key `{key}`: cannot parse `{value}`: {reason}")]
    BadValue { key: String, value: String, reason: String },
    #[error("{path}:{line}: expected `key = value`")]
    Syntax { path: String, line: usize },
    #[error("cannot read config file {path}: {reason}")]
    Read { path: String, reason: String },
    #[error("missing required setting `{0}`")]
    Missing(&'static str),
}

/// Keys naming input files. The canonical rendering replaces them with the
/// SHA-256 of the file contents.
const INPUT_KEYS: [&str; 7] = ["artifact", "cohort", "excluded", "included", "input", "spec_file", "test"];

/// Every accepted key except the open-ended `spec.<key>` family.
pub const CONFIG_KEYS: [&str; 29] = [
    "ablate_mechanism",
    "age_group",
    "alpha",
    "artifact",
    "batch_size",
    "bn_momentum",
    "coarse_lr",
    "cohort",
    "dropout_rate",
    "encoding",
    "epochs_phase1",
    "epochs_phase2",
    "excluded",
    "fine_lr",
    "hidden",
    "included",
    "input",
    "n",
    "n_boot",
    "out",
    "scope",
    "seed",
    "smote_k",
    "smote_multiplier",
    "spec_file",
    "test",
    "threshold",
    "train_fraction",
    "variance",
];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    /// Cohort to generate or train on; for evaluation, the subset scored.
    pub age_group: Option<AgeGroup>,
    pub scope: OutcomeScope,
    pub encoding: UnseenCategory,
    pub out: Option<PathBuf>,
    pub cohort: Option<PathBuf>,
    pub artifact: Option<PathBuf>,
    pub test: Option<PathBuf>,
    pub input: Option<PathBuf>,
    pub included: Option<PathBuf>,
    pub excluded: Option<PathBuf>,
    pub spec_file: Option<PathBuf>,
    pub n_records: Option<usize>,
    /// `spec.<key>` settings for the cohort generator.
    pub spec_overrides: BTreeMap<String, String>,
    pub train: TrainConfig,
    /// Overrides the artifact's threshold at evaluation.
    pub threshold: Option<f64>,
    pub train_fraction: f64,
    pub n_boot: usize,
    pub ablate_mechanism: Option<Mechanism>,
    pub alpha: f64,
    pub variance: VarianceModel,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            age_group: None,
            scope: OutcomeScope::EdOnly,
            encoding: UnseenCategory::Strict,
            out: None,
            cohort: None,
            artifact: None,
            test: None,
            input: None,
            included: None,
            excluded: None,
            spec_file: None,
            n_records: None,
            spec_overrides: BTreeMap::new(),
            train: TrainConfig::default(),
            threshold: None,
            train_fraction: 0.7,
            n_boot: 1000,
            ablate_mechanism: None,
            alpha: 0.05,
            variance: VarianceModel::Pooled,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e: T::Err| ConfigError::BadValue {
        key: key.into(),
        value: value.into(),
        reason: e.to_string(),
    })
}

fn path(value: &str) -> Option<PathBuf> {
    (!value.is_empty()).then(|| PathBuf::from(value))
}

fn snake<T: serde::de::DeserializeOwned>(key: &str, value: &str) -> Result<T, ConfigError> {
    serde_json::from_value(serde_json::Value::String(value.into())).map_err(|_| ConfigError::BadValue {
        key: key.into(),
        value: value.into(),
        reason: "unknown option".into(),
    })
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(|x| x.to_string()).unwrap_or_default()
}

fn opt_path(v: &Option<PathBuf>) -> String {
    v.as_ref().map(|p| p.display().to_string()).unwrap_or_default()
}

impl RunConfig {
    /// Applies one setting. Later settings win.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let value = value.trim();
        let t = &mut self.train;
        match key {
            "seed" => self.seed = parse(key, value)?,
            "age_group" => {
                self.age_group = match value {
                    "" => None,
                    v => Some(AgeGroup::parse_level(v).map_err(|e| ConfigError::BadValue {
                        key: key.into(),
                        value: v.into(),
                        reason: e.to_string(),
                    })?),
                }
            }
            "scope" => self.scope = snake(key, value)?,
            "encoding" => self.encoding = snake(key, value)?,
            "variance" => self.variance = snake(key, value)?,
            "out" => self.out = path(value),
            "cohort" => self.cohort = path(value),
            "artifact" => self.artifact = path(value),
            "test" => self.test = path(value),
            "input" => self.input = path(value),
            "included" => self.included = path(value),
            "excluded" => self.excluded = path(value),
            "spec_file" => self.spec_file = path(value),
            "n" => self.n_records = Some(parse(key, value)?),
            "coarse_lr" => t.coarse_lr = parse(key, value)?,
            "fine_lr" => t.fine_lr = parse(key, value)?,
            "epochs_phase1" => t.epochs_phase1 = parse(key, value)?,
            "epochs_phase2" => t.epochs_phase2 = parse(key, value)?,
            "batch_size" => t.batch_size = parse(key, value)?,
            "hidden" => {
                t.hidden = value
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| parse(key, s.trim()))
                    .collect::<Result<_, _>>()?
            }
            "dropout_rate" => t.dropout_rate = parse(key, value)?,
            "bn_momentum" => t.bn_momentum = parse(key, value)?,
            "smote_k" => t.smote_k = parse(key, value)?,
            "smote_multiplier" => t.smote_multiplier = parse(key, value)?,
            "threshold" => self.threshold = if value.is_empty() { None } else { Some(parse(key, value)?) },
            "train_fraction" => self.train_fraction = parse(key, value)?,
            "n_boot" => self.n_boot = parse(key, value)?,
            "ablate_mechanism" => {
                self.ablate_mechanism = match value {
                    "" => None,
                    v => Some(Mechanism::parse_level(v).map_err(|e| ConfigError::BadValue {
                        key: key.into(),
                        value: v.into(),
                        reason: e.to_string(),
                    })?),
                }
            }
            "alpha" => self.alpha = parse(key, value)?,
            k if k.starts_with("spec.") && k.len() > 5 => {
                self.spec_overrides.insert(k[5..].to_string(), value.to_string());
            }
            _ => return Err(ConfigError::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    /// Applies a `key = value` file. Blank lines and `#` comments are skipped.
    pub fn apply_text(&mut self, text: &str, origin: &str) -> Result<(), ConfigError> {
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or(ConfigError::Syntax { path: origin.into(), line: i + 1 })?;
            self.set(k.trim(), v)?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, p: &Path) -> Result<(), ConfigError> {
        let text = std::fs::read_to_string(p).map_err(|e| ConfigError::Read {
            path: p.display().to_string(),
            reason: e.to_string(),
        })?;
        self.apply_text(&text, &p.display().to_string())
    }

    /// Training settings with the run seed and threshold applied.
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            seed: self.seed,
            threshold: self.threshold.unwrap_or(self.train.threshold),
            ..self.train.clone()
        }
    }

    /// Every setting as sorted `key=value` pairs, with `out` omitted and
    /// input paths replaced by a hash of their contents, so equal inputs
    /// and settings give equal renderings wherever the files live.
    pub fn canonical_pairs(&self) -> Vec<(String, String)> {
        let t = &self.train;
        let mut m: BTreeMap<String, String> = BTreeMap::new();
        let mut put = |k: &str, v: String| {
            m.insert(k.to_string(), v);
        };
        put("ablate_mechanism", opt(&self.ablate_mechanism.map(|m| m.as_str())));
        put("age_group", opt(&self.age_group.map(|g| g.as_str())));
        put("alpha", self.alpha.to_string());
        put("artifact", opt_path(&self.artifact));
        put("batch_size", t.batch_size.to_string());
        put("bn_momentum", t.bn_momentum.to_string());
        put("coarse_lr", t.coarse_lr.to_string());
        put("cohort", opt_path(&self.cohort));
        put("dropout_rate", t.dropout_rate.to_string());
        put("encoding", snake_name(&self.encoding));
        put("epochs_phase1", t.epochs_phase1.to_string());
        put("epochs_phase2", t.epochs_phase2.to_string());
        put("excluded", opt_path(&self.excluded));
        put("fine_lr", t.fine_lr.to_string());
        put("hidden", join(&t.hidden));
        put("included", opt_path(&self.included));
        put("input", opt_path(&self.input));
        put("n", opt(&self.n_records));
        put("n_boot", self.n_boot.to_string());
        put("scope", self.scope.as_str().to_string());
        put("seed", self.seed.to_string());
        put("smote_k", t.smote_k.to_string());
        put("smote_multiplier", t.smote_multiplier.to_string());
        put("spec_file", opt_path(&self.spec_file));
        put("test", opt_path(&self.test));
        put("threshold", opt(&self.threshold));
        put("train_fraction", self.train_fraction.to_string());
        put("variance", snake_name(&self.variance));
        for (k, v) in &self.spec_overrides {
            put(&format!("spec.{k}"), v.clone());
        }
        for k in INPUT_KEYS {
            let v = m.get_mut(k).expect("every input key rendered");
            if !v.is_empty() {
                *v = match std::fs::read(&*v) {
                    Ok(bytes) => format!("sha256:{}", seed::sha256_hex(&bytes)),
                    Err(_) => format!("unreadable:{v}"),
                };
            }
        }
        m.into_iter().collect()
    }

    pub fn canonical(&self) -> String {
        self.canonical_pairs().into_iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }
}

fn snake_name<T: serde::Serialize>(v: &T) -> String {
    match serde_json::to_value(v) {
        Ok(serde_json::Value::String(s)) => s,
        _ => unreachable!("unit enums serialize as strings"),
    }
}
