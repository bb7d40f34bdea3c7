//! The `triage` command line: argument parsing, config merging, exit codes.
//!
//! Every subcommand builds a [`RunConfig`] from defaults, then the
//! `--config` file, then `--set key=value` pairs, then dedicated flags, so
//! flags always win. Exit codes: 0 success, 2 usage error, 3 invalid input
//! data, 4 numeric failure.

mod commands;
mod config;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use commands::{cmd_evaluate, cmd_generate, cmd_predict, cmd_preprocess, cmd_stats, cmd_train};
pub use config::{ConfigError, RunConfig, CONFIG_KEYS};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("invalid data: {0}")]
    Data(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numeric(_) => 4,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Usage(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "triage", version, about = "Trauma mortality prediction from emergency department data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Flat `key = value` config file, applied before any flag.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Any config key; repeatable. Dedicated flags override these.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Master seed; every random stream is derived from it.
    #[arg(long)]
    seed: Option<String>,
    /// children, adults or all.
    #[arg(long)]
    age_group: Option<String>,
    /// Unseen categorical levels: strict (error) or lenient (all-zero).
    #[arg(long)]
    encoding: Option<String>,
    /// Output file or directory, depending on the command.
    #[arg(long)]
    out: Option<String>,
}

#[derive(Debug, Args)]
struct TrainFlags {
    #[arg(long)]
    cohort: Option<String>,
    /// ed_only (transfer learning) or hospital_and_ed (single phase).
    #[arg(long)]
    scope: Option<String>,
    #[arg(long)]
    train_fraction: Option<String>,
    #[arg(long)]
    epochs_phase1: Option<String>,
    #[arg(long)]
    epochs_phase2: Option<String>,
    #[arg(long)]
    batch_size: Option<String>,
    /// Hidden layer widths, comma separated.
    #[arg(long)]
    hidden: Option<String>,
    #[arg(long)]
    coarse_lr: Option<String>,
    #[arg(long)]
    fine_lr: Option<String>,
    #[arg(long)]
    dropout_rate: Option<String>,
    #[arg(long)]
    smote_k: Option<String>,
    #[arg(long)]
    smote_multiplier: Option<String>,
    #[arg(long)]
    threshold: Option<String>,
}

#[derive(Debug, Args)]
struct EvalFlags {
    #[arg(long)]
    artifact: Option<String>,
    /// Held-out cohort CSV.
    #[arg(long)]
    test: Option<String>,
    #[arg(long)]
    threshold: Option<String>,
    /// Bootstrap replicates per interval.
    #[arg(long)]
    n_boot: Option<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic cohort CSV and a sidecar JSON of the spec used.
    Generate {
        #[command(flatten)]
        common: Common,
        /// Number of visits.
        #[arg(long)]
        n: Option<String>,
        /// Generator spec file (`key = value`).
        #[arg(long)]
        spec_file: Option<String>,
    },
    /// Filter and split a cohort without training; prints a summary.
    Preprocess {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        cohort: Option<String>,
        #[arg(long)]
        train_fraction: Option<String>,
    },
    /// Filter, split, fit the schema and train; writes the artifact and logs.
    Train {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        flags: TrainFlags,
    },
    /// Metrics with bootstrap intervals for a model on a test cohort.
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        flags: EvalFlags,
        /// Also report the test set without this injury mechanism.
        #[arg(long)]
        ablate_mechanism: Option<String>,
    },
    /// Same as `evaluate --ablate-mechanism`.
    Ablate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        flags: EvalFlags,
        /// Injury mechanism to remove, e.g. Fall.
        #[arg(long = "mechanism")]
        mechanism: String,
    },
    /// Included-vs-excluded comparison tests.
    Stats {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        included: Option<String>,
        #[arg(long)]
        excluded: Option<String>,
        #[arg(long)]
        alpha: Option<String>,
        /// pooled (Student) or welch.
        #[arg(long)]
        variance: Option<String>,
    },
    /// Score a cohort with a trained model.
    Predict {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        artifact: Option<String>,
        #[arg(long)]
        input: Option<String>,
        #[arg(long)]
        threshold: Option<String>,
    },
}

type Flags = Vec<(&'static str, Option<String>)>;

impl TrainFlags {
    fn pairs(self) -> Flags {
        vec![
            ("cohort", self.cohort),
            ("scope", self.scope),
            ("train_fraction", self.train_fraction),
            ("epochs_phase1", self.epochs_phase1),
            ("epochs_phase2", self.epochs_phase2),
            ("batch_size", self.batch_size),
            ("hidden", self.hidden),
            ("coarse_lr", self.coarse_lr),
            ("fine_lr", self.fine_lr),
            ("dropout_rate", self.dropout_rate),
            ("smote_k", self.smote_k),
            ("smote_multiplier", self.smote_multiplier),
            ("threshold", self.threshold),
        ]
    }
}

impl EvalFlags {
    fn pairs(self) -> Flags {
        vec![
            ("artifact", self.artifact),
            ("test", self.test),
            ("threshold", self.threshold),
            ("n_boot", self.n_boot),
        ]
    }
}

fn build_config(common: Common, mut flags: Flags) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::default();
    if let Some(p) = &common.config {
        cfg.apply_file(p)?;
    }
    for kv in &common.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("--set expects KEY=VALUE, got `{kv}`")))?;
        cfg.set(k.trim(), v)?;
    }
    flags.extend([
        ("seed", common.seed),
        ("age_group", common.age_group),
        ("encoding", common.encoding),
        ("out", common.out),
    ]);
    for (k, v) in flags {
        if let Some(v) = v {
            cfg.set(k, &v)?;
        }
    }
    Ok(cfg)
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Generate { common, n, spec_file } => {
            cmd_generate(&build_config(common, vec![("n", n), ("spec_file", spec_file)])?)
        }
        Command::Preprocess { common, cohort, train_fraction } => {
            cmd_preprocess(&build_config(common, vec![("cohort", cohort), ("train_fraction", train_fraction)])?)
        }
        Command::Train { common, flags } => cmd_train(&build_config(common, flags.pairs())?),
        Command::Evaluate { common, flags, ablate_mechanism } => {
            let mut pairs = flags.pairs();
            pairs.push(("ablate_mechanism", ablate_mechanism));
            cmd_evaluate(&build_config(common, pairs)?)
        }
        Command::Ablate { common, flags, mechanism } => {
            let mut pairs = flags.pairs();
            pairs.push(("ablate_mechanism", Some(mechanism)));
            cmd_evaluate(&build_config(common, pairs)?)
        }
        Command::Stats { common, included, excluded, alpha, variance } => cmd_stats(&build_config(
            common,
            vec![("included", included), ("excluded", excluded), ("alpha", alpha), ("variance", variance)],
        )?),
        Command::Predict { common, artifact, input, threshold } => cmd_predict(&build_config(
            common,
            vec![("artifact", artifact), ("input", input), ("threshold", threshold)],
        )?),
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Errors go to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("triage: {e}");
            e.exit_code()
        }
    }
}
