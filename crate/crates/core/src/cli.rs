//! `treemix` command-line front end.
//!
//! Exit codes: 0 on success, 1 on validation errors (bad flags, bad
//! intervals, malformed input), 2 on I/O errors.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::augment::{build_dataset, AugmentationConfig, LambdaInterval, Mixer, PairingMode, SubtreeConstraint};
use crate::dataset::{
    corpus_stats, corpus_to_string, merge_replicated, read_corpus, CorpusRecord, DatasetError, MergedTrainingSet, Schema,
};
use crate::scan::{augment_scan, make_split, scan_augmentation_config, scan_universe, write_scan_lines};
use crate::trainer::{
    default_gamma, preset, train_encoded, Checkpoint, EncodedSet, Sample, TrainConfig, DEFAULT_HASH_DIM,
};

pub const SEED_ENV: &str = "TREEMIX_SEED";

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Io(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Validation(m) | CliError::Io(m) => m,
        }
    }
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        if e.is_io() {
            CliError::Io(e.to_string())
        } else {
            CliError::Validation(e.to_string())
        }
    }
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

#[derive(Debug, Parser)]
#[command(name = "treemix", version, about = "Constituency-subtree swapping data augmentation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate augmented records from a parsed, labeled corpus.
    Augment(AugmentArgs),
    /// Write a SCAN split and its augmented training set.
    ScanGen(ScanGenArgs),
    /// Train the linear classifier on originals plus augmented records.
    Train(TrainArgs),
    /// Token, subtree and eligible-subtree statistics of a corpus.
    Stats(StatsArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum SchemaArg {
    Single,
    Pair,
}

impl From<SchemaArg> for Schema {
    fn from(s: SchemaArg) -> Self {
        match s {
            SchemaArg::Single => Schema::Single,
            SchemaArg::Pair => Schema::Pair,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PairingArg {
    Cross,
    Same,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ConstraintArg {
    None,
    Label,
    Length,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MixerArg {
    Treemix,
    Randmix,
}

#[derive(Debug, Args)]
struct AugmentArgs {
    /// Input corpus (one JSON record per line).
    #[arg(long)]
    input: PathBuf,
    /// Output corpus of augmented records.
    #[arg(long)]
    output: PathBuf,
    #[arg(long, value_enum, default_value = "single")]
    schema: SchemaArg,
    #[arg(long, default_value_t = 0.1)]
    lambda_l: f64,
    #[arg(long, default_value_t = 0.3)]
    lambda_u: f64,
    /// Output size as a multiple of the input size.
    #[arg(long, default_value_t = 2)]
    beta: i64,
    #[arg(long, value_enum, default_value = "cross")]
    pairing: PairingArg,
    #[arg(long, value_enum, default_value = "none")]
    constraint: ConstraintArg,
    #[arg(long, default_value_t = 10)]
    max_retries: usize,
    /// Defaults to $TREEMIX_SEED, then 0.
    #[arg(long, env = SEED_ENV, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "treemix")]
    mixer: MixerArg,
    /// Run manifest path; defaults to `<output>.manifest.json`.
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ScanGenArgs {
    /// addprim_jump, addprim_turn_left or around_right.
    #[arg(long)]
    split: String,
    #[arg(long, default_value_t = 5)]
    beta: i64,
    #[arg(long, env = SEED_ENV, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long)]
    output: PathBuf,
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// Original training records.
    #[arg(long)]
    input: PathBuf,
    /// Augmented records; originals are replicated to match their count.
    #[arg(long)]
    augmented: Option<PathBuf>,
    /// Held-out records for per-epoch accuracy.
    #[arg(long)]
    test: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "single")]
    schema: SchemaArg,
    /// Named hyper-parameter preset (sst2, trec-fine, mrpc, rte, ...).
    #[arg(long)]
    preset: Option<String>,
    /// Augmented-loss weight; defaults to 0.5 (single) or 0.2 (pair).
    #[arg(long, allow_negative_numbers = true)]
    gamma: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long, default_value_t = 0.5)]
    lr: f64,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long, env = SEED_ENV, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_HASH_DIM)]
    hash_dim: usize,
    /// Train on the replicated original stream only, ignoring the augmented loss.
    #[arg(long)]
    baseline: bool,
    /// Checkpoint output path.
    #[arg(long)]
    output: PathBuf,
    /// Per-epoch log; defaults to stdout.
    #[arg(long)]
    log: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct StatsArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "single")]
    schema: SchemaArg,
    /// Lower ratio bound; repeat together with --lambda-u for several intervals.
    #[arg(long)]
    lambda_l: Vec<f64>,
    #[arg(long)]
    lambda_u: Vec<f64>,
}

/// Runs the CLI with `args` (including the program name) and returns the
/// process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            if code == 0 {
                let _ = write!(out, "{text}");
            } else {
                let _ = write!(err, "{text}");
            }
            return code;
        }
    };
    let result = match cli.command {
        Command::Augment(a) => cmd_augment(&a, out),
        Command::ScanGen(a) => cmd_scan_gen(&a, out),
        Command::Train(a) => cmd_train(&a, out),
        Command::Stats(a) => cmd_stats(&a, out),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message());
            e.exit_code()
        }
    }
}

fn lambda(lower: f64, upper: f64) -> Result<LambdaInterval, CliError> {
    LambdaInterval::new(lower, upper)
        .map_err(|_| CliError::Validation(format!("invalid lambda interval [{lower}, {upper}]: need 0 <= lambda-l <= lambda-u <= 1")))
}

fn beta(value: i64) -> Result<usize, CliError> {
    usize::try_from(value)
        .ok()
        .filter(|b| *b >= 1)
        .ok_or_else(|| CliError::Validation(format!("beta must be at least 1, got {value}")))
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| io_error(path, e))
}

#[derive(Serialize)]
struct AugmentManifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    input: String,
    output: String,
    schema: SchemaArg,
    config: &'a AugmentationConfig,
    input_records: usize,
    output_records: usize,
    seed: u64,
}

fn default_manifest_path(output: &Path) -> PathBuf {
    let mut s = output.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

fn cmd_augment(args: &AugmentArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let config = AugmentationConfig {
        lambda: lambda(args.lambda_l, args.lambda_u)?,
        beta: beta(args.beta)?,
        pairing: match args.pairing {
            PairingArg::Cross => PairingMode::CrossClass,
            PairingArg::Same => PairingMode::SameClass,
        },
        constraint: match args.constraint {
            ConstraintArg::None => SubtreeConstraint::None,
            ConstraintArg::Label => SubtreeConstraint::SamePhraseLabel,
            ConstraintArg::Length => SubtreeConstraint::SameLength,
        },
        max_retries: args.max_retries,
        seed: args.seed,
        mixer: match args.mixer {
            MixerArg::Treemix => Mixer::TreeMix,
            MixerArg::Randmix => Mixer::RandMix,
        },
        ..AugmentationConfig::default()
    };
    config.validate().map_err(|e| CliError::Validation(e.to_string()))?;

    let records = read_corpus(&args.input, args.schema.into())?;
    let invalid = |e: crate::augment::AugmentError| CliError::Validation(e.to_string());
    let augmented = match args.schema {
        SchemaArg::Single => {
            let data = records
                .iter()
                .map(CorpusRecord::to_labeled_example)
                .collect::<Result<Vec<_>, _>>()
                .map_err(invalid)?;
            build_dataset(&data, &config).map_err(invalid)?
        }
        SchemaArg::Pair => {
            let data = records
                .iter()
                .map(CorpusRecord::to_pair_example)
                .collect::<Result<Vec<_>, _>>()
                .map_err(invalid)?;
            build_dataset(&data, &config).map_err(invalid)?
        }
    };
    let out_records: Vec<CorpusRecord> = augmented
        .iter()
        .enumerate()
        .map(|(k, a)| CorpusRecord::from_augmented(format!("aug-{k}"), a))
        .collect();

    let manifest = AugmentManifest {
        tool: "treemix",
        version: env!("CARGO_PKG_VERSION"),
        command: "augment",
        input: args.input.display().to_string(),
        output: args.output.display().to_string(),
        schema: args.schema,
        config: &config,
        input_records: records.len(),
        output_records: out_records.len(),
        seed: config.seed,
    };
    let manifest_path = args.manifest.clone().unwrap_or_else(|| default_manifest_path(&args.output));
    write_file(&args.output, &corpus_to_string(&out_records))?;
    write_file(&manifest_path, &(serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n"))?;
    let _ = writeln!(out, "wrote {} augmented records from {} inputs", out_records.len(), records.len());
    Ok(())
}

#[derive(Serialize)]
struct ScanManifest {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    split: String,
    beta: usize,
    seed: u64,
    train: usize,
    test: usize,
    augmented: usize,
}

fn cmd_scan_gen(args: &ScanGenArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let beta = beta(args.beta)?;
    let split = make_split(&args.split, scan_universe()).map_err(|e| CliError::Validation(e.to_string()))?;
    let config = scan_augmentation_config(beta, args.seed);
    let augmented = augment_scan(&split.train, &config).map_err(|e| CliError::Validation(e.to_string()))?;

    fs::create_dir_all(&args.output).map_err(|e| io_error(&args.output, e))?;
    let train_text = write_scan_lines(&split.train);
    let aug_text = write_scan_lines(&augmented);
    write_file(&args.output.join("train.txt"), &train_text)?;
    write_file(&args.output.join("test.txt"), &write_scan_lines(&split.test))?;
    write_file(&args.output.join("augmented.txt"), &aug_text)?;
    write_file(&args.output.join("train_augmented.txt"), &(train_text + &aug_text))?;
    let manifest = ScanManifest {
        tool: "treemix",
        version: env!("CARGO_PKG_VERSION"),
        command: "scan-gen",
        split: split.name.to_string(),
        beta,
        seed: args.seed,
        train: split.train.len(),
        test: split.test.len(),
        augmented: augmented.len(),
    };
    write_file(
        &args.output.join("manifest.json"),
        &(serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n"),
    )?;
    let _ = writeln!(
        out,
        "split={} train={} test={} augmented={}",
        split.name,
        split.train.len(),
        split.test.len(),
        augmented.len()
    );
    Ok(())
}

fn cmd_train(args: &TrainArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let schema: Schema = args.schema.into();
    let preset = match &args.preset {
        Some(name) => Some(preset(name).ok_or_else(|| CliError::Validation(format!("unknown preset `{name}`")))?),
        None => None,
    };
    let config = TrainConfig {
        gamma: args
            .gamma
            .or(preset.map(|p| p.gamma))
            .unwrap_or_else(|| default_gamma(schema == Schema::Pair)),
        epochs: args.epochs.or(preset.map(|p| p.epochs)).unwrap_or(5),
        learning_rate: args.lr,
        batch_size: args.batch_size.or(preset.map(|p| p.batch_size)).unwrap_or(32),
        seed: args.seed,
        hash_dim: args.hash_dim,
    };
    config.validate().map_err(|e| CliError::Validation(e.to_string()))?;

    let originals = read_corpus(&args.input, schema)?;
    if originals.is_empty() {
        return Err(CliError::Validation("empty training corpus".into()));
    }
    let merged = match &args.augmented {
        Some(p) => {
            let aug = read_corpus(p, schema)?;
            merge_replicated(&originals, &aug, config.seed, config.gamma)?
        }
        None => MergedTrainingSet::originals_only(&originals, config.gamma),
    };
    let test: Option<Vec<Sample>> = match &args.test {
        Some(p) => Some(
            read_corpus(p, schema)?
                .iter()
                .map(|r| Sample::from_record(r, config.hash_dim))
                .collect(),
        ),
        None => None,
    };
    let mut set = EncodedSet::new(&merged, config.hash_dim);
    if args.baseline {
        set.augmented.clear();
    }
    let (model, logs) = train_encoded(&set, &config, test.as_deref()).map_err(|e| CliError::Validation(e.to_string()))?;

    let mut log_text = String::new();
    for l in &logs {
        log_text.push_str(&l.to_line());
        log_text.push('\n');
    }
    match &args.log {
        Some(p) => write_file(p, &log_text)?,
        None => {
            let _ = write!(out, "{log_text}");
        }
    }
    let ck = Checkpoint::from_model(&model, &config);
    write_file(&args.output, &(serde_json::to_string(&ck).expect("checkpoint serializes") + "\n"))?;
    Ok(())
}

fn cmd_stats(args: &StatsArgs, out: &mut dyn Write) -> Result<(), CliError> {
    if args.lambda_l.len() != args.lambda_u.len() {
        return Err(CliError::Validation("--lambda-l and --lambda-u must be given the same number of times".into()));
    }
    let intervals = if args.lambda_l.is_empty() {
        vec![lambda(0.1, 0.3)?, lambda(0.3, 0.5)?]
    } else {
        args.lambda_l
            .iter()
            .zip(&args.lambda_u)
            .map(|(l, u)| lambda(*l, *u))
            .collect::<Result<Vec<_>, _>>()?
    };
    let records = read_corpus(&args.input, args.schema.into())?;
    if records.is_empty() {
        return Err(CliError::Validation("empty corpus".into()));
    }
    let stats = corpus_stats(&records, &intervals)?;
    let _ = writeln!(out, "{}", serde_json::to_string_pretty(&stats).expect("stats serialize"));
    Ok(())
}
