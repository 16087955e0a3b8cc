//! `errmeta` command line: wrap a black-box binary classifier with an
//! error meta-model and an abstaining decision layer.
//!
//! Exit codes: 0 success, 2 configuration error, 3 data error,
//! 4 numerical failure.

use std::fmt;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use errmeta::pipeline::{
    self, run_pipeline, stage_errors, stage_fit, stage_split, stage_sweep, stage_train_base,
    BaseModelKind, ErrorModelKind, RunConfig,
};
use errmeta::synth::{generate_csv, SynthConfig};

#[derive(Parser)]
#[command(
    name = "errmeta",
    version,
    about = "Error meta-model and abstaining wrapper for black-box binary classifiers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic signal-strength dataset CSV (C1..C7 + class)
    GenData {
        /// Where to write the CSV
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 2000)]
        rows: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
    /// Split the dataset into the region samples s1, s2, s3
    Split(StageArgs),
    /// Train the base rule model on s1, or load a fixed rules file
    TrainBase(StageArgs),
    /// Score the base model on s2 and record its error bits
    Errors(StageArgs),
    /// Fit the error model on a subsample of the error observations
    Fit(StageArgs),
    /// Sweep abstention thresholds on s3 and dump per-point decisions
    Sweep(StageArgs),
    /// Run every stage in order and write the manifest
    Run(StageArgs),
}

#[derive(Args)]
struct StageArgs {
    /// TOML run configuration
    #[arg(long, short)]
    config: PathBuf,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args, Default)]
struct Overrides {
    /// Override the master seed
    #[arg(long)]
    seed: Option<u64>,
    /// Override the output directory
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Base-model training region, e.g. "C1>-50"
    #[arg(long)]
    base_region: Option<String>,
    /// Error-model training region, e.g. "C2<-60"
    #[arg(long)]
    meta_region: Option<String>,
    /// Error model: gp | logistic
    #[arg(long)]
    error_model: Option<String>,
    /// Fixed rules file for the base model (switches kind to rules-file)
    #[arg(long)]
    rules_file: Option<PathBuf>,
    /// Decision threshold on |posterior mean|
    #[arg(long)]
    mean_threshold: Option<f64>,
    /// Decision threshold on the posterior variance
    #[arg(long)]
    var_threshold: Option<f64>,
    /// Keep confidently-wrong base predictions instead of flipping them
    #[arg(long)]
    no_flip: bool,
    /// Kernel signal variance
    #[arg(long)]
    variance: Option<f64>,
    /// Kernel length scale (raw feature units)
    #[arg(long)]
    length_scale: Option<f64>,
}

enum CliError {
    Config(String),
    Core(errmeta::Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "{msg}"),
            CliError::Core(e) => {
                write!(f, "{e}")?;
                let mut source = std::error::Error::source(e);
                while let Some(cause) = source {
                    write!(f, ": {cause}")?;
                    source = cause.source();
                }
                Ok(())
            }
        }
    }
}

impl From<errmeta::Error> for CliError {
    fn from(e: errmeta::Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Core(e) => core_exit_code(e),
        }
    }
}

fn core_exit_code(err: &errmeta::Error) -> u8 {
    use errmeta::Error::*;
    match err {
        Stage { source, .. } => core_exit_code(source),
        InvalidConfig(_) | InvalidKernel(_) | InvalidPolicy(_) | EmptyGrid
        | FractionOutOfRange(_) | TrainSizeExceeded { .. } => 2,
        CholeskyFailed | NegativeVariance(_) | UnconvergedFit => 4,
        _ => 3,
    }
}

fn main() -> ExitCode {
    env_logger::init();
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run() -> Result<(), CliError> {
    let cli = Cli::parse();
    match cli.command {
        Command::GenData { out, rows, seed } => {
            let csv = generate_csv(&SynthConfig { rows, seed });
            fs::write(&out, csv)
                .map_err(|e| CliError::Config(format!("cannot write {}: {e}", out.display())))?;
            println!("wrote {} ({rows} rows, seed {seed})", out.display());
            Ok(())
        }
        Command::Split(args) => stage(args, "split", stage_split),
        Command::TrainBase(args) => stage(args, "train-base", stage_train_base),
        Command::Errors(args) => stage(args, "errors", stage_errors),
        Command::Fit(args) => stage(args, "fit", stage_fit),
        Command::Sweep(args) => stage(args, "sweep", stage_sweep),
        Command::Run(args) => {
            let cfg = load_config(&args)?;
            let manifest = run_pipeline(&cfg)?;
            println!(
                "run complete: {} stages ok, manifest at {}",
                manifest.stages.len(),
                cfg.output.dir.join(pipeline::MANIFEST_FILE).display()
            );
            Ok(())
        }
    }
}

fn stage(
    args: StageArgs,
    name: &'static str,
    f: fn(&RunConfig) -> errmeta::Result<()>,
) -> Result<(), CliError> {
    let cfg = load_config(&args)?;
    fs::create_dir_all(&cfg.output.dir).map_err(|e| {
        CliError::Config(format!(
            "cannot create output directory {}: {e}",
            cfg.output.dir.display()
        ))
    })?;
    f(&cfg).map_err(|e| CliError::Core(e.in_stage(name)))?;
    println!("{name} complete, outputs in {}", cfg.output.dir.display());
    Ok(())
}

fn load_config(args: &StageArgs) -> Result<RunConfig, CliError> {
    let text = fs::read_to_string(&args.config).map_err(|e| {
        CliError::Config(format!("cannot read config {}: {e}", args.config.display()))
    })?;
    let mut cfg: RunConfig = toml::from_str(&text)
        .map_err(|e| CliError::Config(format!("invalid config {}: {e}", args.config.display())))?;

    apply_overrides(&mut cfg, &args.overrides)?;
    cfg.validate()?;

    // Referenced files must exist before any stage starts.
    if !cfg.dataset.path.exists() {
        return Err(CliError::Config(format!(
            "dataset file {} does not exist",
            cfg.dataset.path.display()
        )));
    }
    if let Some(rules) = &cfg.base_model.rules_file {
        if cfg.base_model.kind == BaseModelKind::RulesFile && !rules.exists() {
            return Err(CliError::Config(format!(
                "rules file {} does not exist",
                rules.display()
            )));
        }
    }
    Ok(cfg)
}

fn apply_overrides(cfg: &mut RunConfig, ov: &Overrides) -> Result<(), CliError> {
    if let Some(seed) = ov.seed {
        cfg.split.seed = seed;
    }
    if let Some(dir) = &ov.out_dir {
        cfg.output.dir = dir.clone();
    }
    if let Some(region) = &ov.base_region {
        cfg.split.base_region = region.clone();
    }
    if let Some(region) = &ov.meta_region {
        cfg.split.meta_region = region.clone();
    }
    if let Some(kind) = &ov.error_model {
        cfg.error_model.kind = match kind.as_str() {
            "gp" => ErrorModelKind::Gp,
            "logistic" => ErrorModelKind::Logistic,
            other => {
                return Err(CliError::Config(format!(
                    "unknown error model '{other}', expected gp or logistic"
                )))
            }
        };
    }
    if let Some(rules) = &ov.rules_file {
        cfg.base_model.kind = BaseModelKind::RulesFile;
        cfg.base_model.rules_file = Some(rules.clone());
    }
    if let Some(t) = ov.mean_threshold {
        cfg.policy.mean_threshold = t;
    }
    if let Some(t) = ov.var_threshold {
        cfg.policy.var_threshold = t;
    }
    if ov.no_flip {
        cfg.policy.no_flip = true;
    }
    if let Some(v) = ov.variance {
        cfg.error_model.variance = v;
    }
    if let Some(l) = ov.length_scale {
        cfg.error_model.length_scale = l;
    }
    Ok(())
}
