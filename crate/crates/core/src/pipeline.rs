//! End-to-end experiment orchestration.
//!
//! The pipeline splits a dataset into region-based samples, trains (or
//! loads) a rule-based base model, scores it on the meta-training region,
//! fits an error model on the observed bits, and sweeps abstention
//! thresholds on the evaluation sample. Every stage reads its inputs from
//! and writes its outputs to the configured output directory, so running
//! the stages individually composes to exactly the same bytes as one
//! `run_pipeline` call, and a fixed config plus seed reproduces every
//! output byte.
//!
//! Stage outputs:
//!   split      -> s1.csv, s2.csv, s3.csv
//!   train-base -> base_model.rules
//!   errors     -> error_observations.csv
//!   fit        -> error_model.json
//!   sweep      -> sweep.csv, sweep.json, decisions.csv
//! plus manifest.json describing the run.

use std::fs;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::abstain::{decide_with_mode, FlipMode, ThresholdPolicy};
use crate::baseline::{fit_logistic, LogisticFit, LogisticOptions};
use crate::data::{ErrorObservations, LabeledDataset, RegionPredicate};
use crate::error::{Error, Result};
use crate::eval::{score_points, sweep};
use crate::gp::{fit_laplace, ErrorModel, GpArtifact, GpFit, LaplaceOptions};
use crate::kernel::KernelSpec;
use crate::rules::{learn_rules, parse_rules, LearnerConfig, RuleModel};

pub const S1_FILE: &str = "s1.csv";
pub const S2_FILE: &str = "s2.csv";
pub const S3_FILE: &str = "s3.csv";
pub const BASE_MODEL_FILE: &str = "base_model.rules";
pub const ERROR_OBS_FILE: &str = "error_observations.csv";
pub const ERROR_MODEL_FILE: &str = "error_model.json";
pub const SWEEP_CSV_FILE: &str = "sweep.csv";
pub const SWEEP_JSON_FILE: &str = "sweep.json";
pub const DECISIONS_FILE: &str = "decisions.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

// ---------------------------------------------------------------------------
// Configuration

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dataset: DatasetConfig,
    pub split: SplitConfig,
    pub base_model: BaseModelConfig,
    pub error_model: ErrorModelConfig,
    #[serde(default)]
    pub policy: PolicyConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    pub output: OutputConfig,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    pub path: PathBuf,
    pub label_column: String,
    pub positive_value: String,
    /// Optional projection onto a feature subset, e.g. ["C1", "C2"].
    #[serde(default)]
    pub features: Option<Vec<String>>,
    /// Z-score features before anything else. Off by default: kernel
    /// length scales are quoted against raw feature units. When enabled,
    /// region predicates and rule thresholds are interpreted in
    /// standardized units, and the manifest records the flag.
    #[serde(default)]
    pub standardize: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitConfig {
    /// Master seed; every stage derives its own stream from it.
    pub seed: u64,
    /// Region the base model trains in, e.g. "C1>-50".
    pub base_region: String,
    /// Region the error model trains in, e.g. "C2<-60".
    pub meta_region: String,
    #[serde(default = "default_fraction")]
    pub base_fraction: f64,
    #[serde(default = "default_fraction")]
    pub meta_fraction: f64,
    #[serde(default = "default_fraction")]
    pub eval_fraction: f64,
    /// Number of error observations actually used to fit the error model;
    /// it is an error if fewer are available.
    #[serde(default = "default_meta_train_size")]
    pub meta_train_size: usize,
}

fn default_fraction() -> f64 {
    0.5
}

fn default_meta_train_size() -> usize {
    500
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaseModelKind {
    Learn,
    RulesFile,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaseModelConfig {
    pub kind: BaseModelKind,
    #[serde(default)]
    pub rules_file: Option<PathBuf>,
    #[serde(default = "default_min_precision")]
    pub min_precision: f64,
    #[serde(default = "default_max_conditions")]
    pub max_conditions: usize,
}

fn default_min_precision() -> f64 {
    0.9
}

fn default_max_conditions() -> usize {
    3
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorModelKind {
    Gp,
    Logistic,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErrorModelConfig {
    pub kind: ErrorModelKind,
    #[serde(default = "default_variance")]
    pub variance: f64,
    #[serde(default = "default_length_scale")]
    pub length_scale: f64,
    /// Defaults to 1e-6 * variance when absent.
    #[serde(default)]
    pub jitter: Option<f64>,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_max_train")]
    pub max_train: usize,
}

fn default_variance() -> f64 {
    3.0
}

fn default_length_scale() -> f64 {
    0.1
}

fn default_tol() -> f64 {
    1e-6
}

fn default_max_iter() -> usize {
    50
}

fn default_max_train() -> usize {
    2000
}

impl ErrorModelConfig {
    pub fn kernel_spec(&self) -> Result<KernelSpec> {
        match self.jitter {
            Some(j) => KernelSpec::with_jitter(self.variance, self.length_scale, j),
            None => KernelSpec::new(self.variance, self.length_scale),
        }
    }

    pub fn laplace_options(&self) -> LaplaceOptions {
        LaplaceOptions {
            tol: self.tol,
            max_iter: self.max_iter,
            max_train: self.max_train,
        }
    }
}

/// Policy used for the per-point decision dump.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyConfig {
    pub mean_threshold: f64,
    pub var_threshold: f64,
    #[serde(default)]
    pub no_flip: bool,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        PolicyConfig {
            mean_threshold: 1.0,
            var_threshold: 3.0,
            no_flip: false,
        }
    }
}

impl PolicyConfig {
    pub fn threshold_policy(&self) -> Result<ThresholdPolicy> {
        ThresholdPolicy::new(self.mean_threshold, self.var_threshold)
    }

    pub fn flip_mode(&self) -> FlipMode {
        if self.no_flip {
            FlipMode::KeepBase
        } else {
            FlipMode::Flip
        }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// Mean thresholds; defaults to 0.0, 0.1, ..., 3.0.
    #[serde(default)]
    pub mean_grid: Option<Vec<f64>>,
    /// Variance thresholds; defaults to the disable sentinel (f64::MAX),
    /// so only the mean rule abstains.
    #[serde(default)]
    pub var_grid: Option<Vec<f64>>,
}

impl SweepConfig {
    pub fn mean_grid(&self) -> Vec<f64> {
        self.mean_grid
            .clone()
            .unwrap_or_else(|| (0..=30).map(|i| i as f64 * 0.1).collect())
    }

    pub fn var_grid(&self) -> Vec<f64> {
        self.var_grid.clone().unwrap_or_else(|| vec![f64::MAX])
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl RunConfig {
    /// Range and consistency checks that need no file access.
    pub fn validate(&self) -> Result<()> {
        for (name, f) in [
            ("base_fraction", self.split.base_fraction),
            ("meta_fraction", self.split.meta_fraction),
            ("eval_fraction", self.split.eval_fraction),
        ] {
            if !(f > 0.0 && f <= 1.0) {
                return Err(Error::InvalidConfig(format!("{name} {f} outside (0, 1]")));
            }
        }
        if self.split.meta_train_size == 0 {
            return Err(Error::InvalidConfig("meta_train_size must be >= 1".into()));
        }
        self.split.base_region.parse::<RegionPredicate>()?;
        self.split.meta_region.parse::<RegionPredicate>()?;
        if self.base_model.kind == BaseModelKind::RulesFile
            && self.base_model.rules_file.is_none()
        {
            return Err(Error::InvalidConfig(
                "base_model.kind = \"rules-file\" requires base_model.rules_file".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.base_model.min_precision) {
            return Err(Error::InvalidConfig(format!(
                "min_precision {} outside [0, 1]",
                self.base_model.min_precision
            )));
        }
        self.error_model.kernel_spec()?;
        self.policy.threshold_policy()?;
        for t in self.sweep.mean_grid() {
            if !(t >= 0.0) {
                return Err(Error::InvalidConfig(format!("mean grid value {t} < 0")));
            }
        }
        for t in self.sweep.var_grid() {
            if !(t > 0.0) {
                return Err(Error::InvalidConfig(format!("var grid value {t} <= 0")));
            }
        }
        Ok(())
    }

    fn out_path(&self, name: &str) -> PathBuf {
        self.output.dir.join(name)
    }

    pub fn config_sha256(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        let mut hasher = Sha256::new();
        hasher.update(&bytes);
        hex_string(&hasher.finalize())
    }
}

fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Per-purpose deterministic sub-seed from the master seed.
pub fn derive_seed(master: u64, tag: &str) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(master.to_le_bytes());
    hasher.update(tag.as_bytes());
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest is long enough"))
}

// ---------------------------------------------------------------------------
// Stages

/// Load the configured dataset, apply the optional feature projection and
/// standardization.
pub fn load_input_dataset(cfg: &RunConfig) -> Result<LabeledDataset> {
    let ds = LabeledDataset::from_csv_path(
        &cfg.dataset.path,
        &cfg.dataset.label_column,
        &cfg.dataset.positive_value,
    )?;
    let ds = match &cfg.dataset.features {
        Some(names) if !names.is_empty() => ds.select_features(names)?,
        _ => ds,
    };
    if cfg.dataset.standardize {
        Ok(ds.standardize().0)
    } else {
        Ok(ds)
    }
}

/// Region-filter and subsample the three working datasets.
pub fn stage_split(cfg: &RunConfig) -> Result<()> {
    let ds = load_input_dataset(cfg)?;
    let seed = cfg.split.seed;

    let base_region: RegionPredicate = cfg.split.base_region.parse()?;
    let meta_region: RegionPredicate = cfg.split.meta_region.parse()?;

    let s1 = ds
        .filter_region(&base_region)?
        .sample_fraction(cfg.split.base_fraction, derive_seed(seed, "s1"))?;
    let s2 = ds
        .filter_region(&meta_region)?
        .sample_fraction(cfg.split.meta_fraction, derive_seed(seed, "s2"))?;
    let s3 = ds.sample_fraction(cfg.split.eval_fraction, derive_seed(seed, "s3"))?;

    write_dataset(cfg, S1_FILE, &s1, &cfg.dataset.label_column)?;
    write_dataset(cfg, S2_FILE, &s2, &cfg.dataset.label_column)?;
    write_dataset(cfg, S3_FILE, &s3, &cfg.dataset.label_column)?;
    Ok(())
}

/// Learn the base rule model on s1, or load the fixed rules file, and
/// write the canonical rule text.
pub fn stage_train_base(cfg: &RunConfig) -> Result<()> {
    let s1 = read_dataset(cfg, S1_FILE)?;
    let model = match cfg.base_model.kind {
        BaseModelKind::Learn => {
            let learner = LearnerConfig {
                min_precision: cfg.base_model.min_precision,
                max_conditions: cfg.base_model.max_conditions,
            };
            learn_rules(&s1, &learner)?
        }
        BaseModelKind::RulesFile => {
            let path = cfg
                .base_model
                .rules_file
                .as_ref()
                .expect("validated: rules_file present");
            let text = fs::read_to_string(path).map_err(|source| Error::Io {
                path: path.clone(),
                source,
            })?;
            let model = parse_rules(&text)?;
            // Fail now, not at prediction time, if the rules mention
            // features the (possibly projected) dataset does not have.
            model.bind(s1.feature_names())?;
            model
        }
    };
    write_text(cfg, BASE_MODEL_FILE, &format!("{model}\n"))
}

/// Score the base model on s2 and record the error bits.
pub fn stage_errors(cfg: &RunConfig) -> Result<()> {
    let s2 = read_dataset(cfg, S2_FILE)?;
    let model = read_base_model(cfg)?;
    let bound = model.bind(s2.feature_names())?;
    let obs = ErrorObservations::observe(&s2, &bound)?;
    let mut buf = Vec::new();
    obs.write_csv(&mut buf, s2.feature_names())?;
    write_bytes(cfg, ERROR_OBS_FILE, &buf)
}

/// Serializable fitted error model, GP or logistic.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelArtifact {
    Gp(GpArtifact),
    Logistic(LogisticFit),
}

/// In-memory counterpart of [`ModelArtifact`].
pub enum FittedErrorModel {
    Gp(GpFit),
    Logistic(LogisticFit),
}

impl FittedErrorModel {
    pub fn to_artifact(&self) -> ModelArtifact {
        match self {
            FittedErrorModel::Gp(fit) => ModelArtifact::Gp(fit.to_artifact()),
            FittedErrorModel::Logistic(fit) => ModelArtifact::Logistic(fit.clone()),
        }
    }

    pub fn from_artifact(artifact: ModelArtifact) -> Result<Self> {
        Ok(match artifact {
            ModelArtifact::Gp(a) => FittedErrorModel::Gp(GpFit::from_artifact(a)?),
            ModelArtifact::Logistic(f) => FittedErrorModel::Logistic(f),
        })
    }
}

impl ErrorModel for FittedErrorModel {
    fn posterior(&self, x: &[f64]) -> Result<crate::gp::PosteriorSummary> {
        match self {
            FittedErrorModel::Gp(fit) => fit.posterior(x),
            FittedErrorModel::Logistic(fit) => fit.posterior(x),
        }
    }
}

/// Subsample the error observations to `meta_train_size` and fit the
/// configured error model.
pub fn stage_fit(cfg: &RunConfig) -> Result<()> {
    let path = cfg.out_path(ERROR_OBS_FILE);
    let file = fs::File::open(&path).map_err(|source| Error::Io {
        path: path.clone(),
        source,
    })?;
    let (obs, _names) = ErrorObservations::from_csv_reader(file)?;
    let obs = obs.sample_n(
        cfg.split.meta_train_size,
        derive_seed(cfg.split.seed, "meta-train"),
    )?;

    let fitted = match cfg.error_model.kind {
        ErrorModelKind::Gp => FittedErrorModel::Gp(fit_laplace(
            &obs,
            cfg.error_model.kernel_spec()?,
            &cfg.error_model.laplace_options(),
        )?),
        ErrorModelKind::Logistic => {
            let opts = LogisticOptions {
                tol: cfg.error_model.tol,
                max_iter: cfg.error_model.max_iter,
            };
            FittedErrorModel::Logistic(fit_logistic(&obs, &opts)?)
        }
    };
    let json = serde_json::to_string_pretty(&fitted.to_artifact())?;
    write_text(cfg, ERROR_MODEL_FILE, &json)
}

/// Threshold sweep over s3 plus the per-point decision dump at the
/// configured policy.
pub fn stage_sweep(cfg: &RunConfig) -> Result<()> {
    let s3 = read_dataset(cfg, S3_FILE)?;
    let rules = read_base_model(cfg)?;
    let bound = rules.bind(s3.feature_names())?;
    let model = read_error_model(cfg)?;

    let result = sweep(
        &bound,
        &model,
        &s3,
        &cfg.sweep.mean_grid(),
        &cfg.sweep.var_grid(),
        cfg.policy.flip_mode(),
    )?;
    let mut csv = Vec::new();
    result.write_csv(&mut csv)?;
    write_bytes(cfg, SWEEP_CSV_FILE, &csv)?;
    write_text(cfg, SWEEP_JSON_FILE, &result.to_json()?)?;

    let decisions_csv = decision_dump(cfg, &bound, &model, &s3)?;
    write_bytes(cfg, DECISIONS_FILE, decisions_csv.as_bytes())
}

/// Per-point audit record: input, base prediction, posterior, verdict.
/// Enough to re-plot the decision landscape of a run.
fn decision_dump(
    cfg: &RunConfig,
    base: &dyn crate::rules::BaseModel,
    model: &dyn ErrorModel,
    test: &LabeledDataset,
) -> Result<String> {
    let policy = cfg.policy.threshold_policy()?;
    let mode = cfg.policy.flip_mode();
    let scored = score_points(base, model, test)?;

    let mut out = String::new();
    for name in test.feature_names() {
        out.push_str(name);
        out.push(',');
    }
    out.push_str("label,base_pred,logit_mean,logit_var,error_rate,verdict,final_label\n");
    for (i, &(pred, summary)) in scored.iter().enumerate() {
        let d = decide_with_mode(pred, summary, policy, mode);
        for v in test.row(i) {
            out.push_str(&v.to_string());
            out.push(',');
        }
        let final_label = match d.final_label {
            Some(l) => l.to_string(),
            None => String::new(),
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            test.labels()[i],
            pred,
            summary.logit_mean,
            summary.logit_var,
            summary.error_rate,
            d.verdict.as_str(),
            final_label
        ));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Whole-run orchestration

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StageRecord {
    pub name: String,
    pub status: String,
    pub outputs: Vec<String>,
}

/// Run description written alongside the outputs. The config hash plus
/// the seed pin down every output byte; there are no timestamps.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub tool_version: String,
    pub config_sha256: String,
    pub seed: u64,
    pub standardize: bool,
    pub partial: bool,
    pub error: Option<String>,
    pub stages: Vec<StageRecord>,
}

const STAGES: [(&str, fn(&RunConfig) -> Result<()>, &[&str]); 5] = [
    ("split", stage_split, &[S1_FILE, S2_FILE, S3_FILE]),
    ("train-base", stage_train_base, &[BASE_MODEL_FILE]),
    ("errors", stage_errors, &[ERROR_OBS_FILE]),
    ("fit", stage_fit, &[ERROR_MODEL_FILE]),
    (
        "sweep",
        stage_sweep,
        &[SWEEP_CSV_FILE, SWEEP_JSON_FILE, DECISIONS_FILE],
    ),
];

/// Execute every stage in order. On failure the manifest is still
/// written, flagged partial, with the failing stage recorded.
pub fn run_pipeline(cfg: &RunConfig) -> Result<Manifest> {
    cfg.validate()?;
    fs::create_dir_all(&cfg.output.dir).map_err(|source| Error::Io {
        path: cfg.output.dir.clone(),
        source,
    })?;

    let mut manifest = Manifest {
        format_version: 1,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        config_sha256: cfg.config_sha256(),
        seed: cfg.split.seed,
        standardize: cfg.dataset.standardize,
        partial: false,
        error: None,
        stages: Vec::new(),
    };

    for (name, run, outputs) in STAGES {
        match run(cfg) {
            Ok(()) => manifest.stages.push(StageRecord {
                name: name.to_string(),
                status: "ok".to_string(),
                outputs: outputs.iter().map(|s| s.to_string()).collect(),
            }),
            Err(e) => {
                let tagged = e.in_stage(name);
                manifest.stages.push(StageRecord {
                    name: name.to_string(),
                    status: "failed".to_string(),
                    outputs: vec![],
                });
                manifest.partial = true;
                manifest.error = Some(tagged.to_string());
                write_manifest(cfg, &manifest)?;
                return Err(tagged);
            }
        }
    }

    write_manifest(cfg, &manifest)?;
    Ok(manifest)
}

fn write_manifest(cfg: &RunConfig, manifest: &Manifest) -> Result<()> {
    write_text(cfg, MANIFEST_FILE, &serde_json::to_string_pretty(manifest)?)
}

// ---------------------------------------------------------------------------
// File helpers

fn write_dataset(
    cfg: &RunConfig,
    name: &str,
    ds: &LabeledDataset,
    label_column: &str,
) -> Result<()> {
    let mut buf = Vec::new();
    ds.write_csv(&mut buf, label_column)?;
    write_bytes(cfg, name, &buf)
}

/// Stage CSVs carry already-binarized labels, so reloading treats "1" as
/// the positive value regardless of the original label encoding.
pub fn read_dataset(cfg: &RunConfig, name: &str) -> Result<LabeledDataset> {
    LabeledDataset::from_csv_path(cfg.out_path(name), &cfg.dataset.label_column, "1")
}

pub fn read_base_model(cfg: &RunConfig) -> Result<RuleModel> {
    let path = cfg.out_path(BASE_MODEL_FILE);
    let text = fs::read_to_string(&path).map_err(|source| Error::Io { path, source })?;
    parse_rules(&text)
}

pub fn read_error_model(cfg: &RunConfig) -> Result<FittedErrorModel> {
    let path = cfg.out_path(ERROR_MODEL_FILE);
    let text = fs::read_to_string(&path).map_err(|source| Error::Io { path, source })?;
    FittedErrorModel::from_artifact(serde_json::from_str(&text)?)
}

fn write_text(cfg: &RunConfig, name: &str, content: &str) -> Result<()> {
    write_bytes(cfg, name, content.as_bytes())
}

fn write_bytes(cfg: &RunConfig, name: &str, content: &[u8]) -> Result<()> {
    let path = cfg.out_path(name);
    fs::write(&path, content).map_err(|source| Error::Io { path, source })
}
