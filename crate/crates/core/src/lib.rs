//! Error meta-model for black-box binary classifiers.
//!
//! Wraps any deterministic 0/1 classifier with a Gaussian-process model of
//! its prediction error rate. For every input the wrapper reports the
//! estimated error rate (posterior mean of the error logit) together with
//! a confidence on that estimate (posterior variance, large wherever the
//! wrapper has seen little data), and turns the pair into an accept /
//! flip / abstain decision. Nothing about the base model is inspected
//! beyond its binary output, so rule-based classifiers work as well as
//! statistical ones.
//!
//! ```
//! use errmeta::{
//!     abstain::{decide, ThresholdPolicy},
//!     data::{ErrorObservations, FeatureMatrix},
//!     gp::{fit_laplace, LaplaceOptions},
//!     kernel::KernelSpec,
//! };
//!
//! // Error bits observed at three scalar inputs: wrong at 0.0, right at 1.0.
//! let inputs = FeatureMatrix::from_rows(
//!     vec![vec![0.0], vec![0.0], vec![1.0]], 1).unwrap();
//! let obs = ErrorObservations::new(inputs, vec![1, 1, 0]).unwrap();
//!
//! let spec = KernelSpec::new(3.0, 0.5).unwrap();
//! let fit = fit_laplace(&obs, spec, &LaplaceOptions::default()).unwrap();
//!
//! let near_errors = fit.predict(&[0.0]).unwrap();
//! assert!(near_errors.error_rate > 0.5);
//!
//! // Far from every observation the model falls back to the prior and
//! // a sane policy abstains.
//! let far = fit.predict(&[50.0]).unwrap();
//! let decision = decide(1, far, ThresholdPolicy::new(1.0, 3.0).unwrap());
//! assert_eq!(decision.verdict, errmeta::abstain::Verdict::Abstain);
//! ```

pub mod abstain;
pub mod baseline;
pub mod data;
pub mod error;
pub mod eval;
pub mod gp;
pub mod kernel;
pub mod pipeline;
pub mod rules;
pub mod synth;

pub use abstain::{decide, decide_with_mode, Decision, FlipMode, ThresholdPolicy, Verdict};
pub use baseline::{fit_logistic, LogisticFit, LogisticOptions};
pub use data::{
    CmpOp, ErrorObservations, FeatureMatrix, FeatureStats, LabeledDataset, RegionPredicate,
};
pub use error::{Error, Result};
pub use eval::{selective_metrics, sweep, SelectiveMetrics, SweepResult, SweepRow};
pub use gp::{fit_laplace, ErrorModel, GpFit, LaplaceOptions, PosteriorSummary};
pub use kernel::KernelSpec;
pub use pipeline::{run_pipeline, Manifest, RunConfig};
pub use rules::{learn_rules, parse_rules, BaseModel, BoundRuleModel, LearnerConfig, RuleModel};
