//! Accept / flip / abstain decisions from a posterior summary.
//!
//! Abstain when the posterior mean logit is too close to zero (the
//! estimated error rate is near a coin flip) or the posterior variance is
//! too large (the estimate itself is untrusted). Otherwise a confidently
//! positive mean says the base model is expected to be wrong here, so the
//! prediction is flipped; a confidently negative mean accepts it.
//!
//! Boundary semantics are strict on both rules: |mean| equal to the mean
//! threshold does NOT abstain, and variance equal to the variance
//! threshold does NOT abstain. Sweep grids land exactly on thresholds, so
//! this matters. A mean threshold of 0 disables mean-based abstention and
//! a variance threshold of `f64::MAX` disables variance-based abstention.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gp::PosteriorSummary;

/// Abstention thresholds: `mean_threshold` applies to |logit mean|,
/// `var_threshold` to the logit variance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdPolicy {
    pub mean_threshold: f64,
    pub var_threshold: f64,
}

impl ThresholdPolicy {
    pub fn new(mean_threshold: f64, var_threshold: f64) -> Result<Self> {
        if !(mean_threshold >= 0.0) || mean_threshold.is_nan() {
            return Err(Error::InvalidPolicy(format!(
                "mean threshold must be >= 0, got {mean_threshold}"
            )));
        }
        if !(var_threshold > 0.0) || var_threshold.is_nan() {
            return Err(Error::InvalidPolicy(format!(
                "variance threshold must be > 0, got {var_threshold}"
            )));
        }
        Ok(ThresholdPolicy {
            mean_threshold,
            var_threshold,
        })
    }

    /// Sentinel policy that accepts (or flips) everything.
    pub fn never_abstain() -> Self {
        ThresholdPolicy {
            mean_threshold: 0.0,
            var_threshold: f64::MAX,
        }
    }
}

/// What to do with the base prediction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Accept,
    Flip,
    Abstain,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Accept => "accept",
            Verdict::Flip => "flip",
            Verdict::Abstain => "abstain",
        }
    }
}

/// Whether confidently-wrong predictions are flipped or merely kept.
/// `KeepBase` is the ablation behind the `--no-flip` flag.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FlipMode {
    Flip,
    KeepBase,
}

/// Per-input decision with the posterior attached for auditing.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub verdict: Verdict,
    /// Present exactly when the verdict is not Abstain. Flip implies
    /// `final_label = 1 - base_pred`, Accept implies `final_label = base_pred`.
    pub final_label: Option<u8>,
    pub summary: PosteriorSummary,
}

/// Decide with flipping enabled.
pub fn decide(base_pred: u8, summary: PosteriorSummary, policy: ThresholdPolicy) -> Decision {
    decide_with_mode(base_pred, summary, policy, FlipMode::Flip)
}

pub fn decide_with_mode(
    base_pred: u8,
    summary: PosteriorSummary,
    policy: ThresholdPolicy,
    mode: FlipMode,
) -> Decision {
    let mean = summary.logit_mean;
    if mean.abs() < policy.mean_threshold || summary.logit_var > policy.var_threshold {
        return Decision {
            verdict: Verdict::Abstain,
            final_label: None,
            summary,
        };
    }
    if mean >= policy.mean_threshold {
        // The model is expected to err here.
        return match mode {
            FlipMode::Flip => Decision {
                verdict: Verdict::Flip,
                final_label: Some(1 - base_pred),
                summary,
            },
            FlipMode::KeepBase => Decision {
                verdict: Verdict::Accept,
                final_label: Some(base_pred),
                summary,
            },
        };
    }
    Decision {
        verdict: Verdict::Accept,
        final_label: Some(base_pred),
        summary,
    }
}
