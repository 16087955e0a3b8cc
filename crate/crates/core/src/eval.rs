//! Selective metrics and threshold-sweep grids.
//!
//! Metrics are computed over accepted (non-abstained) points only, with
//! the flip treated as part of the classifier under evaluation. Quantities
//! with an empty denominator are reported as explicitly undefined (`None`,
//! an empty CSV field, JSON null), never silently 0 or 1: the positive
//! class can be rare and small accepted sets hit those cases routinely.

use serde::Serialize;

use crate::abstain::{decide_with_mode, Decision, FlipMode, ThresholdPolicy, Verdict};
use crate::data::LabeledDataset;
use crate::error::{Error, Result};
use crate::gp::{ErrorModel, PosteriorSummary};
use crate::rules::BaseModel;

/// Coverage plus the usual classification metrics over accepted points.
/// `selective_risk` is the empirical mean 0-1 loss over accepted points,
/// which equals `1 - accuracy`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SelectiveMetrics {
    pub coverage: f64,
    pub accuracy: Option<f64>,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub selective_risk: Option<f64>,
    pub n_total: usize,
    pub n_accepted: usize,
}

/// Metrics for one batch of decisions against ground-truth labels.
pub fn selective_metrics(decisions: &[Decision], labels: &[u8]) -> Result<SelectiveMetrics> {
    if decisions.len() != labels.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} decisions vs {} labels",
            decisions.len(),
            labels.len()
        )));
    }
    if decisions.is_empty() {
        return Err(Error::EmptyDataset);
    }

    let n_total = decisions.len();
    let mut n_accepted = 0usize;
    let mut correct = 0usize;
    let mut wrong = 0usize;
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut fneg = 0usize;

    for (d, &y) in decisions.iter().zip(labels) {
        if d.verdict == Verdict::Abstain {
            continue;
        }
        let pred = d.final_label.expect("non-abstain decisions carry a label");
        n_accepted += 1;
        if pred == y {
            correct += 1;
        } else {
            wrong += 1;
        }
        match (pred, y) {
            (1, 1) => tp += 1,
            (1, 0) => fp += 1,
            (0, 1) => fneg += 1,
            _ => {}
        }
    }

    let ratio = |num: usize, den: usize| {
        if den == 0 {
            None
        } else {
            Some(num as f64 / den as f64)
        }
    };

    Ok(SelectiveMetrics {
        coverage: n_accepted as f64 / n_total as f64,
        accuracy: ratio(correct, n_accepted),
        precision: ratio(tp, tp + fp),
        recall: ratio(tp, tp + fneg),
        selective_risk: ratio(wrong, n_accepted),
        n_total,
        n_accepted,
    })
}

/// One grid cell of a threshold sweep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub mean_threshold: f64,
    pub var_threshold: f64,
    #[serde(flatten)]
    pub metrics: SelectiveMetrics,
}

/// Full grid of (mean threshold, variance threshold) cells, in grid order:
/// the mean grid is the outer loop.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

pub const SWEEP_CSV_HEADER: &str =
    "mean_threshold,var_threshold,coverage,accuracy,precision,recall,selective_risk,n_total,n_accepted";

impl SweepResult {
    /// CSV emission; undefined metrics become empty fields.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        let io_err = |source: std::io::Error| Error::Io {
            path: std::path::PathBuf::from("<writer>"),
            source,
        };
        writeln!(w, "{SWEEP_CSV_HEADER}").map_err(io_err)?;
        for row in &self.rows {
            let m = &row.metrics;
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{}",
                threshold_field(row.mean_threshold),
                threshold_field(row.var_threshold),
                m.coverage,
                opt(m.accuracy),
                opt(m.precision),
                opt(m.recall),
                opt(m.selective_risk),
                m.n_total,
                m.n_accepted
            )
            .map_err(io_err)?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Threshold values can be disable sentinels like f64::MAX, which Display
/// renders as 300+ digits; switch to scientific notation for huge values.
/// Both forms parse back to the identical f64.
fn threshold_field(v: f64) -> String {
    if v.abs() >= 1e16 {
        format!("{v:e}")
    } else {
        v.to_string()
    }
}

/// Score a base model and error model once per test point, then evaluate
/// every grid cell from the cached summaries. Output ordering is fixed by
/// the grid, independent of any internal parallelism.
pub fn sweep(
    base: &dyn BaseModel,
    error_model: &dyn ErrorModel,
    test: &LabeledDataset,
    mean_grid: &[f64],
    var_grid: &[f64],
    mode: FlipMode,
) -> Result<SweepResult> {
    if mean_grid.is_empty() || var_grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if test.n_rows() == 0 {
        return Err(Error::EmptyDataset);
    }

    let scored = score_points(base, error_model, test)?;

    let mut rows = Vec::with_capacity(mean_grid.len() * var_grid.len());
    for &mean_threshold in mean_grid {
        for &var_threshold in var_grid {
            let policy = ThresholdPolicy::new(mean_threshold, var_threshold)?;
            let decisions: Vec<Decision> = scored
                .iter()
                .map(|&(pred, summary)| decide_with_mode(pred, summary, policy, mode))
                .collect();
            rows.push(SweepRow {
                mean_threshold,
                var_threshold,
                metrics: selective_metrics(&decisions, test.labels())?,
            });
        }
    }
    Ok(SweepResult { rows })
}

/// Base prediction and posterior summary for every row of `test`.
pub fn score_points(
    base: &dyn BaseModel,
    error_model: &dyn ErrorModel,
    test: &LabeledDataset,
) -> Result<Vec<(u8, PosteriorSummary)>> {
    (0..test.n_rows())
        .map(|i| {
            let row = test.row(i);
            Ok((base.predict(row), error_model.posterior(row)?))
        })
        .collect()
}
