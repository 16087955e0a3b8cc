//! Dataset ingestion, region splits, subsampling, and error observations.
//!
//! All operations are pure given their inputs plus a seed, so shared
//! immutable datasets can be used from multiple threads. Sampling uses
//! ChaCha8 seeded explicitly, which makes every split reproducible across
//! platforms.

use std::fmt;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rules::BaseModel;

/// Dense row-major matrix of feature values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    values: Vec<f64>,
    rows: usize,
    cols: usize,
}

impl FeatureMatrix {
    /// Build from a list of equal-length rows.
    pub fn from_rows(rows: Vec<Vec<f64>>, cols: usize) -> Result<Self> {
        let mut values = Vec::with_capacity(rows.len() * cols);
        let n = rows.len();
        for row in rows {
            if row.len() != cols {
                return Err(Error::ShapeMismatch(format!(
                    "row of length {} in a {}-column matrix",
                    row.len(),
                    cols
                )));
            }
            values.extend(row);
        }
        Ok(FeatureMatrix {
            values,
            rows: n,
            cols,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.rows
    }

    pub fn n_cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.cols.max(1))
    }

    /// New matrix keeping only the given row indices, in the given order.
    pub fn take_rows(&self, indices: &[usize]) -> FeatureMatrix {
        let mut values = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            values.extend_from_slice(self.row(i));
        }
        FeatureMatrix {
            values,
            rows: indices.len(),
            cols: self.cols,
        }
    }

    /// New matrix keeping only the given column indices, in the given order.
    pub fn take_cols(&self, indices: &[usize]) -> FeatureMatrix {
        let mut values = Vec::with_capacity(indices.len() * self.rows);
        for r in 0..self.rows {
            let row = self.row(r);
            values.extend(indices.iter().map(|&c| row[c]));
        }
        FeatureMatrix {
            values,
            rows: self.rows,
            cols: indices.len(),
        }
    }
}

/// Feature matrix plus binary labels; the universal data carrier.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledDataset {
    features: FeatureMatrix,
    labels: Vec<u8>,
    feature_names: Vec<String>,
}

impl LabeledDataset {
    pub fn new(
        features: FeatureMatrix,
        labels: Vec<u8>,
        feature_names: Vec<String>,
    ) -> Result<Self> {
        if features.n_rows() != labels.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} feature rows vs {} labels",
                features.n_rows(),
                labels.len()
            )));
        }
        if features.n_cols() != feature_names.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} feature columns vs {} names",
                features.n_cols(),
                feature_names.len()
            )));
        }
        for &l in &labels {
            if l > 1 {
                return Err(Error::NonBinaryLabel(l));
            }
        }
        for (i, name) in feature_names.iter().enumerate() {
            if feature_names[..i].contains(name) {
                return Err(Error::DuplicateFeature(name.clone()));
            }
        }
        Ok(LabeledDataset {
            features,
            labels,
            feature_names,
        })
    }

    /// Load a comma-delimited file with a header row. Every column other
    /// than `label_column` must be numeric; the label becomes 1 where the
    /// raw cell equals `positive_value` and 0 otherwise. Row order is
    /// preserved.
    pub fn from_csv_path(
        path: impl AsRef<Path>,
        label_column: &str,
        positive_value: &str,
    ) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_csv_reader(file, label_column, positive_value)
    }

    /// Same as [`LabeledDataset::from_csv_path`] but from any reader.
    pub fn from_csv_reader<R: Read>(
        reader: R,
        label_column: &str,
        positive_value: &str,
    ) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);

        let headers = rdr.headers()?.clone();
        let label_idx = headers
            .iter()
            .position(|h| h == label_column)
            .ok_or_else(|| Error::MissingColumn(label_column.to_string()))?;
        let feature_names: Vec<String> = headers
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != label_idx)
            .map(|(_, h)| h.to_string())
            .collect();

        let mut rows: Vec<Vec<f64>> = Vec::new();
        let mut labels: Vec<u8> = Vec::new();
        for (row_no, record) in rdr.records().enumerate() {
            let record = record?;
            let mut row = Vec::with_capacity(feature_names.len());
            for (i, cell) in record.iter().enumerate() {
                if i == label_idx {
                    labels.push(u8::from(cell == positive_value));
                } else {
                    let v: f64 = cell.parse().map_err(|_| Error::NonNumeric {
                        row: row_no + 1,
                        column: headers.get(i).unwrap_or("?").to_string(),
                        value: cell.to_string(),
                    })?;
                    row.push(v);
                }
            }
            if record.len() != headers.len() {
                return Err(Error::ShapeMismatch(format!(
                    "data row {} has {} fields, header has {}",
                    row_no + 1,
                    record.len(),
                    headers.len()
                )));
            }
            rows.push(row);
        }

        let cols = feature_names.len();
        LabeledDataset::new(FeatureMatrix::from_rows(rows, cols)?, labels, feature_names)
    }

    /// Write the dataset back out as CSV with the label in `label_column`.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W, label_column: &str) -> Result<()> {
        let header = self
            .feature_names
            .iter()
            .map(String::as_str)
            .chain(std::iter::once(label_column))
            .collect::<Vec<_>>()
            .join(",");
        writeln!(w, "{header}").map_err(write_err)?;
        for (row, label) in self.features.iter_rows().zip(&self.labels) {
            let mut line = String::new();
            for v in row {
                line.push_str(&v.to_string());
                line.push(',');
            }
            line.push_str(&label.to_string());
            writeln!(w, "{line}").map_err(write_err)?;
        }
        Ok(())
    }

    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn n_features(&self) -> usize {
        self.features.n_cols()
    }

    pub fn features(&self) -> &FeatureMatrix {
        &self.features
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.features.row(i)
    }

    pub fn feature_index(&self, name: &str) -> Result<usize> {
        self.feature_names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::UnknownFeature(name.to_string()))
    }

    /// Rows satisfying the predicate, original relative order preserved.
    /// An empty result is legal; downstream fitting operations reject it.
    pub fn filter_region(&self, pred: &RegionPredicate) -> Result<LabeledDataset> {
        let idx = self.feature_index(&pred.feature)?;
        let keep: Vec<usize> = (0..self.n_rows())
            .filter(|&i| pred.op.holds(self.features.row(i)[idx], pred.threshold))
            .collect();
        Ok(self.take_rows(&keep))
    }

    /// Uniform sample of floor(fraction * n) rows without replacement.
    /// Deterministic given the seed; sampled rows keep their original
    /// relative order, so fraction 1.0 is the identity.
    pub fn sample_fraction(&self, fraction: f64, seed: u64) -> Result<LabeledDataset> {
        if !(fraction > 0.0 && fraction <= 1.0) {
            return Err(Error::FractionOutOfRange(fraction));
        }
        if self.n_rows() == 0 {
            return Err(Error::EmptyDataset);
        }
        let count = (fraction * self.n_rows() as f64).floor() as usize;
        Ok(self.take_rows(&sample_indices(self.n_rows(), count, seed)))
    }

    /// Keep only the named features, in the given order.
    pub fn select_features(&self, names: &[String]) -> Result<LabeledDataset> {
        let indices = names
            .iter()
            .map(|n| self.feature_index(n))
            .collect::<Result<Vec<_>>>()?;
        LabeledDataset::new(
            self.features.take_cols(&indices),
            self.labels.clone(),
            names.to_vec(),
        )
    }

    /// Z-score each feature column. Returns the transformed dataset plus
    /// the per-feature statistics needed to transform queries the same
    /// way. Constant columns are left unscaled (std treated as 1).
    pub fn standardize(&self) -> (LabeledDataset, Vec<FeatureStats>) {
        let n = self.n_rows().max(1) as f64;
        let d = self.n_features();
        let mut stats = Vec::with_capacity(d);
        for j in 0..d {
            let mean = self.features.iter_rows().map(|r| r[j]).sum::<f64>() / n;
            let var = self
                .features
                .iter_rows()
                .map(|r| (r[j] - mean).powi(2))
                .sum::<f64>()
                / n;
            let std = if var > 0.0 { var.sqrt() } else { 1.0 };
            stats.push(FeatureStats { mean, std });
        }
        let rows: Vec<Vec<f64>> = self
            .features
            .iter_rows()
            .map(|r| {
                r.iter()
                    .zip(&stats)
                    .map(|(v, s)| (v - s.mean) / s.std)
                    .collect()
            })
            .collect();
        let features = FeatureMatrix::from_rows(rows, d).expect("same shape");
        (
            LabeledDataset {
                features,
                labels: self.labels.clone(),
                feature_names: self.feature_names.clone(),
            },
            stats,
        )
    }

    fn take_rows(&self, indices: &[usize]) -> LabeledDataset {
        LabeledDataset {
            features: self.features.take_rows(indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            feature_names: self.feature_names.clone(),
        }
    }
}

// write_csv targets arbitrary writers, so io failures carry no path.
fn write_err(source: std::io::Error) -> Error {
    Error::Io {
        path: std::path::PathBuf::from("<writer>"),
        source,
    }
}

/// Per-feature standardization parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureStats {
    pub mean: f64,
    pub std: f64,
}

/// Comparison operator for region predicates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CmpOp {
    Lt,
    Gt,
    Le,
    Ge,
}

impl CmpOp {
    fn holds(self, value: f64, threshold: f64) -> bool {
        match self {
            CmpOp::Lt => value < threshold,
            CmpOp::Gt => value > threshold,
            CmpOp::Le => value <= threshold,
            CmpOp::Ge => value >= threshold,
        }
    }

    fn as_str(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Gt => ">",
            CmpOp::Le => "<=",
            CmpOp::Ge => ">=",
        }
    }
}

/// Single-feature region predicate such as `C1 > -50`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionPredicate {
    pub feature: String,
    pub op: CmpOp,
    pub threshold: f64,
}

impl RegionPredicate {
    pub fn new(feature: impl Into<String>, op: CmpOp, threshold: f64) -> Self {
        RegionPredicate {
            feature: feature.into(),
            op,
            threshold,
        }
    }
}

impl fmt::Display for RegionPredicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}{}", self.feature, self.op.as_str(), self.threshold)
    }
}

impl FromStr for RegionPredicate {
    type Err = Error;

    /// Parse the compact CLI form, e.g. `C1>-50` or `C2 <= -60`.
    fn from_str(s: &str) -> Result<Self> {
        let invalid = || {
            Error::InvalidConfig(format!(
                "cannot parse region predicate '{s}'; expected <feature><op><number> with op one of <, >, <=, >="
            ))
        };
        // Longest operators first so "<=" is not read as "<" then "=".
        for (tok, op) in [
            ("<=", CmpOp::Le),
            (">=", CmpOp::Ge),
            ("<", CmpOp::Lt),
            (">", CmpOp::Gt),
        ] {
            if let Some(pos) = s.find(tok) {
                let feature = s[..pos].trim();
                let value = s[pos + tok.len()..].trim();
                if feature.is_empty() {
                    return Err(invalid());
                }
                let threshold: f64 = value.parse().map_err(|_| invalid())?;
                return Ok(RegionPredicate::new(feature, op, threshold));
            }
        }
        Err(invalid())
    }
}

/// Inputs paired with the base model's bit errors: 1 where the base
/// prediction differs from the ground-truth label.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorObservations {
    inputs: FeatureMatrix,
    errors: Vec<u8>,
}

impl ErrorObservations {
    pub fn new(inputs: FeatureMatrix, errors: Vec<u8>) -> Result<Self> {
        if inputs.n_rows() != errors.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} input rows vs {} error bits",
                inputs.n_rows(),
                errors.len()
            )));
        }
        for &e in &errors {
            if e > 1 {
                return Err(Error::NonBinaryLabel(e));
            }
        }
        Ok(ErrorObservations { inputs, errors })
    }

    /// Score a base model against the dataset's labels.
    pub fn observe(ds: &LabeledDataset, base: &dyn BaseModel) -> Result<Self> {
        if ds.n_rows() == 0 {
            return Err(Error::EmptyDataset);
        }
        let errors = ds
            .features
            .iter_rows()
            .zip(ds.labels())
            .map(|(row, &y)| u8::from(base.predict(row) != y))
            .collect();
        Ok(ErrorObservations {
            inputs: ds.features.clone(),
            errors,
        })
    }

    pub fn len(&self) -> usize {
        self.errors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.errors.is_empty()
    }

    pub fn inputs(&self) -> &FeatureMatrix {
        &self.inputs
    }

    pub fn errors(&self) -> &[u8] {
        &self.errors
    }

    pub fn input_dim(&self) -> usize {
        self.inputs.n_cols()
    }

    /// Fraction of observations where the base model was wrong.
    pub fn error_rate(&self) -> f64 {
        if self.errors.is_empty() {
            return 0.0;
        }
        self.errors.iter().map(|&e| e as f64).sum::<f64>() / self.errors.len() as f64
    }

    /// Uniform subsample of exactly `n` observations, without replacement,
    /// deterministic given the seed.
    pub fn sample_n(&self, n: usize, seed: u64) -> Result<ErrorObservations> {
        if n > self.len() {
            return Err(Error::NotEnoughRows {
                requested: n,
                available: self.len(),
            });
        }
        let indices = sample_indices(self.len(), n, seed);
        Ok(ErrorObservations {
            inputs: self.inputs.take_rows(&indices),
            errors: indices.iter().map(|&i| self.errors[i]).collect(),
        })
    }

    /// Write as CSV: feature columns followed by an `error` column.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W, feature_names: &[String]) -> Result<()> {
        let header = feature_names
            .iter()
            .map(String::as_str)
            .chain(std::iter::once("error"))
            .collect::<Vec<_>>()
            .join(",");
        writeln!(w, "{header}").map_err(write_err)?;
        for (row, e) in self.inputs.iter_rows().zip(&self.errors) {
            let mut line = String::new();
            for v in row {
                line.push_str(&v.to_string());
                line.push(',');
            }
            line.push_str(&e.to_string());
            writeln!(w, "{line}").map_err(write_err)?;
        }
        Ok(())
    }

    /// Read back the CSV produced by [`ErrorObservations::write_csv`].
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<(Self, Vec<String>)> {
        let ds = LabeledDataset::from_csv_reader(reader, "error", "1")?;
        let names = ds.feature_names().to_vec();
        Ok((
            ErrorObservations {
                inputs: ds.features,
                errors: ds.labels,
            },
            names,
        ))
    }
}

/// `count` indices sampled uniformly without replacement from 0..n,
/// returned in ascending order. ChaCha8 keyed by the seed.
fn sample_indices(n: usize, count: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut indices = rand::seq::index::sample(&mut rng, n, count).into_vec();
    indices.sort_unstable();
    indices
}
