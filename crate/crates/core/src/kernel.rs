//! Squared exponential covariance and Gram-matrix construction.
//!
//! k(x, x') = variance * exp(-||x - x'||^2 / (2 * length_scale^2))
//!
//! A small `jitter` term is treated as a white-noise component: it is added
//! on the Gram diagonal and to the self-covariance of query points, which
//! keeps factorizations stable and makes the prior variance at a far-away
//! point exactly `variance + jitter`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::data::FeatureMatrix;
use crate::error::{Error, Result};

/// Default jitter as a fraction of the signal variance.
pub const DEFAULT_JITTER_FACTOR: f64 = 1e-6;

/// Squared exponential kernel parameters. `variance` is the signal
/// variance s^2 with k(x, x) = s^2; the length scale is isotropic and in
/// raw feature units.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub variance: f64,
    pub length_scale: f64,
    pub jitter: f64,
}

impl KernelSpec {
    /// Kernel with the default jitter of `1e-6 * variance`.
    pub fn new(variance: f64, length_scale: f64) -> Result<Self> {
        Self::with_jitter(variance, length_scale, DEFAULT_JITTER_FACTOR * variance)
    }

    pub fn with_jitter(variance: f64, length_scale: f64, jitter: f64) -> Result<Self> {
        let spec = KernelSpec {
            variance,
            length_scale,
            jitter,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.variance > 0.0 && self.variance.is_finite()) {
            return Err(Error::InvalidKernel(format!(
                "variance must be positive, got {}",
                self.variance
            )));
        }
        if !(self.length_scale > 0.0 && self.length_scale.is_finite()) {
            return Err(Error::InvalidKernel(format!(
                "length scale must be positive, got {}",
                self.length_scale
            )));
        }
        if !(self.jitter >= 0.0 && self.jitter.is_finite()) {
            return Err(Error::InvalidKernel(format!(
                "jitter must be non-negative, got {}",
                self.jitter
            )));
        }
        Ok(())
    }

    /// Covariance between two points. Symmetric, bounded by `variance`.
    pub fn k(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        if x.len() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                got: y.len(),
            });
        }
        Ok(self.k_unchecked(x, y))
    }

    #[inline]
    pub(crate) fn k_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        let mut d2 = 0.0;
        for (a, b) in x.iter().zip(y) {
            let diff = a - b;
            d2 += diff * diff;
        }
        self.variance * (-d2 / (2.0 * self.length_scale * self.length_scale)).exp()
    }

    /// Gram matrix over the rows of `x`, with jitter on the diagonal.
    /// Built entry by entry with a fixed summation order and mirrored, so
    /// the result is exactly symmetric and independent of scheduling.
    pub fn gram(&self, x: &FeatureMatrix) -> DMatrix<f64> {
        let n = x.n_rows();
        let mut g = DMatrix::zeros(n, n);
        for i in 0..n {
            g[(i, i)] = self.variance + self.jitter;
            for j in (i + 1)..n {
                let v = self.k_unchecked(x.row(i), x.row(j));
                g[(i, j)] = v;
                g[(j, i)] = v;
            }
        }
        g
    }

    /// Covariance vector between a query point and every row of `x`.
    pub(crate) fn cross(&self, query: &[f64], x: &FeatureMatrix) -> nalgebra::DVector<f64> {
        nalgebra::DVector::from_iterator(
            x.n_rows(),
            x.iter_rows().map(|row| self.k_unchecked(query, row)),
        )
    }
}
