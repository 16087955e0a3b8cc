//! Logistic-regression error model, kept as a comparison baseline.
//!
//! The fitted rate is a deterministic function of the input, so its
//! confidence never responds to data density: the predicted propensity to
//! err increases monotonically along the weight vector no matter how far
//! a query sits from the training data. That behavior is exactly what the
//! GP model is meant to fix, and is pinned down by a characterization
//! test rather than treated as a bug.

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::ErrorObservations;
use crate::error::{Error, Result};
use crate::gp::{sigmoid, ErrorModel, PosteriorSummary};

/// Options for the iteratively reweighted least squares fit.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct LogisticOptions {
    /// Converged when the penalized log-likelihood improves by less than this.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for LogisticOptions {
    fn default() -> Self {
        LogisticOptions {
            tol: 1e-8,
            max_iter: 100,
        }
    }
}

/// Ridge stabilizer keeping the MLE finite on separable data. A deviation
/// from the pure MLE, small enough to be irrelevant away from separation.
const RIDGE: f64 = 1e-8;

/// Fitted logistic error model: intercept followed by one weight per
/// feature.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LogisticFit {
    beta: Vec<f64>,
    converged: bool,
    iterations: usize,
    stationarity: f64,
}

/// Maximum-likelihood fit (with the tiny ridge) via IRLS with step
/// halving. Non-convergence is reported on the returned fit, not hidden.
pub fn fit_logistic(obs: &ErrorObservations, opts: &LogisticOptions) -> Result<LogisticFit> {
    let m = obs.len();
    if m == 0 {
        return Err(Error::EmptyDataset);
    }
    let d = obs.input_dim();
    let p = d + 1;

    // Design matrix with an intercept column.
    let mut x = DMatrix::zeros(m, p);
    for (i, row) in obs.inputs().iter_rows().enumerate() {
        x[(i, 0)] = 1.0;
        for (j, &v) in row.iter().enumerate() {
            x[(i, j + 1)] = v;
        }
    }
    let eps = DVector::from_iterator(m, obs.errors().iter().map(|&e| e as f64));

    let mut beta = DVector::zeros(p);
    let mut ll = penalized_loglik(&x, &eps, &beta);
    let mut converged = false;
    let mut iterations = 0;

    for _ in 0..opts.max_iter {
        iterations += 1;
        let eta = &x * &beta;
        let pi = eta.map(sigmoid);
        let w = pi.map(|q| q * (1.0 - q));
        let grad = x.transpose() * (&eps - &pi) - RIDGE * &beta;

        let mut hess = DMatrix::zeros(p, p);
        for i in 0..m {
            let wi = w[i];
            for a in 0..p {
                for b in 0..p {
                    hess[(a, b)] += wi * x[(i, a)] * x[(i, b)];
                }
            }
        }
        for a in 0..p {
            hess[(a, a)] += RIDGE;
        }

        let step = Cholesky::new(hess)
            .ok_or(Error::CholeskyFailed)?
            .solve(&grad);

        // Halve the step until the penalized likelihood stops decreasing.
        let mut scale = 1.0;
        let mut next_beta = &beta + &step * scale;
        let mut next_ll = penalized_loglik(&x, &eps, &next_beta);
        let mut halvings = 0;
        while next_ll < ll && halvings < 30 {
            scale *= 0.5;
            next_beta = &beta + &step * scale;
            next_ll = penalized_loglik(&x, &eps, &next_beta);
            halvings += 1;
        }

        let improvement = next_ll - ll;
        beta = next_beta;
        ll = next_ll;
        if improvement.abs() < opts.tol {
            converged = true;
            break;
        }
    }

    let pi = (&x * &beta).map(sigmoid);
    let grad = x.transpose() * (&eps - &pi) - RIDGE * &beta;
    let stationarity = grad.amax();

    if beta.iter().any(|b| !b.is_finite()) {
        converged = false;
    }

    Ok(LogisticFit {
        beta: beta.as_slice().to_vec(),
        converged,
        iterations,
        stationarity,
    })
}

fn penalized_loglik(x: &DMatrix<f64>, eps: &DVector<f64>, beta: &DVector<f64>) -> f64 {
    let eta = x * beta;
    let mut ll = 0.0;
    for (e, &f) in eps.iter().zip(eta.iter()) {
        let z = if *e == 1.0 { f } else { -f };
        ll -= softplus(-z);
    }
    ll - 0.5 * RIDGE * beta.norm_squared()
}

fn softplus(u: f64) -> f64 {
    if u > 34.0 {
        u
    } else {
        u.exp().ln_1p()
    }
}

impl LogisticFit {
    /// Build directly from coefficients (intercept first).
    pub fn from_coefficients(beta: Vec<f64>) -> Result<Self> {
        if beta.is_empty() {
            return Err(Error::ShapeMismatch("empty coefficient vector".to_string()));
        }
        Ok(LogisticFit {
            beta,
            converged: true,
            iterations: 0,
            stationarity: f64::NAN,
        })
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.beta
    }

    pub fn converged(&self) -> bool {
        self.converged
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// Max-norm of the penalized log-likelihood gradient at the solution.
    pub fn stationarity(&self) -> f64 {
        self.stationarity
    }

    pub fn input_dim(&self) -> usize {
        self.beta.len() - 1
    }

    /// logistic(beta . [1, x])
    pub fn predict_error_rate(&self, x: &[f64]) -> Result<f64> {
        if !self.converged {
            return Err(Error::UnconvergedFit);
        }
        Ok(sigmoid(self.logit(x)?))
    }

    fn logit(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                got: x.len(),
            });
        }
        Ok(self.beta[0]
            + self.beta[1..]
                .iter()
                .zip(x)
                .map(|(b, v)| b * v)
                .sum::<f64>())
    }
}

impl ErrorModel for LogisticFit {
    /// A point estimate: the logit is deterministic, so the reported
    /// variance is identically zero and variance-based abstention never
    /// triggers for this model.
    fn posterior(&self, x: &[f64]) -> Result<PosteriorSummary> {
        if !self.converged {
            return Err(Error::UnconvergedFit);
        }
        let logit = self.logit(x)?;
        Ok(PosteriorSummary {
            logit_mean: logit,
            logit_var: 0.0,
            error_rate: sigmoid(logit),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{ErrorObservations, FeatureMatrix};
    use approx::assert_abs_diff_eq;

    fn obs(points: Vec<Vec<f64>>, errors: Vec<u8>) -> ErrorObservations {
        let d = points[0].len();
        ErrorObservations::new(FeatureMatrix::from_rows(points, d).unwrap(), errors).unwrap()
    }

    #[test]
    fn all_zero_errors_drive_the_rate_below_one_percent() {
        let points: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64 / 10.0]).collect();
        let fit = fit_logistic(&obs(points.clone(), vec![0; 20]), &Default::default()).unwrap();
        assert!(fit.converged());
        for p in &points {
            assert!(fit.predict_error_rate(p).unwrap() < 0.01);
        }
    }

    #[test]
    fn separable_direction_has_a_positive_weight() {
        let points: Vec<Vec<f64>> = [-3.0, -2.0, -1.0, 1.0, 2.0, 3.0]
            .iter()
            .map(|&x| vec![x])
            .collect();
        let errors = vec![0, 0, 0, 1, 1, 1];
        let fit = fit_logistic(&obs(points, errors), &Default::default()).unwrap();
        assert!(fit.converged());
        assert!(fit.coefficients()[1] > 0.0);
    }

    #[test]
    fn balanced_errors_at_one_point_estimate_one_half() {
        let fit = fit_logistic(
            &obs(vec![vec![2.0]; 10], vec![1, 0, 1, 0, 1, 0, 1, 0, 1, 0]),
            &Default::default(),
        )
        .unwrap();
        assert_abs_diff_eq!(fit.predict_error_rate(&[2.0]).unwrap(), 0.5, epsilon = 1e-3);
    }

    #[test]
    fn point_predictions_match_the_logistic_form() {
        let fit = LogisticFit::from_coefficients(vec![0.0, 0.0]).unwrap();
        assert_eq!(fit.predict_error_rate(&[123.0]).unwrap(), 0.5);

        let fit = LogisticFit::from_coefficients(vec![0.0, 1.0]).unwrap();
        assert_eq!(fit.predict_error_rate(&[0.0]).unwrap(), 0.5);
        assert_abs_diff_eq!(
            fit.predict_error_rate(&[3f64.ln()]).unwrap(),
            0.75,
            epsilon = 1e-15
        );
    }

    #[test]
    fn rate_is_monotone_along_the_weight_vector() {
        let points: Vec<Vec<f64>> = (0..30)
            .map(|i| vec![(i % 6) as f64, (i % 5) as f64])
            .collect();
        let errors: Vec<u8> = (0..30).map(|i| u8::from((i % 6) >= 3)).collect();
        let fit = fit_logistic(&obs(points, errors), &Default::default()).unwrap();
        let w = &fit.coefficients()[1..].to_vec();
        let start = vec![0.0, 0.0];
        let mut last = 0.0;
        for t in 0..50 {
            let x: Vec<f64> = start
                .iter()
                .zip(w)
                .map(|(s, wi)| s + t as f64 * wi)
                .collect();
            let rate = fit.predict_error_rate(&x).unwrap();
            assert!(rate + 1e-12 >= last, "rate decreased along the weight vector");
            last = rate;
        }
        // Far along that ray the rate saturates near 1: the model has no
        // notion of leaving the data.
        let far: Vec<f64> = w.iter().map(|wi| 1e3 * wi).collect();
        assert!(fit.predict_error_rate(&far).unwrap() > 0.99);
    }

    #[test]
    fn gradient_vanishes_at_the_fit() {
        let points: Vec<Vec<f64>> = (0..40).map(|i| vec![(i as f64 - 20.0) / 5.0]).collect();
        let errors: Vec<u8> = (0..40).map(|i| u8::from(i % 3 == 0)).collect();
        let fit = fit_logistic(&obs(points, errors), &Default::default()).unwrap();
        assert!(fit.converged());
        assert!(fit.stationarity() < 1e-6, "gradient {}", fit.stationarity());
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let fit = LogisticFit::from_coefficients(vec![0.0, 1.0]).unwrap();
        assert!(matches!(
            fit.predict_error_rate(&[1.0, 2.0]).unwrap_err(),
            Error::DimensionMismatch { .. }
        ));
    }
}
