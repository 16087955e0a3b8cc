//! Gaussian-process model of a base classifier's error rate, fitted by
//! Laplace approximation.
//!
//! The latent function g is the logit of the error rate and carries a
//! zero-mean GP prior, so with no nearby observations the estimated error
//! rate reverts to 0.5. Observed error bits enter through a
//! Bernoulli-logistic likelihood; the non-Gaussian posterior is replaced
//! by a Gaussian centered at its mode with covariance from the local
//! Hessian. Fitting runs Newton's method in the standard stabilized form
//! built around B = I + sqrt(W) K sqrt(W), so the Gram matrix K is never
//! inverted directly.
//!
//! A query returns two numbers:
//!   * `logit_mean`  — the estimated error-rate logit (squashed through the
//!     logistic function it is the estimated error rate itself);
//!   * `logit_var`   — the confidence on that estimate, large wherever the
//!     training data is sparse.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::data::{ErrorObservations, FeatureMatrix};
use crate::error::{Error, Result};
use crate::kernel::{KernelSpec, DEFAULT_JITTER_FACTOR};

/// Absolute tolerance below which a negative predictive variance is
/// treated as floating-point cancellation and clamped to zero.
const NEGATIVE_VARIANCE_TOL: f64 = 1e-8;

/// Maximum number of jitter doublings before giving up on factorization.
const JITTER_RETRIES: usize = 8;

/// Options for the Laplace fit.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct LaplaceOptions {
    /// Convergence tolerance on the max-norm of the Newton step.
    pub tol: f64,
    /// Maximum Newton iterations before the fit is reported unconverged.
    pub max_iter: usize,
    /// Hard cap on the number of training observations. The posterior
    /// factorization is cubic in this count, so the cap keeps runs from
    /// silently degrading.
    pub max_train: usize,
}

impl Default for LaplaceOptions {
    fn default() -> Self {
        LaplaceOptions {
            tol: 1e-6,
            max_iter: 50,
            max_train: 2000,
        }
    }
}

/// Posterior summary at a single query point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSummary {
    /// E[g(x*) | D], the estimated error-rate logit.
    pub logit_mean: f64,
    /// Var(g(x*) | D), the confidence on that estimate. Non-negative.
    pub logit_var: f64,
    /// logistic(logit_mean), the plug-in error-rate point estimate.
    pub error_rate: f64,
}

/// Anything that can summarize its belief about the base model's error
/// rate at a point. Implemented by the GP fit and the logistic baseline.
pub trait ErrorModel {
    fn posterior(&self, x: &[f64]) -> Result<PosteriorSummary>;
}

/// Fitted Laplace state. Immutable once constructed; predictions on a
/// shared fit may run fully in parallel.
#[derive(Clone, Debug)]
pub struct GpFit {
    train_inputs: FeatureMatrix,
    spec: KernelSpec,
    errors: Vec<u8>,
    mode: DVector<f64>,
    grad_at_mode: DVector<f64>,
    sqrt_w: DVector<f64>,
    chol_b: Cholesky<f64, Dyn>,
    converged: bool,
    iterations: usize,
    stationarity: f64,
    loglik_at_mode: f64,
    quad_term: f64,
}

/// Fit the error model on observed error bits.
///
/// Newton iteration maximizes the unnormalized log posterior
/// log p(eps | g) - 0.5 g' K^-1 g. Convergence means the max-norm of the
/// Newton step fell below `opts.tol` within `opts.max_iter` iterations;
/// otherwise the fit is returned with `converged() == false` and refuses
/// to predict. A failed Cholesky factorization escalates the jitter
/// (doubling, up to 8 times) before reporting a hard error.
pub fn fit_laplace(
    obs: &ErrorObservations,
    spec: KernelSpec,
    opts: &LaplaceOptions,
) -> Result<GpFit> {
    spec.validate()?;
    let m = obs.len();
    if m == 0 {
        return Err(Error::EmptyDataset);
    }
    if m > opts.max_train {
        return Err(Error::TrainSizeExceeded {
            got: m,
            limit: opts.max_train,
        });
    }

    let eps = DVector::from_iterator(m, obs.errors().iter().map(|&e| e as f64));
    let mut spec_eff = spec;
    for _attempt in 0..=JITTER_RETRIES {
        let gram = spec_eff.gram(obs.inputs());
        match newton(&gram, &eps, opts) {
            Ok(state) => {
                return assemble_fit(obs, spec_eff, state, &gram, &eps);
            }
            Err(NewtonFailure::Cholesky) => {
                spec_eff.jitter = escalate_jitter(spec_eff.jitter, spec_eff.variance);
            }
        }
    }
    Err(Error::CholeskyFailed)
}

fn escalate_jitter(jitter: f64, variance: f64) -> f64 {
    if jitter > 0.0 {
        jitter * 2.0
    } else {
        DEFAULT_JITTER_FACTOR * variance
    }
}

enum NewtonFailure {
    Cholesky,
}

struct NewtonState {
    mode: DVector<f64>,
    coeffs: DVector<f64>, // a = K^-1 mode, maintained exactly by f = K a
    converged: bool,
    iterations: usize,
}

fn newton(
    gram: &DMatrix<f64>,
    eps: &DVector<f64>,
    opts: &LaplaceOptions,
) -> std::result::Result<NewtonState, NewtonFailure> {
    let m = eps.len();
    let mut f = DVector::zeros(m);
    let mut coeffs = DVector::zeros(m);
    let mut converged = false;
    let mut iterations = 0;

    for _ in 0..opts.max_iter {
        iterations += 1;
        let pi = f.map(sigmoid);
        let w = pi.map(|p| p * (1.0 - p));
        let s = w.map(f64::sqrt);
        let grad = eps - &pi;

        let chol = Cholesky::new(b_matrix(gram, &s)).ok_or(NewtonFailure::Cholesky)?;
        let b = w.component_mul(&f) + &grad;
        let t = s.component_mul(&(gram * &b));
        coeffs = &b - s.component_mul(&chol.solve(&t));
        let f_new = gram * &coeffs;
        let step = (&f_new - &f).amax();
        f = f_new;
        if step < opts.tol {
            converged = true;
            break;
        }
    }

    Ok(NewtonState {
        mode: f,
        coeffs,
        converged,
        iterations,
    })
}

fn assemble_fit(
    obs: &ErrorObservations,
    spec: KernelSpec,
    state: NewtonState,
    gram: &DMatrix<f64>,
    eps: &DVector<f64>,
) -> Result<GpFit> {
    let pi = state.mode.map(sigmoid);
    let w = pi.map(|p| p * (1.0 - p));
    let sqrt_w = w.map(f64::sqrt);
    let grad_at_mode = eps - &pi;
    // Factorize at the final mode so the stored state is self-consistent.
    let chol_b = Cholesky::new(b_matrix(gram, &sqrt_w)).ok_or(Error::CholeskyFailed)?;

    let stationarity = (&grad_at_mode - &state.coeffs).amax();
    let loglik_at_mode = bernoulli_loglik(obs.errors(), &state.mode);
    let quad_term = state.coeffs.dot(&state.mode);

    Ok(GpFit {
        train_inputs: obs.inputs().clone(),
        spec,
        errors: obs.errors().to_vec(),
        mode: state.mode,
        grad_at_mode,
        sqrt_w,
        chol_b,
        converged: state.converged,
        iterations: state.iterations,
        stationarity,
        loglik_at_mode,
        quad_term,
    })
}

/// B = I + sqrt(W) K sqrt(W).
fn b_matrix(gram: &DMatrix<f64>, s: &DVector<f64>) -> DMatrix<f64> {
    let m = s.len();
    let mut b = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            b[(i, j)] = s[i] * gram[(i, j)] * s[j];
        }
        b[(i, i)] += 1.0;
    }
    b
}

impl GpFit {
    pub fn converged(&self) -> bool {
        self.converged
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// Max-norm of the log-posterior gradient at the stored mode.
    pub fn stationarity(&self) -> f64 {
        self.stationarity
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    pub fn n_train(&self) -> usize {
        self.errors.len()
    }

    pub fn input_dim(&self) -> usize {
        self.train_inputs.n_cols()
    }

    pub fn mode(&self) -> &[f64] {
        self.mode.as_slice()
    }

    pub fn train_inputs(&self) -> &FeatureMatrix {
        &self.train_inputs
    }

    /// Posterior logit mean and variance at a query point.
    ///
    /// mean = k*' (eps - pi(mode)); var = k(x*, x*) - ||L \ (sqrt(W) k*)||^2
    /// with k(x*, x*) = variance + jitter. Tiny negative variances from
    /// cancellation are clamped to zero; anything below -1e-8 is an error.
    pub fn predict(&self, x: &[f64]) -> Result<PosteriorSummary> {
        if !self.converged {
            return Err(Error::UnconvergedFit);
        }
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                got: x.len(),
            });
        }
        let k_star = self.spec.cross(x, &self.train_inputs);
        let logit_mean = k_star.dot(&self.grad_at_mode);

        let sk = self.sqrt_w.component_mul(&k_star);
        let v = self
            .chol_b
            .l_dirty()
            .solve_lower_triangular(&sk)
            .ok_or(Error::CholeskyFailed)?;
        let mut logit_var = self.spec.variance + self.spec.jitter - v.norm_squared();
        if logit_var < 0.0 {
            if logit_var < -NEGATIVE_VARIANCE_TOL {
                return Err(Error::NegativeVariance(logit_var));
            }
            log::warn!("clamping negative predictive variance {logit_var:e} to 0");
            logit_var = 0.0;
        }

        Ok(PosteriorSummary {
            logit_mean,
            logit_var,
            error_rate: sigmoid(logit_mean),
        })
    }

    /// Laplace approximation of the log marginal likelihood:
    /// -0.5 a'f + log p(eps | f) - sum_i log L_ii at the mode.
    pub fn log_marginal_likelihood(&self) -> Result<f64> {
        if !self.converged {
            return Err(Error::UnconvergedFit);
        }
        let half_logdet: f64 = self
            .chol_b
            .l_dirty()
            .diagonal()
            .iter()
            .map(|d| d.ln())
            .sum();
        Ok(-0.5 * self.quad_term + self.loglik_at_mode - half_logdet)
    }

    /// Serializable snapshot. Derived quantities (likelihood gradient,
    /// Hessian diagonal, factorization) are rebuilt on load, bit-identical
    /// because the rebuild runs the same deterministic code paths.
    pub fn to_artifact(&self) -> GpArtifact {
        GpArtifact {
            format_version: GP_ARTIFACT_VERSION,
            spec: self.spec,
            inputs: self.train_inputs.clone(),
            errors: self.errors.clone(),
            mode: self.mode.as_slice().to_vec(),
            converged: self.converged,
            iterations: self.iterations,
            stationarity: self.stationarity,
            quad_term: self.quad_term,
        }
    }

    pub fn from_artifact(artifact: GpArtifact) -> Result<GpFit> {
        if artifact.format_version != GP_ARTIFACT_VERSION {
            return Err(Error::InvalidConfig(format!(
                "unsupported fit artifact version {}",
                artifact.format_version
            )));
        }
        artifact.spec.validate()?;
        let m = artifact.errors.len();
        if artifact.inputs.n_rows() != m || artifact.mode.len() != m || m == 0 {
            return Err(Error::ShapeMismatch(
                "artifact inputs, errors, and mode disagree".to_string(),
            ));
        }
        for &e in &artifact.errors {
            if e > 1 {
                return Err(Error::NonBinaryLabel(e));
            }
        }

        let mode = DVector::from_vec(artifact.mode);
        let eps = DVector::from_iterator(m, artifact.errors.iter().map(|&e| e as f64));
        let pi = mode.map(sigmoid);
        let w = pi.map(|p| p * (1.0 - p));
        let sqrt_w = w.map(f64::sqrt);
        let grad_at_mode = &eps - &pi;
        let gram = artifact.spec.gram(&artifact.inputs);
        let chol_b = Cholesky::new(b_matrix(&gram, &sqrt_w)).ok_or(Error::CholeskyFailed)?;
        let loglik_at_mode = bernoulli_loglik(&artifact.errors, &mode);

        Ok(GpFit {
            train_inputs: artifact.inputs,
            spec: artifact.spec,
            errors: artifact.errors,
            mode,
            grad_at_mode,
            sqrt_w,
            chol_b,
            converged: artifact.converged,
            iterations: artifact.iterations,
            stationarity: artifact.stationarity,
            quad_term: artifact.quad_term,
            loglik_at_mode,
        })
    }
}

impl ErrorModel for GpFit {
    fn posterior(&self, x: &[f64]) -> Result<PosteriorSummary> {
        self.predict(x)
    }
}

pub const GP_ARTIFACT_VERSION: u32 = 1;

/// Versioned on-disk form of a fitted model, enough to rebuild the full
/// state so a model can be trained once and swept many times.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GpArtifact {
    pub format_version: u32,
    pub spec: KernelSpec,
    pub inputs: FeatureMatrix,
    pub errors: Vec<u8>,
    pub mode: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub stationarity: f64,
    pub quad_term: f64,
}

/// Numerically stable logistic function.
pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// log p(eps | f) for Bernoulli bits under a logistic link, computed in
/// the overflow-safe form -softplus(-z) with z = +/- f per bit.
pub(crate) fn bernoulli_loglik(errors: &[u8], f: &DVector<f64>) -> f64 {
    errors
        .iter()
        .zip(f.iter())
        .map(|(&e, &fi)| {
            let z = if e == 1 { fi } else { -fi };
            -softplus(-z)
        })
        .sum()
}

fn softplus(u: f64) -> f64 {
    if u > 34.0 {
        u
    } else {
        u.exp().ln_1p()
    }
}
