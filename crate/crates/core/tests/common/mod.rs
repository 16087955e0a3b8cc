//! Shared test oracles and helpers.
//!
//! The oracles deliberately avoid the library's stabilized linear-algebra
//! path: modes come from naive Newton with explicitly inverted matrices
//! (fine at these sizes), predictions from the textbook formulas with
//! explicit inverses, and marginal likelihoods from quadrature. Agreement
//! between the two routes is what the oracle tests assert.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Mode of the scalar posterior log sigma(+/-g) - g^2 / (2 v), found by
/// bisection on its derivative.
pub fn scalar_mode_oracle(error_bit: u8, prior_var: f64) -> f64 {
    let h = |g: f64| (error_bit as f64 - sigmoid(g)) - g / prior_var;
    let (mut lo, mut hi) = (-60.0, 60.0);
    assert!(h(lo) > 0.0 || error_bit == 0);
    assert!(h(lo).signum() != h(hi).signum());
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if h(mid).signum() == h(lo).signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Predictive mean and variance for a single training point, from the
/// exact rank-one formulas.
pub fn scalar_predict_oracle(
    error_bit: u8,
    prior_var: f64,
    k_star: f64,
    k_star_star: f64,
) -> (f64, f64) {
    let mode = scalar_mode_oracle(error_bit, prior_var);
    let w = sigmoid(mode) * (1.0 - sigmoid(mode));
    let mean = k_star * mode / prior_var;
    let var = k_star_star - k_star * k_star / (prior_var + 1.0 / w);
    (mean, var)
}

/// Posterior mode by naive Newton in the unwhitened parametrization,
/// using an explicit inverse of the Gram matrix. Only sane for tiny m.
pub fn dense_mode_oracle(gram: &DMatrix<f64>, errors: &[u8]) -> DVector<f64> {
    let m = errors.len();
    let k_inv = gram
        .clone()
        .try_inverse()
        .expect("oracle Gram matrix invertible");
    let eps = DVector::from_iterator(m, errors.iter().map(|&e| e as f64));
    let mut g = DVector::zeros(m);
    for _ in 0..200 {
        let pi = g.map(sigmoid);
        let grad = &eps - &pi - &k_inv * &g;
        let mut hess = k_inv.clone();
        for i in 0..m {
            hess[(i, i)] += pi[i] * (1.0 - pi[i]);
        }
        let step = hess
            .try_inverse()
            .expect("oracle Hessian invertible")
            * grad;
        g += &step;
        if step.amax() < 1e-13 {
            break;
        }
    }
    g
}

/// Textbook predictive formulas with explicit inverses:
/// mean = k*' K^-1 mode, var = k** - k*' (K + W^-1)^-1 k*.
pub fn dense_predict_oracle(
    gram: &DMatrix<f64>,
    mode: &DVector<f64>,
    k_star: &DVector<f64>,
    k_star_star: f64,
) -> (f64, f64) {
    let k_inv = gram
        .clone()
        .try_inverse()
        .expect("oracle Gram matrix invertible");
    let mean = k_star.dot(&(&k_inv * mode));

    let mut k_plus_winv = gram.clone();
    for i in 0..mode.len() {
        let pi = sigmoid(mode[i]);
        k_plus_winv[(i, i)] += 1.0 / (pi * (1.0 - pi));
    }
    let inv = k_plus_winv
        .try_inverse()
        .expect("oracle K + W^-1 invertible");
    let var = k_star_star - k_star.dot(&(&inv * k_star));
    (mean, var)
}

/// log of the exact scalar marginal likelihood, integral of the Bernoulli
/// likelihood against the N(0, v) prior, by Simpson's rule.
pub fn scalar_lml_quadrature(error_bit: u8, prior_var: f64) -> f64 {
    let sd = prior_var.sqrt();
    let (a, b) = (-12.0 * sd - 10.0, 12.0 * sd + 10.0);
    let n = 40_000usize; // even
    let h = (b - a) / n as f64;
    let density = |g: f64| {
        let lik = if error_bit == 1 {
            sigmoid(g)
        } else {
            sigmoid(-g)
        };
        lik * (-g * g / (2.0 * prior_var)).exp() / (sd * (2.0 * std::f64::consts::PI).sqrt())
    };
    let mut acc = density(a) + density(b);
    for i in 1..n {
        let coeff = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += coeff * density(a + i as f64 * h);
    }
    (acc * h / 3.0).ln()
}
