//! Shared input builders for the benchmarks.

use errmeta::data::{ErrorObservations, FeatureMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random error observations on an integer lattice, the shape the error
/// model sees in the signal-strength experiments.
pub fn lattice_observations(n: usize, seed: u64) -> ErrorObservations {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            vec![
                rng.random_range(-60..=-40) as f64,
                rng.random_range(-75..=-60) as f64,
            ]
        })
        .collect();
    let errors: Vec<u8> = rows
        .iter()
        .map(|r| u8::from(r[0] < -52.0) ^ (rng.random_range(0..10) == 0) as u8)
        .collect();
    ErrorObservations::new(FeatureMatrix::from_rows(rows, 2).unwrap(), errors).unwrap()
}

/// Random query points over the same range.
pub fn queries(n: usize, seed: u64) -> Vec<[f64; 2]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            [
                rng.random_range(-65.0..-35.0),
                rng.random_range(-80.0..-40.0),
            ]
        })
        .collect()
}
