//! Synthetic Wi-Fi-localization-style dataset generator.
//!
//! Emits a CSV with seven integer signal-strength features C1..C7 and a
//! `class` column in {1, 2, 3, 4}. Rows are drawn from per-class Gaussian
//! clusters and rounded to whole dBm values, which matters downstream:
//! with a short kernel length scale, posterior information concentrates on
//! repeated integer cells exactly as it does on real signal-strength data.
//!
//! The geometry is arranged so that region-based splits produce a genuine
//! distribution shift: classes 1 and 4 live in the low-C2 band (class 1 at
//! low C1, class 4 at higher C1), class 3 sits at high C1 / high C2, and
//! class 2 straddles the middle. A rule trained where C1 is high never
//! sees class 1, so it systematically errs on the low-C1 side of the
//! low-C2 band.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Generator settings. The same (rows, seed) pair always produces the
/// same CSV bytes.
#[derive(Clone, Copy, Debug)]
pub struct SynthConfig {
    pub rows: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            rows: 2000,
            seed: 7,
        }
    }
}

/// (mean, std) per class for C1 and C2, the two informative features.
const C1_PARAMS: [(f64, f64); 4] = [(-58.0, 3.0), (-55.0, 4.0), (-42.0, 4.0), (-44.0, 3.0)];
const C2_PARAMS: [(f64, f64); 4] = [(-70.0, 3.0), (-50.0, 5.0), (-44.0, 4.0), (-70.0, 3.0)];

/// Base means for the five filler features C3..C7.
const FILLER_BASE: [f64; 5] = [-72.0, -60.0, -66.0, -54.0, -68.0];
const FILLER_STD: f64 = 5.0;

/// Generate the dataset as CSV text with a header row.
pub fn generate_csv(config: &SynthConfig) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut out = String::with_capacity(config.rows * 32);
    out.push_str("C1,C2,C3,C4,C5,C6,C7,class\n");

    for i in 0..config.rows {
        let class = i % 4; // 0-based; emitted as 1..4
        let (m1, s1) = C1_PARAMS[class];
        let (m2, s2) = C2_PARAMS[class];
        let c1 = draw(&mut rng, m1, s1);
        let c2 = draw(&mut rng, m2, s2);
        out.push_str(&format!("{c1},{c2}"));
        for (j, base) in FILLER_BASE.iter().enumerate() {
            let mean = base + 4.0 * ((class + j) % 4) as f64;
            let v = draw(&mut rng, mean, FILLER_STD);
            out.push_str(&format!(",{v}"));
        }
        out.push_str(&format!(",{}\n", class + 1));
    }
    out
}

/// One rounded, clamped signal-strength value.
fn draw(rng: &mut ChaCha8Rng, mean: f64, std: f64) -> i64 {
    let normal = Normal::new(mean, std).expect("valid normal parameters");
    let v: f64 = normal.sample(rng);
    (v.round() as i64).clamp(-95, -10)
}
