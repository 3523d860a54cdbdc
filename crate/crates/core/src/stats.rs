//! Seed derivation and summary statistics for repeated runs.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Derives an independent seed for job `index` from a master seed.
///
/// SplitMix64 finaliser applied to the pair; stable across platforms.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master
        .wrapping_add(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(index.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Mean with an error bar of two standard deviations of the mean.
///
/// The standard deviation is the population form, so a single sample has
/// zero error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanError {
    pub count: usize,
    pub mean: f64,
    pub sd_of_mean: f64,
    pub min: f64,
    pub max: f64,
}

impl MeanError {
    pub fn from_samples(xs: &[f64]) -> Option<Self> {
        if xs.is_empty() {
            return None;
        }
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        Some(Self {
            count: xs.len(),
            mean,
            sd_of_mean: var.sqrt() / n.sqrt(),
            min: xs.iter().copied().fold(f64::INFINITY, f64::min),
            max: xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        })
    }

    /// Reported error: `2 * sd_of_mean`.
    pub fn error(&self) -> f64 {
        2.0 * self.sd_of_mean
    }
}
