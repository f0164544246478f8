//! Deterministic seed derivation and trace permutation.
//!
//! Experiments need many independent-looking RNG streams, each pinned to a
//! (base seed, prompt, ordering index) coordinate so that reruns and
//! cross-arm comparisons replay the same randomness. Seeds come from a
//! splitmix64 chain over those coordinates; streams are ChaCha12 seeded with
//! the result.

use super::{HarnessError, RewardTrace};
use crate::distributions::RewardDistribution;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// One round of the splitmix64 output function (Steele, Lea, Flood
/// constants). Bijective on `u64`, cheap, and well mixed.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a stream seed from `(base, label, index)`.
///
/// The label is folded in as zero-padded 8-byte little-endian chunks followed
/// by its length (so `"a"` and `"a\0"` cannot collide), each chunk passed
/// through one splitmix64 round. Same inputs, same seed, on every platform.
pub fn derive_seed(base: u64, label: &str, index: u64) -> u64 {
    let mut h = splitmix64(base);
    for chunk in label.as_bytes().chunks(8) {
        let mut buf = [0u8; 8];
        buf[..chunk.len()].copy_from_slice(chunk);
        h = splitmix64(h ^ u64::from_le_bytes(buf));
    }
    h = splitmix64(h ^ label.len() as u64);
    splitmix64(h ^ index)
}

/// The trace's rewards under ordering `ordering`: a Fisher-Yates shuffle
/// driven by the seed derived from `(base_seed, prompt_id, ordering)`.
/// Ordering indices enumerate reproducible resampled generation orders.
pub fn permuted_rewards(trace: &RewardTrace, base_seed: u64, ordering: u64) -> Vec<f64> {
    let mut values = trace.rewards.clone();
    let mut rng =
        ChaCha12Rng::seed_from_u64(derive_seed(base_seed, &trace.prompt_id, ordering));
    for i in (1..values.len()).rev() {
        let j = rng.random_range(0..=i);
        values.swap(i, j);
    }
    values
}

/// Ground-truth benchmark for a trace: the `alpha` percentile (lower order
/// statistic) of the full recorded reward set. Experiments referee every
/// policy against this fixed value, never against a policy's own estimate.
pub fn ground_truth_benchmark(trace: &RewardTrace, alpha: f64) -> Result<f64, HarnessError> {
    let dist = RewardDistribution::empirical(&trace.rewards)?;
    Ok(dist.percentile(alpha)?)
}
