//! Reproducible random substreams.
//!
//! A sweep owns one master seed. Every Monte-Carlo trial derives its own
//! ChaCha stream from `(master seed, irs_elements, snr_db, trial_index)`
//! through a SplitMix64 chain, so trials are independent of execution order
//! and can be replayed in isolation.

use rand_chacha::{rand_core::SeedableRng, ChaCha8Rng};

/// SplitMix64 finalizer; the standard 64-bit avalanche mix.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Folds an ordered list of counter words into one stream identifier.
pub fn substream_id(components: &[u64]) -> u64 {
    let mut acc = 0xa076_1d64_78bd_642f; // arbitrary non-zero start
    for &c in components {
        acc = splitmix64(acc ^ c);
    }
    acc
}

/// Per-trial random stream: master seed selects the key, the
/// `(irs_elements, snr_db bits, trial_index)` counters select the stream.
///
/// The trial consumes the stream in a fixed order: channel entries first,
/// then the noise tensor, then one word for the iterative initializer.
pub fn trial_rng(master_seed: u64, irs_elements: usize, snr_db: f64, trial_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(substream_id(&[
        irs_elements as u64,
        snr_db.to_bits(),
        trial_index,
    ]));
    rng
}
