//! Counter-based random streams.
//!
//! A computation is split into fixed-size batches; batch `b` of domain `d`
//! draws from ChaCha8 seeded by `(seed, d)` on stream `b`. Results therefore
//! depend only on the seed and the batch layout, never on the worker count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Samples per batch for every Monte Carlo estimator.
pub const BATCH: u64 = 4096;

/// Domain tags keep estimators that share a user seed independent.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    Forms = 1,
    Volume = 2,
    Haar = 3,
    Experiment = 4,
    Instances = 5,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a user seed with a tag into a fresh 64-bit seed.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    splitmix(seed ^ splitmix(tag))
}

/// Generator for `stream` within `domain`.
pub fn stream_rng(seed: u64, domain: Domain, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, domain as u64));
    rng.set_stream(stream);
    rng
}

/// Batch ranges covering `0..total` in `BATCH`-sized pieces.
pub fn batches(total: u64) -> impl Iterator<Item = (u64, u64)> + Clone {
    let count = total.div_ceil(BATCH);
    (0..count).map(move |b| (b, BATCH.min(total - b * BATCH)))
}
