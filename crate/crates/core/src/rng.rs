//! Seed splitting. Every random stream derives from one 64-bit seed plus a
//! stream index, using ChaCha's 64-bit stream counter, so replicates and
//! chains are independent and reproducible regardless of scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

pub type StreamRng = ChaCha20Rng;

/// Random source for stream `index` under `seed`.
pub fn stream(seed: u64, index: u64) -> StreamRng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Random source for a nested stream, e.g. chain `inner` of replicate `outer`.
pub fn substream(seed: u64, outer: u64, inner: u64) -> StreamRng {
    // outer indices occupy the high 32 bits
    stream(seed, (outer << 32) | (inner & 0xffff_ffff))
}
