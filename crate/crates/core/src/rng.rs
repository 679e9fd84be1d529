use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent random streams derived from one user seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Stream {
    Init = 0,
    Pairs = 1,
    Batches = 2,
    Split = 3,
    Shots = 4,
    Data = 5,
}

pub(crate) fn rng_for(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

/// Generator for item `index` of a per-item family (one per circuit run, say),
/// independent of how items are scheduled across threads.
pub(crate) fn rng_for_item(seed: u64, stream: Stream, index: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&index.to_le_bytes());
    key[16..24].copy_from_slice(&(stream as u64).to_le_bytes());
    ChaCha8Rng::from_seed(key)
}
