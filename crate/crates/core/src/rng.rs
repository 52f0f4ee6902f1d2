//! Seeded uniform streams.
//!
//! Every sampler in the crate draws from a ChaCha8 generator keyed by a 64-bit
//! seed and a 64-bit stream id. ChaCha is counter based, so distinct stream ids
//! under one seed never overlap and parallel workers stay reproducible.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Generator for sub-stream `stream_id` of `seed`.
pub fn stream(seed: u64, stream_id: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id);
    rng
}

/// Uniform draw on the open interval (0, 1); never returns 0 or 1.
#[inline]
pub fn open01<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let bits = rng.next_u64() >> 11;
    (bits as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Mixes a label into a stream id, so experiment cells keyed by name get
/// disjoint sub-streams (FNV-1a).
pub fn stream_id_for(label: &str) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for byte in label.bytes() {
        hash ^= u64::from(byte);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}
