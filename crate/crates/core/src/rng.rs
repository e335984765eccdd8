//! Reproducible random substreams.
//!
//! Every replication gets its own ChaCha8 stream: the 256-bit key is derived
//! from the master seed and a batch label, the 64-bit stream id is the
//! replication index. A replication's draws therefore depend only on
//! `(master_seed, label, index)`, never on which worker ran it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finaliser.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Key of one simulation batch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey([u8; 32]);

impl StreamKey {
    pub fn derive(master_seed: u64, labels: &[u64]) -> Self {
        let mut state = mix(master_seed);
        for &l in labels {
            state = mix(state ^ mix(l));
        }
        let mut key = [0u8; 32];
        for (i, chunk) in key.chunks_exact_mut(8).enumerate() {
            state = mix(state.wrapping_add(i as u64));
            chunk.copy_from_slice(&state.to_le_bytes());
        }
        StreamKey(key)
    }

    pub fn stream(&self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::from_seed(self.0);
        rng.set_stream(index);
        rng
    }
}
