//! Counter-based random substreams.
//!
//! A [`RandomStream`] is a ChaCha8 key. Forking mixes a label into the key,
//! and [`RandomStream::substream`] selects a ChaCha stream number, so the
//! generator for `(seed, labels.., index)` is fixed regardless of which
//! worker evaluates it or in what order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator type handed to every sampling routine.
pub type StreamRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RandomStream {
    key: [u64; 4],
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RandomStream {
    pub fn new(seed: u64) -> Self {
        let mut state = seed;
        let key = [splitmix64(&mut state), splitmix64(&mut state), splitmix64(&mut state), splitmix64(&mut state)];
        Self { key }
    }

    /// Derives an independent stream for a named coordinate (hop, purpose, ...).
    pub fn fork(&self, label: u64) -> Self {
        let mut key = [0u64; 4];
        let mut state = label ^ 0xD6E8_FEB8_6659_FD93;
        for (i, k) in key.iter_mut().enumerate() {
            let mut s = self.key[i] ^ splitmix64(&mut state);
            *k = splitmix64(&mut s);
        }
        Self { key }
    }

    /// Generator for one trial (or time index) of this stream.
    pub fn substream(&self, index: u64) -> StreamRng {
        let mut seed = [0u8; 32];
        for (chunk, word) in seed.chunks_exact_mut(8).zip(self.key) {
            chunk.copy_from_slice(&word.to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(seed);
        rng.set_stream(index);
        rng
    }
}
