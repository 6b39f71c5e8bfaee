//! Counter-based random streams.
//!
//! A stream is ChaCha12 keyed by the master seed with the task index as the 64-bit stream id.
//! Distinct task indices address disjoint keystreams, so two tasks never share output.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

pub type StreamRng = ChaCha12Rng;

pub fn rng_stream(master: u64, task: u64) -> StreamRng {
    let mut rng = ChaCha12Rng::seed_from_u64(master);
    rng.set_stream(task);
    rng
}

/// Seed for a nested family of streams: `rng_stream(child_seed(m, i), j)`.
pub fn child_seed(master: u64, task: u64) -> u64 {
    use rand::RngCore;
    // skip the first block so the child seed never equals a value handed out by the parent stream
    let mut rng = rng_stream(master, task);
    rng.set_word_pos(1 << 40);
    rng.next_u64()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngCore;

    #[test]
    fn reproducible() {
        let mut a = rng_stream(7, 3);
        let mut b = rng_stream(7, 3);
        for _ in 0..16 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn distinct_streams() {
        let mut a = rng_stream(7, 3);
        let mut b = rng_stream(7, 4);
        let va: Vec<u64> = (0..4).map(|_| a.next_u64()).collect();
        let vb: Vec<u64> = (0..4).map(|_| b.next_u64()).collect();
        assert_ne!(va, vb);
        assert_ne!(child_seed(7, 3), child_seed(7, 4));
    }
}
