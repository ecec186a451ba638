//! Counter-based per-trial random streams.
//!
//! Every trial draws from ChaCha8 keyed by the master seed, with the stream
//! id set from `(trial_index, stream)`. A trial's randomness therefore does
//! not depend on scheduling or on how many other trials ran.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Target = 0,
    Codebook = 1,
    Noise = 2,
    StopAtZero = 3,
    Adversary = 4,
}

const STREAMS: u64 = 8;

pub fn stream_rng(master_seed: u64, trial: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(trial.wrapping_mul(STREAMS).wrapping_add(stream as u64));
    rng
}

/// The streams the procedure itself consumes.
#[derive(Debug, Clone)]
pub struct TrialRngs {
    pub codebook: ChaCha8Rng,
    pub noise: ChaCha8Rng,
    pub stop: ChaCha8Rng,
}

impl TrialRngs {
    pub fn derive(master_seed: u64, trial: u64) -> Self {
        Self {
            codebook: stream_rng(master_seed, trial, Stream::Codebook),
            noise: stream_rng(master_seed, trial, Stream::Noise),
            stop: stream_rng(master_seed, trial, Stream::StopAtZero),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn streams_are_distinct_and_reproducible() {
        let a: u64 = stream_rng(1, 0, Stream::Noise).gen();
        let b: u64 = stream_rng(1, 0, Stream::Noise).gen();
        let c: u64 = stream_rng(1, 0, Stream::Adversary).gen();
        let d: u64 = stream_rng(1, 1, Stream::Noise).gen();
        let e: u64 = stream_rng(2, 0, Stream::Noise).gen();
        assert_eq!(a, b);
        assert!(a != c && a != d && a != e);
    }
}
