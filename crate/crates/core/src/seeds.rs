//! Deterministic seed derivation. Every randomized component draws from a
//! ChaCha8 stream keyed by a seed derived here, so results are reproducible
//! across runs, platforms and thread counts.

/// SplitMix64 finalizer; a bijective mixer on u64.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent stream seed from a base seed and a role tag.
pub fn stream_seed(base: u64, tag: u64) -> u64 {
    splitmix64(base ^ splitmix64(tag))
}

/// Per-cell seed of the study grid: `base_seed ^ hash(n, replicate)`.
pub fn cell_seed(base: u64, n: u64, replicate: u64) -> u64 {
    base ^ splitmix64(splitmix64(n).wrapping_add(replicate))
}

/// Stream tags. Distinct tags give independent ChaCha streams from one seed.
pub mod tag {
    pub const INPUTS: u64 = 1;
    pub const NOISE: u64 = 2;
    pub const INIT: u64 = 3;
    pub const SHUFFLE: u64 = 4;
    pub const TARGET: u64 = 5;
    pub const TEST: u64 = 6;
    pub const TRAIN: u64 = 7;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_differ_and_repeat() {
        assert_eq!(stream_seed(42, tag::INPUTS), stream_seed(42, tag::INPUTS));
        assert_ne!(stream_seed(42, tag::INPUTS), stream_seed(42, tag::NOISE));
        assert_ne!(stream_seed(42, tag::INPUTS), stream_seed(43, tag::INPUTS));
    }

    #[test]
    fn cell_seeds_are_pure_and_distinct() {
        assert_eq!(cell_seed(7, 256, 0), cell_seed(7, 256, 0));
        let mut seen = std::collections::HashSet::new();
        for n in [256u64, 512, 1024] {
            for r in 0..5u64 {
                assert!(seen.insert(cell_seed(7, n, r)));
            }
        }
    }
}
