//! Per-trial seed derivation.

/// Independent random streams within one trial.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stream {
    Labeled = 1,
    Nuclei = 2,
    Test = 3,
    TieBreak = 4,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Hash of `(base, n, trial, stream)`.
pub fn derive_seed(base: u64, n: u64, trial: u64, stream: Stream) -> u64 {
    [n, trial, stream as u64]
        .into_iter()
        .fold(splitmix64(base), |h, v| splitmix64(h ^ splitmix64(v)))
}
