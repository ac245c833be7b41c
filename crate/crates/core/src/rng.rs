//! Counter-based random stream.
//!
//! Every random draw is a pure function of `(seed, coordinates, tag)`, so two
//! windows built from the same spec agree wherever they overlap, regardless
//! of their size or the order in which cells are visited.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hashes a seed, a lattice coordinate and a stream tag into one 64-bit key.
#[inline]
pub fn key(seed: u64, coords: &[i64], tag: u64) -> u64 {
    let mut h = mix64(seed.wrapping_add(GOLDEN));
    for &c in coords {
        h = mix64(h ^ (c as u64).wrapping_add(GOLDEN));
    }
    mix64(h ^ tag.wrapping_mul(GOLDEN).wrapping_add(0x632B_E59B_D9B4_E019))
}

/// Maps a key to the open unit interval (0, 1) using its top 52 bits.
#[inline]
pub fn unit(key: u64) -> f64 {
    ((key >> 12) as f64 + 0.5) * (1.0 / (1u64 << 52) as f64)
}

/// Uniform draw in (0, 1) for `(seed, coords, tag)`.
#[inline]
pub fn uniform(seed: u64, coords: &[i64], tag: u64) -> f64 {
    unit(key(seed, coords, tag))
}

/// Derives the seed of replica `index` from a base seed.
pub fn replica_seed(base: u64, index: u64) -> u64 {
    mix64(base ^ mix64(index.wrapping_add(0xD1B5_4A32_D192_ED03)))
}
