//! Counter-based keyed generator.
//!
//! Every random quantity in the crate is a pure function of a 64-bit key and
//! integer coordinates, so values can be addressed in any order (and from any
//! thread) and still agree. The mixing function is the SplitMix64 finalizer
//! applied to a running combination of the inputs.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
#[inline(always)]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hash of a key and two coordinates.
#[inline(always)]
pub fn hash2(key: u64, a: u64, b: u64) -> u64 {
    let h = mix64(key.wrapping_add(GOLDEN));
    let h = mix64(h ^ a.wrapping_mul(GOLDEN).wrapping_add(0x632B_E59B_D9B4_E019));
    mix64(h ^ b.wrapping_mul(0xD6E8_FEB8_6659_FD93).wrapping_add(GOLDEN))
}

/// Hash of a key and three coordinates.
#[inline(always)]
pub fn hash3(key: u64, a: u64, b: u64, c: u64) -> u64 {
    mix64(hash2(key, a, b) ^ c.wrapping_mul(0xA076_1D64_78BD_642F).wrapping_add(GOLDEN))
}

/// Maps 64 random bits onto `[0, 1)` using the top 53 bits.
#[inline(always)]
pub fn to_unit(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform variate in `[0, 1)` addressed by `(key, a, b)`.
#[inline(always)]
pub fn uniform2(key: u64, a: i64, b: u64) -> f64 {
    to_unit(hash2(key, a as u64, b))
}

/// Derives a child seed from a parent seed, an index and a stream label.
pub fn derive_seed(parent: u64, index: u64, stream: u64) -> u64 {
    hash2(parent ^ 0x5EED_5EED_5EED_5EED, index, stream)
}
