//! Counter-based randomness. Every variate is a pure function of
//! `(seed, key words)`, so sampling is reproducible independently of batch
//! size, iteration order, and thread count: parallel workers hash their own
//! indices instead of sharing mutable generator state.

/// 2^64 / golden ratio, the SplitMix64 increment.
const PHI: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer; bijective on u64 with good avalanche behavior.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Collapse a seed and a key tuple into one well-mixed 64-bit state.
#[inline]
pub fn key(seed: u64, words: &[u64]) -> u64 {
    let mut h = mix64(seed.wrapping_add(PHI));
    for &w in words {
        h = mix64(h ^ mix64(w.wrapping_add(PHI)));
    }
    h
}

/// Map 64 random bits to the open interval (0, 1): 53-bit mantissa offset by
/// half an ulp, so log and Box-Muller never see 0 or 1.
#[inline]
pub fn unit_open(bits: u64) -> f64 {
    ((bits >> 11) as f64 + 0.5) * (1.0 / 9_007_199_254_740_992.0)
}

/// Uniform variate in (0, 1) for the given seed and key words.
#[inline]
pub fn uniform(seed: u64, words: &[u64]) -> f64 {
    unit_open(key(seed, words))
}

/// Standard normal variate for the given seed and key words, via the
/// Box-Muller cosine branch on two uniforms derived from the key.
#[inline]
pub fn standard_normal(seed: u64, words: &[u64]) -> f64 {
    let k = key(seed, words);
    let u1 = unit_open(mix64(k.wrapping_add(PHI)));
    let u2 = unit_open(mix64(k.wrapping_add(PHI.wrapping_mul(2))));
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}
