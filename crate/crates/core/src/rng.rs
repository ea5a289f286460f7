//! Seedable, portable pseudo-random generator for instance construction.
//!
//! SplitMix64 (Steele, Lea & Flood; Vigna's reference constants): 64 bits of
//! state, one multiply-xorshift chain per output. Instances built from a seed
//! are bit-identical across platforms and across reimplementations in other
//! languages, which is what the experiment fixtures rely on.

/// SplitMix64 generator.
#[derive(Debug, Clone, Copy)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform double in [0, 1) with 53 bits of resolution.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform double in [lo, hi).
    pub fn next_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }
}

/// Mixes a base seed with a stream index into an independent child seed.
///
/// One SplitMix64 output keyed on (seed, index) so that sweep points and runs
/// get decorrelated streams without coordinating state.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut g = SplitMix64::new(base ^ index.wrapping_mul(0xA076_1D64_78BD_642F));
    g.next_u64()
}
