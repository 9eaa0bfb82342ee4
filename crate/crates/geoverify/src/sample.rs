//! Deterministic sampling. A SplitMix64 generator with substreams derived
//! from (seed, label) keeps every check's point sequence independent of any
//! other check, so adding a check to a manifest never perturbs existing
//! residuals and reports stay byte-identical across runs and platforms.

use crate::chart::MetricSpec;

#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    /// Substream keyed by a label; FNV-1a over the label bytes mixed into the
    /// parent seed. Stable across versions by construction.
    pub fn substream(seed: u64, label: &str) -> Self {
        let mut h: u64 = 0xcbf29ce484222325;
        for b in label.as_bytes() {
            h ^= *b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
        let mut s = SplitMix64::new(seed ^ h);
        // one warm-up step decorrelates nearby seeds
        s.next_u64();
        s
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1).
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Uniform integer in [0, n).
    pub fn below(&mut self, n: usize) -> usize {
        (self.next_u64() % n as u64) as usize
    }
}

/// Samples a point inside the spec's domain box, inset by `margin_frac` of
/// each axis width so finite-difference stencils stay inside the box.
pub fn sample_point(spec: &MetricSpec, rng: &mut SplitMix64, margin_frac: f64) -> Vec<f64> {
    spec.domain
        .iter()
        .map(|(lo, hi)| {
            let w = hi - lo;
            rng.uniform(lo + margin_frac * w, hi - margin_frac * w)
        })
        .collect()
}

/// Standard sampling inset used by the check runner.
pub const CHECK_MARGIN: f64 = 0.05;
