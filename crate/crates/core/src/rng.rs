//! Deterministic random source shared by every generator and experiment.
//!
//! The generator is SplitMix64, defined bit-exactly so that other
//! implementations reproduce the same instances from the same seed:
//!
//! ```text
//! state  <- state + 0x9E3779B97F4A7C15          (wrapping, 64-bit)
//! z      <- state
//! z      <- (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 (wrapping)
//! z      <- (z ^ (z >> 27)) * 0x94D049BB133111EB (wrapping)
//! output <- z ^ (z >> 31)
//! ```
//!
//! Bounded draws use the multiply-high reduction
//! `below(b) = (next_u64() as u128 * b as u128) >> 64`, and signed ranges
//! `[lo, hi]` are `lo + below(hi - lo + 1)`. Child streams are derived with
//! [`SplitMix64::fork`], which seeds a new generator from one output word.

/// SplitMix64 state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(Self::GAMMA);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform draw in `[0, bound)`. `bound` must be nonzero.
    pub fn below(&mut self, bound: u64) -> u64 {
        debug_assert!(bound > 0);
        ((self.next_u64() as u128 * bound as u128) >> 64) as u64
    }

    /// Uniform index in `[0, bound)`.
    pub fn index(&mut self, bound: usize) -> usize {
        self.below(bound as u64) as usize
    }

    /// Uniform draw in the closed range `[lo, hi]`.
    pub fn range_i64(&mut self, lo: i64, hi: i64) -> i64 {
        debug_assert!(lo <= hi);
        let span = (hi as i128 - lo as i128 + 1) as u128;
        if span > u64::MAX as u128 {
            return self.next_u64() as i64;
        }
        lo.wrapping_add(self.below(span as u64) as i64)
    }

    pub fn coin(&mut self, numerator: u64, denominator: u64) -> bool {
        self.below(denominator) < numerator
    }

    /// Independent child stream.
    pub fn fork(&mut self) -> Self {
        Self::new(self.next_u64())
    }

    /// Fisher-Yates shuffle, walking from the back.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.index(i + 1);
            items.swap(i, j);
        }
    }

    /// `count` distinct sorted values from `[0, universe)`.
    pub fn sample_sorted(&mut self, universe: usize, count: usize) -> Vec<usize> {
        assert!(count <= universe, "cannot sample {count} of {universe}");
        // Floyd's algorithm keeps the draw count at exactly `count`.
        let mut chosen = std::collections::BTreeSet::new();
        for j in (universe - count)..universe {
            let t = self.index(j + 1);
            if !chosen.insert(t) {
                chosen.insert(j);
            }
        }
        chosen.into_iter().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_outputs() {
        // Published SplitMix64 outputs for seed 0.
        let mut g = SplitMix64::new(0);
        assert_eq!(g.next_u64(), 0xE220_A839_7B1D_CDAF);
        assert_eq!(g.next_u64(), 0x6E78_9E6A_A1B9_65F4);
        assert_eq!(g.next_u64(), 0x06C4_5D18_8009_454F);
    }

    #[test]
    fn bounded_draws_stay_in_range() {
        let mut g = SplitMix64::new(99);
        for _ in 0..10_000 {
            assert!(g.below(7) < 7);
            let x = g.range_i64(-3, 3);
            assert!((-3..=3).contains(&x));
        }
    }

    #[test]
    fn sample_sorted_is_distinct() {
        let mut g = SplitMix64::new(5);
        let s = g.sample_sorted(100, 40);
        assert_eq!(s.len(), 40);
        assert!(s.windows(2).all(|w| w[0] < w[1]));
        assert!(s.iter().all(|&x| x < 100));
        assert_eq!(g.sample_sorted(10, 10), (0..10).collect::<Vec<_>>());
    }
}
