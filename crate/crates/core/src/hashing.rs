//! Multiply-shift hashing into `R = 2^s` buckets, the linearity offsets of
//! the family, and the bucket decomposition with overflow handling.
//!
//! `h(x) = ((mult * x) mod 2^w) >> (w - s)` with an odd multiplier. Inputs
//! are taken modulo `2^w` (two's complement), which is the same as adding a
//! fixed multiple of `2^w` to negatives. Because `x -> mult * x mod 2^w` is
//! additive, `h(x) + h(y) - h(x + y) mod R` is always `0` or `R - 1`.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instances::{ConvInstance, SolutionWitness};
use crate::rng::SplitMix64;

pub const DEFAULT_WORD_BITS: u32 = 63;
/// Bucket size limit is `ceil(OVERFLOW_FACTOR * n / R)`.
pub const DEFAULT_OVERFLOW_FACTOR: usize = 3;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum HashError {
    #[error("multiplier {0} must be odd")]
    EvenMultiplier(u64),
    #[error("need 0 < out_bits <= word_bits <= 63, got s={out_bits}, w={word_bits}")]
    BadWidths { word_bits: u32, out_bits: u32 },
    #[error("input {x} is outside the {word_bits}-bit signed range")]
    InputOutOfRange { x: i64, word_bits: u32 },
}

/// One member of the multiply-shift family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HashFn {
    #[serde(rename = "mult")]
    multiplier: u64,
    #[serde(rename = "w")]
    word_bits: u32,
    #[serde(rename = "s")]
    out_bits: u32,
}

impl HashFn {
    pub fn new(multiplier: u64, word_bits: u32, out_bits: u32) -> Result<Self, HashError> {
        if out_bits == 0 || out_bits > word_bits || word_bits > 63 {
            return Err(HashError::BadWidths { word_bits, out_bits });
        }
        if multiplier & 1 == 0 {
            return Err(HashError::EvenMultiplier(multiplier));
        }
        let mask = (1u64 << word_bits) - 1;
        Ok(Self { multiplier: multiplier & mask, word_bits, out_bits })
    }

    /// Random odd multiplier over a `word_bits`-bit word.
    pub fn draw(rng: &mut SplitMix64, word_bits: u32, out_bits: u32) -> Result<Self, HashError> {
        Self::new(rng.next_u64() | 1, word_bits, out_bits)
    }

    pub fn multiplier(&self) -> u64 {
        self.multiplier
    }

    pub fn word_bits(&self) -> u32 {
        self.word_bits
    }

    pub fn out_bits(&self) -> u32 {
        self.out_bits
    }

    /// Number of buckets `R = 2^s`.
    pub fn range(&self) -> usize {
        1usize << self.out_bits
    }

    fn mask(&self) -> u64 {
        (1u64 << self.word_bits) - 1
    }

    /// Map `x` to its canonical `w`-bit word.
    pub fn canonicalize(&self, x: i64) -> Result<u64, HashError> {
        let half = 1i128 << (self.word_bits - 1);
        if (x as i128) < -half || (x as i128) >= half {
            return Err(HashError::InputOutOfRange { x, word_bits: self.word_bits });
        }
        Ok((x as u64) & self.mask())
    }

    pub fn eval(&self, x: i64) -> Result<usize, HashError> {
        Ok(self.eval_word(self.canonicalize(x)?))
    }

    fn eval_word(&self, word: u64) -> usize {
        let product = self.multiplier.wrapping_mul(word) & self.mask();
        (product >> (self.word_bits - self.out_bits)) as usize
    }

    /// Hash of every element; the instance's universe keeps all inputs in range.
    pub fn eval_all(&self, values: &[i64]) -> Result<Vec<usize>, HashError> {
        values.iter().map(|&x| self.eval(x)).collect()
    }

    /// The set `D` of residues `h(x) + h(y) - h(x+y) mod R` over all inputs.
    ///
    /// With `s < w` both `0` and `R - 1` occur (the low `w - s` bits of
    /// `mult * x` range over everything because `mult` is odd); with
    /// `s = w` the map is exactly linear.
    pub fn linearity_offsets(&self) -> BTreeSet<usize> {
        let mut d = BTreeSet::from([0]);
        if self.out_bits < self.word_bits {
            d.insert(self.range() - 1);
        }
        d
    }
}

/// Signed discrepancy `h(x) + h(y) - h(x+y)` reduced mod `R`.
pub fn discrepancy(h: &HashFn, x: i64, y: i64) -> Result<usize, HashError> {
    let r = h.range();
    let s = h.eval(x)? + h.eval(y)? + r - h.eval(x + y)?;
    Ok(s % r)
}

/// Indices of an instance partitioned by hash value.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BucketDecomposition {
    buckets: Vec<Vec<usize>>,
    hashes: Vec<usize>,
    threshold: usize,
    overflow: Vec<usize>,
    overflowed: Vec<bool>,
}

impl BucketDecomposition {
    pub fn buckets(&self) -> &[Vec<usize>] {
        &self.buckets
    }

    pub fn bucket(&self, a: usize) -> &[usize] {
        &self.buckets[a]
    }

    /// Bucket of index `i`.
    pub fn hash_of(&self, i: usize) -> usize {
        self.hashes[i]
    }

    pub fn hashes(&self) -> &[usize] {
        &self.hashes
    }

    pub fn threshold(&self) -> usize {
        self.threshold
    }

    /// Indices that live in a bucket larger than the threshold, ascending.
    pub fn overflow(&self) -> &[usize] {
        &self.overflow
    }

    pub fn is_overflowed_bucket(&self, a: usize) -> bool {
        self.overflowed[a]
    }

    /// Bucket `a` with overflowed buckets treated as empty.
    pub fn light_bucket(&self, a: usize) -> &[usize] {
        if self.overflowed[a] {
            &[]
        } else {
            &self.buckets[a]
        }
    }
}

/// Partition indices by `h(A[i])`, flagging buckets larger than
/// `ceil(factor * n / R)`.
pub fn build_buckets_with_factor(
    inst: &ConvInstance,
    h: &HashFn,
    factor: usize,
) -> Result<BucketDecomposition, HashError> {
    let n = inst.len();
    let r = h.range();
    if r > n {
        log::warn!("bucket count {r} exceeds instance length {n}");
    }
    let hashes = h.eval_all(inst.values())?;
    let mut buckets = vec![Vec::new(); r];
    for (i, &b) in hashes.iter().enumerate() {
        buckets[b].push(i);
    }
    let threshold = (factor * n).div_ceil(r);
    let overflowed: Vec<bool> = buckets.iter().map(|b| b.len() > threshold).collect();
    let overflow = (0..n).filter(|&i| overflowed[hashes[i]]).collect();
    Ok(BucketDecomposition { buckets, hashes, threshold, overflow, overflowed })
}

pub fn build_buckets(inst: &ConvInstance, h: &HashFn) -> Result<BucketDecomposition, HashError> {
    build_buckets_with_factor(inst, h, DEFAULT_OVERFLOW_FACTOR)
}

/// Direct check of every identity that touches an overflow index, in any of
/// its three roles (first addend, second addend, or sum position). Returns
/// the smallest `(i, j)` found.
pub fn scan_overflow(inst: &ConvInstance, dec: &BucketDecomposition) -> Option<SolutionWitness> {
    let n = inst.len();
    let mut best: Option<(usize, usize)> = None;
    let mut offer = |i: usize, j: usize| {
        if best.is_none_or(|b| (i, j) < b) {
            best = Some((i, j));
        }
    };
    for &p in dec.overflow() {
        for j in 0..n - p {
            if inst.conv_holds(p, j) {
                offer(p, j);
            }
            if inst.conv_holds(j, p) {
                offer(j, p);
            }
        }
        for i in 0..=p {
            if inst.conv_holds(i, p - i) {
                offer(i, p - i);
            }
        }
    }
    best.map(|(i, j)| SolutionWitness::Conv { i, j })
}
