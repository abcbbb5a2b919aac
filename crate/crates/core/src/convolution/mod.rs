//! Exact integer convolution, sparse binary vectors, and the brute-force
//! witness oracle.

mod ntt;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest admissible convolution entry.
pub const ENTRY_LIMIT: u128 = 1 << 62;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConvError {
    #[error("convolution entries may reach {bound}, above the 2^62 limit")]
    Overflow { bound: u128 },
    #[error("empty operand")]
    Empty,
    #[error("index {index} outside output range [0, {len})")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("position {position} outside vector of length {len}")]
    PositionOutOfRange { position: usize, len: usize },
    #[error("ones positions must be strictly increasing")]
    Unsorted,
}

/// Non-negative integer vector.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DenseVector {
    pub entries: Vec<u64>,
}

impl DenseVector {
    pub fn new(entries: Vec<u64>) -> Self {
        Self { entries }
    }

    pub fn zeros(len: usize) -> Self {
        Self { entries: vec![0; len] }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn max(&self) -> u64 {
        self.entries.iter().copied().max().unwrap_or(0)
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.entries
    }
}

impl From<Vec<u64>> for DenseVector {
    fn from(entries: Vec<u64>) -> Self {
        Self { entries }
    }
}

impl From<&SparseBitVector> for DenseVector {
    fn from(s: &SparseBitVector) -> Self {
        let mut entries = vec![0; s.len()];
        for &p in s.ones() {
            entries[p] = 1;
        }
        Self { entries }
    }
}

/// Binary vector stored as the sorted positions of its ones.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "SparseRepr", into = "SparseRepr")]
pub struct SparseBitVector {
    len: usize,
    ones: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct SparseRepr {
    len: usize,
    ones: Vec<usize>,
}

impl TryFrom<SparseRepr> for SparseBitVector {
    type Error = ConvError;
    fn try_from(r: SparseRepr) -> Result<Self, ConvError> {
        SparseBitVector::new(r.len, r.ones)
    }
}

impl From<SparseBitVector> for SparseRepr {
    fn from(s: SparseBitVector) -> Self {
        SparseRepr { len: s.len, ones: s.ones }
    }
}

impl SparseBitVector {
    pub fn new(len: usize, ones: Vec<usize>) -> Result<Self, ConvError> {
        if ones.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ConvError::Unsorted);
        }
        if let Some(&last) = ones.last() {
            if last >= len {
                return Err(ConvError::PositionOutOfRange { position: last, len });
            }
        }
        Ok(Self { len, ones })
    }

    pub fn zeros(len: usize) -> Self {
        Self { len, ones: Vec::new() }
    }

    /// From a 0/1 string, position 0 first: `"1101"` has ones at 0, 1, 3.
    pub fn from_bits(bits: &str) -> Self {
        let ones = bits.bytes().enumerate().filter(|&(_, b)| b == b'1').map(|(i, _)| i).collect();
        Self { len: bits.len(), ones }
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let ones = bits.iter().enumerate().filter(|&(_, &b)| b).map(|(i, _)| i).collect();
        Self { len: bits.len(), ones }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn ones(&self) -> &[usize] {
        &self.ones
    }

    pub fn count_ones(&self) -> usize {
        self.ones.len()
    }

    pub fn is_sparse(&self, r: usize) -> bool {
        self.ones.len() <= r
    }

    pub fn get(&self, position: usize) -> bool {
        self.ones.binary_search(&position).is_ok()
    }

    pub fn to_bools(&self) -> Vec<bool> {
        let mut out = vec![false; self.len];
        for &p in &self.ones {
            out[p] = true;
        }
        out
    }

    /// Copy with length extended by zeros.
    pub fn padded(&self, len: usize) -> Self {
        assert!(len >= self.len);
        Self { len, ones: self.ones.clone() }
    }
}

/// Rejects empty operands and products whose entries could pass [`ENTRY_LIMIT`].
pub fn check_entry_bound(u: &DenseVector, v: &DenseVector) -> Result<(), ConvError> {
    if u.is_empty() || v.is_empty() {
        return Err(ConvError::Empty);
    }
    let bound = u.max() as u128 * v.max() as u128 * u.len().min(v.len()) as u128;
    if bound > ENTRY_LIMIT {
        return Err(ConvError::Overflow { bound });
    }
    Ok(())
}

/// `w[k] = sum_i u[i] v[k-i]` by direct summation.
pub fn convolve_naive(u: &DenseVector, v: &DenseVector) -> Result<DenseVector, ConvError> {
    check_entry_bound(u, v)?;
    let mut out = vec![0u64; u.len() + v.len() - 1];
    for (i, &a) in u.entries.iter().enumerate() {
        if a == 0 {
            continue;
        }
        for (j, &b) in v.entries.iter().enumerate() {
            out[i + j] += a * b;
        }
    }
    Ok(DenseVector::new(out))
}

/// Same output as [`convolve_naive`], computed by exact transforms.
pub fn convolve_fast(u: &DenseVector, v: &DenseVector) -> Result<DenseVector, ConvError> {
    check_entry_bound(u, v)?;
    if u.len().min(v.len()) <= 16 {
        return convolve_naive(u, v);
    }
    Ok(DenseVector::new(ntt::convolve(&u.entries, &v.entries)))
}

/// Binary convolution as counts.
pub fn convolve_bits(u: &SparseBitVector, v: &SparseBitVector) -> Vec<u64> {
    if u.is_empty() || v.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0u64; u.len() + v.len() - 1];
    for &a in u.ones() {
        for &b in v.ones() {
            out[a + b] += 1;
        }
    }
    out
}

/// Every `(a, b)` with `a + b = k`, `u[a] = v[b] = 1`, ascending in `a`.
pub fn witnesses_at(
    u: &SparseBitVector,
    v: &SparseBitVector,
    k: usize,
) -> Result<Vec<(usize, usize)>, ConvError> {
    let out_len = (u.len() + v.len()).saturating_sub(1);
    if k >= out_len {
        return Err(ConvError::IndexOutOfRange { index: k, len: out_len });
    }
    Ok(u.ones()
        .iter()
        .take_while(|&&a| a <= k)
        .filter(|&&a| v.get(k - a))
        .map(|&a| (a, k - a))
        .collect())
}

/// Indicator vector of `bucket` over `[0, n)`.
pub fn characteristic_vector(bucket: &[usize], n: usize) -> Result<SparseBitVector, ConvError> {
    let ones: BTreeSet<usize> = bucket.iter().copied().collect();
    SparseBitVector::new(n, ones.into_iter().collect())
}
