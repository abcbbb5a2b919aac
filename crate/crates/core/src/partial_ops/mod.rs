//! Convolutions and matrix products evaluated only at requested positions,
//! their preprocess-then-query forms, and the quad tree whose leaves are
//! computed through shift-matrix products.

mod matrix;
mod shift;
mod special;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::convolution::{check_entry_bound, convolve_fast, ConvError, DenseVector};

pub use matrix::{
    matmul_naive, partial_matmul, pmm_index_build, pmm_index_query, Matrix, MatrixFile, PmmIndex, PreparedProduct,
    Semiring, DENSE_BELOW,
};
pub use shift::{
    build_shift_matrices, build_v_blocks, leaf_conv_via_matmul, leaf_conv_via_matmul_chunked, reassembly_map,
    Product, ShiftMatrixPair, VBlocks,
};
pub use special::{
    build_special_quad_tree, build_special_quad_tree_with_density, LeafBackend, Piece, SpecialNode, SpecialQuadTree,
};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PartialError {
    #[error("index {index} outside output range [0, {len})")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("entry ({row},{col}) outside a {rows}x{cols} matrix")]
    EntryOutOfRange { row: usize, col: usize, rows: usize, cols: usize },
    #[error("cannot multiply {left:?} by {right:?}")]
    DimensionMismatch { left: (usize, usize), right: (usize, usize) },
    #[error("query vector of length {len} exceeds preprocessed length {bound}")]
    QueryTooLong { len: usize, bound: usize },
    #[error("no index set {index}; the index holds {count}")]
    UnknownSet { index: usize, count: usize },
    #[error("sub-vector has length {len}, expected {expected}")]
    WrongLength { len: usize, expected: usize },
    #[error("vector has {ones} ones, above the declared limit {limit}")]
    TooDense { ones: usize, limit: usize },
    #[error("{0}")]
    BadParameter(String),
    #[error(transparent)]
    Conv(#[from] ConvError),
}

/// Sorted, duplicate-free positions.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct IndexSet<T: Ord>(Vec<T>);

impl<T: Ord> IndexSet<T> {
    /// Sorts and deduplicates.
    pub fn new(mut items: Vec<T>) -> Self {
        items.sort_unstable();
        items.dedup();
        Self(items)
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, x: &T) -> bool {
        self.0.binary_search(x).is_ok()
    }

    pub fn into_vec(self) -> Vec<T> {
        self.0
    }
}

impl<T: Ord> FromIterator<T> for IndexSet<T> {
    fn from_iter<I: IntoIterator<Item = T>>(iter: I) -> Self {
        Self::new(iter.into_iter().collect())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PartialStrategy {
    /// Whole convolution by transforms, then selection.
    FullFast,
    /// Per requested index, a sum over the nonzeros of `u`.
    SparseDirect,
}

fn check_indices(s: &IndexSet<usize>, len: usize) -> Result<(), PartialError> {
    match s.as_slice().last() {
        Some(&last) if last >= len => Err(PartialError::IndexOutOfRange { index: last, len }),
        _ => Ok(()),
    }
}

fn nonzeros(u: &DenseVector) -> Vec<(usize, u64)> {
    u.as_slice().iter().enumerate().filter(|(_, &x)| x != 0).map(|(i, &x)| (i, x)).collect()
}

/// `sum_a u[a] v[k-a]` over the nonzeros `nz` of `u`, sorted by position.
fn sparse_entry(nz: &[(usize, u64)], v: &[u64], k: usize) -> u64 {
    let lo = nz.partition_point(|&(a, _)| a + v.len() <= k);
    let hi = nz.partition_point(|&(a, _)| a <= k);
    nz[lo..hi].iter().map(|&(a, x)| x * v[k - a]).sum()
}

pub fn partial_convolution_with(
    u: &DenseVector,
    v: &DenseVector,
    s: &IndexSet<usize>,
    strategy: PartialStrategy,
) -> Result<BTreeMap<usize, u64>, PartialError> {
    check_entry_bound(u, v)?;
    check_indices(s, u.len() + v.len() - 1)?;
    if s.is_empty() {
        return Ok(BTreeMap::new());
    }
    Ok(match strategy {
        PartialStrategy::FullFast => {
            let w = convolve_fast(u, v)?;
            s.as_slice().iter().map(|&k| (k, w.entries[k])).collect()
        }
        PartialStrategy::SparseDirect => {
            let nz = nonzeros(u);
            s.as_slice().iter().map(|&k| (k, sparse_entry(&nz, v.as_slice(), k))).collect()
        }
    })
}

/// Convolution values at the indices of `s`. Picks the cheaper strategy by
/// a rough operation count; both give identical results.
pub fn partial_convolution(
    u: &DenseVector,
    v: &DenseVector,
    s: &IndexSet<usize>,
) -> Result<BTreeMap<usize, u64>, PartialError> {
    let nnz = u.as_slice().iter().filter(|&&x| x != 0).count();
    let n = u.len() + v.len();
    let fft_cost = 3 * n * (usize::BITS - n.leading_zeros()) as usize;
    let strategy = if s.len().saturating_mul(nnz.min(v.len())) <= fft_cost {
        PartialStrategy::SparseDirect
    } else {
        PartialStrategy::FullFast
    };
    partial_convolution_with(u, v, s, strategy)
}

/// Preprocessed `u` and index set, answering partial convolutions for any
/// `v` no longer than `u`.
#[derive(Clone, Debug)]
pub struct PcIndex {
    u: DenseVector,
    nonzeros: Vec<(usize, u64)>,
    s: IndexSet<usize>,
}

impl PcIndex {
    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn indices(&self) -> &IndexSet<usize> {
        &self.s
    }
}

pub fn pc_index_build(u: &DenseVector, s: IndexSet<usize>) -> Result<PcIndex, PartialError> {
    if u.is_empty() {
        return Err(ConvError::Empty.into());
    }
    // Queries have |v| <= |u|, so no index can reach 2|u| - 1.
    check_indices(&s, 2 * u.len() - 1)?;
    Ok(PcIndex { nonzeros: nonzeros(u), u: u.clone(), s })
}

pub fn pc_index_query(idx: &PcIndex, v: &DenseVector) -> Result<BTreeMap<usize, u64>, PartialError> {
    if v.len() > idx.u.len() {
        return Err(PartialError::QueryTooLong { len: v.len(), bound: idx.u.len() });
    }
    check_entry_bound(&idx.u, v)?;
    check_indices(&idx.s, idx.u.len() + v.len() - 1)?;
    Ok(idx.s.as_slice().iter().map(|&k| (k, sparse_entry(&idx.nonzeros, v.as_slice(), k))).collect())
}

/// Splits `s` into consecutive runs of at most `cap` positions.
pub fn chunk_locations<T: Ord + Clone>(s: &IndexSet<T>, cap: usize) -> Vec<IndexSet<T>> {
    assert!(cap >= 1, "chunk cap must be positive");
    s.as_slice().chunks(cap).map(|c| IndexSet(c.to_vec())).collect()
}
