//! Search structures that answer "which pairs produce output index k" for
//! sparse binary convolutions, and the bucketed Convolution-3SUM pipeline
//! built on top of them.

mod reduction;
mod tree;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use reduction::{
    count_candidates, reduce_conv3sum, timed_search, PhaseTimings, ReductionConfig, ReductionError, ReductionReport,
    SearchTiming, SearchVariant, Verdict,
};
pub use tree::{build_length_tree, build_ones_tree, build_ones_tree_with_density, Node, SearchStats, WitnessTree};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TreeError {
    #[error("u has {ones} ones, above the declared limit {limit}")]
    TooDense { ones: usize, limit: usize },
    #[error("length {len} must be a power of two and at least the leaf length {leaf}")]
    NotPowerOfTwo { len: usize, leaf: usize },
    #[error("quad tree needs |u| = |v|, got {u} and {v}")]
    LengthMismatch { u: usize, v: usize },
    #[error("index {index} outside output range [0, {len})")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("{0}")]
    BadParameter(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TreeVariant {
    OnesSplitBinary,
    LengthSplitBinary,
    LengthSplitQuad,
}

impl TreeVariant {
    pub const ALL: [TreeVariant; 3] =
        [TreeVariant::OnesSplitBinary, TreeVariant::LengthSplitBinary, TreeVariant::LengthSplitQuad];

    pub fn name(self) -> &'static str {
        match self {
            TreeVariant::OnesSplitBinary => "ones-split-binary",
            TreeVariant::LengthSplitBinary => "length-split-binary",
            TreeVariant::LengthSplitQuad => "length-split-quad",
        }
    }
}

impl fmt::Display for TreeVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TreeVariant {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        TreeVariant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| format!("unknown tree variant '{s}'"))
    }
}

/// Anything that can list convolution witnesses at an output index.
pub trait WitnessSearch: Send + Sync {
    fn output_len(&self) -> usize;
    /// Number of witnesses at `k` (the convolution value).
    fn count_at(&self, k: usize) -> u64;
    /// Witnesses at `k` ascending in `a`, at most `limit` of them.
    fn witnesses(&self, k: usize, limit: Option<usize>) -> Result<Vec<(usize, usize)>, TreeError>;
}

/// Witnesses at `k`, ascending in `a`, truncated at `limit`.
pub fn enumerate_witnesses(
    tree: &WitnessTree,
    k: usize,
    limit: Option<usize>,
) -> Result<Vec<(usize, usize)>, TreeError> {
    tree.witnesses(k, limit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convolution::{convolve_naive, witnesses_at, DenseVector, SparseBitVector};
    use crate::rng::SplitMix64;

    fn naive(u: &SparseBitVector, v: &SparseBitVector) -> Vec<u64> {
        convolve_naive(&DenseVector::from(u), &DenseVector::from(v)).unwrap().entries
    }

    fn random_sparse(rng: &mut SplitMix64, n: usize, ones: usize) -> SparseBitVector {
        SparseBitVector::new(n, rng.sample_sorted(n, ones.min(n))).unwrap()
    }

    /// Recomputes every node directly from its covered ranges.
    fn check_nodes_direct(tree: &WitnessTree) {
        let u = tree.u().to_bools();
        let v = tree.v().to_bools();
        for node in tree.nodes() {
            let (ur, vr) = (node.u_range(), node.v_range());
            for k in node.offset()..node.offset() + node.conv().len() {
                let mut expect = 0;
                for a in ur.clone() {
                    if k >= a && vr.contains(&(k - a)) && u[a] && v[k - a] {
                        expect += 1;
                    }
                }
                assert_eq!(node.at(k), expect, "node {ur:?}x{vr:?} at {k}");
            }
        }
    }

    /// parent[k] = sum over children of child[k], all in global coordinates.
    fn check_combine(tree: &WitnessTree) {
        for node in tree.nodes().iter().filter(|n| !n.is_leaf()) {
            let hi = node.offset() + node.conv().len() + 2;
            for k in 0..hi {
                let sum: u32 = node.children().iter().map(|&c| tree.nodes()[c].at(k)).sum();
                assert_eq!(node.at(k), sum);
            }
        }
    }

    #[test]
    fn ones_tree_single_leaf() {
        let u = SparseBitVector::from_bits("1001");
        let v = SparseBitVector::from_bits("11");
        let tree = build_ones_tree(&u, &v, 8, 2).unwrap();
        assert_eq!(tree.nodes().len(), 1);
        assert_eq!(tree.root_vector(), naive(&u, &v));
    }

    #[test]
    fn ones_tree_four_ones() {
        let u = SparseBitVector::from_bits("1011000100000000");
        let v = SparseBitVector::from_bits("0110100000000001");
        // X/R = 1: one one per leaf.
        let tree = build_ones_tree(&u, &v, 4, 4).unwrap();
        assert_eq!(tree.leaves().count(), 4);
        assert_eq!(tree.nodes().len() - 4, 3);
        assert_eq!(tree.root_vector(), naive(&u, &v));
        for leaf in tree.leaves() {
            assert!(!leaf.u_range().is_empty());
        }
        check_combine(&tree);
    }

    #[test]
    fn ones_tree_rejects_dense_u() {
        let u = SparseBitVector::from_bits("11111111");
        let v = SparseBitVector::from_bits("1");
        assert!(matches!(build_ones_tree(&u, &v, 4, 8), Err(TreeError::TooDense { .. })));
    }

    #[test]
    fn ones_tree_identities_small() {
        let mut rng = SplitMix64::new(11);
        for _ in 0..40 {
            let n = 1 + rng.index(64);
            let r = [1, 2, 4, 8][rng.index(4)];
            let ones = rng.index(n.div_ceil(r) + 1);
            let u = random_sparse(&mut rng, n, ones);
            let (lv, cv) = (1 + rng.index(64), 1 + rng.index(20));
            let v = random_sparse(&mut rng, lv, cv);
            let x = [1, 2, 4, 8, 16][rng.index(5)];
            let tree = build_ones_tree(&u, &v, x, r).unwrap();
            assert_eq!(tree.root_vector(), naive(&u, &v));
            for leaf in tree.leaves() {
                let ones = u.ones().iter().filter(|p| leaf.u_range().contains(p)).count();
                assert!(ones <= x.div_ceil(r));
            }
            check_combine(&tree);
            check_nodes_direct(&tree);
        }
    }

    #[test]
    fn length_tree_root_only_when_x_is_full() {
        let u = SparseBitVector::from_bits("10110000");
        let v = SparseBitVector::from_bits("01000001");
        let tree = build_length_tree(&u, &v, 8, TreeVariant::LengthSplitBinary).unwrap();
        assert_eq!(tree.nodes().len(), 1);
        let quad = build_length_tree(&u, &v, 8, TreeVariant::LengthSplitQuad).unwrap();
        assert_eq!(quad.nodes().len(), 1);
        assert_eq!(quad.root_vector(), naive(&u, &v));
    }

    #[test]
    fn quad_tree_node_count() {
        let u = SparseBitVector::from_bits("10110010");
        let v = SparseBitVector::from_bits("01100101");
        let tree = build_length_tree(&u, &v, 2, TreeVariant::LengthSplitQuad).unwrap();
        assert_eq!(tree.nodes().len(), 1 + 4 + 16);
        assert_eq!(tree.root_vector(), naive(&u, &v));
        check_combine(&tree);
        check_nodes_direct(&tree);
    }

    #[test]
    fn binary_length_tree_nodes_match_direct_sums() {
        let mut rng = SplitMix64::new(12);
        let u = random_sparse(&mut rng, 32, 9);
        let v = random_sparse(&mut rng, 32, 7);
        for x in [1, 2, 4, 8, 16, 32] {
            let tree = build_length_tree(&u, &v, x, TreeVariant::LengthSplitBinary).unwrap();
            assert_eq!(tree.leaves().count(), 32 / x);
            for leaf in tree.leaves() {
                assert_eq!(leaf.u_range().len(), x);
            }
            check_nodes_direct(&tree);
            check_combine(&tree);
        }
    }

    #[test]
    fn length_tree_rejects_bad_lengths() {
        let u = SparseBitVector::from_bits("101");
        let v = SparseBitVector::from_bits("1010");
        assert!(matches!(
            build_length_tree(&u, &v, 1, TreeVariant::LengthSplitBinary),
            Err(TreeError::NotPowerOfTwo { .. })
        ));
        let u = SparseBitVector::from_bits("1010");
        assert!(matches!(
            build_length_tree(&u, &v, 8, TreeVariant::LengthSplitBinary),
            Err(TreeError::NotPowerOfTwo { .. })
        ));
        let v2 = SparseBitVector::from_bits("10");
        assert!(matches!(
            build_length_tree(&u, &v2, 2, TreeVariant::LengthSplitQuad),
            Err(TreeError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn enumerate_example() {
        let u = SparseBitVector::from_bits("1101");
        let v = SparseBitVector::from_bits("101");
        let tree = build_ones_tree(&u, &v, 1, 1).unwrap();
        assert_eq!(enumerate_witnesses(&tree, 2, None).unwrap(), vec![(0, 2)]);
        assert!(matches!(enumerate_witnesses(&tree, 6, None), Err(TreeError::IndexOutOfRange { .. })));
    }

    #[test]
    fn zero_index_touches_only_root() {
        let u = SparseBitVector::from_bits("1000000000000001");
        let v = SparseBitVector::from_bits("1000000000000001");
        let tree = build_length_tree(&u, &v, 2, TreeVariant::LengthSplitQuad).unwrap();
        let (w, stats) = tree.enumerate_traced(7, None).unwrap();
        assert!(w.is_empty());
        assert_eq!(stats.nodes_visited, 1);
    }

    #[test]
    fn enumeration_matches_oracle_all_variants() {
        let mut rng = SplitMix64::new(13);
        for _ in 0..30 {
            let n = 1usize << (1 + rng.index(7));
            let (cu, cv) = (rng.index(n / 2 + 1), rng.index(n / 2 + 1));
            let u = random_sparse(&mut rng, n, cu);
            let v = random_sparse(&mut rng, n, cv);
            let x = 1usize << rng.index(n.trailing_zeros() as usize + 1);
            let trees = [
                build_ones_tree_with_density(&u, &v, x, 2, n).unwrap(),
                build_length_tree(&u, &v, x, TreeVariant::LengthSplitBinary).unwrap(),
                build_length_tree(&u, &v, x, TreeVariant::LengthSplitQuad).unwrap(),
            ];
            for tree in &trees {
                assert_eq!(tree.root_vector(), naive(&u, &v));
                for k in 0..2 * n - 1 {
                    let expect = witnesses_at(&u, &v, k).unwrap();
                    assert_eq!(enumerate_witnesses(tree, k, None).unwrap(), expect, "{} k={k}", tree.variant());
                    if expect.len() > 1 {
                        assert_eq!(enumerate_witnesses(tree, k, Some(1)).unwrap(), expect[..1].to_vec());
                    }
                }
            }
        }
    }

    #[test]
    fn variant_names_round_trip() {
        for v in TreeVariant::ALL {
            assert_eq!(v.name().parse::<TreeVariant>().unwrap(), v);
        }
        assert!("nope".parse::<TreeVariant>().is_err());
    }
}
