use std::ops::Range;

use super::{TreeError, TreeVariant, WitnessSearch};
use crate::convolution::SparseBitVector;
use crate::hashing::DEFAULT_OVERFLOW_FACTOR;

/// One vertex: the sub-vector pair it covers and their exact convolution.
#[derive(Clone, Debug)]
pub struct Node {
    u_range: Range<usize>,
    v_range: Range<usize>,
    /// For ones-split trees, the slice of `u.ones()` under this node.
    ones: Range<usize>,
    conv: Vec<u32>,
    children: Vec<usize>,
}

impl Node {
    pub fn u_range(&self) -> Range<usize> {
        self.u_range.clone()
    }

    pub fn v_range(&self) -> Range<usize> {
        self.v_range.clone()
    }

    /// Global output index of `conv()[0]`.
    pub fn offset(&self) -> usize {
        self.u_range.start + self.v_range.start
    }

    pub fn conv(&self) -> &[u32] {
        &self.conv
    }

    pub fn children(&self) -> &[usize] {
        &self.children
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    /// Value at global output index `k`; zero outside the node's support.
    pub fn at(&self, k: usize) -> u32 {
        k.checked_sub(self.offset())
            .and_then(|i| self.conv.get(i).copied())
            .unwrap_or(0)
    }
}

/// Hierarchy of partial convolutions over a pair of binary vectors.
#[derive(Clone, Debug)]
pub struct WitnessTree {
    variant: TreeVariant,
    leaf_param: usize,
    u: SparseBitVector,
    v: SparseBitVector,
    u_bits: Vec<bool>,
    v_bits: Vec<bool>,
    /// Output length of the unpadded pair.
    out_len: usize,
    nodes: Vec<Node>,
}

/// Per-query traversal counters.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SearchStats {
    pub nodes_visited: usize,
    pub leaf_probes: usize,
}

/// Direct leaf convolution of `u[u_range]` against `v[v_range]`.
fn leaf_conv(u_ones: &[usize], u_range: &Range<usize>, v: &SparseBitVector, v_range: &Range<usize>) -> Vec<u32> {
    if u_range.is_empty() || v_range.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0u32; u_range.len() + v_range.len() - 1];
    let v_lo = v.ones().partition_point(|&b| b < v_range.start);
    let v_hi = v.ones().partition_point(|&b| b < v_range.end);
    let v_ones = &v.ones()[v_lo..v_hi];
    for &a in u_ones {
        let base = a - u_range.start;
        for &b in v_ones {
            out[base + b - v_range.start] += 1;
        }
    }
    out
}

/// Parent vector from children: `parent[k] = sum_c child_c[k - shift_c]`,
/// where `shift_c` is the child's offset relative to the parent.
fn combine(parent_len: usize, parent_offset: usize, children: &[&Node]) -> Vec<u32> {
    let mut out = vec![0u32; parent_len];
    for child in children {
        let shift = child.offset() - parent_offset;
        for (dst, &src) in out[shift..].iter_mut().zip(&child.conv) {
            *dst += src;
        }
    }
    out
}

fn span_len(u: &Range<usize>, v: &Range<usize>) -> usize {
    if u.is_empty() || v.is_empty() {
        0
    } else {
        u.len() + v.len() - 1
    }
}

fn is_pow2(x: usize) -> bool {
    x != 0 && x & (x - 1) == 0
}

impl WitnessTree {
    fn with_vectors(variant: TreeVariant, leaf_param: usize, u: &SparseBitVector, v: &SparseBitVector) -> Self {
        Self {
            variant,
            leaf_param,
            u_bits: u.to_bools(),
            v_bits: v.to_bools(),
            out_len: (u.len() + v.len()).saturating_sub(1),
            u: u.clone(),
            v: v.clone(),
            nodes: Vec::new(),
        }
    }

    pub fn variant(&self) -> TreeVariant {
        self.variant
    }

    /// `X`: leaf length for length-split trees, leaf ones cap for ones-split.
    pub fn leaf_param(&self) -> usize {
        self.leaf_param
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn root(&self) -> &Node {
        &self.nodes[0]
    }

    pub fn u(&self) -> &SparseBitVector {
        &self.u
    }

    pub fn v(&self) -> &SparseBitVector {
        &self.v
    }

    pub fn output_len(&self) -> usize {
        self.out_len
    }

    /// Root convolution over the unpadded output range.
    pub fn root_vector(&self) -> Vec<u64> {
        (0..self.out_len).map(|k| self.root().at(k) as u64).collect()
    }

    pub fn leaves(&self) -> impl Iterator<Item = &Node> {
        self.nodes.iter().filter(|n| n.is_leaf())
    }

    fn push(&mut self, node: Node) -> usize {
        self.nodes.push(node);
        self.nodes.len() - 1
    }

    /// Witnesses at `k`, ascending in `a`, with traversal counters.
    pub fn enumerate_traced(
        &self,
        k: usize,
        limit: Option<usize>,
    ) -> Result<(Vec<(usize, usize)>, SearchStats), TreeError> {
        if k >= self.out_len {
            return Err(TreeError::IndexOutOfRange { index: k, len: self.out_len });
        }
        let mut out = Vec::new();
        let mut stats = SearchStats::default();
        let cap = limit.unwrap_or(usize::MAX);
        if cap > 0 {
            self.descend(0, k, cap, &mut out, &mut stats);
        }
        Ok((out, stats))
    }

    fn descend(&self, id: usize, k: usize, cap: usize, out: &mut Vec<(usize, usize)>, stats: &mut SearchStats) {
        let node = &self.nodes[id];
        stats.nodes_visited += 1;
        if node.at(k) == 0 {
            return;
        }
        if !node.is_leaf() {
            for &c in &node.children {
                if out.len() >= cap {
                    return;
                }
                self.descend(c, k, cap, out, stats);
            }
            return;
        }
        match self.variant {
            TreeVariant::OnesSplitBinary => {
                for &a in &self.u.ones()[node.ones.clone()] {
                    if a > k {
                        break;
                    }
                    stats.leaf_probes += 1;
                    let b = k - a;
                    if b < self.v_bits.len() && self.v_bits[b] {
                        out.push((a, b));
                        if out.len() >= cap {
                            return;
                        }
                    }
                }
            }
            TreeVariant::LengthSplitBinary | TreeVariant::LengthSplitQuad => {
                // Naive scan of every position of the leaf's u-range.
                let vr = &node.v_range;
                for a in node.u_range.clone() {
                    if a > k {
                        break;
                    }
                    stats.leaf_probes += 1;
                    let b = k - a;
                    if a < self.u_bits.len() && self.u_bits[a] && vr.contains(&b) && b < self.v_bits.len() && self.v_bits[b] {
                        out.push((a, b));
                        if out.len() >= cap {
                            return;
                        }
                    }
                }
            }
        }
    }
}

impl WitnessSearch for WitnessTree {
    fn output_len(&self) -> usize {
        self.out_len
    }

    fn count_at(&self, k: usize) -> u64 {
        self.root().at(k) as u64
    }

    fn witnesses(&self, k: usize, limit: Option<usize>) -> Result<Vec<(usize, usize)>, TreeError> {
        self.enumerate_traced(k, limit).map(|(w, _)| w)
    }
}

/// Binary tree splitting `u` by its ones; `v` stays whole at every node.
///
/// Leaves hold at most `ceil(x / r)` ones of `u`. The node covering ones
/// `[lo, hi)` is split so the left child gets the first `ceil((hi-lo)/2)`,
/// and the cut sits at the first one of the right child. `u` may hold at
/// most `ceil(3n / r)` ones, the bucket-size limit of the hashing step.
pub fn build_ones_tree(u: &SparseBitVector, v: &SparseBitVector, x: usize, r: usize) -> Result<WitnessTree, TreeError> {
    let max_ones = (DEFAULT_OVERFLOW_FACTOR * u.len()).div_ceil(r.max(1));
    build_ones_tree_with_density(u, v, x, r, max_ones)
}

pub fn build_ones_tree_with_density(
    u: &SparseBitVector,
    v: &SparseBitVector,
    x: usize,
    r: usize,
    max_ones: usize,
) -> Result<WitnessTree, TreeError> {
    if x == 0 || r == 0 {
        return Err(TreeError::BadParameter(format!("leaf parameter X={x} and R={r} must be positive")));
    }
    if u.count_ones() > max_ones {
        return Err(TreeError::TooDense { ones: u.count_ones(), limit: max_ones });
    }
    if u.is_empty() || v.is_empty() {
        return Err(TreeError::BadParameter("vectors must be nonempty".into()));
    }
    let cap = x.div_ceil(r);
    let mut tree = WitnessTree::with_vectors(TreeVariant::OnesSplitBinary, cap, u, v);
    let v_range = 0..v.len();
    let root = build_ones_node(&mut tree, 0..u.count_ones(), 0..u.len(), &v_range, cap);
    debug_assert_eq!(root, 0);
    Ok(tree)
}

fn build_ones_node(
    tree: &mut WitnessTree,
    ones: Range<usize>,
    u_range: Range<usize>,
    v_range: &Range<usize>,
    cap: usize,
) -> usize {
    let id = tree.push(Node { u_range: u_range.clone(), v_range: v_range.clone(), ones: ones.clone(), conv: Vec::new(), children: Vec::new() });
    if ones.len() <= cap {
        let conv = leaf_conv(&tree.u.ones()[ones.clone()], &u_range, &tree.v, v_range);
        tree.nodes[id].conv = conv;
        return id;
    }
    let mid = ones.start + ones.len().div_ceil(2);
    let cut = tree.u.ones()[mid];
    let left = build_ones_node(tree, ones.start..mid, u_range.start..cut, v_range, cap);
    let right = build_ones_node(tree, mid..ones.end, cut..u_range.end, v_range, cap);
    let len = span_len(&u_range, v_range);
    let conv = combine(len, u_range.start + v_range.start, &[&tree.nodes[left], &tree.nodes[right]]);
    let node = &mut tree.nodes[id];
    node.conv = conv;
    node.children = vec![left, right];
    id
}

/// Complete binary (halving `u` only) or quad (halving both) tree down to
/// sub-vectors of length `x`. Lengths must be powers of two at least `x`;
/// the quad variant also needs `|u| = |v|`.
pub fn build_length_tree(
    u: &SparseBitVector,
    v: &SparseBitVector,
    x: usize,
    variant: TreeVariant,
) -> Result<WitnessTree, TreeError> {
    if !is_pow2(x) {
        return Err(TreeError::BadParameter(format!("leaf length X={x} must be a power of two")));
    }
    if !is_pow2(u.len()) || u.len() < x {
        return Err(TreeError::NotPowerOfTwo { len: u.len(), leaf: x });
    }
    match variant {
        TreeVariant::LengthSplitBinary => {
            if v.is_empty() {
                return Err(TreeError::BadParameter("v must be nonempty".into()));
            }
        }
        TreeVariant::LengthSplitQuad => {
            if !is_pow2(v.len()) || v.len() < x {
                return Err(TreeError::NotPowerOfTwo { len: v.len(), leaf: x });
            }
            if v.len() != u.len() {
                return Err(TreeError::LengthMismatch { u: u.len(), v: v.len() });
            }
        }
        TreeVariant::OnesSplitBinary => {
            return Err(TreeError::BadParameter("use build_ones_tree for the ones-split variant".into()))
        }
    }
    let mut tree = WitnessTree::with_vectors(variant, x, u, v);
    build_length_node(&mut tree, 0..u.len(), 0..v.len(), x);
    Ok(tree)
}

fn ones_in(v: &SparseBitVector, r: &Range<usize>) -> Range<usize> {
    v.ones().partition_point(|&b| b < r.start)..v.ones().partition_point(|&b| b < r.end)
}

fn build_length_node(tree: &mut WitnessTree, u_range: Range<usize>, v_range: Range<usize>, x: usize) -> usize {
    let ones = ones_in(&tree.u, &u_range);
    let id = tree.push(Node { u_range: u_range.clone(), v_range: v_range.clone(), ones: ones.clone(), conv: Vec::new(), children: Vec::new() });
    if u_range.len() <= x {
        let conv = leaf_conv(&tree.u.ones()[ones], &u_range, &tree.v, &v_range);
        tree.nodes[id].conv = conv;
        return id;
    }
    let half = u_range.len() / 2;
    let (u1, u2) = (u_range.start..u_range.start + half, u_range.start + half..u_range.end);
    let children = match tree.variant {
        TreeVariant::LengthSplitQuad => {
            let vh = v_range.len() / 2;
            let (v1, v2) = (v_range.start..v_range.start + vh, v_range.start + vh..v_range.end);
            // For a fixed output index, (u1, v2) holds smaller a than (u1, v1),
            // so this order enumerates witnesses by ascending a.
            vec![
                build_length_node(tree, u1.clone(), v2.clone(), x),
                build_length_node(tree, u1, v1.clone(), x),
                build_length_node(tree, u2.clone(), v2, x),
                build_length_node(tree, u2, v1, x),
            ]
        }
        _ => vec![
            build_length_node(tree, u1, v_range.clone(), x),
            build_length_node(tree, u2, v_range.clone(), x),
        ],
    };
    let len = span_len(&u_range, &v_range);
    let refs: Vec<&Node> = children.iter().map(|&c| &tree.nodes[c]).collect();
    let conv = combine(len, u_range.start + v_range.start, &refs);
    let node = &mut tree.nodes[id];
    node.conv = conv;
    node.children = children;
    id
}
