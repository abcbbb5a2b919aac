use std::ops::Range;

use rayon::prelude::*;

use super::{build_shift_matrices, build_v_blocks, leaf_conv_via_matmul_chunked, PartialError};
use crate::convolution::SparseBitVector;
use crate::hashing::DEFAULT_OVERFLOW_FACTOR;
use crate::witness_trees::{TreeError, WitnessSearch};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LeafBackend {
    /// Sparse products of the two sub-vectors.
    Direct,
    /// Shift-matrix products evaluated entry by entry.
    Matmul,
}

/// A contiguous stretch of the original vector, zero-padded to length `X`.
/// Filler pieces have `len = 0` and start at the vector's end.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Piece {
    pub start: usize,
    pub len: usize,
}

impl Piece {
    pub fn range(&self) -> Range<usize> {
        self.start..self.start + self.len
    }
}

#[derive(Clone, Debug)]
pub struct SpecialNode {
    u_pieces: Range<usize>,
    v_pieces: Range<usize>,
    u_range: Range<usize>,
    v_range: Range<usize>,
    conv: Vec<u32>,
    children: Vec<usize>,
}

impl SpecialNode {
    pub fn u_pieces(&self) -> Range<usize> {
        self.u_pieces.clone()
    }

    pub fn v_pieces(&self) -> Range<usize> {
        self.v_pieces.clone()
    }

    /// Covered positions of `u`, in original coordinates.
    pub fn u_range(&self) -> Range<usize> {
        self.u_range.clone()
    }

    pub fn v_range(&self) -> Range<usize> {
        self.v_range.clone()
    }

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

    pub fn at(&self, k: usize) -> u32 {
        k.checked_sub(self.offset()).and_then(|i| self.conv.get(i).copied()).unwrap_or(0)
    }
}

/// Quad tree over lists of length-`X` sub-vectors of `u` and `v`, each
/// holding at most `ceil(X/R)` ones. Node vectors are kept in original
/// coordinates, so the root is the plain convolution of `u` and `v`.
#[derive(Clone, Debug)]
pub struct SpecialQuadTree {
    x: usize,
    backend: LeafBackend,
    u: SparseBitVector,
    v: SparseBitVector,
    v_bits: Vec<bool>,
    u_pieces: Vec<Piece>,
    v_pieces: Vec<Piece>,
    /// Real (non-filler) piece counts.
    real: (usize, usize),
    nodes: Vec<SpecialNode>,
}

impl SpecialQuadTree {
    pub fn x(&self) -> usize {
        self.x
    }

    pub fn backend(&self) -> LeafBackend {
        self.backend
    }

    pub fn u_pieces(&self) -> &[Piece] {
        &self.u_pieces
    }

    pub fn v_pieces(&self) -> &[Piece] {
        &self.v_pieces
    }

    /// Number of real sub-vectors of `u` and of `v`.
    pub fn real_piece_counts(&self) -> (usize, usize) {
        self.real
    }

    pub fn nodes(&self) -> &[SpecialNode] {
        &self.nodes
    }

    pub fn root(&self) -> &SpecialNode {
        &self.nodes[0]
    }

    pub fn root_vector(&self) -> Vec<u64> {
        (0..WitnessSearch::output_len(self)).map(|k| self.root().at(k) as u64).collect()
    }

    fn descend(&self, id: usize, k: usize, cap: usize, out: &mut Vec<(usize, usize)>) {
        let node = &self.nodes[id];
        if node.at(k) == 0 {
            return;
        }
        if !node.is_leaf() {
            for &c in &node.children {
                if out.len() >= cap {
                    return;
                }
                self.descend(c, k, cap, out);
            }
            return;
        }
        let lo = self.u.ones().partition_point(|&a| a < node.u_range.start);
        for &a in &self.u.ones()[lo..] {
            if a >= node.u_range.end || a > k || out.len() >= cap {
                break;
            }
            let b = k - a;
            if node.v_range.contains(&b) && self.v_bits[b] {
                out.push((a, b));
            }
        }
    }
}

impl WitnessSearch for SpecialQuadTree {
    fn output_len(&self) -> usize {
        (self.u.len() + self.v.len()).saturating_sub(1)
    }

    fn count_at(&self, k: usize) -> u64 {
        self.root().at(k) as u64
    }

    fn witnesses(&self, k: usize, limit: Option<usize>) -> Result<Vec<(usize, usize)>, TreeError> {
        let len = WitnessSearch::output_len(self);
        if k >= len {
            return Err(TreeError::IndexOutOfRange { index: k, len });
        }
        let mut out = Vec::new();
        let cap = limit.unwrap_or(usize::MAX);
        if cap > 0 {
            self.descend(0, k, cap, &mut out);
        }
        Ok(out)
    }
}

/// Cuts `s` into stretches holding at most `cap` ones, then cuts any
/// stretch longer than `x` into length-`x` pieces.
fn cut_pieces(s: &SparseBitVector, x: usize, cap: usize) -> Vec<Piece> {
    let mut bounds = vec![0];
    bounds.extend(s.ones().iter().skip(cap).step_by(cap).copied());
    bounds.push(s.len());
    let mut pieces = Vec::new();
    for w in bounds.windows(2) {
        let mut p = w[0];
        while p < w[1] {
            let len = x.min(w[1] - p);
            pieces.push(Piece { start: p, len });
            p += len;
        }
    }
    pieces
}

fn padded_bits(bits: &[bool], piece: Piece, x: usize) -> Vec<bool> {
    let mut out = vec![false; x];
    out[..piece.len].copy_from_slice(&bits[piece.range()]);
    out
}

fn span(s: &SparseBitVector, p: Piece) -> &[usize] {
    &s.ones()[s.ones().partition_point(|&a| a < p.start)..s.ones().partition_point(|&a| a < p.start + p.len)]
}

/// Leaf convolution of two pieces, length `2X - 1`.
fn direct_leaf(u: &SparseBitVector, v: &SparseBitVector, up: Piece, vp: Piece, x: usize) -> Vec<u32> {
    let mut out = vec![0u32; 2 * x - 1];
    for &a in span(u, up) {
        for &b in span(v, vp) {
            out[a - up.start + b - vp.start] += 1;
        }
    }
    out
}

pub fn build_special_quad_tree(
    u: &SparseBitVector,
    v: &SparseBitVector,
    x: usize,
    r: usize,
    backend: LeafBackend,
) -> Result<SpecialQuadTree, PartialError> {
    let max_ones = (DEFAULT_OVERFLOW_FACTOR * u.len().max(v.len())).div_ceil(r.max(1));
    build_special_quad_tree_with_density(u, v, x, r, max_ones, backend)
}

/// As [`build_special_quad_tree`], with an explicit bound on the ones of
/// each input.
pub fn build_special_quad_tree_with_density(
    u: &SparseBitVector,
    v: &SparseBitVector,
    x: usize,
    r: usize,
    max_ones: usize,
    backend: LeafBackend,
) -> Result<SpecialQuadTree, PartialError> {
    if x == 0 || r == 0 {
        return Err(PartialError::BadParameter(format!("X={x} and R={r} must be positive")));
    }
    if u.is_empty() || v.is_empty() {
        return Err(PartialError::BadParameter("vectors must be nonempty".into()));
    }
    for s in [u, v] {
        if s.count_ones() > max_ones {
            return Err(PartialError::TooDense { ones: s.count_ones(), limit: max_ones });
        }
    }
    let cap = x.div_ceil(r);
    let mut u_pieces = cut_pieces(u, x, cap);
    let mut v_pieces = cut_pieces(v, x, cap);
    for (s, pieces) in [(u, &u_pieces), (v, &v_pieces)] {
        let bound = 2 * (s.len().div_ceil(x) + s.count_ones() / cap);
        assert!(pieces.len() <= bound, "{} pieces exceed the bound {bound}", pieces.len());
    }
    let real = (u_pieces.len(), v_pieces.len());
    let count = real.0.max(real.1).next_power_of_two();
    u_pieces.resize(count, Piece { start: u.len(), len: 0 });
    v_pieces.resize(count, Piece { start: v.len(), len: 0 });

    let leaves = compute_leaves(u, v, &u_pieces[..real.0], &v_pieces[..real.1], x, r, backend)?;
    let mut tree = SpecialQuadTree {
        x,
        backend,
        v_bits: v.to_bools(),
        u: u.clone(),
        v: v.clone(),
        u_pieces,
        v_pieces,
        real,
        nodes: Vec::new(),
    };
    build_node(&mut tree, 0..count, 0..count, &leaves);
    Ok(tree)
}

/// Leaf vectors for every pair of real pieces, indexed `[i][j]`.
fn compute_leaves(
    u: &SparseBitVector,
    v: &SparseBitVector,
    u_pieces: &[Piece],
    v_pieces: &[Piece],
    x: usize,
    r: usize,
    backend: LeafBackend,
) -> Result<Vec<Vec<Vec<u32>>>, PartialError> {
    match backend {
        LeafBackend::Direct => Ok(u_pieces
            .par_iter()
            .map(|&up| v_pieces.iter().map(|&vp| direct_leaf(u, v, up, vp, x)).collect())
            .collect()),
        LeafBackend::Matmul => {
            let u_bits = u.to_bools();
            let v_bits = v.to_bools();
            let v_cols: Vec<Vec<bool>> = v_pieces.iter().map(|&p| padded_bits(&v_bits, p, x)).collect();
            let blocks = build_v_blocks::<i64>(&v_cols, x)?;
            // Each product is evaluated in location chunks of X^2 / R entries.
            let chunk = (x * x).div_ceil(r).max(1);
            u_pieces
                .par_iter()
                .map(|&up| {
                    let mut row = Vec::with_capacity(v_pieces.len());
                    let ub = padded_bits(&u_bits, up, x);
                    if !ub.contains(&true) {
                        row.resize(v_pieces.len(), vec![0u32; 2 * x - 1]);
                        return Ok(row);
                    }
                    let pair = build_shift_matrices::<i64>(&ub, x)?;
                    for block in blocks.blocks() {
                        for conv in leaf_conv_via_matmul_chunked(&pair, block, chunk)? {
                            if row.len() < v_pieces.len() {
                                row.push(conv.into_iter().map(|c| c as u32).collect());
                            }
                        }
                    }
                    Ok(row)
                })
                .collect()
        }
    }
}

fn covered(pieces: &[Piece], ids: &Range<usize>) -> Range<usize> {
    let start = pieces[ids.start].start;
    let end = pieces[ids.clone()].iter().map(|p| p.start + p.len).max().unwrap_or(start);
    start..end.max(start)
}

fn build_node(tree: &mut SpecialQuadTree, up: Range<usize>, vp: Range<usize>, leaves: &[Vec<Vec<u32>>]) -> usize {
    let u_range = covered(&tree.u_pieces, &up);
    let v_range = covered(&tree.v_pieces, &vp);
    let len = if u_range.is_empty() || v_range.is_empty() { 0 } else { u_range.len() + v_range.len() - 1 };
    let id = tree.nodes.len();
    tree.nodes.push(SpecialNode {
        u_pieces: up.clone(),
        v_pieces: vp.clone(),
        u_range,
        v_range,
        conv: Vec::new(),
        children: Vec::new(),
    });
    if up.len() == 1 {
        let (i, j) = (up.start, vp.start);
        if len > 0 {
            let leaf = &leaves[i][j];
            debug_assert!(leaf[len..].iter().all(|&c| c == 0), "padding produced output");
            tree.nodes[id].conv = leaf[..len].to_vec();
        }
        return id;
    }
    let (uh, vh) = (up.start + up.len() / 2, vp.start + vp.len() / 2);
    // Same child order as the length-split quad tree: ascending witnesses.
    let children = vec![
        build_node(tree, up.start..uh, vh..vp.end, leaves),
        build_node(tree, up.start..uh, vp.start..vh, leaves),
        build_node(tree, uh..up.end, vh..vp.end, leaves),
        build_node(tree, uh..up.end, vp.start..vh, leaves),
    ];
    let offset = tree.nodes[id].offset();
    let mut conv = vec![0u32; len];
    for &c in &children {
        let child = &tree.nodes[c];
        if child.conv.is_empty() {
            continue;
        }
        let shift = child.offset() - offset;
        for (dst, &src) in conv[shift..].iter_mut().zip(&child.conv) {
            *dst += src;
        }
    }
    let node = &mut tree.nodes[id];
    node.conv = conv;
    node.children = children;
    id
}
