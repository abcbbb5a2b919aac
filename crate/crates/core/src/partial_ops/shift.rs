// Position 0 of a sub-vector is its least significant entry. Row r of the
// shift-right matrix drops the r low positions and fills zeros at the top:
// U[r][t] = u[t + r]. Row r of the shift-left matrix moves entries up by r:
// U'[r][t] = u[t - r]. With J the row reversal, (J V)[t][c] = v_c[X-1-t], so
//   (U  J V)[r][c] = sum_t u[t + r] v_c[X-1-t] = (u * v_c)[X-1+r]
//   (U' J V)[r][c] = sum_t u[t - r] v_c[X-1-t] = (u * v_c)[X-1-r]
// and the two products together hold every one of the 2X-1 outputs.

use super::{chunk_locations, IndexSet, Matrix, PartialError, PreparedProduct, Semiring};

#[derive(Clone, Debug, PartialEq)]
pub struct ShiftMatrixPair<T> {
    x: usize,
    right: Matrix<T>,
    left: Matrix<T>,
}

impl<T: Semiring> ShiftMatrixPair<T> {
    pub fn x(&self) -> usize {
        self.x
    }

    /// `U`: row `r` is the sub-vector shifted right by `r`.
    pub fn right(&self) -> &Matrix<T> {
        &self.right
    }

    /// `U'`: row `r` is the sub-vector shifted left by `r`.
    pub fn left(&self) -> &Matrix<T> {
        &self.left
    }
}

pub fn build_shift_matrices<T: Semiring>(u: &[bool], x: usize) -> Result<ShiftMatrixPair<T>, PartialError> {
    if u.len() != x || x == 0 {
        return Err(PartialError::WrongLength { len: u.len(), expected: x });
    }
    let ones: Vec<usize> = (0..x).filter(|&p| u[p]).collect();
    let mut right = Vec::new();
    let mut left = Vec::new();
    for r in 0..x {
        for &p in &ones {
            if p >= r {
                right.push((r, p - r, T::one()));
            }
            if p + r < x {
                left.push((r, p + r, T::one()));
            }
        }
    }
    Ok(ShiftMatrixPair { x, right: Matrix::from_entries(x, x, right)?, left: Matrix::from_entries(x, x, left)? })
}

/// The matrix whose column `j` is sub-vector `j`, cut into `X x X` blocks.
/// The last block is filled out with zero columns.
#[derive(Clone, Debug, PartialEq)]
pub struct VBlocks<T> {
    x: usize,
    columns: usize,
    blocks: Vec<Matrix<T>>,
}

impl<T: Semiring> VBlocks<T> {
    pub fn blocks(&self) -> &[Matrix<T>] {
        &self.blocks
    }

    /// Number of real (non-filler) columns.
    pub fn columns(&self) -> usize {
        self.columns
    }

    /// Entry `t` of column `j`, read through the blocks.
    pub fn get(&self, t: usize, j: usize) -> T {
        self.blocks[j / self.x].get(t, j % self.x)
    }
}

pub fn build_v_blocks<T: Semiring>(pieces: &[Vec<bool>], x: usize) -> Result<VBlocks<T>, PartialError> {
    if let Some(p) = pieces.iter().find(|p| p.len() != x) {
        return Err(PartialError::WrongLength { len: p.len(), expected: x });
    }
    let blocks = pieces
        .chunks(x)
        .map(|group| {
            let entries = group
                .iter()
                .enumerate()
                .flat_map(|(c, col)| (0..x).filter(move |&t| col[t]).map(move |t| (t, c, T::one())));
            Matrix::from_entries(x, x, entries)
        })
        .collect::<Result<_, _>>()?;
    Ok(VBlocks { x, columns: pieces.len(), blocks })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Product {
    /// `U J V`, holding outputs `X-1 ..= 2X-2`.
    Right,
    /// `U' J V`, holding outputs `0 ..= X-1`.
    Left,
}

/// For each convolution output `o` in `0..2X-1`, the product and row it is
/// read from (the column is the `v` sub-vector's column).
pub fn reassembly_map(x: usize) -> Vec<(Product, usize)> {
    (0..2 * x - 1)
        .map(|o| if o + 1 >= x { (Product::Right, o + 1 - x) } else { (Product::Left, x - 1 - o) })
        .collect()
}

/// Convolutions of one sub-vector with every column of `block`, read off
/// the two shift-matrix products. Each product is evaluated entry by entry
/// in chunks of at most `cap` locations. Output `c` has length `2X-1`.
pub fn leaf_conv_via_matmul_chunked<T: Semiring>(
    pair: &ShiftMatrixPair<T>,
    block: &Matrix<T>,
    cap: usize,
) -> Result<Vec<Vec<T>>, PartialError> {
    let x = pair.x;
    if block.rows() != x || block.cols() != x {
        return Err(PartialError::DimensionMismatch { left: (x, x), right: (block.rows(), block.cols()) });
    }
    let jv = block.reversed_rows();
    let right = PreparedProduct::new(&pair.right, &jv)?;
    let left = PreparedProduct::new(&pair.left, &jv)?;
    let mut out = vec![vec![T::zero(); 2 * x - 1]; x];
    let all: IndexSet<(usize, usize)> = (0..x).flat_map(|r| (0..x).map(move |c| (r, c))).collect();
    for chunk in chunk_locations(&all, cap.max(1)) {
        for &(r, c) in chunk.as_slice() {
            out[c][x - 1 + r] = right.entry(r, c);
        }
    }
    for chunk in chunk_locations(&all, cap.max(1)) {
        for &(r, c) in chunk.as_slice() {
            // Row 0 of both products is output X-1; it was filled above.
            if r > 0 {
                out[c][x - 1 - r] = left.entry(r, c);
            }
        }
    }
    Ok(out)
}

pub fn leaf_conv_via_matmul<T: Semiring>(
    pair: &ShiftMatrixPair<T>,
    block: &Matrix<T>,
) -> Result<Vec<Vec<T>>, PartialError> {
    leaf_conv_via_matmul_chunked(pair, block, pair.x * pair.x)
}
