use std::collections::BTreeMap;
use std::fmt::Debug;

use serde::{Deserialize, Serialize};

use super::{IndexSet, PartialError};

/// Addition and multiplication for matrix entries.
pub trait Semiring: Copy + PartialEq + Debug + Send + Sync + 'static {
    fn zero() -> Self;
    fn one() -> Self;
    fn add(self, other: Self) -> Self;
    fn mul(self, other: Self) -> Self;

    fn is_zero(&self) -> bool {
        *self == Self::zero()
    }
}

impl Semiring for i64 {
    fn zero() -> Self {
        0
    }
    fn one() -> Self {
        1
    }
    fn add(self, other: Self) -> Self {
        self + other
    }
    fn mul(self, other: Self) -> Self {
        self * other
    }
}

/// The Boolean semiring: OR as addition, AND as multiplication.
impl Semiring for bool {
    fn zero() -> Self {
        false
    }
    fn one() -> Self {
        true
    }
    fn add(self, other: Self) -> Self {
        self | other
    }
    fn mul(self, other: Self) -> Self {
        self & other
    }
}

/// Matrices smaller than this in both dimensions are stored densely.
pub const DENSE_BELOW: usize = 64;

#[derive(Clone, Debug, PartialEq)]
enum Storage<T> {
    Dense(Vec<T>),
    /// Per row, `(col, value)` sorted by column, zeros omitted.
    Sparse(Vec<Vec<(usize, T)>>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    storage: Storage<T>,
}

impl<T: Semiring> Matrix<T> {
    /// Matrix from `(row, col, value)` triples; later duplicates win.
    pub fn from_entries(
        rows: usize,
        cols: usize,
        entries: impl IntoIterator<Item = (usize, usize, T)>,
    ) -> Result<Self, PartialError> {
        let mut lists: Vec<BTreeMap<usize, T>> = vec![BTreeMap::new(); rows];
        for (i, j, v) in entries {
            if i >= rows || j >= cols {
                return Err(PartialError::EntryOutOfRange { row: i, col: j, rows, cols });
            }
            if v.is_zero() {
                lists[i].remove(&j);
            } else {
                lists[i].insert(j, v);
            }
        }
        let rows_sparse: Vec<Vec<(usize, T)>> = lists.into_iter().map(|m| m.into_iter().collect()).collect();
        Ok(Self::from_rows(rows, cols, rows_sparse))
    }

    fn from_rows(rows: usize, cols: usize, lists: Vec<Vec<(usize, T)>>) -> Self {
        if rows < DENSE_BELOW && cols < DENSE_BELOW {
            let mut dense = vec![T::zero(); rows * cols];
            for (i, row) in lists.iter().enumerate() {
                for &(j, v) in row {
                    dense[i * cols + j] = v;
                }
            }
            Self { rows, cols, storage: Storage::Dense(dense) }
        } else {
            Self { rows, cols, storage: Storage::Sparse(lists) }
        }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_rows(rows, cols, vec![Vec::new(); rows])
    }

    pub fn identity(n: usize) -> Self {
        Self::from_rows(n, n, (0..n).map(|i| vec![(i, T::one())]).collect())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.storage, Storage::Dense(_))
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        assert!(i < self.rows && j < self.cols, "entry ({i},{j}) outside {}x{}", self.rows, self.cols);
        match &self.storage {
            Storage::Dense(d) => d[i * self.cols + j],
            Storage::Sparse(l) => l[i].binary_search_by_key(&j, |e| e.0).map(|p| l[i][p].1).unwrap_or_else(|_| T::zero()),
        }
    }

    /// Nonzeros of row `i` as `(col, value)`, ascending.
    pub fn row(&self, i: usize) -> Vec<(usize, T)> {
        match &self.storage {
            Storage::Dense(d) => d[i * self.cols..(i + 1) * self.cols]
                .iter()
                .enumerate()
                .filter(|(_, v)| !v.is_zero())
                .map(|(j, &v)| (j, v))
                .collect(),
            Storage::Sparse(l) => l[i].clone(),
        }
    }

    pub fn row_lists(&self) -> Vec<Vec<(usize, T)>> {
        (0..self.rows).map(|i| self.row(i)).collect()
    }

    /// Nonzeros of every column as `(row, value)`, ascending.
    pub fn col_lists(&self) -> Vec<Vec<(usize, T)>> {
        let mut cols = vec![Vec::new(); self.cols];
        for i in 0..self.rows {
            for (j, v) in self.row(i) {
                cols[j].push((i, v));
            }
        }
        cols
    }

    pub fn nonzeros(&self) -> Vec<(usize, usize, T)> {
        (0..self.rows).flat_map(|i| self.row(i).into_iter().map(move |(j, v)| (i, j, v))).collect()
    }

    pub fn nnz(&self) -> usize {
        self.nonzeros().len()
    }

    /// Same matrix with row order reversed.
    pub fn reversed_rows(&self) -> Self {
        let lists = (0..self.rows).rev().map(|i| self.row(i)).collect();
        Self::from_rows(self.rows, self.cols, lists)
    }
}

/// Full product by the textbook triple loop.
pub fn matmul_naive<T: Semiring>(a: &Matrix<T>, b: &Matrix<T>) -> Result<Matrix<T>, PartialError> {
    if a.cols != b.rows {
        return Err(PartialError::DimensionMismatch { left: (a.rows, a.cols), right: (b.rows, b.cols) });
    }
    let mut entries = Vec::new();
    for i in 0..a.rows {
        for j in 0..b.cols {
            let mut acc = T::zero();
            for t in 0..a.cols {
                acc = acc.add(a.get(i, t).mul(b.get(t, j)));
            }
            entries.push((i, j, acc));
        }
    }
    Matrix::from_entries(a.rows, b.cols, entries)
}

/// Rows of `A` and columns of `B` extracted once for repeated entry queries.
#[derive(Clone, Debug)]
pub struct PreparedProduct<T> {
    a_rows: Vec<Vec<(usize, T)>>,
    b_cols: Vec<Vec<(usize, T)>>,
}

impl<T: Semiring> PreparedProduct<T> {
    pub fn new(a: &Matrix<T>, b: &Matrix<T>) -> Result<Self, PartialError> {
        if a.cols != b.rows {
            return Err(PartialError::DimensionMismatch { left: (a.rows, a.cols), right: (b.rows, b.cols) });
        }
        Ok(Self { a_rows: a.row_lists(), b_cols: b.col_lists() })
    }

    /// `(A x B)[i][j]` by merging row `i` of `A` with column `j` of `B`.
    pub fn entry(&self, i: usize, j: usize) -> T {
        dot(&self.a_rows[i], &self.b_cols[j])
    }

    pub fn eval(&self, s: &IndexSet<(usize, usize)>) -> Result<BTreeMap<(usize, usize), T>, PartialError> {
        let (rows, cols) = (self.a_rows.len(), self.b_cols.len());
        let mut out = BTreeMap::new();
        for &(i, j) in s.as_slice() {
            if i >= rows || j >= cols {
                return Err(PartialError::EntryOutOfRange { row: i, col: j, rows, cols });
            }
            out.insert((i, j), self.entry(i, j));
        }
        Ok(out)
    }
}

fn dot<T: Semiring>(row: &[(usize, T)], col: &[(usize, T)]) -> T {
    let (mut p, mut q) = (0, 0);
    let mut acc = T::zero();
    while p < row.len() && q < col.len() {
        match row[p].0.cmp(&col[q].0) {
            std::cmp::Ordering::Less => p += 1,
            std::cmp::Ordering::Greater => q += 1,
            std::cmp::Ordering::Equal => {
                acc = acc.add(row[p].1.mul(col[q].1));
                p += 1;
                q += 1;
            }
        }
    }
    acc
}

/// Entries of `A x B` at the positions in `s` only.
pub fn partial_matmul<T: Semiring>(
    a: &Matrix<T>,
    b: &Matrix<T>,
    s: &IndexSet<(usize, usize)>,
) -> Result<BTreeMap<(usize, usize), T>, PartialError> {
    PreparedProduct::new(a, b)?.eval(s)
}

/// A fixed left factor with a list of entry sets, queried later with one
/// right factor per set.
#[derive(Clone, Debug)]
pub struct PmmIndex<T> {
    a_rows: Vec<Vec<(usize, T)>>,
    a_cols: usize,
    sets: Vec<IndexSet<(usize, usize)>>,
}

pub fn pmm_index_build<T: Semiring>(
    a: &Matrix<T>,
    sets: Vec<IndexSet<(usize, usize)>>,
) -> Result<PmmIndex<T>, PartialError> {
    for s in &sets {
        if let Some(&(i, j)) = s.as_slice().iter().find(|&&(i, _)| i >= a.rows) {
            return Err(PartialError::EntryOutOfRange { row: i, col: j, rows: a.rows, cols: usize::MAX });
        }
    }
    Ok(PmmIndex { a_rows: a.row_lists(), a_cols: a.cols, sets })
}

pub fn pmm_index_query<T: Semiring>(
    idx: &PmmIndex<T>,
    which: usize,
    b: &Matrix<T>,
) -> Result<BTreeMap<(usize, usize), T>, PartialError> {
    let set = idx.sets.get(which).ok_or(PartialError::UnknownSet { index: which, count: idx.sets.len() })?;
    if b.rows != idx.a_cols {
        return Err(PartialError::DimensionMismatch { left: (idx.a_rows.len(), idx.a_cols), right: (b.rows, b.cols) });
    }
    let mut out = BTreeMap::new();
    if set.is_empty() {
        return Ok(out);
    }
    let b_cols = b.col_lists();
    for &(i, j) in set.as_slice() {
        if j >= b.cols {
            return Err(PartialError::EntryOutOfRange { row: i, col: j, rows: idx.a_rows.len(), cols: b.cols });
        }
        out.insert((i, j), dot(&idx.a_rows[i], &b_cols[j]));
    }
    Ok(out)
}

/// On-disk form: `{"rows": N, "cols": M, "nonzeros": [[i, j, v], ...]}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatrixFile {
    pub rows: usize,
    pub cols: usize,
    pub nonzeros: Vec<(usize, usize, i64)>,
}

impl From<&Matrix<i64>> for MatrixFile {
    fn from(m: &Matrix<i64>) -> Self {
        Self { rows: m.rows, cols: m.cols, nonzeros: m.nonzeros() }
    }
}

impl From<&Matrix<bool>> for MatrixFile {
    fn from(m: &Matrix<bool>) -> Self {
        Self { rows: m.rows, cols: m.cols, nonzeros: m.nonzeros().into_iter().map(|(i, j, _)| (i, j, 1)).collect() }
    }
}

impl TryFrom<&MatrixFile> for Matrix<i64> {
    type Error = PartialError;
    fn try_from(f: &MatrixFile) -> Result<Self, PartialError> {
        Matrix::from_entries(f.rows, f.cols, f.nonzeros.iter().copied())
    }
}

impl TryFrom<&MatrixFile> for Matrix<bool> {
    type Error = PartialError;
    fn try_from(f: &MatrixFile) -> Result<Self, PartialError> {
        Matrix::from_entries(f.rows, f.cols, f.nonzeros.iter().map(|&(i, j, v)| (i, j, v != 0)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    fn random_bool(rng: &mut SplitMix64, rows: usize, cols: usize, num: u64, den: u64) -> Matrix<bool> {
        let mut e = Vec::new();
        for i in 0..rows {
            for j in 0..cols {
                if rng.coin(num, den) {
                    e.push((i, j, true));
                }
            }
        }
        Matrix::from_entries(rows, cols, e).unwrap()
    }

    fn random_int(rng: &mut SplitMix64, rows: usize, cols: usize) -> Matrix<i64> {
        let mut e = Vec::new();
        for i in 0..rows {
            for j in 0..cols {
                if rng.coin(1, 4) {
                    e.push((i, j, rng.range_i64(-5, 5)));
                }
            }
        }
        Matrix::from_entries(rows, cols, e).unwrap()
    }

    fn random_entries(rng: &mut SplitMix64, rows: usize, cols: usize, count: usize) -> IndexSet<(usize, usize)> {
        IndexSet::new((0..count).map(|_| (rng.index(rows), rng.index(cols))).collect())
    }

    #[test]
    fn storage_choice_and_access() {
        let small = Matrix::<i64>::from_entries(3, 3, [(0, 1, 4), (2, 2, -1)]).unwrap();
        assert!(small.is_dense());
        assert_eq!(small.get(0, 1), 4);
        assert_eq!(small.get(1, 1), 0);
        let big = Matrix::<i64>::from_entries(100, 3, [(99, 2, 7)]).unwrap();
        assert!(!big.is_dense());
        assert_eq!(big.get(99, 2), 7);
        assert_eq!(big.nnz(), 1);
        assert!(Matrix::<i64>::from_entries(2, 2, [(2, 0, 1)]).is_err());
    }

    #[test]
    fn identity_selects_entries() {
        let mut rng = SplitMix64::new(1);
        let b = random_int(&mut rng, 20, 30);
        let s = random_entries(&mut rng, 20, 30, 40);
        let got = partial_matmul(&Matrix::identity(20), &b, &s).unwrap();
        for (&(i, j), &v) in &got {
            assert_eq!(v, b.get(i, j));
        }
        assert_eq!(got.len(), s.len());
    }

    #[test]
    fn random_boolean_matches_full_product() {
        let mut rng = SplitMix64::new(2);
        for _ in 0..10 {
            let a = random_bool(&mut rng, 32, 32, 1, 6);
            let b = random_bool(&mut rng, 32, 32, 1, 6);
            let full = matmul_naive(&a, &b).unwrap();
            let s = random_entries(&mut rng, 32, 32, 50);
            for (&(i, j), &v) in &partial_matmul(&a, &b, &s).unwrap() {
                assert_eq!(v, full.get(i, j));
            }
        }
    }

    #[test]
    fn sparse_integer_matches_full_product() {
        let mut rng = SplitMix64::new(3);
        let a = random_int(&mut rng, 70, 65);
        let b = random_int(&mut rng, 65, 80);
        assert!(!a.is_dense());
        let full = matmul_naive(&a, &b).unwrap();
        let s = random_entries(&mut rng, 70, 80, 300);
        for (&(i, j), &v) in &partial_matmul(&a, &b, &s).unwrap() {
            assert_eq!(v, full.get(i, j));
        }
    }

    #[test]
    fn empty_set_and_mismatch() {
        let a = Matrix::<i64>::identity(3);
        let b = Matrix::<i64>::identity(4);
        assert!(partial_matmul(&a, &a, &IndexSet::default()).unwrap().is_empty());
        assert!(matches!(partial_matmul(&a, &b, &IndexSet::default()), Err(PartialError::DimensionMismatch { .. })));
    }

    #[test]
    fn pmm_index_matches_per_set() {
        let mut rng = SplitMix64::new(4);
        let a = random_int(&mut rng, 40, 40);
        let sets: Vec<_> = (0..3).map(|_| random_entries(&mut rng, 40, 40, 30)).collect();
        let idx = pmm_index_build(&a, sets.clone()).unwrap();
        let bs: Vec<_> = (0..3).map(|_| random_int(&mut rng, 40, 40)).collect();
        for (i, b) in bs.iter().enumerate() {
            assert_eq!(pmm_index_query(&idx, i, b).unwrap(), partial_matmul(&a, b, &sets[i]).unwrap());
        }
        // One B against two sets: each answer is restricted to its own set.
        let q0 = pmm_index_query(&idx, 0, &bs[0]).unwrap();
        let q1 = pmm_index_query(&idx, 1, &bs[0]).unwrap();
        assert!(q0.keys().all(|e| sets[0].contains(e)));
        assert!(q1.keys().all(|e| sets[1].contains(e)));
        assert!(matches!(pmm_index_query(&idx, 3, &bs[0]), Err(PartialError::UnknownSet { .. })));

        let empty = pmm_index_build(&a, vec![IndexSet::default()]).unwrap();
        assert!(pmm_index_query(&empty, 0, &bs[0]).unwrap().is_empty());
    }

    #[test]
    fn matrix_file_round_trip() {
        let m = Matrix::<i64>::from_entries(2, 3, [(0, 2, 5), (1, 0, -2)]).unwrap();
        let f = MatrixFile::from(&m);
        let text = serde_json::to_string(&f).unwrap();
        assert_eq!(text, r#"{"rows":2,"cols":3,"nonzeros":[[0,2,5],[1,0,-2]]}"#);
        let back: MatrixFile = serde_json::from_str(&text).unwrap();
        assert_eq!(Matrix::<i64>::try_from(&back).unwrap(), m);
        let b = Matrix::<bool>::try_from(&back).unwrap();
        assert!(b.get(1, 0) && !b.get(0, 0));
    }
}
