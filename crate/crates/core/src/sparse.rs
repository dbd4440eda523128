//! Compressed sparse row matrices built from ordered triplets.

use nalgebra::DMatrix;

/// CSR matrix. Entries within a row are sorted by column with no duplicates.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
    symmetric: bool,
}

/// Collects `(row, col, value)` contributions; duplicates are summed in
/// insertion order when finalised, so the result is reproducible bit for bit.
#[derive(Debug, Clone)]
pub struct TripletBuilder {
    nrows: usize,
    ncols: usize,
    rows: Vec<Vec<(usize, f64)>>,
}

impl TripletBuilder {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            rows: vec![Vec::new(); nrows],
        }
    }

    #[inline]
    pub fn add(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.nrows && col < self.ncols);
        self.rows[row].push((col, value));
    }

    pub fn build(self) -> SparseMatrix {
        let mut row_offsets = Vec::with_capacity(self.nrows + 1);
        let mut col_indices = Vec::new();
        let mut values = Vec::new();
        row_offsets.push(0);
        for mut row in self.rows {
            // stable: equal columns keep insertion order
            row.sort_by_key(|&(c, _)| c);
            let mut iter = row.into_iter().peekable();
            while let Some((c, mut v)) = iter.next() {
                while let Some(&(c2, v2)) = iter.peek() {
                    if c2 != c {
                        break;
                    }
                    v += v2;
                    iter.next();
                }
                col_indices.push(c);
                values.push(v);
            }
            row_offsets.push(col_indices.len());
        }
        SparseMatrix::from_csr(self.nrows, self.ncols, row_offsets, col_indices, values)
    }
}

impl SparseMatrix {
    fn from_csr(
        nrows: usize,
        ncols: usize,
        row_offsets: Vec<usize>,
        col_indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Self {
        let mut m = Self {
            nrows,
            ncols,
            row_offsets,
            col_indices,
            values,
            symmetric: false,
        };
        m.symmetric = m.check_symmetric();
        m
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![1.0; n])
    }

    pub fn diagonal(d: &[f64]) -> Self {
        let n = d.len();
        Self::from_csr(n, n, (0..=n).collect(), (0..n).collect(), d.to_vec())
    }

    pub fn from_dense(a: &DMatrix<f64>) -> Self {
        let mut b = TripletBuilder::new(a.nrows(), a.ncols());
        for i in 0..a.nrows() {
            for j in 0..a.ncols() {
                if a[(i, j)] != 0.0 {
                    b.add(i, j, a[(i, j)]);
                }
            }
        }
        b.build()
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nrows, self.ncols)
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Set when `max |A - A^T| <= 1e-13 * max |A|`.
    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    /// `(col, value)` pairs of a row.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_offsets[i]..self.row_offsets[i + 1];
        self.col_indices[r.clone()]
            .iter()
            .copied()
            .zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_offsets[i]..self.row_offsets[i + 1];
        match self.col_indices[r.clone()].binary_search(&j) {
            Ok(k) => self.values[r.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal_values(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols, "matrix-vector dimension mismatch");
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.row(i).map(|(j, v)| v * x[j]).sum();
        }
    }

    /// `A^T x`
    pub fn tr_mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.nrows, "matrix-vector dimension mismatch");
        let mut y = vec![0.0; self.ncols];
        for (i, &xi) in x.iter().enumerate() {
            for (j, v) in self.row(i) {
                y[j] += v * xi;
            }
        }
        y
    }

    pub fn transpose(&self) -> SparseMatrix {
        let mut b = TripletBuilder::new(self.ncols, self.nrows);
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                b.add(j, i, v);
            }
        }
        b.build()
    }

    pub fn matmul(&self, other: &SparseMatrix) -> SparseMatrix {
        assert_eq!(self.ncols, other.nrows, "matrix product dimension mismatch");
        let mut b = TripletBuilder::new(self.nrows, other.ncols);
        for i in 0..self.nrows {
            for (k, a) in self.row(i) {
                for (j, v) in other.row(k) {
                    b.add(i, j, a * v);
                }
            }
        }
        b.build()
    }

    /// `alpha * self + beta * other`
    pub fn add_scaled(&self, alpha: f64, other: &SparseMatrix, beta: f64) -> SparseMatrix {
        assert_eq!(self.shape(), other.shape(), "matrix sum dimension mismatch");
        let mut b = TripletBuilder::new(self.nrows, self.ncols);
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                b.add(i, j, alpha * v);
            }
            for (j, v) in other.row(i) {
                b.add(i, j, beta * v);
            }
        }
        b.build()
    }

    pub fn scale(&self, s: f64) -> SparseMatrix {
        let mut m = self.clone();
        m.values.iter_mut().for_each(|v| *v *= s);
        m
    }

    /// Largest entry of `|self - other|`, treating missing entries as zero.
    pub fn max_abs_diff(&self, other: &SparseMatrix) -> f64 {
        self.add_scaled(1.0, other, -1.0).max_abs()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.nrows, self.ncols);
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                a[(i, j)] += v;
            }
        }
        a
    }

    fn check_symmetric(&self) -> bool {
        if self.nrows != self.ncols {
            return false;
        }
        let scale = self.max_abs();
        if scale == 0.0 {
            return true;
        }
        // a one-sided entry is compared against an implicit zero
        (0..self.nrows).all(|i| self.row(i).all(|(j, v)| (v - self.get(j, i)).abs() <= 1e-13 * scale))
    }
}
