//! Column-compressed complex matrices.

use crate::C64;
use alloc::vec;
use alloc::vec::Vec;
use nalgebra::DMatrix;
use num_traits::Zero;

/// Square sparse matrix in compressed-column form. Row indices are sorted
/// within each column and duplicates are summed at construction, so the entry
/// order is deterministic.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    dim: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<C64>,
}

impl SparseMatrix {
    pub fn zeros(dim: usize) -> Self {
        SparseMatrix {
            dim,
            col_ptr: vec![0; dim + 1],
            row_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_triplets(dim, (0..dim).map(|i| (i, i, C64::new(1.0, 0.0))))
    }

    /// Builds from `(row, col, value)` triplets; repeated positions are summed.
    /// Explicit zeros are kept.
    pub fn from_triplets(
        dim: usize,
        triplets: impl IntoIterator<Item = (usize, usize, C64)>,
    ) -> Self {
        let mut cols: Vec<Vec<(usize, C64)>> = vec![Vec::new(); dim];
        for (r, c, v) in triplets {
            assert!(
                r < dim && c < dim,
                "triplet ({r}, {c}) out of range for dimension {dim}"
            );
            cols[c].push((r, v));
        }
        let mut col_ptr = Vec::with_capacity(dim + 1);
        let mut row_idx = Vec::new();
        let mut values = Vec::new();
        col_ptr.push(0);
        for mut col in cols {
            col.sort_by_key(|&(r, _)| r);
            for (r, v) in col {
                if row_idx.len() > *col_ptr.last().unwrap() && *row_idx.last().unwrap() == r {
                    *values.last_mut().unwrap() += v;
                } else {
                    row_idx.push(r);
                    values.push(v);
                }
            }
            col_ptr.push(row_idx.len());
        }
        SparseMatrix {
            dim,
            col_ptr,
            row_idx,
            values,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Stored entries, including any explicit zeros.
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Entries with nonzero value.
    pub fn count_nonzero(&self) -> usize {
        self.values.iter().filter(|v| !v.is_zero()).count()
    }

    pub fn column(&self, c: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let range = self.col_ptr[c]..self.col_ptr[c + 1];
        self.row_idx[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.column(c)
            .find(|&(row, _)| row == r)
            .map_or(C64::zero(), |(_, v)| v)
    }

    /// `(row, col, value)` in column-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.dim).flat_map(move |c| self.column(c).map(move |(r, v)| (r, c, v)))
    }

    /// `y = A x`.
    pub fn matvec(&self, x: &[C64], y: &mut [C64]) {
        assert_eq!(x.len(), self.dim);
        assert_eq!(y.len(), self.dim);
        y.iter_mut().for_each(|v| *v = C64::zero());
        for (c, &xc) in x.iter().enumerate() {
            if xc.is_zero() {
                continue;
            }
            for (r, v) in self.column(c) {
                y[r] += v * xc;
            }
        }
    }

    /// `y = A* x`.
    pub fn adjoint_matvec(&self, x: &[C64], y: &mut [C64]) {
        assert_eq!(x.len(), self.dim);
        assert_eq!(y.len(), self.dim);
        for (c, yc) in y.iter_mut().enumerate() {
            *yc = self.column(c).map(|(r, v)| v.conj() * x[r]).sum();
        }
    }

    /// Multiplies row `i` by `d[i]`.
    pub fn scale_rows(&self, d: &[C64]) -> Self {
        assert_eq!(d.len(), self.dim);
        let mut out = self.clone();
        for (v, &r) in out.values.iter_mut().zip(&self.row_idx) {
            *v *= d[r];
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        Self::from_triplets(
            self.dim,
            self.triplets()
                .chain(other.triplets().map(|(r, c, v)| (r, c, -v))),
        )
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        Self::from_triplets(self.dim, self.triplets().chain(other.triplets()))
    }

    /// Drops stored entries that are exactly zero.
    pub fn pruned(&self) -> Self {
        Self::from_triplets(self.dim, self.triplets().filter(|(_, _, v)| !v.is_zero()))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (r, c, v) in self.triplets() {
            m[(r, c)] += v;
        }
        m
    }

    /// `max_{ij} |(A* A − I)_{ij}|`, computed sparsely.
    pub fn gram_deviation(&self) -> f64 {
        let mut rows: Vec<Vec<(usize, C64)>> = vec![Vec::new(); self.dim];
        for (r, c, v) in self.triplets() {
            rows[r].push((c, v));
        }
        let mut worst = 0.0f64;
        let mut acc: Vec<C64> = vec![C64::zero(); self.dim];
        let mut touched: Vec<usize> = Vec::new();
        for i in 0..self.dim {
            for (r, a) in self.column(i) {
                for &(j, b) in &rows[r] {
                    if acc[j].is_zero() {
                        touched.push(j);
                    }
                    acc[j] += a.conj() * b;
                }
            }
            let mut diag_seen = false;
            for &j in &touched {
                let target = if j == i { 1.0 } else { 0.0 };
                diag_seen |= j == i;
                worst = worst.max((acc[j] - target).norm());
                acc[j] = C64::zero();
            }
            if !diag_seen {
                worst = worst.max(1.0);
            }
            touched.clear();
        }
        worst
    }
}
