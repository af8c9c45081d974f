use rayon::prelude::*;

use crate::error::{CarnotError, Result};

/// Compressed sparse row matrix with sorted column indices per row.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from per-row `(column, value)` lists; duplicate columns are summed.
    pub fn from_rows(ncols: usize, rows: Vec<Vec<(usize, f64)>>) -> Self {
        let nrows = rows.len();
        let mut row_ptr = Vec::with_capacity(nrows + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|e| e.0);
            let start = cols.len();
            for (c, v) in row {
                assert!(c < ncols, "column {c} out of range");
                if cols.len() > start && *cols.last().unwrap() == c {
                    *vals.last_mut().unwrap() += v;
                } else {
                    cols.push(c);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        Self {
            nrows,
            ncols,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    /// `y = A x`, parallel over rows; each row is summed in a fixed order.
    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        y.par_iter_mut().enumerate().with_min_len(1024).for_each(|(i, yi)| {
            let mut s = 0.0;
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.vals[p] * x[self.cols[p]];
            }
            *yi = s;
        });
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.mul_vec_into(x, &mut y);
        y
    }

    /// Row-major dense copy, for small fallback solves.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.nrows * self.ncols];
        for i in 0..self.nrows {
            for (c, v) in self.row(i) {
                d[i * self.ncols + c] = v;
            }
        }
        d
    }
}

/// Incomplete LU factorization with zero fill-in, sharing the sparsity of `A`.
#[derive(Clone, Debug)]
pub struct Ilu0 {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    diag: Vec<usize>,
}

impl Ilu0 {
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        assert_eq!(a.nrows, a.ncols);
        let n = a.nrows;
        let mut vals = a.vals.clone();
        let mut diag = vec![usize::MAX; n];
        for i in 0..n {
            for p in a.row_ptr[i]..a.row_ptr[i + 1] {
                if a.cols[p] == i {
                    diag[i] = p;
                }
            }
            if diag[i] == usize::MAX {
                return Err(CarnotError::SingularSystem { pivot: i });
            }
        }
        let mut pos = vec![usize::MAX; n];
        for i in 0..n {
            let (start, end) = (a.row_ptr[i], a.row_ptr[i + 1]);
            for p in start..end {
                pos[a.cols[p]] = p;
            }
            for p in start..end {
                let k = a.cols[p];
                if k >= i {
                    break;
                }
                let pivot = vals[diag[k]];
                let lik = vals[p] / pivot;
                vals[p] = lik;
                for q in diag[k] + 1..a.row_ptr[k + 1] {
                    let target = pos[a.cols[q]];
                    if target != usize::MAX {
                        vals[target] -= lik * vals[q];
                    }
                }
            }
            for p in start..end {
                pos[a.cols[p]] = usize::MAX;
            }
            let d = vals[diag[i]];
            if d == 0.0 || !d.is_finite() {
                return Err(CarnotError::SingularSystem { pivot: i });
            }
        }
        Ok(Self {
            n,
            row_ptr: a.row_ptr.clone(),
            cols: a.cols.clone(),
            vals,
            diag,
        })
    }

    /// `x = (LU)^{-1} b`.
    pub fn apply(&self, b: &[f64], x: &mut [f64]) {
        x.copy_from_slice(b);
        for i in 0..self.n {
            let mut s = x[i];
            for p in self.row_ptr[i]..self.diag[i] {
                s -= self.vals[p] * x[self.cols[p]];
            }
            x[i] = s;
        }
        for i in (0..self.n).rev() {
            let mut s = x[i];
            for p in self.diag[i] + 1..self.row_ptr[i + 1] {
                s -= self.vals[p] * x[self.cols[p]];
            }
            x[i] = s / self.vals[self.diag[i]];
        }
    }
}
