//! Symmetric sparse matrices stored as the upper triangle (diagonal
//! included) in compressed-row form.

use std::io::Write;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SymCsr {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    values: Vec<f64>,
}

impl SymCsr {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            row_ptr: vec![0; n + 1],
            cols: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Builds from `(row, col, value)` triplets. Entries below the diagonal
    /// are mirrored into the upper triangle, duplicates are summed and
    /// explicit zeros dropped.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        for t in triplets.iter_mut() {
            if t.0 > t.1 {
                std::mem::swap(&mut t.0, &mut t.1);
            }
        }
        triplets.sort_by_key(|t| (t.0, t.1));

        let mut row_ptr = vec![0usize; n + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut rows = Vec::with_capacity(triplets.len());
        for (r, c, v) in triplets {
            assert!(c < n, "column {c} out of range for dimension {n}");
            if rows.last() == Some(&r) && cols.last() == Some(&c) {
                *values.last_mut().unwrap() += v;
            } else {
                rows.push(r);
                cols.push(c);
                values.push(v);
            }
        }
        let mut keep_cols = Vec::with_capacity(cols.len());
        let mut keep_vals = Vec::with_capacity(values.len());
        for ((r, c), v) in rows.into_iter().zip(cols).zip(values) {
            if v != 0.0 {
                row_ptr[r + 1] += 1;
                keep_cols.push(c);
                keep_vals.push(v);
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self {
            n,
            row_ptr,
            cols: keep_cols,
            values: keep_vals,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Number of stored (upper-triangular) entries.
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Stored entries of row `i` with column ≥ `i`.
    pub fn upper_row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| self.upper_row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (r, c) = if i <= j { (i, j) } else { (j, i) };
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.cols[range.clone()].binary_search(&c) {
            Ok(k) => self.values[range.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    /// Full row `i`, assembled from both triangles, in ascending column
    /// order.
    pub fn row(&self, i: usize) -> Vec<(usize, f64)> {
        let mut out: Vec<(usize, f64)> = (0..i)
            .filter_map(|r| {
                let v = self.get(r, i);
                (v != 0.0).then_some((r, v))
            })
            .collect();
        out.extend(self.upper_row(i));
        out
    }

    /// `y += scale * A x`, rows visited in order.
    pub fn mul_add(&self, x: &[f64], scale: f64, y: &mut [f64]) {
        for i in 0..self.n {
            let xi = x[i];
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.cols[k];
                let a = self.values[k];
                acc += a * x[j];
                if j != i {
                    y[j] += scale * a * xi;
                }
            }
            y[i] += scale * acc;
        }
    }

    /// Principal submatrix on `keep`, reindexed so that `keep[new] = old`.
    /// `keep` may be a permutation of a subset; indices must be distinct.
    pub fn select(&self, keep: &[usize]) -> Result<SymCsr> {
        let mut new_index = vec![usize::MAX; self.n];
        for (new, &old) in keep.iter().enumerate() {
            if old >= self.n {
                return Err(Error::IndexOutOfRange {
                    index: old,
                    dim: self.n,
                });
            }
            new_index[old] = new;
        }
        let sorted_prefix = keep.windows(2).all(|w| w[0] < w[1]);
        if sorted_prefix {
            // Order preserved: rows stay sorted, no re-sorting needed.
            let mut row_ptr = Vec::with_capacity(keep.len() + 1);
            row_ptr.push(0);
            let mut cols = Vec::new();
            let mut values = Vec::new();
            for &old in keep {
                for (j, v) in self.upper_row(old) {
                    let nj = new_index[j];
                    if nj != usize::MAX {
                        cols.push(nj);
                        values.push(v);
                    }
                }
                row_ptr.push(cols.len());
            }
            return Ok(SymCsr {
                n: keep.len(),
                row_ptr,
                cols,
                values,
            });
        }
        let triplets = self
            .triplets()
            .filter_map(|(i, j, v)| {
                let (a, b) = (new_index[i], new_index[j]);
                (a != usize::MAX && b != usize::MAX).then_some((a, b, v))
            })
            .collect();
        Ok(SymCsr::from_triplets(keep.len(), triplets))
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for (i, j, v) in self.triplets() {
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
        m
    }

    /// Coordinate dump, `i j value` with 1-based indices, both triangles.
    pub fn write_coordinate<W: Write>(&self, mut w: W, scale: f64) -> std::io::Result<()> {
        let mut entries: Vec<(usize, usize, f64)> = Vec::with_capacity(2 * self.nnz());
        for (i, j, v) in self.triplets() {
            entries.push((i, j, v));
            if i != j {
                entries.push((j, i, v));
            }
        }
        entries.sort_by_key(|e| (e.0, e.1));
        for (i, j, v) in entries {
            writeln!(w, "{} {} {:.16e}", i + 1, j + 1, scale * v)?;
        }
        Ok(())
    }
}
