//! Compressed sparse row storage for assembled operators.

use crate::error::{Error, Result};

/// CSR matrix with sorted, duplicate-free column indices in every row.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    nrows: usize,
    ncols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseOperator {
    /// Builds a CSR matrix from `(row, col, value)` triplets; duplicates are
    /// summed in input order so the result is bitwise reproducible.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut counts = vec![0usize; nrows + 1];
        for &(r, c, _) in triplets {
            if r >= nrows || c >= ncols {
                return Err(Error::invalid(format!(
                    "triplet ({r}, {c}) outside a {nrows}x{ncols} matrix"
                )));
            }
            counts[r + 1] += 1;
        }
        for i in 0..nrows {
            counts[i + 1] += counts[i];
        }
        // bucket by row, keeping input order within a row
        let mut next = counts.clone();
        let mut bucket = vec![(0usize, 0.0f64); triplets.len()];
        for &(r, c, v) in triplets {
            bucket[next[r]] = (c, v);
            next[r] += 1;
        }
        let mut row_offsets = Vec::with_capacity(nrows + 1);
        let mut col_indices = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        row_offsets.push(0);
        for r in 0..nrows {
            let row = &mut bucket[counts[r]..counts[r + 1]];
            row.sort_by_key(|&(c, _)| c);
            let mut k = 0;
            while k < row.len() {
                let c = row[k].0;
                let mut sum = 0.0;
                while k < row.len() && row[k].0 == c {
                    sum += row[k].1;
                    k += 1;
                }
                col_indices.push(c);
                values.push(sum);
            }
            row_offsets.push(col_indices.len());
        }
        Ok(SparseOperator { nrows, ncols, row_offsets, col_indices, values })
    }

    pub fn identity(n: usize) -> Self {
        SparseOperator {
            nrows: n,
            ncols: n,
            row_offsets: (0..=n).collect(),
            col_indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn from_dense(nrows: usize, ncols: usize, dense: &[f64]) -> Result<Self> {
        if dense.len() != nrows * ncols {
            return Err(Error::invalid("dense buffer has the wrong length"));
        }
        let mut triplets = Vec::new();
        for i in 0..nrows {
            for j in 0..ncols {
                let v = dense[i * ncols + j];
                if v != 0.0 {
                    triplets.push((i, j, v));
                }
            }
        }
        Self::from_triplets(nrows, ncols, &triplets)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
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

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_offsets[i]..self.row_offsets[i + 1];
        self.col_indices[range.clone()].iter().copied().zip(self.values[range].iter().copied())
    }

    /// Position of `(i, j)` in the value array, if stored.
    pub fn position(&self, i: usize, j: usize) -> Option<usize> {
        let start = self.row_offsets[i];
        let cols = &self.col_indices[start..self.row_offsets[i + 1]];
        cols.binary_search(&j).ok().map(|k| start + k)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.position(i, j).map_or(0.0, |k| self.values[k])
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols, "matvec: input length mismatch");
        assert_eq!(y.len(), self.nrows, "matvec: output length mismatch");
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.row(i).map(|(j, v)| v * x[j]).sum();
        }
    }

    /// `x^T self x`
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        let y = self.mul_vec(x);
        y.iter().zip(x).map(|(a, b)| a * b).sum()
    }

    pub fn transpose(&self) -> SparseOperator {
        let mut counts = vec![0usize; self.ncols + 1];
        for &c in &self.col_indices {
            counts[c + 1] += 1;
        }
        for j in 0..self.ncols {
            counts[j + 1] += counts[j];
        }
        let mut next = counts.clone();
        let mut col_indices = vec![0; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                col_indices[next[j]] = i;
                values[next[j]] = v;
                next[j] += 1;
            }
        }
        SparseOperator {
            nrows: self.ncols,
            ncols: self.nrows,
            row_offsets: counts,
            col_indices,
            values,
        }
    }

    /// `self + scale * other` over the union of both patterns.
    pub fn add_scaled(&self, other: &SparseOperator, scale: f64) -> Result<SparseOperator> {
        if self.nrows != other.nrows || self.ncols != other.ncols {
            return Err(Error::invalid(format!(
                "shape mismatch: {}x{} vs {}x{}",
                self.nrows, self.ncols, other.nrows, other.ncols
            )));
        }
        let mut row_offsets = Vec::with_capacity(self.nrows + 1);
        let mut col_indices = Vec::with_capacity(self.nnz().max(other.nnz()));
        let mut values = Vec::with_capacity(self.nnz().max(other.nnz()));
        row_offsets.push(0);
        for i in 0..self.nrows {
            let mut a = self.row(i).peekable();
            let mut b = other.row(i).peekable();
            loop {
                match (a.peek().copied(), b.peek().copied()) {
                    (Some((ja, va)), Some((jb, vb))) if ja == jb => {
                        col_indices.push(ja);
                        values.push(va + scale * vb);
                        a.next();
                        b.next();
                    }
                    (Some((ja, va)), Some((jb, _))) if ja < jb => {
                        col_indices.push(ja);
                        values.push(va);
                        a.next();
                    }
                    (Some(_), Some((jb, vb))) | (None, Some((jb, vb))) => {
                        col_indices.push(jb);
                        values.push(scale * vb);
                        b.next();
                    }
                    (Some((ja, va)), None) => {
                        col_indices.push(ja);
                        values.push(va);
                        a.next();
                    }
                    (None, None) => break,
                }
            }
            row_offsets.push(col_indices.len());
        }
        Ok(SparseOperator { nrows: self.nrows, ncols: self.ncols, row_offsets, col_indices, values })
    }

    pub fn scaled(&self, factor: f64) -> SparseOperator {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= factor);
        out
    }

    /// Row-major dense copy.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut dense = vec![0.0; self.nrows * self.ncols];
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                dense[i * self.ncols + j] = v;
            }
        }
        dense
    }

    /// Largest `|a_ij - a_ji|`; `None` when not square.
    pub fn symmetry_defect(&self) -> Option<f64> {
        if self.nrows != self.ncols {
            return None;
        }
        let mut worst: f64 = 0.0;
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        Some(worst)
    }

    /// Stacks `[[a, b], [c, d]]` into one operator.
    pub fn block(a: &SparseOperator, b: &SparseOperator, c: &SparseOperator, d: &SparseOperator) -> Result<SparseOperator> {
        if a.nrows != b.nrows || c.nrows != d.nrows || a.ncols != c.ncols || b.ncols != d.ncols {
            return Err(Error::invalid("inconsistent block dimensions"));
        }
        let nrows = a.nrows + c.nrows;
        let ncols = a.ncols + b.ncols;
        let mut row_offsets = Vec::with_capacity(nrows + 1);
        let mut col_indices = Vec::with_capacity(a.nnz() + b.nnz() + c.nnz() + d.nnz());
        let mut values = Vec::with_capacity(col_indices.capacity());
        row_offsets.push(0);
        for (left, right) in [(a, b), (c, d)] {
            for i in 0..left.nrows {
                for (j, v) in left.row(i) {
                    col_indices.push(j);
                    values.push(v);
                }
                for (j, v) in right.row(i) {
                    col_indices.push(left.ncols + j);
                    values.push(v);
                }
                row_offsets.push(col_indices.len());
            }
        }
        Ok(SparseOperator { nrows, ncols, row_offsets, col_indices, values })
    }

    pub fn zeros(nrows: usize, ncols: usize) -> SparseOperator {
        SparseOperator {
            nrows,
            ncols,
            row_offsets: vec![0; nrows + 1],
            col_indices: vec![],
            values: vec![],
        }
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_are_sorted_and_summed() {
        let m = SparseOperator::from_triplets(2, 3, &[(0, 2, 1.0), (0, 0, 2.0), (0, 2, 3.0), (1, 1, -1.0)]).unwrap();
        assert_eq!(m.col_indices(), &[0, 2, 1]);
        assert_eq!(m.values(), &[2.0, 4.0, -1.0]);
        assert_eq!(m.get(0, 1), 0.0);
        assert!(SparseOperator::from_triplets(1, 1, &[(1, 0, 1.0)]).is_err());
    }

    #[test]
    fn transpose_and_add() {
        let a = SparseOperator::from_dense(2, 2, &[1.0, 2.0, 0.0, 3.0]).unwrap();
        let t = a.transpose();
        assert_eq!(t.to_dense(), vec![1.0, 0.0, 2.0, 3.0]);
        let s = a.add_scaled(&t, 2.0).unwrap();
        assert_eq!(s.to_dense(), vec![3.0, 2.0, 4.0, 9.0]);
        assert_eq!(s.symmetry_defect(), Some(2.0));
    }

    #[test]
    fn block_layout() {
        let i = SparseOperator::identity(1);
        let z = SparseOperator::zeros(1, 1);
        let b = SparseOperator::block(&i, &i.scaled(2.0), &z, &i).unwrap();
        assert_eq!(b.to_dense(), vec![1.0, 2.0, 0.0, 1.0]);
        assert_eq!(b.mul_vec(&[1.0, 1.0]), vec![3.0, 1.0]);
    }
}
