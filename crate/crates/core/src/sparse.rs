//! Compressed sparse row matrices.
//!
//! Only what the tube operators need: assembly from triplets, products with
//! vectors and other CSR matrices, linear combinations, and a Matrix Market
//! writer for inspecting assembled systems.

use std::io::Write;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds a matrix from `(row, col, value)` entries; duplicates are summed and
    /// columns are sorted within each row. Explicit zeros are kept.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut counts = vec![0usize; nrows + 1];
        for &(i, j, _) in triplets {
            if i >= nrows || j >= ncols {
                return Err(Error::DimensionMismatch(format!(
                    "entry ({i}, {j}) outside a {nrows}x{ncols} matrix"
                )));
            }
            counts[i + 1] += 1;
        }
        for i in 0..nrows {
            counts[i + 1] += counts[i];
        }
        let mut next = counts.clone();
        let mut cols = vec![0usize; triplets.len()];
        let mut vals = vec![0.0; triplets.len()];
        for &(i, j, v) in triplets {
            cols[next[i]] = j;
            vals[next[i]] = v;
            next[i] += 1;
        }

        let mut row_ptr = Vec::with_capacity(nrows + 1);
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        row_ptr.push(0);
        let mut row: Vec<(usize, f64)> = Vec::new();
        for i in 0..nrows {
            row.clear();
            row.extend((counts[i]..counts[i + 1]).map(|k| (cols[k], vals[k])));
            row.sort_by_key(|e| e.0);
            for &(j, v) in &row {
                if col_idx.len() > row_ptr[i] && *col_idx.last().unwrap() == j {
                    *values.last_mut().unwrap() += v;
                } else {
                    col_idx.push(j);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Ok(Self {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        })
    }

    /// Builds a matrix row by row from sorted, duplicate-free rows.
    pub(crate) fn from_rows(ncols: usize, rows: Vec<Vec<(usize, f64)>>) -> Self {
        let nrows = rows.len();
        let nnz = rows.iter().map(Vec::len).sum();
        let mut row_ptr = Vec::with_capacity(nrows + 1);
        let mut col_idx = Vec::with_capacity(nnz);
        let mut values = Vec::with_capacity(nnz);
        row_ptr.push(0);
        for row in rows {
            debug_assert!(row.windows(2).all(|w| w[0].0 < w[1].0));
            for (j, v) in row {
                col_idx.push(j);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        Self {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![1.0; n])
    }

    /// Square diagonal matrix; zero diagonal entries are stored explicitly.
    pub fn diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Self {
            nrows: n,
            ncols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: diag.to_vec(),
        }
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

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.values[r])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        cols.binary_search(&j).map_or(0.0, |k| vals[k])
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols, "vector length must match column count");
        assert_eq!(y.len(), self.nrows, "output length must match row count");
        for (i, yi) in y.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            *yi = cols.iter().zip(vals).map(|(&j, &v)| v * x[j]).sum();
        }
    }

    /// Sparse product `self * rhs`.
    pub fn matmul(&self, rhs: &CsrMatrix) -> Result<CsrMatrix> {
        if self.ncols != rhs.nrows {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} times {}x{}",
                self.nrows, self.ncols, rhs.nrows, rhs.ncols
            )));
        }
        let mut acc = vec![0.0; rhs.ncols];
        let mut mark = vec![usize::MAX; rhs.ncols];
        let mut pattern: Vec<usize> = Vec::new();
        let mut rows = Vec::with_capacity(self.nrows);
        for i in 0..self.nrows {
            pattern.clear();
            let (cols, vals) = self.row(i);
            for (&k, &a) in cols.iter().zip(vals) {
                let (rc, rv) = rhs.row(k);
                for (&j, &b) in rc.iter().zip(rv) {
                    if mark[j] != i {
                        mark[j] = i;
                        acc[j] = 0.0;
                        pattern.push(j);
                    }
                    acc[j] += a * b;
                }
            }
            pattern.sort_unstable();
            rows.push(pattern.iter().map(|&j| (j, acc[j])).collect());
        }
        Ok(Self::from_rows(rhs.ncols, rows))
    }

    /// `alpha * self + beta * other`, keeping the union of both patterns.
    pub fn add_scaled(&self, alpha: f64, other: &CsrMatrix, beta: f64) -> Result<CsrMatrix> {
        if self.nrows != other.nrows || self.ncols != other.ncols {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} plus {}x{}",
                self.nrows, self.ncols, other.nrows, other.ncols
            )));
        }
        let mut rows = Vec::with_capacity(self.nrows);
        for i in 0..self.nrows {
            let (ac, av) = self.row(i);
            let (bc, bv) = other.row(i);
            let mut row = Vec::with_capacity(ac.len() + bc.len());
            let (mut p, mut q) = (0, 0);
            while p < ac.len() || q < bc.len() {
                if q == bc.len() || (p < ac.len() && ac[p] < bc[q]) {
                    row.push((ac[p], alpha * av[p]));
                    p += 1;
                } else if p == ac.len() || bc[q] < ac[p] {
                    row.push((bc[q], beta * bv[q]));
                    q += 1;
                } else {
                    row.push((ac[p], alpha * av[p] + beta * bv[q]));
                    p += 1;
                    q += 1;
                }
            }
            rows.push(row);
        }
        Ok(Self::from_rows(self.ncols, rows))
    }

    pub fn scaled(&self, alpha: f64) -> CsrMatrix {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= alpha);
        out
    }

    /// Left-multiplies by `diag(d)`, i.e. scales row `i` by `d[i]`.
    pub fn scale_rows(&self, d: &[f64]) -> CsrMatrix {
        let mut out = self.clone();
        for (i, &di) in d.iter().enumerate() {
            for v in &mut out.values[self.row_ptr[i]..self.row_ptr[i + 1]] {
                *v *= di;
            }
        }
        out
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut triplets = Vec::with_capacity(self.nnz());
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            triplets.extend(cols.iter().zip(vals).map(|(&j, &v)| (j, i, v)));
        }
        Self::from_triplets(self.ncols, self.nrows, &triplets).expect("indices come from a valid matrix")
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.nrows)
            .map(|i| self.row(i).1.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Writes the matrix in Matrix Market coordinate format (1-based indices).
    pub fn write_matrix_market<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "%%MatrixMarket matrix coordinate real general")?;
        writeln!(out, "{} {} {}", self.nrows, self.ncols, self.nnz())?;
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                writeln!(out, "{} {} {:.17e}", i + 1, j + 1, v)?;
            }
        }
        Ok(())
    }

    pub(crate) fn to_faer(&self) -> Result<faer::sparse::SparseColMat<usize, f64>> {
        let triplets: Vec<_> = (0..self.nrows)
            .flat_map(|i| {
                let (cols, vals) = self.row(i);
                cols.iter()
                    .zip(vals)
                    .map(move |(&j, &v)| faer::sparse::Triplet::new(i, j, v))
            })
            .collect();
        faer::sparse::SparseColMat::try_new_from_triplets(self.nrows, self.ncols, &triplets)
            .map_err(|e| Error::FactorizationFailure(format!("{e:?}")))
    }
}

pub fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dense(m: &CsrMatrix) -> Vec<Vec<f64>> {
        (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m.get(i, j)).collect()).collect()
    }

    #[test]
    fn duplicates_are_summed_and_sorted() {
        let m = CsrMatrix::from_triplets(2, 3, &[(0, 2, 1.0), (0, 0, 2.0), (0, 2, 3.0), (1, 1, -1.0)]).unwrap();
        assert_eq!(m.row(0), (&[0usize, 2][..], &[2.0, 4.0][..]));
        assert_eq!(m.nnz(), 3);
        assert!(CsrMatrix::from_triplets(2, 2, &[(2, 0, 1.0)]).is_err());
    }

    #[test]
    fn identity_times_vector() {
        let b = [1.0, -2.0, 3.5];
        assert_eq!(CsrMatrix::identity(3).mul_vec(&b), b.to_vec());
    }

    #[test]
    fn matrix_market_header() {
        let mut buf = Vec::new();
        CsrMatrix::diagonal(&[1.0, 0.0]).write_matrix_market(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("%%MatrixMarket matrix coordinate real general\n2 2 2\n"));
    }

    fn arb_matrix(n: usize) -> impl Strategy<Value = CsrMatrix> {
        prop::collection::vec((0..n, 0..n, -5.0..5.0f64), 0..3 * n)
            .prop_map(move |t| CsrMatrix::from_triplets(n, n, &t).unwrap())
    }

    proptest! {
        #[test]
        fn products_agree_with_dense(a in arb_matrix(6), b in arb_matrix(6), x in prop::collection::vec(-3.0..3.0f64, 6)) {
            let (da, db) = (dense(&a), dense(&b));
            let c = dense(&a.matmul(&b).unwrap());
            let s = dense(&a.add_scaled(2.0, &b, -0.5).unwrap());
            let ax = a.mul_vec(&x);
            let at = dense(&a.transpose());
            for i in 0..6 {
                let axi: f64 = (0..6).map(|k| da[i][k] * x[k]).sum();
                prop_assert!((ax[i] - axi).abs() < 1e-12);
                for j in 0..6 {
                    let cij: f64 = (0..6).map(|k| da[i][k] * db[k][j]).sum();
                    prop_assert!((c[i][j] - cij).abs() < 1e-12);
                    prop_assert!((s[i][j] - (2.0 * da[i][j] - 0.5 * db[i][j])).abs() < 1e-12);
                    prop_assert_eq!(at[j][i], da[i][j]);
                }
            }
        }
    }
}
