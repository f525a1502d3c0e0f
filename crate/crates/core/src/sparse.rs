//! Compressed sparse row matrices and triplet assembly.
//!
//! Small, self-contained CSR layer used by every assembly routine. Linear
//! solves are delegated to [`crate::solver`]; this module only handles
//! storage, products, transposes and restriction to free degrees of freedom.

use std::io::Write;
use std::path::Path;

/// Triplet (coordinate) accumulator; duplicate entries are summed on
/// conversion to CSR, which is exactly the scatter-add an element loop needs.
#[derive(Clone, Debug)]
pub struct Triplets {
    nrows: usize,
    ncols: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl Triplets {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            entries: Vec::new(),
        }
    }

    pub fn with_capacity(nrows: usize, ncols: usize, cap: usize) -> Self {
        Self {
            nrows,
            ncols,
            entries: Vec::with_capacity(cap),
        }
    }

    #[inline]
    pub fn push(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.nrows && col < self.ncols);
        if value != 0.0 {
            self.entries.push((row, col, value));
        }
    }

    pub fn into_csr(self) -> SparseOperator {
        SparseOperator::from_triplets(self.nrows, self.ncols, self.entries)
    }
}

/// Sparse matrix in CSR form with sorted column indices per row.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseOperator {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseOperator {
    pub fn from_triplets(nrows: usize, ncols: usize, mut entries: Vec<(usize, usize, f64)>) -> Self {
        entries.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut indptr = vec![0usize; nrows + 1];
        let mut indices: Vec<usize> = Vec::with_capacity(entries.len());
        let mut values: Vec<f64> = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in entries {
            debug_assert!(r < nrows && c < ncols);
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                indices.push(c);
                values.push(v);
                indptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..nrows {
            indptr[r + 1] += indptr[r];
        }
        Self {
            nrows,
            ncols,
            indptr,
            indices,
            values,
        }
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            indptr: vec![0; nrows + 1],
            indices: Vec::new(),
            values: Vec::new(),
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

    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.indptr[r], self.indptr[r + 1]);
        (&self.indices[a..b], &self.values[a..b])
    }

    /// Entry lookup by binary search; zero when absent.
    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (cols, vals) = self.row(r);
        match cols.binary_search(&c) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        for r in 0..self.nrows {
            let (cols, vals) = (
                &self.indices[self.indptr[r]..self.indptr[r + 1]],
                &self.values[self.indptr[r]..self.indptr[r + 1]],
            );
            let mut acc = 0.0;
            for (c, v) in cols.iter().zip(vals) {
                acc += v * x[*c];
            }
            y[r] = acc;
        }
    }

    /// y += s * A x
    pub fn matvec_add_scaled(&self, x: &[f64], s: f64, y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        for r in 0..self.nrows {
            let (cols, vals) = (
                &self.indices[self.indptr[r]..self.indptr[r + 1]],
                &self.values[self.indptr[r]..self.indptr[r + 1]],
            );
            let mut acc = 0.0;
            for (c, v) in cols.iter().zip(vals) {
                acc += v * x[*c];
            }
            y[r] += s * acc;
        }
    }

    pub fn transpose(&self) -> Self {
        let mut entries = Vec::with_capacity(self.nnz());
        for r in 0..self.nrows {
            let (cols, vals) = self.row(r);
            for (c, v) in cols.iter().zip(vals) {
                entries.push((*c, r, *v));
            }
        }
        Self::from_triplets(self.ncols, self.nrows, entries)
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        for v in &mut out.values {
            *v *= s;
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.nrows, other.nrows);
        assert_eq!(self.ncols, other.ncols);
        let mut entries = Vec::with_capacity(self.nnz() + other.nnz());
        for m in [self, other] {
            for r in 0..m.nrows {
                let (cols, vals) = m.row(r);
                for (c, v) in cols.iter().zip(vals) {
                    entries.push((r, *c, *v));
                }
            }
        }
        Self::from_triplets(self.nrows, self.ncols, entries)
    }

    /// Iterate all stored entries as (row, col, value).
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |r| {
            let (cols, vals) = self.row(r);
            cols.iter().zip(vals).map(move |(c, v)| (r, *c, *v))
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// max |K_ij - K_ji| over stored entries; the symmetry check advertised by
    /// the assembly contracts.
    pub fn symmetry_error(&self) -> f64 {
        assert_eq!(self.nrows, self.ncols);
        let mut err: f64 = 0.0;
        for (r, c, v) in self.iter() {
            err = err.max((v - self.get(c, r)).abs());
        }
        err
    }

    /// Restriction to `rows` x `cols` (indices must be sorted and unique).
    pub fn restrict(&self, rows: &[usize], cols: &[usize]) -> Self {
        let mut col_pos = vec![usize::MAX; self.ncols];
        for (k, &c) in cols.iter().enumerate() {
            col_pos[c] = k;
        }
        let mut entries = Vec::new();
        for (ri, &r) in rows.iter().enumerate() {
            let (rcols, rvals) = self.row(r);
            for (c, v) in rcols.iter().zip(rvals) {
                let k = col_pos[*c];
                if k != usize::MAX {
                    entries.push((ri, k, *v));
                }
            }
        }
        Self::from_triplets(rows.len(), cols.len(), entries)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.ncols]; self.nrows];
        for (r, c, v) in self.iter() {
            d[r][c] += v;
        }
        d
    }

    /// Coordinate-format text dump: one `row col value` line per entry.
    pub fn write_coo(&self, path: &Path) -> std::io::Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(f, "{} {} {}", self.nrows, self.ncols, self.nnz())?;
        for (r, c, v) in self.iter() {
            writeln!(f, "{} {} {:.17e}", r, c, v)?;
        }
        Ok(())
    }
}

/// Block-diagonal [A 0; 0 A] operator, used to act componentwise on stacked
/// velocity vectors.
pub fn block_diag2(a: &SparseOperator) -> SparseOperator {
    let n = a.nrows();
    let m = a.ncols();
    let mut entries = Vec::with_capacity(2 * a.nnz());
    for (r, c, v) in a.iter() {
        entries.push((r, c, v));
        entries.push((r + n, c + m, v));
    }
    SparseOperator::from_triplets(2 * n, 2 * m, entries)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_merge_duplicates() {
        let mut t = Triplets::new(2, 2);
        t.push(0, 0, 1.0);
        t.push(0, 0, 2.0);
        t.push(1, 0, -1.0);
        t.push(0, 1, 4.0);
        let a = t.into_csr();
        assert_eq!(a.get(0, 0), 3.0);
        assert_eq!(a.get(0, 1), 4.0);
        assert_eq!(a.get(1, 0), -1.0);
        assert_eq!(a.get(1, 1), 0.0);
        assert_eq!(a.nnz(), 3);
    }

    #[test]
    fn matvec_transpose_consistency() {
        let mut t = Triplets::new(3, 2);
        t.push(0, 0, 2.0);
        t.push(1, 1, 3.0);
        t.push(2, 0, -1.0);
        t.push(2, 1, 0.5);
        let a = t.into_csr();
        let at = a.transpose();
        let x = [1.0, 2.0];
        let y = [3.0, -1.0, 2.0];
        let ax = a.matvec(&x);
        let aty = at.matvec(&y);
        let lhs: f64 = ax.iter().zip(&y).map(|(a, b)| a * b).sum();
        let rhs: f64 = x.iter().zip(&aty).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-14);
    }

    #[test]
    fn restrict_picks_submatrix() {
        let mut t = Triplets::new(3, 3);
        for i in 0..3 {
            for j in 0..3 {
                t.push(i, j, (3 * i + j) as f64 + 1.0);
            }
        }
        let a = t.into_csr();
        let s = a.restrict(&[0, 2], &[1]);
        assert_eq!(s.nrows(), 2);
        assert_eq!(s.ncols(), 1);
        assert_eq!(s.get(0, 0), 2.0);
        assert_eq!(s.get(1, 0), 8.0);
    }
}
