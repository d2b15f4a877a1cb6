//! Real sparse matrices in compressed-row form.
//!
//! Small and purpose-built: generators, representation matrices and duality
//! kernels at the sizes this crate enumerates never need more than sorted
//! CSR with matvec, transpose and Kronecker products.

use nalgebra::DMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
}

/// Accumulates coordinate triplets; duplicates are summed on build.
#[derive(Debug)]
pub struct SparseBuilder {
    nrows: usize,
    ncols: usize,
    triplets: Vec<(u32, u32, f64)>,
}

impl SparseBuilder {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        SparseBuilder {
            nrows,
            ncols,
            triplets: Vec::new(),
        }
    }

    pub fn push(&mut self, row: usize, col: usize, val: f64) {
        debug_assert!(row < self.nrows && col < self.ncols);
        if val != 0.0 {
            self.triplets.push((row as u32, col as u32, val));
        }
    }

    pub fn build(mut self) -> SparseOperator {
        self.triplets
            .sort_unstable_by_key(|&(r, c, _)| ((r as u64) << 32) | c as u64);
        let mut rows: Vec<u32> = Vec::with_capacity(self.triplets.len());
        let mut cols: Vec<u32> = Vec::with_capacity(self.triplets.len());
        let mut vals: Vec<f64> = Vec::with_capacity(self.triplets.len());
        for &(r, c, v) in &self.triplets {
            if rows.last() == Some(&r) && cols.last() == Some(&c) {
                *vals.last_mut().expect("nonempty") += v;
            } else {
                rows.push(r);
                cols.push(c);
                vals.push(v);
            }
        }
        let mut row_ptr = vec![0usize; self.nrows + 1];
        for &r in &rows {
            row_ptr[r as usize + 1] += 1;
        }
        for i in 1..row_ptr.len() {
            row_ptr[i] += row_ptr[i - 1];
        }
        SparseOperator {
            nrows: self.nrows,
            ncols: self.ncols,
            row_ptr,
            cols,
            vals,
        }
    }
}

impl SparseOperator {
    pub fn identity(n: usize) -> Self {
        SparseOperator {
            nrows: n,
            ncols: n,
            row_ptr: (0..=n).collect(),
            cols: (0..n as u32).collect(),
            vals: vec![1.0; n],
        }
    }

    pub fn from_dense(m: &DMatrix<f64>) -> Self {
        let mut b = SparseBuilder::new(m.nrows(), m.ncols());
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                b.push(r, c, m[(r, c)]);
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

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Entry lookup by binary search within the row.
    pub fn get(&self, row: usize, col: usize) -> f64 {
        let lo = self.row_ptr[row];
        let hi = self.row_ptr[row + 1];
        match self.cols[lo..hi].binary_search(&(col as u32)) {
            Ok(i) => self.vals[lo + i],
            Err(_) => 0.0,
        }
    }

    pub fn row(&self, row: usize) -> (&[u32], &[f64]) {
        let lo = self.row_ptr[row];
        let hi = self.row_ptr[row + 1];
        (&self.cols[lo..hi], &self.vals[lo..hi])
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.ncols);
        debug_assert_eq!(y.len(), self.nrows);
        for r in 0..self.nrows {
            let mut acc = 0.0;
            for i in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[i] * x[self.cols[i] as usize];
            }
            y[r] = acc;
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn transpose(&self) -> Self {
        let mut b = SparseBuilder::new(self.ncols, self.nrows);
        for r in 0..self.nrows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                b.push(c as usize, r, v);
            }
        }
        b.build()
    }

    pub fn scale(&self, alpha: f64) -> Self {
        let mut out = self.clone();
        for v in &mut out.vals {
            *v *= alpha;
        }
        out
    }

    /// `self + alpha * other`, matching shapes required.
    pub fn add_scaled(&self, other: &Self, alpha: f64) -> Self {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let mut b = SparseBuilder::new(self.nrows, self.ncols);
        for r in 0..self.nrows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                b.push(r, c as usize, v);
            }
            let (cols, vals) = other.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                b.push(r, c as usize, alpha * v);
            }
        }
        b.build()
    }

    /// Kronecker product; row/column indices combine with `self` most
    /// significant, matching the mixed-radix state ordering.
    pub fn kron(&self, other: &Self) -> Self {
        let mut b = SparseBuilder::new(self.nrows * other.nrows, self.ncols * other.ncols);
        for r1 in 0..self.nrows {
            let (c1s, v1s) = self.row(r1);
            for (&c1, &v1) in c1s.iter().zip(v1s) {
                for r2 in 0..other.nrows {
                    let (c2s, v2s) = other.row(r2);
                    for (&c2, &v2) in c2s.iter().zip(v2s) {
                        b.push(
                            r1 * other.nrows + r2,
                            c1 as usize * other.ncols + c2 as usize,
                            v1 * v2,
                        );
                    }
                }
            }
        }
        b.build()
    }

    pub fn max_abs(&self) -> f64 {
        self.vals.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Max absolute difference over the union sparsity pattern.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let mut m: f64 = 0.0;
        for r in 0..self.nrows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                m = m.max((v - other.get(r, c as usize)).abs());
            }
            let (cols, vals) = other.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                m = m.max((self.get(r, c as usize) - v).abs());
            }
        }
        m
    }

    /// Largest row sum magnitude (a conservative generator has all zeros).
    pub fn max_row_sum(&self) -> f64 {
        (0..self.nrows)
            .map(|r| self.row(r).1.iter().sum::<f64>().abs())
            .fold(0.0, f64::max)
    }

    /// Smallest off-diagonal entry (a generator has none negative).
    pub fn min_off_diagonal(&self) -> f64 {
        let mut m = f64::INFINITY;
        for r in 0..self.nrows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                if c as usize != r {
                    m = m.min(v);
                }
            }
        }
        if m.is_infinite() {
            0.0
        } else {
            m
        }
    }

    /// Interpret the matrix as `c * I + E` and return `(c, max|E|)` where `c`
    /// is the mean diagonal entry.
    pub fn identity_offset(&self) -> (f64, f64) {
        assert_eq!(self.nrows, self.ncols);
        let c = (0..self.nrows).map(|r| self.get(r, r)).sum::<f64>() / self.nrows as f64;
        let mut resid: f64 = 0.0;
        for r in 0..self.nrows {
            let (cols, vals) = self.row(r);
            let mut saw_diag = false;
            for (&col, &v) in cols.iter().zip(vals) {
                if col as usize == r {
                    resid = resid.max((v - c).abs());
                    saw_diag = true;
                } else {
                    resid = resid.max(v.abs());
                }
            }
            if !saw_diag {
                resid = resid.max(c.abs());
            }
        }
        (c, resid)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for r in 0..self.nrows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                m[(r, c as usize)] = v;
            }
        }
        m
    }

    /// Coordinate-triplet text export: `# <header>` then `row col value`
    /// lines in row-major order.
    pub fn export_coo(&self, header: &str) -> String {
        let mut out = format!("# {header}\n# rows {} cols {} nnz {}\n", self.nrows, self.ncols, self.nnz());
        for r in 0..self.nrows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                out.push_str(&format!("{r} {c} {v}\n"));
            }
        }
        out
    }
}
