//! Minimal compressed-row sparse matrices for operator assembly.
//!
//! Assembly, products and transposes are deterministic: entries within a row
//! are kept sorted by column and duplicates are summed in insertion order.

use faer::sparse::{SparseColMat, Triplet};

use crate::error::{FsiError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Csr {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl Csr {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            indptr: vec![0; nrows + 1],
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::diag(&vec![1.0; n])
    }

    pub fn diag(d: &[f64]) -> Self {
        let n = d.len();
        Self {
            nrows: n,
            ncols: n,
            indptr: (0..=n).collect(),
            indices: (0..n).collect(),
            values: d.to_vec(),
        }
    }

    /// Builds from `(row, col, value)` triplets, summing duplicates and
    /// dropping exact zeros.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); nrows];
        for &(r, c, v) in triplets {
            assert!(r < nrows && c < ncols, "triplet ({r},{c}) outside {nrows}x{ncols}");
            rows[r].push((c, v));
        }
        Self::from_rows(nrows, ncols, rows)
    }

    fn from_rows(nrows: usize, ncols: usize, rows: Vec<Vec<(usize, f64)>>) -> Self {
        let mut indptr = Vec::with_capacity(nrows + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(c, _)| c);
            let mut k = 0;
            while k < row.len() {
                let c = row[k].0;
                let mut acc = 0.0;
                while k < row.len() && row[k].0 == c {
                    acc += row[k].1;
                    k += 1;
                }
                if acc != 0.0 {
                    indices.push(c);
                    values.push(acc);
                }
            }
            indptr.push(indices.len());
        }
        Self {
            nrows,
            ncols,
            indptr,
            indices,
            values,
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

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.indptr[r]..self.indptr[r + 1];
        self.indices[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.row(r).find(|&(j, _)| j == c).map_or(0.0, |(_, v)| v)
    }

    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        (0..self.nrows)
            .flat_map(|r| self.row(r).map(move |(c, v)| (r, c, v)))
            .collect()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols, "matvec dimension mismatch");
        (0..self.nrows)
            .map(|r| self.row(r).map(|(c, v)| v * x[c]).sum())
            .collect()
    }

    pub fn transpose(&self) -> Self {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); self.ncols];
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                rows[c].push((r, v));
            }
        }
        Self::from_rows(self.ncols, self.nrows, rows)
    }

    /// Sparse product `self * rhs`.
    pub fn matmul(&self, rhs: &Csr) -> Self {
        assert_eq!(self.ncols, rhs.nrows, "matmul dimension mismatch");
        let mut acc = vec![0.0; rhs.ncols];
        let mut mark = vec![usize::MAX; rhs.ncols];
        let mut rows = Vec::with_capacity(self.nrows);
        for r in 0..self.nrows {
            let mut cols = Vec::new();
            for (k, a) in self.row(r) {
                for (c, b) in rhs.row(k) {
                    if mark[c] != r {
                        mark[c] = r;
                        acc[c] = 0.0;
                        cols.push(c);
                    }
                    acc[c] += a * b;
                }
            }
            rows.push(cols.into_iter().map(|c| (c, acc[c])).collect());
        }
        Self::from_rows(self.nrows, rhs.ncols, rows)
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= s);
        out
    }

    /// `diag(d) * self`
    pub fn scale_rows(&self, d: &[f64]) -> Self {
        assert_eq!(d.len(), self.nrows);
        let mut out = self.clone();
        for r in 0..self.nrows {
            for k in out.indptr[r]..out.indptr[r + 1] {
                out.values[k] *= d[r];
            }
        }
        out
    }

    /// `self * diag(d)`
    pub fn scale_cols(&self, d: &[f64]) -> Self {
        assert_eq!(d.len(), self.ncols);
        let mut out = self.clone();
        for k in 0..out.values.len() {
            out.values[k] *= d[out.indices[k]];
        }
        out
    }

    /// `a * self + b * other`
    pub fn add_scaled(&self, a: f64, other: &Csr, b: f64) -> Self {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let rows = (0..self.nrows)
            .map(|r| {
                self.row(r)
                    .map(|(c, v)| (c, a * v))
                    .chain(other.row(r).map(|(c, v)| (c, b * v)))
                    .collect()
            })
            .collect();
        Self::from_rows(self.nrows, self.ncols, rows)
    }

    pub fn add(&self, other: &Csr) -> Self {
        self.add_scaled(1.0, other, 1.0)
    }

    pub fn sub(&self, other: &Csr) -> Self {
        self.add_scaled(1.0, other, -1.0)
    }

    /// Places `blocks[i][j]` at the given row/column offsets.
    pub fn block(row_sizes: &[usize], col_sizes: &[usize], blocks: &[(usize, usize, &Csr)]) -> Self {
        let row_off: Vec<usize> = offsets(row_sizes);
        let col_off: Vec<usize> = offsets(col_sizes);
        let mut trip = Vec::new();
        for &(bi, bj, m) in blocks {
            assert_eq!(m.nrows, row_sizes[bi], "block row size");
            assert_eq!(m.ncols, col_sizes[bj], "block col size");
            for (r, c, v) in m.triplets() {
                trip.push((row_off[bi] + r, col_off[bj] + c, v));
            }
        }
        Self::from_triplets(
            row_sizes.iter().sum(),
            col_sizes.iter().sum(),
            &trip,
        )
    }

    /// Keeps rows listed in `keep` (in that order).
    pub fn select_rows(&self, keep: &[usize]) -> Self {
        let rows = keep.iter().map(|&r| self.row(r).collect()).collect();
        Self::from_rows(keep.len(), self.ncols, rows)
    }

    /// Keeps columns listed in `keep` (in that order).
    pub fn select_cols(&self, keep: &[usize]) -> Self {
        let mut map = vec![usize::MAX; self.ncols];
        for (new, &old) in keep.iter().enumerate() {
            map[old] = new;
        }
        let rows = (0..self.nrows)
            .map(|r| {
                self.row(r)
                    .filter(|&(c, _)| map[c] != usize::MAX)
                    .map(|(c, v)| (map[c], v))
                    .collect()
            })
            .collect();
        Self::from_rows(self.nrows, keep.len(), rows)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.ncols]; self.nrows];
        for (r, c, v) in self.triplets() {
            out[r][c] = v;
        }
        out
    }

    pub(crate) fn to_faer(&self) -> Result<SparseColMat<usize, f64>> {
        let trip: Vec<Triplet<usize, usize, f64>> = self
            .triplets()
            .into_iter()
            .map(|(r, c, v)| Triplet::new(r, c, v))
            .collect();
        SparseColMat::try_new_from_triplets(self.nrows, self.ncols, &trip)
            .map_err(|e| FsiError::Solver(format!("sparse conversion: {e:?}")))
    }
}

fn offsets(sizes: &[usize]) -> Vec<usize> {
    let mut off = Vec::with_capacity(sizes.len());
    let mut acc = 0;
    for &s in sizes {
        off.push(acc);
        acc += s;
    }
    off
}

/// Sparse LU factorization of a square matrix, reusable across right-hand sides.
pub struct LuSolver {
    lu: faer::sparse::linalg::solvers::Lu<usize, f64>,
    matrix: Csr,
    norm_inf: f64,
}

impl std::fmt::Debug for LuSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LuSolver")
            .field("order", &self.matrix.nrows)
            .field("nnz", &self.matrix.nnz())
            .finish()
    }
}

impl LuSolver {
    pub fn new(matrix: &Csr) -> Result<Self> {
        if matrix.nrows != matrix.ncols {
            return Err(FsiError::Dimension("LU of a non-square matrix".into()));
        }
        let lu = matrix
            .to_faer()?
            .sp_lu()
            .map_err(|e| FsiError::Solver(format!("sparse LU: {e:?}")))?;
        let norm_inf = (0..matrix.nrows)
            .map(|r| matrix.row(r).map(|(_, v)| v.abs()).sum::<f64>())
            .fold(0.0, f64::max);
        Ok(Self {
            lu,
            matrix: matrix.clone(),
            norm_inf,
        })
    }

    pub fn matrix(&self) -> &Csr {
        &self.matrix
    }

    /// Solves, refining once when the backward error exceeds a few ulps.
    /// Returns the solution and the normwise backward error
    /// `‖Mx − b‖∞ / (‖M‖∞ ‖x‖∞ + ‖b‖∞)`.
    pub fn solve(&self, b: &[f64]) -> (Vec<f64>, f64) {
        use faer::linalg::solvers::Solve;
        let n = b.len();
        let raw = |rhs: &[f64]| -> Vec<f64> {
            let m = faer::Mat::<f64>::from_fn(n, 1, |i, _| rhs[i]);
            let x = self.lu.solve(&m);
            (0..n).map(|i| x[(i, 0)]).collect()
        };
        let backward = |x: &[f64], r: &[f64]| {
            let denom = self.norm_inf * max_abs(x) + max_abs(b);
            if denom > 0.0 { max_abs(r) / denom } else { max_abs(r) }
        };
        let mut x = raw(b);
        let r = residual(&self.matrix, &x, b);
        let err = backward(&x, &r);
        if err <= REFINE_BELOW {
            return (x, err);
        }
        let dx = raw(&r);
        x.iter_mut().zip(&dx).for_each(|(xi, d)| *xi += d);
        let r = residual(&self.matrix, &x, b);
        let err = backward(&x, &r);
        (x, err)
    }
}

/// Backward error under which refinement is skipped.
const REFINE_BELOW: f64 = 4.0 * f64::EPSILON;

fn max_abs(x: &[f64]) -> f64 {
    x.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

fn residual(m: &Csr, x: &[f64], b: &[f64]) -> Vec<f64> {
    m.mul_vec(x).iter().zip(b).map(|(mx, bi)| bi - mx).collect()
}

pub fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Weighted inner product `Σ w_i a_i b_i`.
pub fn wdot(w: &[f64], a: &[f64], b: &[f64]) -> f64 {
    w.iter().zip(a).zip(b).map(|((w, x), y)| w * x * y).sum()
}
