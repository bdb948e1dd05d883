//! Compressed sparse row matrices.

use std::io::Write;

use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;

use crate::error::{Error, Result};

/// Real matrix in compressed sparse row layout. Column indices are sorted
/// within each row and free of duplicates.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

/// Accumulates `(row, col, value)` contributions; duplicates are summed on
/// finalization.
#[derive(Clone, Debug, Default)]
pub struct TripletBuilder {
    nrows: usize,
    ncols: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl TripletBuilder {
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
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.nrows && j < self.ncols);
        self.entries.push((i, j, v));
    }

    /// Adds every entry of `m` shifted by `(row0, col0)`, scaled by `scale`.
    pub fn add_matrix(&mut self, m: &SparseMatrix, row0: usize, col0: usize, scale: f64) {
        for (i, j, v) in m.iter() {
            self.add(row0 + i, col0 + j, scale * v);
        }
    }

    pub fn build(self) -> SparseMatrix {
        SparseMatrix::from_triplets(self.nrows, self.ncols, self.entries)
    }
}

impl SparseMatrix {
    pub fn from_triplets(nrows: usize, ncols: usize, mut entries: Vec<(usize, usize, f64)>) -> Self {
        entries.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut indptr = vec![0usize; nrows + 1];
        let mut indices = Vec::with_capacity(entries.len());
        let mut values: Vec<f64> = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in entries {
            assert!(i < nrows && j < ncols, "entry ({i},{j}) outside {nrows}x{ncols}");
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                indices.push(j);
                values.push(v);
                indptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..nrows {
            indptr[i + 1] += indptr[i];
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

    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![1.0; n])
    }

    pub fn diagonal(d: &[f64]) -> Self {
        Self {
            nrows: d.len(),
            ncols: d.len(),
            indptr: (0..=d.len()).collect(),
            indices: (0..d.len()).collect(),
            values: d.to_vec(),
        }
    }

    pub fn from_dense(m: &Mat<f64>, drop_tol: f64) -> Self {
        let mut t = Vec::new();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                let v = m[(i, j)];
                if v.abs() > drop_tol {
                    t.push((i, j, v));
                }
            }
        }
        Self::from_triplets(m.nrows(), m.ncols(), t)
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

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.indptr[i]..self.indptr[i + 1];
        (&self.indices[r.clone()], &self.values[r])
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).map(move |(&j, &v)| (i, j, v))
        })
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    /// `y = A x`
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        for (i, yi) in y.iter_mut().enumerate() {
            let mut s = 0.0;
            for k in self.indptr[i]..self.indptr[i + 1] {
                s += self.values[k] * x[self.indices[k]];
            }
            *yi = s;
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.matvec(x, &mut y);
        y
    }

    /// `x^T A y`
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        x.iter().zip(self.mul_vec(y)).map(|(a, b)| a * b).sum()
    }

    pub fn transpose(&self) -> Self {
        Self::from_triplets(self.ncols, self.nrows, self.iter().map(|(i, j, v)| (j, i, v)).collect())
    }

    pub fn scaled(&self, a: f64) -> Self {
        let mut m = self.clone();
        m.values.iter_mut().for_each(|v| *v *= a);
        m
    }

    /// `self + a * other`
    pub fn add_scaled(&self, other: &SparseMatrix, a: f64) -> Result<Self> {
        if self.nrows != other.nrows || self.ncols != other.ncols {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} + {}x{}",
                self.nrows, self.ncols, other.nrows, other.ncols
            )));
        }
        let mut t: Vec<_> = self.iter().collect();
        t.extend(other.iter().map(|(i, j, v)| (i, j, a * v)));
        Ok(Self::from_triplets(self.nrows, self.ncols, t))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Largest entry of `|A - A^T|`.
    pub fn max_asymmetry(&self) -> f64 {
        if self.nrows != self.ncols {
            return f64::INFINITY;
        }
        self.iter()
            .map(|(i, j, v)| (v - self.get(j, i)).abs())
            .fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> Mat<f64> {
        let mut m = Mat::<f64>::zeros(self.nrows, self.ncols);
        for (i, j, v) in self.iter() {
            m[(i, j)] += v;
        }
        m
    }

    pub fn to_faer(&self) -> SparseColMat<usize, f64> {
        let t: Vec<_> = self.iter().map(|(i, j, v)| Triplet::new(i, j, v)).collect();
        SparseColMat::try_new_from_triplets(self.nrows, self.ncols, &t)
            .expect("valid triplets")
    }

    /// Restriction to the given rows and columns (in the given order).
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Self {
        let mut colmap = vec![usize::MAX; self.ncols];
        for (k, &j) in cols.iter().enumerate() {
            colmap[j] = k;
        }
        let mut t = Vec::new();
        for (r, &i) in rows.iter().enumerate() {
            let (cs, vs) = self.row(i);
            for (&j, &v) in cs.iter().zip(vs) {
                if colmap[j] != usize::MAX {
                    t.push((r, colmap[j], v));
                }
            }
        }
        Self::from_triplets(rows.len(), cols.len(), t)
    }

    /// Zeroes the marked rows and columns, then puts `diag` on the diagonal
    /// of marked square positions.
    pub fn constrain(&self, rows: &[bool], cols: &[bool], diag: Option<f64>) -> Self {
        let mut t: Vec<_> = self
            .iter()
            .filter(|&(i, j, _)| !rows[i] && !cols[j])
            .collect();
        if let Some(d) = diag {
            for i in 0..self.nrows.min(self.ncols) {
                if rows[i] && cols[i] {
                    t.push((i, i, d));
                }
            }
        }
        Self::from_triplets(self.nrows, self.ncols, t)
    }

    /// Writes `i j value` lines.
    pub fn write_coo<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for (i, j, v) in self.iter() {
            writeln!(w, "{i} {j} {v:.17e}")?;
        }
        Ok(())
    }
}

/// Symmetric elimination of the constrained `dofs` with prescribed
/// `values`: row and column of each constrained dof become the unit vector
/// and the right-hand side is lifted so the solution interpolates `values`.
pub fn apply_dirichlet(
    matrix: &mut SparseMatrix,
    rhs: &mut [f64],
    dofs: &[usize],
    values: &[f64],
) -> Result<()> {
    if dofs.len() != values.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} constrained dofs but {} values",
            dofs.len(),
            values.len()
        )));
    }
    if matrix.nrows() != matrix.ncols() || rhs.len() != matrix.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "matrix {}x{} with rhs of length {}",
            matrix.nrows(),
            matrix.ncols(),
            rhs.len()
        )));
    }
    let n = matrix.nrows();
    let mut mask = vec![false; n];
    let mut g = vec![0.0; n];
    for (&d, &v) in dofs.iter().zip(values) {
        if d >= n {
            return Err(Error::InvalidArgument(format!("dof {d} out of range {n}")));
        }
        mask[d] = true;
        g[d] = v;
    }
    for (i, j, v) in matrix.iter() {
        if !mask[i] && mask[j] {
            rhs[i] -= v * g[j];
        }
    }
    for &d in dofs {
        rhs[d] = g[d];
    }
    *matrix = matrix.constrain(&mask, &mask, Some(1.0));
    Ok(())
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
    fn duplicates_are_summed() {
        let m = SparseMatrix::from_triplets(2, 2, vec![(0, 0, 1.0), (1, 1, 2.0), (0, 0, 3.0)]);
        assert_eq!(m.nnz(), 2);
        assert_eq!(m.get(0, 0), 4.0);
        assert_eq!(m.get(0, 1), 0.0);
    }

    #[test]
    fn one_by_one_dirichlet() {
        let mut a = SparseMatrix::from_triplets(1, 1, vec![(0, 0, 7.0)]);
        let mut b = vec![3.0];
        apply_dirichlet(&mut a, &mut b, &[0], &[2.5]).unwrap();
        assert_eq!(a.get(0, 0), 1.0);
        assert_eq!(b[0], 2.5);
    }

    #[test]
    fn dirichlet_length_mismatch() {
        let mut a = SparseMatrix::identity(3);
        let mut b = vec![0.0; 3];
        assert!(apply_dirichlet(&mut a, &mut b, &[0, 1], &[1.0]).is_err());
    }

    #[test]
    fn dirichlet_keeps_symmetry_and_lifts_rhs() {
        let a0 = SparseMatrix::from_triplets(
            3,
            3,
            vec![
                (0, 0, 2.0),
                (0, 1, -1.0),
                (1, 0, -1.0),
                (1, 1, 2.0),
                (1, 2, -1.0),
                (2, 1, -1.0),
                (2, 2, 2.0),
            ],
        );
        let mut a = a0.clone();
        let mut b = vec![1.0, 1.0, 1.0];
        apply_dirichlet(&mut a, &mut b, &[2], &[4.0]).unwrap();
        assert_eq!(a.max_asymmetry(), 0.0);
        assert_eq!(b, vec![1.0, 5.0, 4.0]);
    }

    #[test]
    fn coo_export() {
        let m = SparseMatrix::from_triplets(2, 2, vec![(1, 0, 0.5)]);
        let mut buf = Vec::new();
        m.write_coo(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("1 0 5.0"));
    }
}
