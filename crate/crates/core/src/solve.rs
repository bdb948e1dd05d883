//! Factorizations, preconditioned MinRes and spectral condition numbers of
//! preconditioned operators.

use std::time::Instant;

use faer::linalg::solvers::PartialPivLu;
use faer::prelude::Solve;
use faer::sparse::linalg::solvers::{Llt, Lu};
use faer::{Mat, Side};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fem::sparse::{dot, SparseMatrix};

/// Matrices below this size are factored densely with explicit pivot
/// monitoring.
const DENSE_FACTOR_LIMIT: usize = 500;

enum Inner {
    SparseLlt(Llt<usize, f64>),
    SparseLu(Lu<usize, f64>),
    Dense(PartialPivLu<f64>),
}

/// A reusable direct solver.
pub struct Factorization {
    inner: Inner,
    n: usize,
}

fn check_square(a: &SparseMatrix) -> Result<()> {
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "factorization of a {}x{} matrix",
            a.nrows(),
            a.ncols()
        )));
    }
    Ok(())
}

fn dense_lu(a: &SparseMatrix) -> Result<Factorization> {
    let d = a.to_dense();
    let lu = d.partial_piv_lu();
    let u = lu.U();
    let scale = a.max_abs().max(f64::MIN_POSITIVE);
    for i in 0..a.nrows() {
        let p = u[(i, i)];
        if !p.is_finite() || p.abs() <= 1e-13 * scale {
            return Err(Error::FactorizationFailure { pivot: Some(i) });
        }
    }
    Ok(Factorization {
        inner: Inner::Dense(lu),
        n: a.nrows(),
    })
}

impl Factorization {
    /// Cholesky factorization of a symmetric positive definite matrix.
    pub fn cholesky(a: &SparseMatrix) -> Result<Self> {
        check_square(a)?;
        let llt = a
            .to_faer()
            .sp_cholesky(Side::Lower)
            .map_err(|_| Error::NotPositiveDefinite)?;
        Ok(Self {
            inner: Inner::SparseLlt(llt),
            n: a.nrows(),
        })
    }

    /// LU factorization of a general (possibly indefinite) matrix.
    pub fn lu(a: &SparseMatrix) -> Result<Self> {
        check_square(a)?;
        if a.nrows() < DENSE_FACTOR_LIMIT {
            return dense_lu(a);
        }
        let lu = a
            .to_faer()
            .sp_lu()
            .map_err(|_| Error::FactorizationFailure { pivot: None })?;
        Ok(Self {
            inner: Inner::SparseLu(lu),
            n: a.nrows(),
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "rhs of length {} for a {}-dim factorization",
                b.len(),
                self.n
            )));
        }
        let rhs = Mat::<f64>::from_fn(self.n, 1, |i, _| b[i]);
        let x = match &self.inner {
            Inner::SparseLlt(f) => f.solve(&rhs),
            Inner::SparseLu(f) => f.solve(&rhs),
            Inner::Dense(f) => f.solve(&rhs),
        };
        let out: Vec<f64> = (0..self.n).map(|i| x[(i, 0)]).collect();
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::FactorizationFailure { pivot: None });
        }
        Ok(out)
    }
}

#[derive(Clone, Debug)]
pub struct MinresOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for MinresOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 10_000,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct MinresResult {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Preconditioned residual norms relative to the initial one, starting
    /// with 1.
    pub history: Vec<f64>,
    pub breakdown: Option<String>,
    pub time_s: f64,
}

/// Random initial guess with entries uniform in `(-1, 1)`.
pub fn random_guess(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

/// Preconditioned MinRes for symmetric `a` and a symmetric positive
/// definite preconditioner given by the solve `prec`. Stops when the
/// preconditioned residual norm dropped by `tol`.
pub fn minres<P>(a: &SparseMatrix, b: &[f64], x0: Vec<f64>, prec: P, opts: &MinresOptions) -> Result<MinresResult>
where
    P: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let start = Instant::now();
    let n = a.nrows();
    if b.len() != n || x0.len() != n {
        return Err(Error::DimensionMismatch("minres vectors".into()));
    }
    let mut x = x0;
    let ax = a.mul_vec(&x);
    let mut r1: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let mut y = prec(&r1)?;
    let rty = dot(&r1, &y);
    if rty < 0.0 {
        return Err(Error::NotPositiveDefinite);
    }
    let beta1 = rty.sqrt();
    let mut history = vec![1.0];
    let finish = |x, it, conv, history, breakdown| MinresResult {
        x,
        iterations: it,
        converged: conv,
        history,
        breakdown,
        time_s: start.elapsed().as_secs_f64(),
    };
    if beta1 == 0.0 {
        return Ok(finish(x, 0, true, history, None));
    }
    let mut r2 = r1.clone();
    let (mut oldb, mut beta) = (0.0, beta1);
    let (mut dbar, mut epsln, mut phibar) = (0.0, 0.0, beta1);
    let (mut cs, mut sn) = (-1.0f64, 0.0f64);
    let mut w = vec![0.0; n];
    let mut w2 = vec![0.0; n];
    let mut v = vec![0.0; n];
    for it in 1..=opts.max_iter {
        let s = 1.0 / beta;
        v.iter_mut().zip(&y).for_each(|(v, y)| *v = s * y);
        a.matvec(&v, &mut y);
        if it >= 2 {
            let c = beta / oldb;
            y.iter_mut().zip(&r1).for_each(|(y, r)| *y -= c * r);
        }
        let alfa = dot(&v, &y);
        let c = alfa / beta;
        y.iter_mut().zip(&r2).for_each(|(y, r)| *y -= c * r);
        std::mem::swap(&mut r1, &mut r2);
        r2.copy_from_slice(&y);
        y = prec(&r2)?;
        oldb = beta;
        let rty = dot(&r2, &y);
        if rty < 0.0 {
            return Ok(finish(x, it, false, history, Some("preconditioner is not positive definite".into())));
        }
        beta = rty.sqrt();
        let oldeps = epsln;
        let delta = cs * dbar + sn * alfa;
        let gbar = sn * dbar - cs * alfa;
        epsln = sn * beta;
        dbar = -cs * beta;
        let gamma = gbar.hypot(beta).max(f64::EPSILON);
        cs = gbar / gamma;
        sn = beta / gamma;
        let phi = cs * phibar;
        phibar *= sn;
        let denom = 1.0 / gamma;
        for i in 0..n {
            let w1 = w2[i];
            w2[i] = w[i];
            w[i] = (v[i] - oldeps * w1 - delta * w2[i]) * denom;
            x[i] += phi * w[i];
        }
        let rel = phibar / beta1;
        history.push(rel);
        if rel <= opts.tol {
            return Ok(finish(x, it, true, history, None));
        }
        if beta == 0.0 {
            return Ok(finish(x, it, false, history, Some("Lanczos breakdown".into())));
        }
    }
    Ok(finish(x, opts.max_iter, false, history, None))
}

#[derive(Clone, Debug)]
pub struct SpectrumOptions {
    /// Use the dense generalized eigensolver below this many (free) dofs.
    pub dense_limit: usize,
    pub max_lanczos: usize,
    pub lanczos_tol: f64,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        Self {
            dense_limit: 8000,
            max_lanczos: 600,
            lanczos_tol: 1e-9,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SpectrumMethod {
    Dense,
    Lanczos,
}

#[derive(Clone, Debug)]
pub struct Spectrum {
    pub min_abs: f64,
    pub max_abs: f64,
    pub cond: f64,
    pub method: SpectrumMethod,
    /// All eigenvalues (ascending), dense path only.
    pub eigenvalues: Option<Vec<f64>>,
}

/// Spectral condition number `max|lambda| / min|lambda|` of the pencil
/// `A x = lambda N x` restricted to the rows/columns in `active` and, if
/// `deflate` is given, to the `N`-orthogonal complement of that vector.
pub fn condition_number(
    a: &SparseMatrix,
    n: &SparseMatrix,
    active: Option<&[usize]>,
    deflate: Option<&[f64]>,
    opts: &SpectrumOptions,
) -> Result<Spectrum> {
    if a.nrows() != n.nrows() || a.ncols() != n.ncols() || a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch("operator/preconditioner sizes differ".into()));
    }
    let (a, n, z) = match active {
        Some(idx) => (
            a.submatrix(idx, idx),
            n.submatrix(idx, idx),
            deflate.map(|z| idx.iter().map(|&i| z[i]).collect::<Vec<_>>()),
        ),
        None => (a.clone(), n.clone(), deflate.map(|z| z.to_vec())),
    };
    if z.as_ref().is_some_and(|z| z.iter().all(|v| *v == 0.0)) {
        return Err(Error::InvalidArgument("zero deflation vector".into()));
    }
    if a.nrows() <= opts.dense_limit {
        dense_spectrum(&a, &n, z.as_deref())
    } else {
        lanczos_spectrum(&a, &n, z.as_deref(), opts)
    }
}

fn spectrum_from(eigs: Vec<f64>, method: SpectrumMethod, keep: bool) -> Result<Spectrum> {
    let max_abs = eigs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let min_abs = eigs.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    if !(min_abs > 0.0) || !max_abs.is_finite() {
        return Err(Error::Eigen(format!("degenerate spectrum [{min_abs}, {max_abs}]")));
    }
    Ok(Spectrum {
        min_abs,
        max_abs,
        cond: max_abs / min_abs,
        method,
        eigenvalues: keep.then_some(eigs),
    })
}

fn dense_spectrum(a: &SparseMatrix, n: &SparseMatrix, z: Option<&[f64]>) -> Result<Spectrum> {
    let dim = a.nrows();
    let nd = n.to_dense();
    let llt = nd.llt(Side::Lower).map_err(|_| Error::NotPositiveDefinite)?;
    let l = llt.L().to_owned();
    // C = L^{-1} A L^{-T}, via two triangular solves
    let ad = a.to_dense();
    let tmp = solve_lower(&l, &ad);
    let c = solve_lower(&l, &tmp.transpose().to_owned());
    let mut c = Mat::<f64>::from_fn(dim, dim, |i, j| 0.5 * (c[(i, j)] + c[(j, i)]));
    if let Some(z) = z {
        // complement of L^T z, via a Householder reflector onto e_1
        let mut w: Vec<f64> = (0..dim).map(|i| (i..dim).map(|k| l[(k, i)] * z[k]).sum()).collect();
        let nw = w.iter().map(|v| v * v).sum::<f64>().sqrt();
        w.iter_mut().for_each(|v| *v /= nw);
        let sign = if w[0] >= 0.0 { 1.0 } else { -1.0 };
        w[0] += sign;
        let nu = w.iter().map(|v| v * v).sum::<f64>();
        let hmat = Mat::<f64>::from_fn(dim, dim, |i, j| {
            (if i == j { 1.0 } else { 0.0 }) - 2.0 * w[i] * w[j] / nu
        });
        let hc = &hmat * &c * &hmat;
        c = Mat::<f64>::from_fn(dim - 1, dim - 1, |i, j| 0.5 * (hc[(i + 1, j + 1)] + hc[(j + 1, i + 1)]));
    }
    let eigs = c
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Eigen(format!("{e:?}")))?;
    spectrum_from(eigs, SpectrumMethod::Dense, true)
}

/// Solves `L X = B` for lower-triangular `L`.
fn solve_lower(l: &Mat<f64>, b: &Mat<f64>) -> Mat<f64> {
    let mut x = b.clone();
    faer::linalg::triangular_solve::solve_lower_triangular_in_place(
        l.as_ref(),
        x.as_mut(),
        faer::Par::Seq,
    );
    x
}

/// Extreme eigenvalues of an operator that is self-adjoint in the
/// `N`-inner product, by Lanczos with full reorthogonalization. Returns
/// the largest absolute Ritz value.
fn lanczos_max_abs<F>(
    dim: usize,
    apply: F,
    n: &SparseMatrix,
    z: Option<&[f64]>,
    opts: &SpectrumOptions,
    seed: u64,
) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let nz = z.map(|z| (z.to_vec(), n.mul_vec(z)));
    let project = |v: &mut Vec<f64>| {
        if let Some((z, nzv)) = &nz {
            let c = dot(nzv, v) / dot(nzv, z);
            v.iter_mut().zip(z).for_each(|(v, z)| *v -= c * z);
        }
    };
    let mut q = random_guess(dim, seed);
    project(&mut q);
    let nq = dot(&q, &n.mul_vec(&q)).sqrt();
    q.iter_mut().for_each(|v| *v /= nq);
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut nbasis: Vec<Vec<f64>> = Vec::new();
    let mut alpha = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut last = f64::NAN;
    let maxk = opts.max_lanczos.min(dim);
    for k in 0..maxk {
        let nqk = n.mul_vec(&q);
        basis.push(q.clone());
        nbasis.push(nqk);
        let mut w = apply(&q)?;
        project(&mut w);
        let a = dot(&w, &nbasis[k]);
        alpha.push(a);
        // full reorthogonalization, twice
        for _ in 0..2 {
            for (b, nb) in basis.iter().zip(&nbasis) {
                let c = dot(&w, nb);
                w.iter_mut().zip(b).for_each(|(w, b)| *w -= c * b);
            }
        }
        let bnorm = dot(&w, &n.mul_vec(&w)).max(0.0).sqrt();
        let m = alpha.len();
        let check = m % 10 == 0 || bnorm < 1e-12 || k + 1 == maxk;
        if check {
            let t = Mat::<f64>::from_fn(m, m, |i, j| {
                if i == j {
                    alpha[i]
                } else if i + 1 == j {
                    beta[i]
                } else if j + 1 == i {
                    beta[j]
                } else {
                    0.0
                }
            });
            let ev = t
                .self_adjoint_eigenvalues(Side::Lower)
                .map_err(|e| Error::Eigen(format!("{e:?}")))?;
            let cur = ev.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if bnorm < 1e-12 || (cur - last).abs() <= opts.lanczos_tol * cur {
                return Ok(cur);
            }
            last = cur;
        }
        beta.push(bnorm);
        w.iter_mut().for_each(|v| *v /= bnorm);
        q = w;
    }
    Ok(last)
}

fn lanczos_spectrum(a: &SparseMatrix, n: &SparseMatrix, z: Option<&[f64]>, opts: &SpectrumOptions) -> Result<Spectrum> {
    let dim = a.nrows();
    let nf = Factorization::cholesky(n)?;
    let max_abs = lanczos_max_abs(dim, |v| nf.solve(&a.mul_vec(v)), n, z, opts, 1)?;
    // smallest |lambda| from the largest eigenvalue of A^{-1} N
    let inv_max = match z {
        None => {
            let af = Factorization::lu(a)?;
            lanczos_max_abs(dim, |v| af.solve(&n.mul_vec(v)), n, None, opts, 2)?
        }
        Some(z) => {
            // bordered system [[A, Nz], [(Nz)^T, 0]] keeps iterates in the
            // N-orthogonal complement of z
            let c = n.mul_vec(z);
            let mut t: Vec<_> = a.iter().collect();
            for (i, &ci) in c.iter().enumerate() {
                if ci != 0.0 {
                    t.push((i, dim, ci));
                    t.push((dim, i, ci));
                }
            }
            let bordered = SparseMatrix::from_triplets(dim + 1, dim + 1, t);
            let af = Factorization::lu(&bordered)?;
            lanczos_max_abs(
                dim,
                |v| {
                    let mut rhs = n.mul_vec(v);
                    rhs.push(0.0);
                    let mut x = af.solve(&rhs)?;
                    x.pop();
                    Ok(x)
                },
                n,
                Some(z),
                opts,
                2,
            )?
        }
    };
    if !(inv_max > 0.0 && inv_max.is_finite() && max_abs.is_finite()) {
        return Err(Error::Eigen(format!("Lanczos estimates {max_abs}, 1/{inv_max}")));
    }
    Ok(Spectrum {
        min_abs: 1.0 / inv_max,
        max_abs,
        cond: max_abs * inv_max,
        method: SpectrumMethod::Lanczos,
        eigenvalues: None,
    })
}

/// `sqrt(e^T N e)`
pub fn energy_norm(n: &SparseMatrix, e: &[f64]) -> f64 {
    n.bilinear(e, e).max(0.0).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplace1d(n: usize) -> SparseMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        SparseMatrix::from_triplets(n, n, t)
    }

    #[test]
    fn singular_dense_lu_reports_pivot() {
        let a = SparseMatrix::from_triplets(2, 2, vec![(0, 0, 1.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 1.0)]);
        assert!(matches!(Factorization::lu(&a), Err(Error::FactorizationFailure { pivot: Some(1) })));
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = SparseMatrix::diagonal(&[1.0, -1.0]);
        assert!(matches!(Factorization::cholesky(&a), Err(Error::NotPositiveDefinite)));
    }

    #[test]
    fn minres_identity_preconditioned_by_itself() {
        let a = laplace1d(30);
        let b = vec![1.0; 30];
        let f = Factorization::cholesky(&a).unwrap();
        let r = minres(&a, &b, random_guess(30, 3), |v| f.solve(v), &MinresOptions::default()).unwrap();
        assert!(r.converged && r.iterations <= 2);
    }

    #[test]
    fn dense_and_lanczos_agree() {
        let a = laplace1d(80);
        let n = SparseMatrix::identity(80);
        let d = condition_number(&a, &n, None, None, &SpectrumOptions::default()).unwrap();
        let opts = SpectrumOptions {
            dense_limit: 0,
            ..Default::default()
        };
        let l = condition_number(&a, &n, None, None, &opts).unwrap();
        assert_eq!(l.method, SpectrumMethod::Lanczos);
        assert!((d.cond - l.cond).abs() < 1e-6 * d.cond, "{} {}", d.cond, l.cond);
    }

    #[test]
    fn deflation_removes_kernel() {
        // 1D Neumann Laplacian has the constants as kernel
        let mut t: Vec<_> = laplace1d(40).iter().collect();
        t.push((0, 0, -1.0));
        t.push((39, 39, -1.0));
        let a = SparseMatrix::from_triplets(40, 40, t);
        let n = SparseMatrix::identity(40);
        let z = vec![1.0; 40];
        let d = condition_number(&a, &n, None, Some(&z), &SpectrumOptions::default()).unwrap();
        let opts = SpectrumOptions {
            dense_limit: 0,
            ..Default::default()
        };
        let l = condition_number(&a, &n, None, Some(&z), &opts).unwrap();
        assert!(d.cond.is_finite() && d.cond < 1e4);
        assert!((d.cond - l.cond).abs() < 1e-6 * d.cond);
    }
}
