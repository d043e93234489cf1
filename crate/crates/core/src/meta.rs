//! Single-shot approximate least-squares solvers used as the refinement kernel.
//!
//! A meta-solver approximates `(A^T A)^{-1} z` for a normal-equation
//! right-hand side `z`, or `A^+ r` for an `m`-residual `r`. Both forms are
//! linear in their input for [`MetaKind::SketchSolve`]: the map is
//! `z -> (R^T R)^{-1} z` with no affine offset. The Krylov variant runs `k`
//! steps of iterative sketching and then takes the best combination of the
//! iterates.

use std::cell::Cell;

use crate::error::{Error, Result};
use crate::la::{add, axpy, householder_qr_unchecked, norm2, sub, DenseMatrix};
use crate::precond::Preconditioner;
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MetaKind {
    /// `(R^T R)^{-1} A^T r`
    SketchSolve,
    /// `k` iterative-sketching steps combined by a small least-squares solve.
    Krylov,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MetaConfig {
    pub kind: MetaKind,
    /// Krylov step count; ignored by [`MetaKind::SketchSolve`].
    pub k: usize,
}

impl Default for MetaConfig {
    fn default() -> Self {
        Self::krylov(2)
    }
}

impl MetaConfig {
    pub fn sketch_solve() -> Self {
        Self { kind: MetaKind::SketchSolve, k: 1 }
    }

    pub fn krylov(k: usize) -> Self {
        Self { kind: MetaKind::Krylov, k }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidParameter("Krylov step count k must be >= 1".into()));
        }
        Ok(())
    }
}

impl std::fmt::Display for MetaConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.kind {
            MetaKind::SketchSolve => f.write_str("sketch"),
            MetaKind::Krylov => write!(f, "krylov{}", self.k),
        }
    }
}

/// `(R^T R)^{-1} r_a`.
pub fn sketch_solve_meta<T: Real>(p: &Preconditioner<T>, ra: &[T]) -> Result<Vec<T>> {
    p.normal_solve(ra)
}

/// Krylov meta-solver on an `m`-residual `r`.
///
/// Builds `y_0 = (R^T R)^{-1} A^T r`, `y_{i+1} = y_i + (R^T R)^{-1} A^T (r - A y_i)`
/// and returns `Y a` with `a = argmin ||A Y a - r||`. The span is represented by
/// `[y_0, y_1 - y_0, ..., y_k - y_{k-1}]`, which equals `span{y_0..y_k}`.
pub fn krylov_meta<T: Real>(a: &DenseMatrix<T>, p: &Preconditioner<T>, r: &[T], k: usize) -> Result<Vec<T>> {
    check_k(k)?;
    check_len(r.len(), a.rows(), "residual")?;
    let mut basis = Vec::with_capacity(k + 1);
    let mut y = p.normal_solve(&a.mul_t_vec(r))?;
    basis.push(y.clone());
    for _ in 0..k {
        let res = sub(r, &a.mul_vec(&y));
        let d = p.normal_solve(&a.mul_t_vec(&res))?;
        y = add(&y, &d);
        basis.push(d);
    }
    let images: Vec<Vec<T>> = basis.iter().map(|b| a.mul_vec(b)).collect();
    let coef = truncated_lstsq(&images, r)?;
    Ok(combine(&basis, &coef, a.cols()))
}

/// Krylov meta-solver on a normal-equation right-hand side `z` (an `n`-vector).
///
/// Same iterates as [`krylov_meta`] with `A^T r` replaced by `z`; the combine
/// step minimizes `||R^{-T} (z - A^T A Y a)||`, a computable proxy for the
/// `A`-norm error.
pub fn krylov_meta_normal<T: Real>(a: &DenseMatrix<T>, p: &Preconditioner<T>, z: &[T], k: usize) -> Result<Vec<T>> {
    check_k(k)?;
    check_len(z.len(), a.cols(), "normal right-hand side")?;
    let mut basis = Vec::with_capacity(k + 1);
    let mut y = p.normal_solve(z)?;
    basis.push(y.clone());
    for _ in 0..k {
        let g = sub(z, &gram_apply(a, &y));
        let d = p.normal_solve(&g)?;
        y = add(&y, &d);
        basis.push(d);
    }
    let images = basis.iter().map(|b| p.apply_rinv_t(&gram_apply(a, b))).collect::<Result<Vec<_>>>()?;
    let rhs = p.apply_rinv_t(z)?;
    let coef = truncated_lstsq(&images, &rhs)?;
    Ok(combine(&basis, &coef, a.cols()))
}

/// `A^T (A v)` without forming `A^T A`.
pub(crate) fn gram_apply<T: Real>(a: &DenseMatrix<T>, v: &[T]) -> Vec<T> {
    a.mul_t_vec(&a.mul_vec(v))
}

fn check_k(k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::InvalidParameter("Krylov step count k must be >= 1".into()));
    }
    Ok(())
}

fn check_len(got: usize, want: usize, what: &str) -> Result<()> {
    if got != want {
        return Err(Error::ShapeMismatch(format!("{what} of length {got}, expected {want}")));
    }
    Ok(())
}

fn combine<T: Real>(basis: &[Vec<T>], coef: &[T], n: usize) -> Vec<T> {
    let mut out = vec![T::zero(); n];
    for (b, &c) in basis.iter().zip(coef) {
        if c != T::zero() {
            axpy(c, b, &mut out);
        }
    }
    out
}

/// Least-squares coefficients for `min ||[cols] a - rhs||` by Householder QR.
/// Column `j` is dropped (coefficient zero) when its `R_jj` falls to
/// `ncols * u * ||M||_F` or below.
fn truncated_lstsq<T: Real>(cols: &[Vec<T>], rhs: &[T]) -> Result<Vec<T>> {
    let rows = rhs.len();
    let mut keep: Vec<usize> = (0..cols.len().min(rows)).collect();
    let mut coef = vec![T::zero(); cols.len()];
    loop {
        if keep.is_empty() {
            return Ok(coef);
        }
        let mut data = Vec::with_capacity(rows * keep.len());
        for &j in &keep {
            data.extend_from_slice(&cols[j]);
        }
        let m = DenseMatrix::from_col_major(rows, keep.len(), data)?;
        let qr = householder_qr_unchecked(&m)?;
        let thr = T::from_count(cols.len()) * T::unit_roundoff() * norm2(m.data());
        let survivors: Vec<usize> = (0..keep.len()).filter(|&i| qr.r()[(i, i)].abs() > thr).collect();
        if survivors.len() == keep.len() {
            let a = qr.solve_ls(rhs)?;
            for (&j, v) in keep.iter().zip(a) {
                coef[j] = v;
            }
            return Ok(coef);
        }
        keep = survivors.into_iter().map(|i| keep[i]).collect();
    }
}

/// A meta-solver bound to one problem and preconditioner, counting its calls.
pub struct MetaSolver<'a, T> {
    a: &'a DenseMatrix<T>,
    p: &'a Preconditioner<T>,
    config: MetaConfig,
    calls: Cell<usize>,
}

impl<'a, T: Real> MetaSolver<'a, T> {
    pub fn new(a: &'a DenseMatrix<T>, p: &'a Preconditioner<T>, config: MetaConfig) -> Result<Self> {
        config.validate()?;
        if p.dim() != a.cols() {
            return Err(Error::ShapeMismatch(format!(
                "preconditioner of size {} for a matrix with {} columns",
                p.dim(),
                a.cols()
            )));
        }
        Ok(Self { a, p, config, calls: Cell::new(0) })
    }

    pub fn config(&self) -> MetaConfig {
        self.config
    }

    pub fn matrix(&self) -> &'a DenseMatrix<T> {
        self.a
    }

    pub fn preconditioner(&self) -> &'a Preconditioner<T> {
        self.p
    }

    /// Number of solves performed so far.
    pub fn calls(&self) -> usize {
        self.calls.get()
    }

    /// Approximates `A^+ r` for an `m`-residual.
    pub fn solve_residual(&self, r: &[T]) -> Result<Vec<T>> {
        self.calls.set(self.calls.get() + 1);
        match self.config.kind {
            MetaKind::SketchSolve => {
                check_len(r.len(), self.a.rows(), "residual")?;
                sketch_solve_meta(self.p, &self.a.mul_t_vec(r))
            }
            MetaKind::Krylov => krylov_meta(self.a, self.p, r, self.config.k),
        }
    }

    /// Approximates `(A^T A)^{-1} z` for an `n`-vector.
    pub fn solve_normal(&self, z: &[T]) -> Result<Vec<T>> {
        self.calls.set(self.calls.get() + 1);
        match self.config.kind {
            MetaKind::SketchSolve => {
                check_len(z.len(), self.a.cols(), "normal right-hand side")?;
                sketch_solve_meta(self.p, z)
            }
            MetaKind::Krylov => krylov_meta_normal(self.a, self.p, z, self.config.k),
        }
    }
}
