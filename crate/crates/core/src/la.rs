//! Dense column-major linear algebra kernels: Householder QR, triangular
//! solves, one-sided Jacobi SVD and the matrix-vector products the solvers
//! are built on.
//!
//! Every routine sums in a fixed order so that results are reproducible
//! bit-for-bit across runs.

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Maximum number of one-sided Jacobi sweeps before [`thin_svd`] gives up.
pub const SVD_MAX_SWEEPS: usize = 60;

/// Column-major dense matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> DenseMatrix<T> {
    /// Wraps column-major `data`; fails unless `data.len() == rows * cols`.
    pub fn from_col_major(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch(format!(
                "{} values supplied for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from a slice of rows. All rows must have equal length.
    pub fn from_rows(rows: &[&[T]]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::ShapeMismatch("ragged row lengths".into()));
        }
        Ok(Self::from_fn(r, c, |i, j| rows[i][j]))
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for j in 0..cols {
            for i in 0..rows {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { T::one() } else { T::zero() })
    }

    /// Single-column matrix holding `v`.
    pub fn column_vector(v: &[T]) -> Self {
        Self { rows: v.len(), cols: 1, data: v.to_vec() }
    }

    pub fn diagonal(d: &[T]) -> Self {
        let n = d.len();
        Self::from_fn(n, n, |i, j| if i == j { d[i] } else { T::zero() })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    /// Column-major backing storage.
    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn col(&self, j: usize) -> &[T] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    #[inline]
    pub fn col_mut(&mut self, j: usize) -> &mut [T] {
        let r = self.rows;
        &mut self.data[j * r..(j + 1) * r]
    }

    /// Fails on the first NaN or infinite entry.
    pub fn check_finite(&self) -> Result<()> {
        match self.data.iter().position(|v| !v.is_finite()) {
            None => Ok(()),
            Some(k) => Err(Error::NonFinite { row: k % self.rows.max(1), col: k / self.rows.max(1) }),
        }
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn frobenius_norm(&self) -> T {
        norm2(&self.data)
    }

    /// `self * v`, accumulated column by column.
    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(v.len(), self.cols, "mul_vec: vector length");
        let mut out = vec![T::zero(); self.rows];
        for (j, &vj) in v.iter().enumerate() {
            if vj == T::zero() {
                continue;
            }
            axpy(vj, self.col(j), &mut out);
        }
        out
    }

    /// `self^T * v`, one dot product per column.
    pub fn mul_t_vec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(v.len(), self.rows, "mul_t_vec: vector length");
        (0..self.cols).map(|j| dot(self.col(j), v)).collect()
    }

    /// Dense product `self * other`.
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::ShapeMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for j in 0..other.cols {
            let dst = &mut out.data[j * self.rows..(j + 1) * self.rows];
            for (k, &b) in other.col(j).iter().enumerate() {
                if b != T::zero() {
                    axpy(b, self.col(k), dst);
                }
            }
        }
        Ok(out)
    }

    /// Sub-matrix made of the listed columns, in order.
    pub fn select_columns(&self, idx: &[usize]) -> Self {
        let mut data = Vec::with_capacity(self.rows * idx.len());
        for &j in idx {
            data.extend_from_slice(self.col(j));
        }
        Self { rows: self.rows, cols: idx.len(), data }
    }

    /// Appends zero rows below the matrix.
    pub fn pad_rows(&self, extra: usize) -> Self {
        let rows = self.rows + extra;
        Self::from_fn(rows, self.cols, |i, j| if i < self.rows { self[(i, j)] } else { T::zero() })
    }

    /// Converts every entry to another scalar type.
    pub fn cast<U: Real>(&self) -> DenseMatrix<U> {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| U::lit(v.to_f64_lossy())).collect(),
        }
    }
}

impl<T> Index<(usize, usize)> for DenseMatrix<T> {
    type Output = T;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[j * self.rows + i]
    }
}

impl<T> IndexMut<(usize, usize)> for DenseMatrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[j * self.rows + i]
    }
}

#[inline]
pub(crate) fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    let mut s = T::zero();
    for (&x, &y) in a.iter().zip(b) {
        s = s + x * y;
    }
    s
}

/// `y += alpha * x`
#[inline]
pub(crate) fn axpy<T: Real>(alpha: T, x: &[T], y: &mut [T]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi = *yi + alpha * xi;
    }
}

pub(crate) fn sub<T: Real>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x - y).collect()
}

pub(crate) fn add<T: Real>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x + y).collect()
}

/// Euclidean norm, summed left to right.
pub fn norm2<T: Real>(v: &[T]) -> T {
    dot(v, v).sqrt()
}

/// `m * v` with shape validation.
pub fn matvec<T: Real>(m: &DenseMatrix<T>, v: &[T]) -> Result<Vec<T>> {
    if v.len() != m.cols() {
        return Err(Error::ShapeMismatch(format!(
            "matvec: {}x{} matrix with vector of length {}",
            m.rows(),
            m.cols(),
            v.len()
        )));
    }
    Ok(m.mul_vec(v))
}

/// `m^T * v` with shape validation.
pub fn matvec_t<T: Real>(m: &DenseMatrix<T>, v: &[T]) -> Result<Vec<T>> {
    if v.len() != m.rows() {
        return Err(Error::ShapeMismatch(format!(
            "matvec_t: {}x{} matrix with vector of length {}",
            m.rows(),
            m.cols(),
            v.len()
        )));
    }
    Ok(m.mul_t_vec(v))
}

/// Largest singular value.
pub fn spectral_norm<T: Real>(m: &DenseMatrix<T>) -> Result<T> {
    if m.cols() == 0 || m.rows() == 0 {
        return Ok(T::zero());
    }
    if m.rows() < m.cols() {
        return Ok(thin_svd(&m.transpose())?.sigma[0]);
    }
    Ok(thin_svd(m)?.sigma[0])
}

/// Householder QR factors with the reflectors kept in packed form.
///
/// `Q = H_0 H_1 ... H_{n-1}` with `H_k = I - tau_k v_k v_k^T`, `v_k[k] = 1`.
#[derive(Clone, Debug)]
pub struct QrFactors<T> {
    packed: DenseMatrix<T>,
    tau: Vec<T>,
    r: DenseMatrix<T>,
}

impl<T: Real> QrFactors<T> {
    /// Upper-triangular `n x n` factor with nonnegative diagonal.
    pub fn r(&self) -> &DenseMatrix<T> {
        &self.r
    }

    pub fn into_r(self) -> DenseMatrix<T> {
        self.r
    }

    pub fn rows(&self) -> usize {
        self.packed.rows()
    }

    pub fn cols(&self) -> usize {
        self.packed.cols()
    }

    pub fn tau(&self) -> &[T] {
        &self.tau
    }

    fn reflect(&self, k: usize, v: &mut [T]) {
        let tau = self.tau[k];
        if tau == T::zero() {
            return;
        }
        let col = self.packed.col(k);
        let mut w = v[k];
        for i in k + 1..v.len() {
            w = w + col[i] * v[i];
        }
        w = w * tau;
        v[k] = v[k] - w;
        for i in k + 1..v.len() {
            v[i] = v[i] - w * col[i];
        }
    }

    /// In-place `v <- Q^T v` for an `m`-vector.
    pub fn apply_qt(&self, v: &mut [T]) {
        assert_eq!(v.len(), self.rows());
        for k in 0..self.cols() {
            self.reflect(k, v);
        }
    }

    /// In-place `v <- Q v` for an `m`-vector.
    pub fn apply_q(&self, v: &mut [T]) {
        assert_eq!(v.len(), self.rows());
        for k in (0..self.cols()).rev() {
            self.reflect(k, v);
        }
    }

    /// Explicit `m x n` orthonormal factor.
    pub fn thin_q(&self) -> DenseMatrix<T> {
        let (m, n) = (self.rows(), self.cols());
        let mut q = DenseMatrix::zeros(m, n);
        for j in 0..n {
            let col = q.col_mut(j);
            col[j] = T::one();
            self.apply_q(col);
        }
        q
    }

    /// Least-squares solution `R^{-1} (Q^T b)[..n]`.
    pub fn solve_ls(&self, b: &[T]) -> Result<Vec<T>> {
        if b.len() != self.rows() {
            return Err(Error::ShapeMismatch(format!(
                "right-hand side of length {} for {} rows",
                b.len(),
                self.rows()
            )));
        }
        let mut qtb = b.to_vec();
        self.apply_qt(&mut qtb);
        qtb.truncate(self.cols());
        tri_solve(&self.r, &qtb, false)
    }

    /// Fails when some `|R_ii|` falls below `threshold`.
    pub fn check_rank(&self, threshold: T) -> Result<()> {
        for i in 0..self.cols() {
            let v = self.r[(i, i)].abs();
            if !(v >= threshold) || v == T::zero() {
                return Err(Error::RankDeficient {
                    index: i,
                    value: v.to_f64_lossy(),
                    threshold: threshold.to_f64_lossy(),
                });
            }
        }
        Ok(())
    }
}

/// Rank threshold `n * u * ||M||`, with the Frobenius norm standing in for `||M||`.
pub fn rank_threshold<T: Real>(m: &DenseMatrix<T>) -> T {
    T::from_count(m.cols()) * T::unit_roundoff() * m.frobenius_norm()
}

/// Householder QR of a tall matrix; reports rank deficiency when any
/// `|R_ii| < n u ||M||`.
pub fn householder_qr<T: Real>(m: &DenseMatrix<T>) -> Result<QrFactors<T>> {
    let f = householder_qr_unchecked(m)?;
    f.check_rank(rank_threshold(m))?;
    Ok(f)
}

/// Householder QR without the rank test. Shape and finiteness are still
/// validated.
pub fn householder_qr_unchecked<T: Real>(m: &DenseMatrix<T>) -> Result<QrFactors<T>> {
    let (rows, cols) = m.shape();
    if rows < cols {
        return Err(Error::ShapeMismatch(format!("QR needs rows >= cols, got {rows}x{cols}")));
    }
    m.check_finite()?;
    let mut a = m.clone();
    let mut tau = vec![T::zero(); cols];
    for k in 0..cols {
        let (head, tail) = a.data.split_at_mut((k + 1) * rows);
        let col = &mut head[k * rows..];
        let x0 = col[k];
        let sigma = dot(&col[k + 1..], &col[k + 1..]);
        if sigma == T::zero() {
            if x0 < T::zero() {
                tau[k] = T::lit(2.0);
                col[k] = -x0;
            }
        } else {
            let mu = (x0 * x0 + sigma).sqrt();
            let v0 = if x0 <= T::zero() { x0 - mu } else { -sigma / (x0 + mu) };
            tau[k] = T::lit(2.0) * v0 * v0 / (sigma + v0 * v0);
            for x in &mut col[k + 1..] {
                *x = *x / v0;
            }
            col[k] = mu;
        }
        let t = tau[k];
        if t == T::zero() {
            continue;
        }
        let v = &col[k + 1..];
        for j in 0..cols - k - 1 {
            let target = &mut tail[j * rows..(j + 1) * rows];
            let mut w = target[k];
            for (i, &vi) in v.iter().enumerate() {
                w = w + vi * target[k + 1 + i];
            }
            w = w * t;
            target[k] = target[k] - w;
            for (i, &vi) in v.iter().enumerate() {
                target[k + 1 + i] = target[k + 1 + i] - w * vi;
            }
        }
    }
    let r = DenseMatrix::from_fn(cols, cols, |i, j| if i <= j { a[(i, j)] } else { T::zero() });
    Ok(QrFactors { packed: a, tau, r })
}

/// Solves `r z = y` (or `r^T z = y` when `transposed`) for upper-triangular `r`.
pub fn tri_solve<T: Real>(r: &DenseMatrix<T>, y: &[T], transposed: bool) -> Result<Vec<T>> {
    let n = r.rows();
    if r.cols() != n || y.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "triangular solve with {}x{} matrix and vector of length {}",
            r.rows(),
            r.cols(),
            y.len()
        )));
    }
    if let Some(i) = (0..n).find(|&i| r[(i, i)] == T::zero()) {
        return Err(Error::SingularTriangular(i));
    }
    let mut z = y.to_vec();
    if transposed {
        for j in 0..n {
            let col = r.col(j);
            let s = z[j] - dot(&col[..j], &z[..j]);
            z[j] = s / col[j];
        }
    } else {
        for j in (0..n).rev() {
            let col = r.col(j);
            z[j] = z[j] / col[j];
            let zj = z[j];
            for i in 0..j {
                z[i] = z[i] - col[i] * zj;
            }
        }
    }
    Ok(z)
}

/// Thin singular value decomposition `M = U diag(sigma) V^T`.
#[derive(Clone, Debug)]
pub struct SvdFactors<T> {
    /// `m x n`, orthonormal columns.
    pub u: DenseMatrix<T>,
    /// Nonincreasing, nonnegative.
    pub sigma: Vec<T>,
    /// `n x n` orthogonal.
    pub v: DenseMatrix<T>,
}

impl<T: Real> SvdFactors<T> {
    /// `sigma_max / sigma_min` (infinite when singular).
    pub fn condition_number(&self) -> T {
        match (self.sigma.first(), self.sigma.last()) {
            (Some(&hi), Some(&lo)) if lo > T::zero() => hi / lo,
            (Some(_), Some(_)) => T::infinity(),
            _ => T::one(),
        }
    }

    /// Rebuilds `U diag(sigma) V^T`.
    pub fn reconstruct(&self) -> DenseMatrix<T> {
        let mut us = self.u.clone();
        for (j, &s) in self.sigma.iter().enumerate() {
            for x in us.col_mut(j) {
                *x = *x * s;
            }
        }
        us.matmul(&self.v.transpose()).expect("conforming SVD factors")
    }
}

/// Thin SVD of a tall matrix: Householder QR followed by one-sided Jacobi on
/// the triangular factor.
pub fn thin_svd<T: Real>(m: &DenseMatrix<T>) -> Result<SvdFactors<T>> {
    let (rows, n) = m.shape();
    if rows < n {
        return Err(Error::ShapeMismatch(format!("SVD needs rows >= cols, got {rows}x{n}")));
    }
    let qr = householder_qr_unchecked(m)?;
    let mut w = qr.r().clone();
    let mut v = DenseMatrix::identity(n);
    let tol = T::from_count(n.max(1)) * T::unit_roundoff();

    let mut converged = n < 2;
    let mut worst = T::zero();
    for _ in 0..SVD_MAX_SWEEPS {
        let mut rotated = false;
        worst = T::zero();
        for p in 0..n.saturating_sub(1) {
            for q in p + 1..n {
                let alpha = dot(w.col(p), w.col(p));
                let beta = dot(w.col(q), w.col(q));
                let gamma = dot(w.col(p), w.col(q));
                if gamma == T::zero() || alpha == T::zero() || beta == T::zero() {
                    continue;
                }
                let rel = gamma.abs() / (alpha * beta).sqrt();
                if rel <= tol {
                    continue;
                }
                worst = worst.max(rel);
                rotated = true;
                let zeta = (beta - alpha) / (T::lit(2.0) * gamma);
                let sign = if zeta >= T::zero() { T::one() } else { -T::one() };
                let t = sign / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                rotate_columns(&mut w, p, q, c, s);
                rotate_columns(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::SvdNoConvergence { sweeps: SVD_MAX_SWEEPS, off: worst.to_f64_lossy() });
    }

    let norms: Vec<T> = (0..n).map(|j| norm2(w.col(j))).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| norms[b].partial_cmp(&norms[a]).unwrap_or(std::cmp::Ordering::Equal));

    let sigma: Vec<T> = order.iter().map(|&j| norms[j]).collect();
    let v = v.select_columns(&order);
    let mut ur = DenseMatrix::zeros(n, n);
    let mut filled = Vec::with_capacity(n);
    for (dst, &j) in order.iter().enumerate() {
        if norms[j] > T::zero() {
            let inv = T::one() / norms[j];
            for (o, &x) in ur.col_mut(dst).iter_mut().zip(w.col(j)) {
                *o = x * inv;
            }
            filled.push(dst);
        }
    }
    complete_orthonormal(&mut ur, &filled);

    let mut u = DenseMatrix::zeros(rows, n);
    for j in 0..n {
        let col = u.col_mut(j);
        col[..n].copy_from_slice(ur.col(j));
        qr.apply_q(col);
    }
    Ok(SvdFactors { u, sigma, v })
}

fn rotate_columns<T: Real>(m: &mut DenseMatrix<T>, p: usize, q: usize, c: T, s: T) {
    let rows = m.rows;
    let (lo, hi) = m.data.split_at_mut(q * rows);
    let cp = &mut lo[p * rows..(p + 1) * rows];
    let cq = &mut hi[..rows];
    for (a, b) in cp.iter_mut().zip(cq.iter_mut()) {
        let (x, y) = (*a, *b);
        *a = c * x - s * y;
        *b = s * x + c * y;
    }
}

/// Fills the columns of `m` not listed in `filled` with unit vectors
/// orthogonal to every other column.
fn complete_orthonormal<T: Real>(m: &mut DenseMatrix<T>, filled: &[usize]) {
    let n = m.rows();
    let mut have: Vec<usize> = filled.to_vec();
    let mut candidate = 0;
    for j in 0..m.cols() {
        if filled.contains(&j) {
            continue;
        }
        while candidate < n {
            let mut x = vec![T::zero(); n];
            x[candidate] = T::one();
            candidate += 1;
            for _ in 0..2 {
                for &k in &have {
                    let c = dot(m.col(k), &x);
                    axpy(-c, m.col(k), &mut x);
                }
            }
            let nx = norm2(&x);
            if nx > T::lit(0.5) {
                for (o, xi) in m.col_mut(j).iter_mut().zip(&x) {
                    *o = *xi / nx;
                }
                have.push(j);
                break;
            }
        }
    }
}
