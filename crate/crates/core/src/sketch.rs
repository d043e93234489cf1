//! Oblivious subspace embeddings `S` of size `s x m`.
//!
//! Two families are provided: sparse sign embeddings, where every column
//! holds exactly `zeta` nonzeros of value `±1/sqrt(zeta)` in distinct rows, and
//! dense Gaussian embeddings with i.i.d. `N(0, 1/s)` entries. An operator is a
//! pure function of `(kind, s, m, zeta, seed)`.

use std::collections::BTreeSet;

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::la::{householder_qr, thin_svd, DenseMatrix};
use crate::rng::{gaussian, rng_from_seed};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SketchKind {
    SparseSign,
    Gaussian,
}

impl std::fmt::Display for SketchKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SketchKind::SparseSign => f.write_str("sparse-sign"),
            SketchKind::Gaussian => f.write_str("gaussian"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Payload<T> {
    /// Column `j` owns `rows[j*zeta..(j+1)*zeta]` and the matching `values`.
    Sparse { rows: Vec<usize>, values: Vec<T> },
    Dense(DenseMatrix<T>),
}

/// A random embedding applied as a linear map `R^m -> R^s`.
#[derive(Clone, Debug, PartialEq)]
pub struct SketchOperator<T> {
    kind: SketchKind,
    s: usize,
    m: usize,
    zeta: usize,
    seed: u64,
    payload: Payload<T>,
}

/// Default sparsity `ceil(2 log2 n)`, at least 1 and at most `s`.
pub fn default_zeta(n: usize, s: usize) -> usize {
    let z = if n <= 1 { 1.0 } else { (2.0 * (n as f64).log2()).ceil() };
    (z as usize).clamp(1, s.max(1))
}

/// Sparse sign embedding with exactly `zeta` nonzeros per column.
pub fn make_sparse_sign<T: Real>(s: usize, m: usize, zeta: usize, seed: u64) -> Result<SketchOperator<T>> {
    if s == 0 || m == 0 {
        return Err(Error::InvalidParameter(format!("sketch dimensions must be positive, got s={s}, m={m}")));
    }
    if zeta == 0 || zeta > s {
        return Err(Error::InvalidParameter(format!("need 1 <= zeta <= s, got zeta={zeta}, s={s}")));
    }
    let mut rng = rng_from_seed(seed);
    let value = T::one() / T::from_count(zeta).sqrt();
    let mut rows = Vec::with_capacity(m * zeta);
    let mut values = Vec::with_capacity(m * zeta);
    let mut picked = BTreeSet::new();
    for _ in 0..m {
        // Floyd's algorithm: zeta distinct rows out of s.
        picked.clear();
        for j in s - zeta..s {
            let t = rng.random_range(0..=j);
            if !picked.insert(t) {
                picked.insert(j);
            }
        }
        for &row in &picked {
            rows.push(row);
            values.push(if rng.random::<bool>() { value } else { -value });
        }
    }
    Ok(SketchOperator { kind: SketchKind::SparseSign, s, m, zeta, seed, payload: Payload::Sparse { rows, values } })
}

/// Dense Gaussian embedding with i.i.d. `N(0, 1/s)` entries.
pub fn make_gaussian<T: Real>(s: usize, m: usize, seed: u64) -> Result<SketchOperator<T>> {
    if s == 0 || m == 0 {
        return Err(Error::InvalidParameter(format!("sketch dimensions must be positive, got s={s}, m={m}")));
    }
    let mut rng = rng_from_seed(seed);
    let scale = T::one() / T::from_count(s).sqrt();
    let dense = DenseMatrix::from_fn(s, m, |_, _| gaussian::<T>(&mut rng) * scale);
    Ok(SketchOperator { kind: SketchKind::Gaussian, s, m, zeta: s, seed, payload: Payload::Dense(dense) })
}

impl<T: Real> SketchOperator<T> {
    /// The identity embedding `S = I_m`, expressed as a one-nonzero-per-column sparse map.
    pub fn identity(m: usize) -> Self {
        SketchOperator {
            kind: SketchKind::SparseSign,
            s: m,
            m,
            zeta: 1,
            seed: 0,
            payload: Payload::Sparse { rows: (0..m).collect(), values: vec![T::one(); m] },
        }
    }

    /// A fresh operator with the same kind and dimensions and a new seed.
    pub fn reseeded(&self, seed: u64) -> Result<Self> {
        match self.kind {
            SketchKind::SparseSign => make_sparse_sign(self.s, self.m, self.zeta, seed),
            SketchKind::Gaussian => make_gaussian(self.s, self.m, seed),
        }
    }

    pub fn kind(&self) -> SketchKind {
        self.kind
    }

    /// Embedding dimension.
    pub fn s(&self) -> usize {
        self.s
    }

    /// Ambient dimension.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Nonzeros per column (`s` for the dense kind).
    pub fn zeta(&self) -> usize {
        self.zeta
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Nonzero `(row, value)` pairs of column `j`.
    pub fn column_entries(&self, j: usize) -> Vec<(usize, T)> {
        match &self.payload {
            Payload::Sparse { rows, values } => {
                let z = self.zeta;
                rows[j * z..(j + 1) * z].iter().copied().zip(values[j * z..(j + 1) * z].iter().copied()).collect()
            }
            Payload::Dense(d) => d.col(j).iter().copied().enumerate().collect(),
        }
    }

    /// Explicit `s x m` matrix.
    pub fn to_dense(&self) -> DenseMatrix<T> {
        match &self.payload {
            Payload::Dense(d) => d.clone(),
            Payload::Sparse { .. } => {
                let mut out = DenseMatrix::zeros(self.s, self.m);
                for j in 0..self.m {
                    for (i, v) in self.column_entries(j) {
                        out[(i, j)] = v;
                    }
                }
                out
            }
        }
    }

    /// `S * M` for an `m x k` matrix.
    pub fn apply(&self, mat: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
        if mat.rows() != self.m {
            return Err(Error::ShapeMismatch(format!(
                "sketch with m={} applied to a matrix with {} rows",
                self.m,
                mat.rows()
            )));
        }
        let mut out = DenseMatrix::zeros(self.s, mat.cols());
        for c in 0..mat.cols() {
            self.apply_into(mat.col(c), out.col_mut(c));
        }
        Ok(out)
    }

    /// `S * v` for an `m`-vector.
    pub fn apply_vec(&self, v: &[T]) -> Result<Vec<T>> {
        if v.len() != self.m {
            return Err(Error::ShapeMismatch(format!("sketch with m={} applied to a vector of length {}", self.m, v.len())));
        }
        let mut out = vec![T::zero(); self.s];
        self.apply_into(v, &mut out);
        Ok(out)
    }

    fn apply_into(&self, src: &[T], dst: &mut [T]) {
        match &self.payload {
            Payload::Sparse { rows, values } => {
                let z = self.zeta;
                for (j, &x) in src.iter().enumerate() {
                    for t in j * z..(j + 1) * z {
                        dst[rows[t]] = dst[rows[t]] + values[t] * x;
                    }
                }
            }
            Payload::Dense(d) => {
                for (j, &x) in src.iter().enumerate() {
                    for (o, &sij) in dst.iter_mut().zip(d.col(j)) {
                        *o = *o + sij * x;
                    }
                }
            }
        }
    }
}

/// Distortion `max(sigma_max(S Q) - 1, 1 - sigma_min(S Q))` of `S` on the
/// column space of `A`, with `Q` an orthonormal basis from Householder QR.
pub fn measure_distortion<T: Real>(sketch: &SketchOperator<T>, a: &DenseMatrix<T>) -> Result<T> {
    let q = householder_qr(a)?.thin_q();
    let sq = sketch.apply(&q)?;
    let sigma = if sq.rows() >= sq.cols() { thin_svd(&sq)?.sigma } else { thin_svd(&sq.transpose())?.sigma };
    let n = a.cols();
    let hi = sigma.first().copied().unwrap_or(T::one());
    // A short sketch (s < n) has n - s zero singular values on range(A).
    let lo = if sq.rows() < n { T::zero() } else { sigma.last().copied().unwrap_or(T::one()) };
    Ok((hi - T::one()).max(T::one() - lo))
}
