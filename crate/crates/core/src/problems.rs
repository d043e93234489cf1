//! Synthetic least-squares problems with a planted solution and residual,
//! plus MatrixMarket (array format) and problem-directory I/O.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::la::{axpy, dot, householder_qr_unchecked, norm2, DenseMatrix};
use crate::rng::{gaussian_vec, rng_from_seed, Rng};
use crate::scalar::Real;

/// A dense overdetermined problem `min ||b - A y||`.
#[derive(Clone, Debug, PartialEq)]
pub struct LSProblem<T> {
    pub a: DenseMatrix<T>,
    pub b: Vec<T>,
    /// Planted minimizer, when known.
    pub x_star: Option<Vec<T>>,
    /// Planted optimal residual `b - A x*`, when known.
    pub r_star: Option<Vec<T>>,
    pub kappa: T,
    /// `||r*||`.
    pub beta: T,
    pub seed: u64,
}

impl<T: Real> LSProblem<T> {
    pub fn m(&self) -> usize {
        self.a.rows()
    }

    pub fn n(&self) -> usize {
        self.a.cols()
    }

    /// Norm of the planted residual, recomputed as `||b - A x*||` when only `x*` is known.
    pub fn r_star_norm(&self) -> Option<T> {
        match (&self.r_star, &self.x_star) {
            (Some(r), _) => Some(norm2(r)),
            (None, Some(x)) => Some(norm2(&crate::la::sub(&self.b, &self.a.mul_vec(x)))),
            _ => None,
        }
    }
}

/// Orthonormal `rows x cols` factor of a Gaussian matrix. The QR has a
/// nonnegative `R` diagonal, so the result is Haar distributed.
fn haar_columns<T: Real>(rng: &mut Rng, rows: usize, cols: usize) -> Result<DenseMatrix<T>> {
    let g = DenseMatrix::from_col_major(rows, cols, gaussian_vec(rng, rows * cols))?;
    Ok(householder_qr_unchecked(&g)?.thin_q())
}

/// The first `cols` columns of a Haar-distributed `rows x rows` orthogonal matrix.
pub fn haar_orthonormal<T: Real>(rows: usize, cols: usize, seed: u64) -> Result<DenseMatrix<T>> {
    if cols == 0 || cols > rows {
        return Err(Error::InvalidParameter(format!("need 1 <= cols <= rows, got {rows}x{cols}")));
    }
    haar_columns(&mut rng_from_seed(seed), rows, cols)
}

/// `sigma_i = kappa^{-(i-1)/(n-1)}` for `i = 1..n`.
pub fn log_spaced_spectrum<T: Real>(n: usize, kappa: T) -> Vec<T> {
    if n == 1 {
        return vec![T::one()];
    }
    let denom = T::from_count(n - 1);
    (0..n).map(|i| kappa.powf(-T::from_count(i) / denom)).collect()
}

/// Problem with `A = U_1 diag(sigma) V^T` (Haar `U_1`, `V`, log-equispaced
/// `sigma` from 1 to `1/kappa`), unit-norm Gaussian direction `x*`, and a
/// residual of norm `beta` orthogonal to `range(A)`; `b = A x* + r*`.
pub fn gen_synthetic<T: Real>(m: usize, n: usize, kappa: T, beta: T, seed: u64) -> Result<LSProblem<T>> {
    if n == 0 || m <= n {
        return Err(Error::InvalidParameter(format!("need m > n >= 1, got m={m}, n={n}")));
    }
    if !(kappa >= T::one()) || !kappa.is_finite() {
        return Err(Error::InvalidParameter(format!("kappa must be finite and >= 1, got {kappa}")));
    }
    if n == 1 && kappa != T::one() {
        return Err(Error::InvalidParameter("a single column requires kappa = 1".into()));
    }
    if !(beta >= T::zero()) || !beta.is_finite() {
        return Err(Error::InvalidParameter(format!("beta must be finite and >= 0, got {beta}")));
    }
    let mut rng = rng_from_seed(seed);
    let u1 = haar_columns::<T>(&mut rng, m, n)?;
    let v = haar_columns::<T>(&mut rng, n, n)?;
    let sigma = log_spaced_spectrum(n, kappa);

    // A = (U_1 diag(sigma)) V^T
    let mut us = u1.clone();
    for (j, &s) in sigma.iter().enumerate() {
        for x in us.col_mut(j) {
            *x = *x * s;
        }
    }
    let a = us.matmul(&v.transpose())?;

    let w = gaussian_vec::<T>(&mut rng, n);
    let nw = norm2(&w);
    let x_star: Vec<T> = w.iter().map(|&x| x / nw).collect();

    // Residual direction (I - U_1 U_1^T) g, projected twice for orthogonality.
    let mut g = gaussian_vec::<T>(&mut rng, m);
    for _ in 0..2 {
        for j in 0..n {
            let c = dot(u1.col(j), &g);
            axpy(-c, u1.col(j), &mut g);
        }
    }
    let ng = norm2(&g);
    let r_star: Vec<T> = if beta == T::zero() || ng == T::zero() {
        vec![T::zero(); m]
    } else {
        g.iter().map(|&x| beta * (x / ng)).collect()
    };

    let ax = a.mul_vec(&x_star);
    let b = ax.iter().zip(&r_star).map(|(&p, &q)| p + q).collect();
    Ok(LSProblem { a, b, x_star: Some(x_star), r_star: Some(r_star), kappa, beta, seed })
}

/// `levels` problems with difficulty `d` log-equispaced over `[1, 1e16]`,
/// each with `kappa = d` and `beta = u d`. Seeds are `seed + level`.
pub fn gen_difficulty_sweep<T: Real>(m: usize, n: usize, levels: usize, seed: u64) -> Result<Vec<LSProblem<T>>> {
    difficulty_levels(levels)?
        .into_iter()
        .enumerate()
        .map(|(j, d)| {
            let d = T::lit(d);
            gen_synthetic(m, n, d, T::unit_roundoff() * d, seed.wrapping_add(j as u64))
        })
        .collect()
}

/// Difficulties `10^(16 j / (levels - 1))`, `j = 0..levels`.
pub fn difficulty_levels(levels: usize) -> Result<Vec<f64>> {
    if levels < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 difficulty levels, got {levels}")));
    }
    Ok((0..levels).map(|j| 10f64.powf(16.0 * j as f64 / (levels - 1) as f64)).collect())
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Io { path: path.display().to_string(), message: e.to_string() }
}

/// MatrixMarket `array real general` text, column-major, 17 significant digits.
pub fn matrix_market_string<T: Real>(m: &DenseMatrix<T>) -> String {
    let mut out = String::with_capacity(32 + 25 * m.data().len());
    out.push_str("%%MatrixMarket matrix array real general\n");
    let _ = writeln!(out, "{} {}", m.rows(), m.cols());
    for &v in m.data() {
        let _ = writeln!(out, "{:.16e}", v.to_f64_lossy());
    }
    out
}

pub fn save_matrix_market<T: Real>(m: &DenseMatrix<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, matrix_market_string(m)).map_err(|e| io_err(path, e))
}

pub fn load_matrix_market<T: Real>(path: impl AsRef<Path>) -> Result<DenseMatrix<T>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    parse_matrix_market(&text)
}

/// Parses MatrixMarket `array` format with `real` or `integer` fields and
/// `general` symmetry. Coordinate (sparse) files are rejected.
pub fn parse_matrix_market<T: Real>(text: &str) -> Result<DenseMatrix<T>> {
    let perr = |line: usize, message: String| Error::Parse { line, message };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (hl, header) = lines.next().ok_or_else(|| perr(1, "empty file".into()))?;
    let fields: Vec<String> = header.split_whitespace().map(str::to_ascii_lowercase).collect();
    if fields.len() != 5 || fields[0] != "%%matrixmarket" || fields[1] != "matrix" {
        return Err(perr(hl, format!("not a MatrixMarket header: {header:?}")));
    }
    if fields[2] != "array" {
        return Err(perr(hl, format!("unsupported format {:?}, only array is accepted", fields[2])));
    }
    if fields[3] != "real" && fields[3] != "integer" {
        return Err(perr(hl, format!("unsupported field {:?}", fields[3])));
    }
    if fields[4] != "general" {
        return Err(perr(hl, format!("unsupported symmetry {:?}", fields[4])));
    }
    let mut body = lines.filter(|(_, l)| {
        let t = l.trim();
        !t.is_empty() && !t.starts_with('%')
    });
    let (dl, dims) = body.next().ok_or_else(|| perr(hl + 1, "missing dimension line".into()))?;
    let dims: Vec<&str> = dims.split_whitespace().collect();
    let parse_dim = |s: &str| s.parse::<usize>().map_err(|e| perr(dl, format!("bad dimension {s:?}: {e}")));
    if dims.len() != 2 {
        return Err(perr(dl, format!("expected `rows cols`, found {} fields", dims.len())));
    }
    let (rows, cols) = (parse_dim(dims[0])?, parse_dim(dims[1])?);
    let total = rows.checked_mul(cols).ok_or_else(|| perr(dl, "dimensions overflow".into()))?;
    let mut data = Vec::with_capacity(total);
    let mut last = dl;
    for (ln, line) in body {
        last = ln;
        for tok in line.split_whitespace() {
            if data.len() == total {
                return Err(perr(ln, format!("more than {total} values")));
            }
            let v: f64 = tok.parse().map_err(|e| perr(ln, format!("bad value {tok:?}: {e}")))?;
            data.push(T::lit(v));
        }
    }
    if data.len() != total {
        return Err(perr(last, format!("expected {total} values, found {}", data.len())));
    }
    DenseMatrix::from_col_major(rows, cols, data)
}

fn vector_from_matrix<T: Real>(m: DenseMatrix<T>, what: &str) -> Result<Vec<T>> {
    if m.cols() != 1 {
        return Err(Error::ShapeMismatch(format!("{what} must be a single column, got {}x{}", m.rows(), m.cols())));
    }
    Ok(m.into_data())
}

pub fn save_vector<T: Real>(v: &[T], path: impl AsRef<Path>) -> Result<()> {
    save_matrix_market(&DenseMatrix::column_vector(v), path)
}

pub fn load_vector<T: Real>(path: impl AsRef<Path>) -> Result<Vec<T>> {
    let path = path.as_ref();
    vector_from_matrix(load_matrix_market(path)?, &path.display().to_string())
}

/// Writes `A.mtx`, `b.mtx`, optionally `x_star.mtx`, and `meta.txt`
/// (`key=value` lines with kappa, beta, seed).
pub fn save_problem<T: Real>(p: &LSProblem<T>, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    save_matrix_market(&p.a, dir.join("A.mtx"))?;
    save_vector(&p.b, dir.join("b.mtx"))?;
    if let Some(x) = &p.x_star {
        save_vector(x, dir.join("x_star.mtx"))?;
    }
    let meta = format!(
        "kappa={:.16e}\nbeta={:.16e}\nseed={}\n",
        p.kappa.to_f64_lossy(),
        p.beta.to_f64_lossy(),
        p.seed
    );
    let path = dir.join("meta.txt");
    fs::write(&path, meta).map_err(|e| io_err(&path, e))
}

/// Reads a directory written by [`save_problem`]. `r_star` is rebuilt as
/// `b - A x*` when `x_star.mtx` is present.
pub fn load_problem<T: Real>(dir: impl AsRef<Path>) -> Result<LSProblem<T>> {
    let dir = dir.as_ref();
    let a: DenseMatrix<T> = load_matrix_market(dir.join("A.mtx"))?;
    let b: Vec<T> = load_vector(dir.join("b.mtx"))?;
    if b.len() != a.rows() {
        return Err(Error::ShapeMismatch(format!("b has length {} but A has {} rows", b.len(), a.rows())));
    }
    let xp = dir.join("x_star.mtx");
    let x_star = if xp.exists() { Some(load_vector::<T>(&xp)?) } else { None };
    if let Some(x) = &x_star {
        if x.len() != a.cols() {
            return Err(Error::ShapeMismatch(format!("x_star has length {} but A has {} columns", x.len(), a.cols())));
        }
    }
    let r_star = x_star.as_ref().map(|x| crate::la::sub(&b, &a.mul_vec(x)));

    let mp = dir.join("meta.txt");
    let text = fs::read_to_string(&mp).map_err(|e| io_err(&mp, e))?;
    let mut kv = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse { line: i + 1, message: format!("expected key=value, found {line:?}") })?;
        kv.insert(k.trim().to_string(), (i + 1, v.trim().to_string()));
    }
    let num = |key: &str| -> Result<f64> {
        let (ln, v) = kv.get(key).ok_or_else(|| Error::Parse { line: 0, message: format!("meta.txt lacks {key}") })?;
        v.parse().map_err(|e| Error::Parse { line: *ln, message: format!("bad {key} {v:?}: {e}") })
    };
    let seed = match kv.get("seed") {
        Some((ln, v)) => v.parse().map_err(|e| Error::Parse { line: *ln, message: format!("bad seed {v:?}: {e}") })?,
        None => 0,
    };
    Ok(LSProblem { a, b, x_star, r_star, kappa: T::lit(num("kappa")?), beta: T::lit(num("beta")?), seed })
}
