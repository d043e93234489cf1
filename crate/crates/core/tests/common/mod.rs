#![allow(dead_code)]

use sirr_core::{DenseMatrix, Matrix};

pub const U: f64 = f64::EPSILON;

/// Small deterministic generator independent of the library RNG.
pub struct Lcg(u64);

impl Lcg {
    pub fn new(seed: u64) -> Self {
        Lcg(seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ 0xdead_beef)
    }

    pub fn uniform(&mut self) -> f64 {
        self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((self.0 >> 11) as f64 + 0.5) / (1u64 << 53) as f64
    }

    pub fn normal(&mut self) -> f64 {
        let (a, b) = (self.uniform(), self.uniform());
        (-2.0 * a.ln()).sqrt() * (2.0 * std::f64::consts::PI * b).cos()
    }

    pub fn matrix(&mut self, rows: usize, cols: usize) -> Matrix {
        DenseMatrix::from_fn(rows, cols, |_, _| self.normal())
    }

    pub fn vector(&mut self, len: usize) -> Vec<f64> {
        (0..len).map(|_| self.normal()).collect()
    }
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn diff_norm(a: &[f64], b: &[f64]) -> f64 {
    norm(&a.iter().zip(b).map(|(x, y)| x - y).collect::<Vec<_>>())
}

pub fn naive_matmul(a: &Matrix, b: &Matrix) -> Matrix {
    assert_eq!(a.cols(), b.rows());
    DenseMatrix::from_fn(a.rows(), b.cols(), |i, j| (0..a.cols()).map(|k| a[(i, k)] * b[(k, j)]).sum())
}

pub fn naive_matvec(a: &Matrix, v: &[f64]) -> Vec<f64> {
    (0..a.rows()).map(|i| (0..a.cols()).map(|k| a[(i, k)] * v[k]).sum()).collect()
}

pub fn frob_diff(a: &Matrix, b: &Matrix) -> f64 {
    diff_norm(a.data(), b.data())
}

/// Eigenvalues of a symmetric matrix by the cyclic two-sided Jacobi method,
/// sorted in decreasing order.
pub fn jacobi_eigenvalues(sym: &Matrix) -> Vec<f64> {
    let n = sym.rows();
    let mut a: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| sym[(i, j)]).collect()).collect();
    for _ in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j] * a[i][j]).sum();
        let diag: f64 = (0..n).map(|i| a[i][i] * a[i][i]).sum();
        if off <= 1e-34 * diag {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q] == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    ev.sort_by(|x, y| y.partial_cmp(x).unwrap());
    ev
}

/// Solves a small dense system by Gaussian elimination with partial pivoting.
pub fn gauss_solve(m: &Matrix, rhs: &[f64]) -> Vec<f64> {
    let n = m.rows();
    let mut a: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| m[(i, j)]).chain([rhs[i]]).collect()).collect();
    for k in 0..n {
        let p = (k..n).max_by(|&x, &y| a[x][k].abs().partial_cmp(&a[y][k].abs()).unwrap()).unwrap();
        a.swap(k, p);
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            for j in k..=n {
                a[i][j] -= f * a[k][j];
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| a[i][j] * x[j]).sum();
        x[i] = (a[i][n] - s) / a[i][i];
    }
    x
}

/// Matrix with prescribed singular values `sigma` via random orthogonal factors.
pub fn conditioned(rng: &mut Lcg, m: usize, n: usize, sigma: &[f64]) -> Matrix {
    let u = sirr_core::householder_qr(&rng.matrix(m, n)).unwrap().thin_q();
    let v = sirr_core::householder_qr(&rng.matrix(n, n)).unwrap().thin_q();
    let us = DenseMatrix::from_fn(m, n, |i, j| u[(i, j)] * sigma[j]);
    naive_matmul(&us, &v.transpose())
}

pub fn geometric_sigma(n: usize, kappa: f64) -> Vec<f64> {
    (0..n).map(|i| kappa.powf(-(i as f64) / (n.max(2) - 1) as f64)).collect()
}

/// Proptest settings with a fixed seed so runs are reproducible.
pub fn pt_config(cases: u32) -> proptest::test_runner::Config {
    proptest::test_runner::Config {
        cases,
        rng_seed: proptest::test_runner::RngSeed::Fixed(0x5eed),
        failure_persistence: None,
        ..Default::default()
    }
}
