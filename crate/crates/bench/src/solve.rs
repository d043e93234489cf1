//! Solving a system read from MatrixMarket files.

use std::path::Path;

use sirr_core::problems::{load_vector, save_vector};
use sirr_core::{
    default_zeta, derive_seed, kw_backward_error, load_matrix_market, make_sparse_sign, sirr, thin_svd, Matrix,
    MetaConfig, Plan, StopRule, Stream, DEFAULT_SRR_DEPTH,
};

use crate::error::{BenchError, Result};
use crate::spec::SketchDim;

#[derive(Clone, Copy, Debug)]
pub struct SolveOptions {
    /// Defaults to `min(4n, m)`.
    pub s: Option<SketchDim>,
    pub meta: MetaConfig,
    pub srr_depth: usize,
    pub max_outer: usize,
    pub master_seed: u64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { s: None, meta: MetaConfig::default(), srr_depth: DEFAULT_SRR_DEPTH, max_outer: 50, master_seed: 0 }
    }
}

#[derive(Clone, Debug)]
pub struct SolveSummary {
    pub x_hat: Vec<f64>,
    pub backward_kw: f64,
    pub outer_iterations: usize,
    pub converged: bool,
    pub meta_calls: usize,
}

/// SIRR on `(a, b)` followed by a backward-error estimate.
pub fn solve_system(a: &Matrix, b: &[f64], opts: &SolveOptions) -> Result<SolveSummary> {
    let (m, n) = a.shape();
    if b.len() != m {
        return Err(BenchError::Usage(format!("A is {m}x{n} but b has length {}", b.len())));
    }
    if n == 0 || m < n {
        return Err(BenchError::Usage(format!("A must be tall with at least one column, got {m}x{n}")));
    }
    let s = opts.s.map_or((4 * n).min(m), |d| d.resolve(n));
    if s < n {
        return Err(BenchError::Usage(format!("sketch dimension s={s} is below n={n}")));
    }
    let sketch = make_sparse_sign(s, m, default_zeta(n, s), derive_seed(opts.master_seed, Stream::Sketch))?;
    let plan = Plan::sirr(opts.max_outer, opts.srr_depth, opts.meta)
        .with_stop(StopRule { max_outer: opts.max_outer, ..StopRule::default() });
    let rep = sirr(a, b, &sketch, &plan, None)?;
    if rep.diverged || rep.x_hat.iter().any(|v| !v.is_finite()) {
        return Err(BenchError::Failed(format!("refinement diverged after {} outer iterations", rep.outer_iterations())));
    }
    let svd = thin_svd(a)?;
    let backward_kw = kw_backward_error(a, &svd, b, &rep.x_hat, 1.0)?;
    Ok(SolveSummary {
        outer_iterations: rep.outer_iterations(),
        converged: rep.converged,
        meta_calls: rep.meta_calls,
        x_hat: rep.x_hat,
        backward_kw,
    })
}

/// Reads `A` and `b`, solves, and writes `x_hat` to `out`.
pub fn run_solve(a_path: &Path, b_path: &Path, out: &Path, opts: &SolveOptions) -> Result<SolveSummary> {
    let a = load_matrix_market::<f64>(a_path)?;
    let b = load_vector::<f64>(b_path)?;
    let summary = solve_system(&a, &b, opts)?;
    save_vector(&summary.x_hat, out)?;
    Ok(summary)
}
