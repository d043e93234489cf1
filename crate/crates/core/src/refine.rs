//! Refinement drivers: sketched iterative refinement (SIR), sketched
//! recursive refinement (SRR) and their composition SIRR, where every outer
//! correction of iterative refinement is computed by a fixed-depth SRR.
//!
//! All normal-equation products are evaluated as `A^T (A z)`. Residuals are
//! recomputed from scratch as `b - A x` at every outer step, and updates are
//! plain floating-point additions.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::la::{householder_qr, norm2, sub, DenseMatrix, SvdFactors};
use crate::meta::{gram_apply, MetaConfig, MetaSolver};
use crate::metrics::{forward_error, kw_backward_error};
use crate::precond::Preconditioner;
use crate::scalar::Real;
use crate::sketch::SketchOperator;

/// Default recursion depth of the SRR corrector inside SIRR.
pub const DEFAULT_SRR_DEPTH: usize = 4;

/// Which refinement scheme to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    /// `n_outer` refinement steps after the initial meta solve.
    Sir { n_outer: usize },
    /// Recursive refinement of the given depth.
    Srr { depth: usize },
    /// Iterative refinement whose corrector is SRR of depth `srr_depth`.
    Sirr { n_outer: usize, srr_depth: usize },
}

/// Early-termination rule for outer loops.
///
/// A run converges once `||update|| <= update_tol * ||x||` holds for
/// `patience` consecutive outer iterations (an exactly zero update converges
/// at once). It is flagged as diverged when the update norm grows
/// monotonically over three consecutive iterations by a factor of at least
/// `divergence_growth` (10 by default; infinity disables the check) to above
/// the first correction, or when the iterate stops being finite.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StopRule<T> {
    pub max_outer: usize,
    pub update_tol: T,
    pub patience: usize,
    pub divergence_growth: T,
}

impl<T: Real> Default for StopRule<T> {
    fn default() -> Self {
        Self { max_outer: 50, update_tol: T::lit(4.0) * T::unit_roundoff(), patience: 2, divergence_growth: T::lit(10.0) }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RefinePlan<T> {
    pub scheme: Scheme,
    pub meta: MetaConfig,
    pub stop: StopRule<T>,
}

impl<T: Real> RefinePlan<T> {
    pub fn sir(n_outer: usize, meta: MetaConfig) -> Self {
        Self { scheme: Scheme::Sir { n_outer }, meta, stop: StopRule::default() }
    }

    pub fn srr(depth: usize, meta: MetaConfig) -> Self {
        Self { scheme: Scheme::Srr { depth }, meta, stop: StopRule::default() }
    }

    pub fn sirr(n_outer: usize, srr_depth: usize, meta: MetaConfig) -> Self {
        Self { scheme: Scheme::Sirr { n_outer, srr_depth }, meta, stop: StopRule::default() }
    }

    pub fn with_stop(mut self, stop: StopRule<T>) -> Self {
        self.stop = stop;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.meta.validate()?;
        if self.stop.max_outer == 0 {
            return Err(Error::InvalidParameter("max_outer must be >= 1".into()));
        }
        if !(self.stop.update_tol > T::zero()) {
            return Err(Error::InvalidParameter("update_tol must be positive".into()));
        }
        if !(self.stop.divergence_growth > T::one()) {
            return Err(Error::InvalidParameter("divergence_growth must exceed 1".into()));
        }
        if let Scheme::Srr { depth } | Scheme::Sirr { srr_depth: depth, .. } = self.scheme {
            if depth >= usize::BITS as usize - 1 {
                return Err(Error::InvalidParameter(format!("SRR depth {depth} is too large")));
            }
        }
        Ok(())
    }

    /// Meta-solver calls of a run that is not stopped early.
    pub fn planned_meta_calls(&self) -> usize {
        match self.scheme {
            Scheme::Sir { n_outer } => n_outer.min(self.stop.max_outer) + 1,
            Scheme::Srr { depth } => 1 << depth,
            Scheme::Sirr { n_outer, srr_depth } => 1 + n_outer.min(self.stop.max_outer) * (1 << srr_depth),
        }
    }
}

/// Optional ground truth used to fill per-iteration error traces.
#[derive(Clone, Copy, Debug, Default)]
pub struct Reference<'a, T> {
    pub x_star: Option<&'a [T]>,
    pub svd: Option<&'a SvdFactors<T>>,
}

/// Metrics of one outer iterate. Entries are `None` when the needed
/// reference data is absent or the metric is undefined.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IterateRecord<T> {
    pub iteration: usize,
    pub forward_err: Option<T>,
    pub residual_err: Option<T>,
    pub kw_backward_err: Option<T>,
    /// Norm of the correction added at this iteration (`||x_0||` for iteration 0).
    pub update_norm: T,
    /// `||b - A x_i||`.
    pub residual_norm: T,
}

#[derive(Clone, Debug)]
pub struct SolveReport<T> {
    pub x_hat: Vec<T>,
    pub iterates: Vec<IterateRecord<T>>,
    pub converged: bool,
    pub diverged: bool,
    pub meta_calls: usize,
    /// Seconds.
    pub wall_time: f64,
}

impl<T: Real> SolveReport<T> {
    pub fn last(&self) -> Option<&IterateRecord<T>> {
        self.iterates.last()
    }

    /// Number of outer corrections performed after the initial solve.
    pub fn outer_iterations(&self) -> usize {
        self.iterates.len().saturating_sub(1)
    }
}

struct Tracer<'a, T> {
    a: &'a DenseMatrix<T>,
    b: &'a [T],
    reference: Reference<'a, T>,
    r_star_norm: Option<T>,
}

impl<'a, T: Real> Tracer<'a, T> {
    fn new(a: &'a DenseMatrix<T>, b: &'a [T], reference: Option<Reference<'a, T>>) -> Self {
        let reference = reference.unwrap_or_default();
        let r_star_norm = reference.x_star.map(|xs| norm2(&sub(b, &a.mul_vec(xs))));
        Self { a, b, reference, r_star_norm }
    }

    fn record(&self, iteration: usize, x: &[T], update_norm: T) -> IterateRecord<T> {
        let ax = self.a.mul_vec(x);
        let residual_norm = norm2(&sub(self.b, &ax));
        let forward_err = self.reference.x_star.and_then(|xs| forward_error(x, xs).ok());
        let residual_err = match (self.reference.x_star, self.r_star_norm) {
            (Some(xs), Some(rs)) if rs > T::zero() => Some(norm2(&sub(&self.a.mul_vec(xs), &ax)) / rs),
            _ => None,
        };
        let kw_backward_err =
            self.reference.svd.and_then(|svd| kw_backward_error(self.a, svd, self.b, x, T::one()).ok());
        IterateRecord { iteration, forward_err, residual_err, kw_backward_err, update_norm, residual_norm }
    }
}

#[derive(Debug, PartialEq, Eq)]
enum Verdict {
    Continue,
    Converged,
    Diverged,
}

struct Controller<T> {
    rule: StopRule<T>,
    small: usize,
    updates: Vec<T>,
}

impl<T: Real> Controller<T> {
    fn new(rule: StopRule<T>) -> Self {
        Self { rule, small: 0, updates: Vec::new() }
    }

    fn judge(&mut self, update_norm: T, x: &[T]) -> Verdict {
        if !update_norm.is_finite() || x.iter().any(|v| !v.is_finite()) {
            return Verdict::Diverged;
        }
        self.updates.push(update_norm);
        if update_norm == T::zero() {
            return Verdict::Converged;
        }
        if let [a, b, c, d] = self.updates[self.updates.len().saturating_sub(4)..] {
            // Noise at the attainable floor can grow too, so the update must also
            // exceed the first correction.
            if a < b && b < c && c < d && d >= self.rule.divergence_growth * a && d > self.updates[0] {
                return Verdict::Diverged;
            }
        }
        if update_norm <= self.rule.update_tol * norm2(x) {
            self.small += 1;
            if self.small >= self.rule.patience.max(1) {
                return Verdict::Converged;
            }
        } else {
            self.small = 0;
        }
        Verdict::Continue
    }
}

fn check_problem<T: Real>(a: &DenseMatrix<T>, b: &[T]) -> Result<()> {
    if b.len() != a.rows() {
        return Err(Error::ShapeMismatch(format!("b has length {} but A has {} rows", b.len(), a.rows())));
    }
    if a.rows() < a.cols() {
        return Err(Error::ShapeMismatch(format!("A must be tall, got {}x{}", a.rows(), a.cols())));
    }
    Ok(())
}

fn add_in_place<T: Real>(x: &mut [T], d: &[T]) {
    for (xi, &di) in x.iter_mut().zip(d) {
        *xi = *xi + di;
    }
}

/// Runs an outer refinement loop `x <- x + correct(b - A x)` from `x0`.
fn outer_loop<T: Real>(
    a: &DenseMatrix<T>,
    b: &[T],
    x0: Vec<T>,
    limit: usize,
    stop: StopRule<T>,
    tracer: &Tracer<'_, T>,
    mut correct: impl FnMut(&[T]) -> Result<Vec<T>>,
) -> Result<(Vec<T>, Vec<IterateRecord<T>>, bool, bool)> {
    let mut x = x0;
    let mut records = vec![tracer.record(0, &x, norm2(&x))];
    let mut ctl = Controller::new(stop);
    if x.iter().any(|v| !v.is_finite()) {
        return Ok((x, records, false, true));
    }
    let (mut converged, mut diverged) = (false, false);
    for i in 1..=limit {
        let r = sub(b, &a.mul_vec(&x));
        let d = correct(&r)?;
        add_in_place(&mut x, &d);
        let un = norm2(&d);
        records.push(tracer.record(i, &x, un));
        match ctl.judge(un, &x) {
            Verdict::Continue => {}
            Verdict::Converged => {
                converged = true;
                break;
            }
            Verdict::Diverged => {
                diverged = true;
                break;
            }
        }
    }
    Ok((x, records, converged, diverged))
}

/// Sketched iterative refinement: `x_0 = meta(b)`, `x_i = x_{i-1} + meta(b - A x_{i-1})`.
pub fn sir<T: Real>(
    a: &DenseMatrix<T>,
    b: &[T],
    p: &Preconditioner<T>,
    plan: &RefinePlan<T>,
    reference: Option<Reference<'_, T>>,
) -> Result<SolveReport<T>> {
    plan.validate()?;
    check_problem(a, b)?;
    let Scheme::Sir { n_outer } = plan.scheme else {
        return Err(Error::InvalidParameter("sir needs a Sir scheme".into()));
    };
    let start = Instant::now();
    let meta = MetaSolver::new(a, p, plan.meta)?;
    let tracer = Tracer::new(a, b, reference);
    let x0 = meta.solve_residual(b)?;
    let limit = n_outer.min(plan.stop.max_outer);
    let (x_hat, iterates, converged, diverged) =
        outer_loop(a, b, x0, limit, plan.stop, &tracer, |r| meta.solve_residual(r))?;
    Ok(SolveReport { x_hat, iterates, converged, diverged, meta_calls: meta.calls(), wall_time: start.elapsed().as_secs_f64() })
}

/// Sketched recursive refinement on a normal-equation right-hand side.
///
/// Level 0 is one meta solve; level `i` evaluates
/// `f_i(z) = f_{i-1}(z) + f_{i-1}(z - A^T A f_{i-1}(z))`, for `2^depth` meta calls.
pub fn srr<T: Real>(meta: &MetaSolver<'_, T>, ra: &[T], depth: usize) -> Result<Vec<T>> {
    if depth == 0 {
        return meta.solve_normal(ra);
    }
    let mut x = srr(meta, ra, depth - 1)?;
    let rest = sub(ra, &gram_apply(meta.matrix(), &x));
    let d = srr(meta, &rest, depth - 1)?;
    add_in_place(&mut x, &d);
    Ok(x)
}

/// SIRR: sketch-and-solve start `x_0 = (S A)^+ (S b)`, then
/// `x_i = x_{i-1} + SRR_depth(A^T (b - A x_{i-1}))`.
///
/// The preconditioner is built once (redrawing the sketch on rank
/// deficiency) and reused for every outer iteration.
pub fn sirr<T: Real>(
    a: &DenseMatrix<T>,
    b: &[T],
    sketch: &SketchOperator<T>,
    plan: &RefinePlan<T>,
    reference: Option<Reference<'_, T>>,
) -> Result<SolveReport<T>> {
    check_problem(a, b)?;
    let (p, used) = Preconditioner::build_resampling(a, sketch)?;
    sirr_with(a, b, &used, &p, plan, reference)
}

/// SIRR with a prebuilt preconditioner; `sketch` must be the operator `p` was built from.
pub fn sirr_with<T: Real>(
    a: &DenseMatrix<T>,
    b: &[T],
    sketch: &SketchOperator<T>,
    p: &Preconditioner<T>,
    plan: &RefinePlan<T>,
    reference: Option<Reference<'_, T>>,
) -> Result<SolveReport<T>> {
    plan.validate()?;
    check_problem(a, b)?;
    let Scheme::Sirr { n_outer, srr_depth } = plan.scheme else {
        return Err(Error::InvalidParameter("sirr needs a Sirr scheme".into()));
    };
    let start = Instant::now();
    let meta = MetaSolver::new(a, p, plan.meta)?;
    let tracer = Tracer::new(a, b, reference);
    let x0 = p.sketch_solve(&sketch.apply_vec(b)?)?;
    let limit = n_outer.min(plan.stop.max_outer);
    let (x_hat, iterates, converged, diverged) =
        outer_loop(a, b, x0, limit, plan.stop, &tracer, |r| srr(&meta, &a.mul_t_vec(r), srr_depth))?;
    Ok(SolveReport {
        x_hat,
        iterates,
        converged,
        diverged,
        meta_calls: 1 + meta.calls(),
        wall_time: start.elapsed().as_secs_f64(),
    })
}

/// SRR alone on `r_A = A^T b`, reporting one iterate per depth `0..=depth`.
///
/// Iterate `d` equals `SRR_d(A^T b)`; it is produced from iterate `d - 1` as
/// `x_d = x_{d-1} + SRR_{d-1}(A^T b - A^T A x_{d-1})`, so the whole trace costs
/// `2^depth` meta calls.
pub fn srr_standalone<T: Real>(
    a: &DenseMatrix<T>,
    b: &[T],
    sketch: &SketchOperator<T>,
    plan: &RefinePlan<T>,
    reference: Option<Reference<'_, T>>,
) -> Result<SolveReport<T>> {
    check_problem(a, b)?;
    let (p, _) = Preconditioner::build_resampling(a, sketch)?;
    srr_standalone_with(a, b, &p, plan, reference)
}

pub fn srr_standalone_with<T: Real>(
    a: &DenseMatrix<T>,
    b: &[T],
    p: &Preconditioner<T>,
    plan: &RefinePlan<T>,
    reference: Option<Reference<'_, T>>,
) -> Result<SolveReport<T>> {
    plan.validate()?;
    check_problem(a, b)?;
    let Scheme::Srr { depth } = plan.scheme else {
        return Err(Error::InvalidParameter("srr_standalone needs an Srr scheme".into()));
    };
    let start = Instant::now();
    let meta = MetaSolver::new(a, p, plan.meta)?;
    let tracer = Tracer::new(a, b, reference);
    let ra = a.mul_t_vec(b);
    let mut x = meta.solve_normal(&ra)?;
    let mut iterates = vec![tracer.record(0, &x, norm2(&x))];
    let mut ctl = Controller::new(plan.stop);
    let (mut converged, mut diverged) = (false, false);
    for level in 1..=depth {
        let rest = sub(&ra, &gram_apply(a, &x));
        let d = srr(&meta, &rest, level - 1)?;
        add_in_place(&mut x, &d);
        let un = norm2(&d);
        iterates.push(tracer.record(level, &x, un));
        match ctl.judge(un, &x) {
            Verdict::Continue => {}
            Verdict::Converged => converged = true,
            Verdict::Diverged => {
                diverged = true;
                break;
            }
        }
        // SRR_d needs every lower level; convergence is reported, not acted upon.
    }
    Ok(SolveReport { x_hat: x, iterates, converged, diverged, meta_calls: meta.calls(), wall_time: start.elapsed().as_secs_f64() })
}

/// Householder QR least-squares solve, the backward-stable reference.
pub fn qr_direct<T: Real>(a: &DenseMatrix<T>, b: &[T]) -> Result<Vec<T>> {
    check_problem(a, b)?;
    householder_qr(a)?.solve_ls(b)
}
