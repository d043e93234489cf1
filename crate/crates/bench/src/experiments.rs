//! Instance generation, per-instance solver runs and the parallel runner.

use std::time::Instant;

use rayon::prelude::*;
use sirr_core::{
    default_zeta, derive_seed, forward_error, gen_synthetic, kw_backward_error, make_sparse_sign, qr_direct,
    residual_error, sir, sirr_with, srr_standalone_with, thin_svd, IterateRecord, Matrix, Plan, Precond, Problem,
    Reference, Report, Sketch, StopRule, Stream, Svd,
};

use crate::error::{BenchError, Result};
use crate::output::{CsvSink, InstanceKey, ResultRow};
use crate::spec::{Experiment, ExperimentSpec, GridPoint, Solver, FAIL_THRESHOLD};

/// One random instance of a grid point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Instance {
    pub point: GridPoint,
    /// Index within the point, `0..spec.seeds`.
    pub seed: u64,
}

impl Instance {
    pub fn key(&self) -> InstanceKey {
        InstanceKey::new(self.point.n, self.point.s, self.point.kappa, self.point.beta, self.seed)
    }

    /// Seed of the planted problem. It ignores `s`, so every sketch size sees
    /// the same problems.
    pub fn problem_seed(&self, master: u64) -> u64 {
        let p = &self.point;
        let tag = (p.n as u64) ^ p.kappa.to_bits().rotate_left(17) ^ p.beta.to_bits().rotate_left(41);
        derive_seed(derive_seed(master, Stream::Custom(self.seed)), Stream::Custom(tag))
    }

    pub fn sketch_seed(&self, master: u64) -> u64 {
        derive_seed(self.problem_seed(master) ^ self.point.s as u64, Stream::Sketch)
    }
}

/// All instances of a spec in run order.
pub fn instances(spec: &ExperimentSpec) -> Vec<Instance> {
    spec.grid()
        .into_iter()
        .flat_map(|point| (0..spec.seeds as u64).map(move |seed| Instance { point, seed }))
        .collect()
}

/// Everything a solver needs about one instance.
pub struct Prepared {
    pub problem: Problem,
    pub svd: Svd,
    pub sketch: Sketch,
    /// Preconditioner and the sketch it was built from, or the build error.
    pub precond: std::result::Result<(Precond, Sketch), sirr_core::Error>,
    pub precond_time: f64,
}

impl Prepared {
    pub fn new(spec: &ExperimentSpec, inst: &Instance) -> Result<Self> {
        let p = inst.point;
        let problem = gen_synthetic(spec.m, p.n, p.kappa, p.beta, inst.problem_seed(spec.master_seed))?;
        let svd = thin_svd(&problem.a)?;
        let sketch = make_sparse_sign(p.s, spec.m, default_zeta(p.n, p.s), inst.sketch_seed(spec.master_seed))?;
        let start = Instant::now();
        let precond = Precond::build_resampling(&problem.a, &sketch);
        let precond_time = start.elapsed().as_secs_f64();
        Ok(Self { problem, svd, sketch, precond, precond_time })
    }

    pub fn reference(&self) -> Reference<'_, f64> {
        Reference { x_star: self.problem.x_star.as_deref(), svd: Some(&self.svd) }
    }
}

/// Outcome of one solver on one instance.
#[derive(Clone, Debug)]
pub struct Run {
    pub solver: Solver,
    /// `(iteration, record, cumulative meta calls)`.
    pub trace: Vec<(usize, IterateRecord<f64>, usize)>,
    pub x_hat: Option<Vec<f64>>,
    pub converged: bool,
    pub failed: bool,
    pub wall_time: f64,
}

fn stop_rule(spec: &ExperimentSpec) -> StopRule<f64> {
    StopRule { max_outer: spec.max_outer, ..StopRule::default() }
}

fn timed<T>(repeats: usize, mut f: impl FnMut() -> Result<T>) -> Result<(T, f64)> {
    let mut best = f64::INFINITY;
    let mut out = None;
    for _ in 0..repeats.max(1) {
        let start = Instant::now();
        let v = f()?;
        best = best.min(start.elapsed().as_secs_f64());
        out.get_or_insert(v);
    }
    Ok((out.expect("at least one repeat"), best))
}

fn judge(rec: Option<&IterateRecord<f64>>, x: &[f64], diverged: bool) -> bool {
    diverged
        || x.iter().any(|v| !v.is_finite())
        || rec.and_then(|r| r.residual_err).is_some_and(|e| !(e <= FAIL_THRESHOLD))
}

fn from_report(solver: Solver, rep: Report, wall_time: f64, calls_at: impl Fn(usize) -> usize) -> Run {
    let failed = judge(rep.last(), &rep.x_hat, rep.diverged);
    let trace = rep.iterates.iter().map(|r| (r.iteration, *r, calls_at(r.iteration))).collect();
    Run { solver, trace, x_hat: Some(rep.x_hat), converged: rep.converged, failed, wall_time }
}

fn failed_run(solver: Solver, wall_time: f64) -> Run {
    Run { solver, trace: Vec::new(), x_hat: None, converged: false, failed: true, wall_time }
}

/// Metrics of a fixed solution, as recorded for the direct baseline.
pub fn evaluate(a: &Matrix, b: &[f64], svd: &Svd, x_star: Option<&[f64]>, x: &[f64]) -> IterateRecord<f64> {
    let r: Vec<f64> = b.iter().zip(a.mul_vec(x)).map(|(b, v)| b - v).collect();
    IterateRecord {
        iteration: 0,
        forward_err: x_star.and_then(|xs| forward_error(x, xs).ok()),
        residual_err: x_star.and_then(|xs| residual_error(a, b, x, xs).ok()),
        kw_backward_err: kw_backward_error(a, svd, b, x, 1.0).ok(),
        update_norm: sirr_core::norm2(x),
        residual_norm: sirr_core::norm2(&r),
    }
}

/// Runs one solver. Solver errors become a failed run rather than an error.
pub fn run_solver(spec: &ExperimentSpec, prep: &Prepared, solver: Solver) -> Result<Run> {
    let (a, b) = (&prep.problem.a, &prep.problem.b[..]);
    let reference = Some(prep.reference());
    let stop = stop_rule(spec);
    if solver == Solver::QrDirect {
        return Ok(match timed(spec.repeats, || Ok(qr_direct(a, b))) {
            Ok((Ok(x), t)) => {
                let rec = evaluate(a, b, &prep.svd, prep.problem.x_star.as_deref(), &x);
                let failed = judge(Some(&rec), &x, false);
                Run { solver, trace: vec![(0, rec, 0)], x_hat: Some(x), converged: true, failed, wall_time: t }
            }
            Ok((Err(_), t)) => failed_run(solver, t),
            Err(e) => return Err(e),
        });
    }
    let (p, used) = match &prep.precond {
        Ok(v) => v,
        Err(_) => return Ok(failed_run(solver, prep.precond_time)),
    };
    let depth = spec.srr_depth;
    let result = match solver {
        Solver::Sirr => {
            let plan = Plan::sirr(spec.max_outer, depth, spec.meta).with_stop(stop);
            timed(spec.repeats, || Ok(sirr_with(a, b, used, p, &plan, reference)))?
        }
        Solver::Sir => {
            let plan = Plan::sir(spec.max_outer, spec.meta).with_stop(stop);
            timed(spec.repeats, || Ok(sir(a, b, p, &plan, reference)))?
        }
        Solver::Srr => {
            let plan = Plan::srr(depth, spec.meta).with_stop(stop);
            timed(spec.repeats, || Ok(srr_standalone_with(a, b, p, &plan, reference)))?
        }
        Solver::QrDirect => unreachable!(),
    };
    let wall = result.1 + prep.precond_time;
    Ok(match result.0 {
        Ok(rep) => match solver {
            Solver::Sirr => from_report(solver, rep, wall, |i| 1 + i * (1 << depth)),
            Solver::Sir => from_report(solver, rep, wall, |i| 1 + i),
            _ => from_report(solver, rep, wall, |i| 1 << i),
        },
        Err(_) => failed_run(solver, wall),
    })
}

fn rows_of(spec: &ExperimentSpec, inst: &Instance, run: &Run) -> Vec<ResultRow> {
    let p = inst.point;
    let row = |iteration: usize, rec: Option<&IterateRecord<f64>>, meta_calls: usize| ResultRow {
        experiment: spec.experiment,
        solver: run.solver,
        m: spec.m,
        n: p.n,
        s: p.s,
        kappa: p.kappa,
        beta: p.beta,
        seed: inst.seed,
        iteration,
        forward_err: rec.and_then(|r| r.forward_err).unwrap_or(f64::NAN),
        residual_err: rec.and_then(|r| r.residual_err).unwrap_or(f64::NAN),
        backward_kw: rec.and_then(|r| r.kw_backward_err).unwrap_or(f64::NAN),
        meta_calls,
        wall_time_s: run.wall_time,
        converged: run.converged,
        failed: run.failed,
    };
    let picked: Vec<_> = if spec.trace { run.trace.iter().collect() } else { run.trace.last().into_iter().collect() };
    if picked.is_empty() {
        return vec![row(0, None, 0)];
    }
    picked.into_iter().map(|(i, rec, calls)| row(*i, Some(rec), *calls)).collect()
}

/// Rows of every solver in the spec on one instance.
pub fn run_instance(spec: &ExperimentSpec, inst: &Instance) -> Result<Vec<ResultRow>> {
    let prep = Prepared::new(spec, inst)?;
    let mut rows = Vec::new();
    for &solver in &spec.solvers {
        rows.extend(rows_of(spec, inst, &run_solver(spec, &prep, solver)?));
    }
    Ok(rows)
}

/// Result of [`run`].
#[derive(Debug, Default)]
pub struct RunOutcome {
    /// Rows produced by this invocation, in file order.
    pub rows: Vec<ResultRow>,
    /// Instances skipped because the output file already held them.
    pub skipped: usize,
}

/// Validates the spec, then runs every pending instance in parallel and
/// appends rows in instance order.
pub fn run(spec: &ExperimentSpec) -> Result<RunOutcome> {
    spec.validate()?;
    let mut sink = match &spec.out {
        Some(path) => Some(CsvSink::open(path, &spec.metadata())?),
        None => None,
    };
    let all = instances(spec);
    let pending: Vec<Instance> =
        all.iter().copied().filter(|i| sink.as_ref().is_none_or(|s| !s.is_done(&i.key()))).collect();
    let skipped = all.len() - pending.len();

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = spec.threads {
        builder = builder.num_threads(t);
    }
    let pool = builder.build().map_err(|e| BenchError::Usage(format!("cannot start worker pool: {e}")))?;
    let chunk = 2 * pool.current_num_threads().max(1);

    let mut rows = Vec::new();
    for batch in pending.chunks(chunk) {
        let results: Vec<Result<Vec<ResultRow>>> = pool.install(|| batch.par_iter().map(|i| run_instance(spec, i)).collect());
        for r in results {
            let r = r?;
            if let Some(s) = sink.as_mut() {
                s.append(&r)?;
            }
            rows.extend(r);
        }
    }
    Ok(RunOutcome { rows, skipped })
}

fn run_checked(spec: &ExperimentSpec, want: Experiment) -> Result<RunOutcome> {
    if spec.experiment != want {
        return Err(BenchError::Usage(format!("spec is for {}, not {want}", spec.experiment)));
    }
    run(spec)
}

/// Per-iteration traces of sirr, sir and srr plus the direct baseline.
pub fn run_convergence(spec: &ExperimentSpec) -> Result<RunOutcome> {
    run_checked(spec, Experiment::Convergence)
}

/// Final errors over a difficulty sweep.
pub fn run_sweep(spec: &ExperimentSpec) -> Result<RunOutcome> {
    run_checked(spec, Experiment::Sweep)
}

/// Final errors across residual sizes.
pub fn run_residual_size(spec: &ExperimentSpec) -> Result<RunOutcome> {
    run_checked(spec, Experiment::ResidualSize)
}

/// Final status over a grid of sketch sizes; see [`crate::analysis::fail_counts`].
pub fn run_failrate(spec: &ExperimentSpec) -> Result<RunOutcome> {
    run_checked(spec, Experiment::Failrate)
}

/// Final errors as `n` grows; see [`crate::analysis::growth_exponent`].
pub fn run_nscale(spec: &ExperimentSpec) -> Result<RunOutcome> {
    run_checked(spec, Experiment::Nscale)
}
