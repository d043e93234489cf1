use sirr_bench::analysis::{fail_counts, final_rows, paired};
use sirr_bench::{
    run_convergence, run_residual_size, run_sweep, BenchError, Experiment, ExperimentSpec, SketchDim, Solver,
};
use sirr_core::MetaConfig;

const U: f64 = f64::EPSILON;

fn small(e: Experiment) -> ExperimentSpec {
    let mut spec = ExperimentSpec::preset(e);
    spec.m = 300;
    spec.n = vec![10];
    spec.s = vec![SketchDim::Rows(60)];
    spec
}

#[test]
fn wrong_experiment_is_rejected() {
    let spec = small(Experiment::Sweep);
    assert!(matches!(run_convergence(&spec), Err(BenchError::Usage(_))));
}

#[test]
fn identity_conditioning_converges() {
    let mut spec = small(Experiment::Convergence);
    spec.kappa = vec![1.0];
    spec.beta = vec![0.0];
    let rows = run_convergence(&spec).unwrap().rows;
    let first_good = |solver: Solver| {
        rows.iter().filter(|r| r.solver == solver).find(|r| r.forward_err <= 100.0 * U).map(|r| r.iteration)
    };
    // SIRR spends a whole SRR on its first correction; the others contract at a
    // rate set by the sketch distortion, which kappa = 1 does not improve.
    assert!(first_good(Solver::Sirr).is_some_and(|i| i <= 2));
    assert!(first_good(Solver::Sir).is_some());
    assert!(first_good(Solver::Srr).is_some());
    assert!(final_rows(&rows, Solver::QrDirect)[0].forward_err <= 100.0 * U);
    // Consistent systems have no relative residual error.
    assert!(rows.iter().all(|r| r.residual_err.is_nan()));
}

#[test]
fn trace_rows_count_meta_calls() {
    let mut spec = small(Experiment::Convergence);
    spec.kappa = vec![1e6];
    spec.beta = vec![1e-3];
    spec.max_outer = 4;
    spec.srr_depth = 3;
    let rows = run_convergence(&spec).unwrap().rows;
    for r in &rows {
        let want = match r.solver {
            Solver::Sirr => 1 + r.iteration * 8,
            Solver::Sir => 1 + r.iteration,
            Solver::Srr => 1 << r.iteration,
            Solver::QrDirect => 0,
        };
        assert_eq!(r.meta_calls, want, "{r:?}");
    }
    assert_eq!(rows.iter().filter(|r| r.solver == Solver::Srr).count(), 4);
}

#[test]
fn sweep_keeps_sirr_near_the_direct_solver() {
    let mut spec = small(Experiment::Sweep);
    spec.solvers = vec![Solver::Sirr, Solver::QrDirect];
    let rows = run_sweep(&spec).unwrap().rows;
    let pairs = paired(&rows, Solver::Sirr, Solver::QrDirect);
    assert_eq!(pairs.len(), 17);
    for (s, q) in pairs.iter().filter(|(s, _)| s.kappa <= 1e12) {
        assert!(s.backward_kw <= 10.0 * q.backward_kw.max(U), "kappa {:e}: {:e} vs {:e}", s.kappa, s.backward_kw, q.backward_kw);
    }
    // Level 1e0 sits at the rounding floor for every solver.
    let easy: Vec<_> = rows.iter().filter(|r| r.kappa == 1.0).collect();
    assert!(easy.iter().all(|r| r.backward_kw <= 10.0 * U && r.forward_err <= 100.0 * U));
}

#[test]
fn consistent_residual_size_case_converges() {
    let mut spec = small(Experiment::ResidualSize);
    spec.kappa = vec![1e4];
    spec.beta = vec![0.0];
    let rows = run_residual_size(&spec).unwrap().rows;
    for solver in [Solver::Sirr, Solver::Srr] {
        let r = final_rows(&rows, solver)[0];
        assert!(!r.failed);
        // SRR works on the normal equations, whose rounding floor is u kappa^2.
        assert!(r.forward_err <= 10.0 * U * 1e8, "{solver:?} {:e}", r.forward_err);
    }
}

#[test]
fn tiny_sketch_fails_at_least_as_often_without_krylov() {
    let mut spec = ExperimentSpec::preset(Experiment::Failrate);
    spec.m = 1000;
    spec.n = vec![50];
    spec.s = vec![SketchDim::PerColumn(1.1)];
    spec.kappa = vec![1e8];
    spec.beta = vec![1e-3];
    spec.seeds = 6;
    spec.max_outer = 10;
    let krylov = fail_counts(&sirr_bench::run(&spec).unwrap().rows, Solver::Sirr);
    spec.meta = MetaConfig::sketch_solve();
    let plain = fail_counts(&sirr_bench::run(&spec).unwrap().rows, Solver::Sirr);
    let (k, p) = (krylov[&55], plain[&55]);
    assert_eq!(k.1, 6);
    assert!(p.0 >= k.0, "sketch-solve {p:?} vs krylov {k:?}");
}
