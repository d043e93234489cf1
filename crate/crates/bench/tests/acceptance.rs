//! End-to-end acceptance checks. Each test writes one `PASS`/`FAIL` line
//! straight to stderr (bypassing output capture) before asserting.

use std::io::Write;
use std::sync::OnceLock;

use sirr_bench::analysis::{fail_counts, final_rows, growth_exponent, paired};
use sirr_bench::{run, Experiment, ExperimentSpec, ResultRow, SketchDim, Solver};
use sirr_core::{
    default_zeta, gen_synthetic, kw_backward_error, make_sparse_sign, measure_distortion,
    qr_direct, sir, srr, srr_standalone_with, thin_svd, DenseMatrix, Matrix, MetaConfig, MetaSolver, Plan,
    Precond, StopRule,
};

const U: f64 = f64::EPSILON;
const MASTER: u64 = 20240917;

fn report(id: &str, pass: bool, detail: &str) {
    let line = format!("[acceptance] {id}: {} ({detail})\n", if pass { "PASS" } else { "FAIL" });
    let _ = std::io::stderr().write_all(line.as_bytes());
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn diff_norm(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Dense Gaussian elimination with partial pivoting.
fn gauss_solve(m: &Matrix, rhs: &[f64]) -> Vec<f64> {
    let n = rhs.len();
    let mut a: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| m[(i, j)]).chain([rhs[i]]).collect()).collect();
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs())).unwrap();
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

fn matmul(a: &Matrix, b: &Matrix) -> Matrix {
    DenseMatrix::from_fn(a.rows(), b.cols(), |i, j| (0..a.cols()).map(|k| a[(i, k)] * b[(k, j)]).sum())
}

fn grid_spec(solvers: Vec<Solver>) -> ExperimentSpec {
    let mut spec = ExperimentSpec::preset(Experiment::Convergence);
    spec.trace = false;
    spec.seeds = 10;
    spec.solvers = solvers;
    spec.master_seed = MASTER;
    spec
}

/// SIRR and the QR baseline on the (2000, 50, 200) grid, shared by several criteria.
fn backward_grid() -> &'static [ResultRow] {
    static ROWS: OnceLock<Vec<ResultRow>> = OnceLock::new();
    ROWS.get_or_init(|| run(&grid_spec(vec![Solver::Sirr, Solver::QrDirect])).unwrap().rows)
}

#[test]
fn c01_sirr_backward_stability() {
    let pairs = paired(backward_grid(), Solver::Sirr, Solver::QrDirect);
    let mut bad = 0;
    let mut worst: f64 = 0.0;
    let mut worst_abs: f64 = 0.0;
    for (s, q) in &pairs {
        let ok = s.backward_kw <= 10.0 * q.backward_kw && s.backward_kw <= 1e-11;
        bad += !ok as usize;
        worst = worst.max(s.backward_kw / q.backward_kw);
        worst_abs = worst_abs.max(s.backward_kw);
    }
    let pass = pairs.len() == 60 && bad == 0;
    report("1 SIRR backward stability", pass, &format!("{bad}/{} violations, max ratio to QR {worst:.3}, max BE {worst_abs:.2e}", pairs.len()));
    assert!(pass);
}

#[test]
fn c02_sir_instability() {
    let mut spec = grid_spec(vec![Solver::Sir]);
    spec.kappa = vec![1e8, 1e12];
    spec.beta = vec![1e-3];
    let mut rows = run(&spec).unwrap().rows;
    let mut lines = Vec::new();
    let mut pass = true;
    for (label, meta) in [("sketch-solve", MetaConfig::sketch_solve()), ("krylov2", MetaConfig::krylov(2))] {
        if label == "krylov2" {
            spec.meta = meta;
            rows = run(&spec).unwrap().rows;
        }
        rows.extend(backward_grid().iter().cloned());
        for kappa in [1e8, 1e12] {
            let hits = paired(&rows, Solver::Sir, Solver::Sirr)
                .into_iter()
                .filter(|(a, _)| a.kappa == kappa)
                .filter(|(a, b)| !(a.backward_kw < 100.0 * b.backward_kw))
                .count();
            if label == "sketch-solve" {
                pass &= hits >= 8;
            }
            lines.push(format!("{label} kappa={kappa:e}: {hits}/10"));
        }
    }
    report("2 SIR instability (sketch-solve meta; krylov2 informational)", pass, &lines.join(", "));
    assert!(pass);
}

#[test]
fn c03_srr_residual_dichotomy() {
    let mut lines = Vec::new();
    let mut pass = true;
    for (beta, want_close) in [(1e-1, true), (1e-7, false)] {
        let mut spec = grid_spec(vec![Solver::Sirr, Solver::Srr]);
        // Depth 4 leaves the Krylov-meta SRR short of its floor at kappa = 1e8.
        spec.srr_depth = 6;
        spec.kappa = vec![1e8];
        spec.beta = vec![beta];
        let rows = run(&spec).unwrap().rows;
        let pairs = paired(&rows, Solver::Srr, Solver::Sirr);
        let ratios: Vec<f64> = pairs.iter().map(|(a, b)| a.backward_kw / b.backward_kw).collect();
        let srr_max = pairs.iter().map(|(a, _)| a.backward_kw).fold(0.0, f64::max);
        let hits = ratios.iter().filter(|&&r| if want_close { r <= 10.0 && r >= 0.1 } else { r >= 100.0 }).count();
        pass &= hits >= 8;
        let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = ratios.iter().cloned().fold(0.0, f64::max);
        lines.push(format!("beta={beta:e}: {hits}/10 (SRR/SIRR in [{lo:.3e}, {hi:.3e}], SRR BE <= {srr_max:.2e})"));
    }
    report("3 SRR residual dichotomy", pass, &lines.join(", "));
    assert!(pass);
}

#[test]
fn c04_srr_equals_sir() {
    let mut worst: f64 = 0.0;
    for j in 0..20u64 {
        let kappa = 10f64.powf(2.0 * j as f64 / 19.0);
        let p = gen_synthetic::<f64>(30, 5, kappa, 1e-2, 1000 + j).unwrap();
        let sk = make_sparse_sign(20, 30, default_zeta(5, 20), 2000 + j).unwrap();
        let (pre, _) = Precond::build_resampling(&p.a, &sk).unwrap();
        let meta = MetaSolver::new(&p.a, &pre, MetaConfig::sketch_solve()).unwrap();
        let atb = p.a.mul_t_vec(&p.b);
        for t in 0..=4 {
            let x_srr = srr(&meta, &atb, t).unwrap();
            let stop = StopRule { max_outer: 100, update_tol: f64::MIN_POSITIVE, patience: 1, divergence_growth: f64::INFINITY };
            let plan = Plan::sir((1 << t) - 1, MetaConfig::sketch_solve()).with_stop(stop);
            let rep = sir(&p.a, &p.b, &pre, &plan, None).unwrap();
            assert_eq!(rep.meta_calls, 1 << t, "instance {j} depth {t}: diverged={}", rep.diverged);
            worst = worst.max(diff_norm(&x_srr, &rep.x_hat) / norm(&rep.x_hat));
        }
    }
    let pass = worst <= 1e-10;
    report("4 SRR depth t equals SIR with 2^t meta calls", pass, &format!("max relative difference {worst:.2e}"));
    assert!(pass);
}

/// Slope and R^2 of the least-squares line through `(x, y)`.
fn line_fit(pts: &[(f64, f64)]) -> (f64, f64) {
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) })
}

#[test]
fn c05_convergence_rate_law() {
    let (m, n, s) = (2000, 20, 400);
    let mut bounds = Vec::new();
    let mut rates = Vec::new();
    let mut srr_r2: Vec<f64> = Vec::new();
    let mut linear_r2: Vec<f64> = Vec::new();
    for j in 0..5u64 {
        let p = gen_synthetic::<f64>(m, n, 1e4, 1e-3, 300 + j).unwrap();
        let xs = p.x_star.as_deref().unwrap();
        let sk = make_sparse_sign(s, m, default_zeta(n, s), 400 + j).unwrap();
        let eta = measure_distortion(&sk, &p.a).unwrap();
        bounds.push(1.0 / (1.0 - eta).powi(2) - 1.0);
        let (pre, _) = Precond::build_resampling(&p.a, &sk).unwrap();
        let reference = Some(sirr_core::Reference { x_star: Some(xs), svd: None });

        let plan = Plan::sir(40, MetaConfig::sketch_solve());
        let rep = sir(&p.a, &p.b, &pre, &plan, reference).unwrap();
        let fe: Vec<f64> = rep.iterates.iter().map(|r| r.forward_err.unwrap()).collect();
        // Fit while the error is still well above its floor.
        let floor = fe.iter().cloned().fold(f64::INFINITY, f64::min);
        let pts: Vec<(f64, f64)> =
            fe.iter().enumerate().take_while(|(_, &e)| e > 100.0 * floor).map(|(i, &e)| (i as f64, e.ln())).collect();
        assert!(pts.len() >= 3, "too few pre-floor iterates");
        let (slope, r2) = line_fit(&pts);
        rates.push(slope.exp());
        linear_r2.push(r2);

        let plan = Plan::srr(3, MetaConfig::sketch_solve());
        let rep = srr_standalone_with(&p.a, &p.b, &pre, &plan, reference).unwrap();
        let fe: Vec<f64> = rep.iterates.iter().map(|r| r.forward_err.unwrap()).collect();
        let fe_floor = U * 1e4 * (1.0 + 1e4 * 1e-3);
        let pts: Vec<(f64, f64)> =
            (1..=3).filter(|&t| fe[t] > 10.0 * fe_floor).map(|t| ((1u64 << t) as f64, fe[t].ln())).collect();
        srr_r2.push(if pts.len() >= 2 { line_fit(&pts).1 } else { 1.0 });
    }
    let bound = bounds.iter().cloned().fold(0.0, f64::max) + 0.1;
    let max_rate = rates.iter().cloned().fold(0.0, f64::max);
    let min_lin = linear_r2.iter().cloned().fold(1.0, f64::min);
    let min_srr = srr_r2.iter().cloned().fold(1.0, f64::min);
    let pass = max_rate <= bound && min_lin >= 0.9 && min_srr >= 0.9;
    report(
        "5 convergence-rate law",
        pass,
        &format!("SIR contraction max {max_rate:.3} <= bound {bound:.3}, log-linear R^2 min {min_lin:.3}, SRR double-exponential R^2 min {min_srr:.3}"),
    );
    assert!(pass);
}

#[test]
fn c06_preconditioner_spectrum() {
    let (m, n, s, kappa) = (2000, 50, 200, 1e8);
    let tol = 100.0 * U * kappa * n as f64;
    let mut bad = 0;
    let mut worst_eta: f64 = 0.0;
    for j in 0..20u64 {
        let p = gen_synthetic::<f64>(m, n, kappa, 1e-3, 500 + j).unwrap();
        let sk = make_sparse_sign(s, m, default_zeta(n, s), 600 + j).unwrap();
        let (pre, used) = Precond::build_resampling(&p.a, &sk).unwrap();
        let eta = measure_distortion(&used, &p.a).unwrap();
        worst_eta = worst_eta.max(eta);
        // Row i of A R^{-1} is R^{-T} a_i.
        let at = p.a.transpose();
        let mut w = DenseMatrix::zeros(n, m);
        for i in 0..m {
            w.col_mut(i).copy_from_slice(&pre.apply_rinv_t(at.col(i)).unwrap());
        }
        let sigma = thin_svd(&w.transpose()).unwrap().sigma;
        let lo = 1.0 / (1.0 + eta) * (1.0 - tol);
        let hi = 1.0 / (1.0 - eta) * (1.0 + tol);
        bad += sigma.iter().any(|&v| v < lo || v > hi) as usize;
    }
    let pass = bad == 0;
    report("6 preconditioner spectrum", pass, &format!("{bad}/20 seeds out of range, max eta {worst_eta:.3}, tol {tol:.2e}"));
    assert!(pass);
}

#[test]
fn c07_failrate_vs_sketch_size() {
    let mut spec = ExperimentSpec::preset(Experiment::Failrate);
    spec.s = [1.75, 2.0, 2.5, 3.0, 4.0].map(SketchDim::PerColumn).to_vec();
    spec.kappa = vec![1e8];
    spec.beta = vec![1e-3];
    spec.max_outer = 10;
    spec.master_seed = MASTER;
    let rows = run(&spec).unwrap().rows;
    let counts = fail_counts(&rows, Solver::Sirr);
    let pass = counts.len() == 5 && counts.values().all(|&(f, t)| t == 100 && f <= 2);
    let detail: Vec<String> = counts.iter().map(|(s, (f, t))| format!("s={s}: {f}/{t}")).collect();
    report("7 fail rate for s >= 1.75n", pass, &detail.join(", "));
    assert!(pass);
}

#[test]
fn c08_forward_stability_envelope() {
    let rows = final_rows(backward_grid(), Solver::Sirr);
    let n = 50f64;
    let mut bad = 0;
    let mut worst: f64 = 0.0;
    for r in &rows {
        // Planted problems have ||A|| = ||x*|| = 1 and ||r*|| = beta.
        let env = 100.0 * n.powf(1.5) * (U * r.kappa + U * r.kappa * r.kappa * r.beta);
        let q = r.forward_err / env;
        worst = worst.max(q);
        bad += !(q <= 1.0) as usize;
    }
    let pass = rows.len() == 60 && bad == 0;
    report("8 forward-stability envelope", pass, &format!("{bad}/{} outside, max error/envelope {worst:.3e}", rows.len()));
    assert!(pass);
}

#[test]
fn c09_jacobi_equivalence() {
    let mut worst: f64 = 0.0;
    for j in 0..20u64 {
        let (m, n) = (40, 8);
        let p = gen_synthetic::<f64>(m, n, 1.0 + j as f64 / 19.0, 0.1, 700 + j).unwrap();
        let sk = make_sparse_sign(24, m, default_zeta(n, 24), 800 + j).unwrap();
        let (pre, _) = Precond::build_resampling(&p.a, &sk).unwrap();
        let rep = sir(&p.a, &p.b, &pre, &Plan::sir(1, MetaConfig::sketch_solve()), None).unwrap();
        // x1 = x0 + M^{-1} A^T (b - A x0) with M = R^T R and x0 = M^{-1} A^T b.
        let r = pre.r();
        let mm = matmul(&r.transpose(), r);
        let x0 = gauss_solve(&mm, &p.a.mul_t_vec(&p.b));
        let g = matmul(&p.a.transpose(), &p.a);
        let gx0: Vec<f64> = (0..n).map(|i| (0..n).map(|k| g[(i, k)] * x0[k]).sum()).collect();
        let t = gauss_solve(&mm, &gx0);
        let x1: Vec<f64> = (0..n).map(|i| 2.0 * x0[i] - t[i]).collect();
        worst = worst.max(diff_norm(&rep.x_hat, &x1) / (n as f64 * U * norm(&x1)));
    }
    let pass = worst <= 10.0;
    report("9 one SIR step is a Jacobi update", pass, &format!("max difference {worst:.2} n u ||x1||"));
    assert!(pass);
}

/// Exact least-squares backward error `min(phi, sigma_min([A, phi (I - r r^T / r^T r)]))`.
fn exact_backward_error(a: &Matrix, b: &[f64], x: &[f64]) -> f64 {
    let (m, n) = a.shape();
    let ax = a.mul_vec(x);
    let r: Vec<f64> = b.iter().zip(&ax).map(|(b, v)| b - v).collect();
    let rr: f64 = r.iter().map(|v| v * v).sum();
    let phi = (rr / (1.0 + norm(x).powi(2))).sqrt();
    let big = DenseMatrix::from_fn(m, n + m, |i, j| {
        if j < n {
            a[(i, j)]
        } else {
            let k = j - n;
            phi * ((i == k) as u8 as f64 - r[i] * r[k] / rr)
        }
    });
    let smin = *thin_svd(&big.transpose()).unwrap().sigma.last().unwrap();
    phi.min(smin)
}

#[test]
fn c10_metric_correctness() {
    let a = DenseMatrix::from_rows(&[&[1.0, 0.0], &[0.0, 1.0], &[1.0, 1.0]]).unwrap();
    let b = [1.0, 2.0, 4.0];
    let svd = thin_svd(&a).unwrap();
    let zero = kw_backward_error(&a, &svd, &b, &[4.0 / 3.0, 7.0 / 3.0], 1.0).unwrap();

    let p = gen_synthetic::<f64>(120, 6, 1e4, 1e-3, 77).unwrap();
    let svd = thin_svd(&p.a).unwrap();
    let x_qr = qr_direct(&p.a, &p.b).unwrap();
    let kw_qr = kw_backward_error(&p.a, &svd, &p.b, &x_qr, 1.0).unwrap();
    let ex_qr = exact_backward_error(&p.a, &p.b, &x_qr);
    let mut ok = kw_qr <= 100.0 * 6.0 * U && ex_qr <= 2f64.sqrt() * kw_qr + 10.0 * U && kw_qr <= ex_qr + 10.0 * U;
    // Away from the rounding floor the sandwich is tight.
    let mut worst: f64 = 0.0;
    for size in [1e-8, 1e-5, 1e-2] {
        let x: Vec<f64> = x_qr.iter().enumerate().map(|(i, v)| v + size * ((i % 3) as f64 - 1.0)).collect();
        let kw = kw_backward_error(&p.a, &svd, &p.b, &x, 1.0).unwrap();
        let ex = exact_backward_error(&p.a, &p.b, &x);
        let ratio = ex / kw;
        worst = worst.max(ratio);
        ok &= (1.0 - 1e-6..=2f64.sqrt() * (1.0 + 1e-6)).contains(&ratio);
    }
    let pass = zero <= 10.0 * U && ok;
    report(
        "10 metric correctness",
        pass,
        &format!("rational instance BE {zero:.2e}, QR baseline KW {kw_qr:.2e} vs exact {ex_qr:.2e}, max exact/KW {worst:.6}"),
    );
    assert!(pass);
}

#[test]
fn c11_nscale_trend() {
    let mut spec = ExperimentSpec::preset(Experiment::Nscale);
    spec.master_seed = MASTER;
    let rows = run(&spec).unwrap().rows;
    let sirr_rows = final_rows(&rows, Solver::Sirr);
    let pts: Vec<(f64, f64)> = sirr_rows.iter().map(|r| (r.n as f64, r.backward_kw)).collect();
    let exponent = growth_exponent(&pts).unwrap_or(f64::INFINITY);
    let fwd_ok = paired(&rows, Solver::Sirr, Solver::QrDirect)
        .iter()
        .all(|(a, b)| a.forward_err <= 10.0 * b.forward_err && b.forward_err <= 10.0 * a.forward_err);
    let n100 = sirr_rows.iter().find(|r| r.n == 100).map_or(f64::INFINITY, |r| r.wall_time_s);
    let pass = exponent <= 2.0 && pts.len() == 3;
    report(
        "n-scale backward-error growth",
        pass,
        &format!(
            "fitted exponent {exponent:.3}, BE {:?}, forward within 10x of QR: {fwd_ok}, n=100 SIRR time {n100:.1}s",
            pts.iter().map(|p| format!("{:.2e}", p.1)).collect::<Vec<_>>()
        ),
    );
    assert!(pass);
}
