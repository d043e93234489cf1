use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sirr_bench::{analysis, experiments, BenchError, Experiment, ExperimentSpec, SketchDim, SolveOptions, Solver};
use sirr_core::MetaConfig;

/// Sketched iterative and recursive refinement for dense least squares.
///
/// Every flag can also be set through an environment variable named
/// SIRR_<FLAG>, e.g. SIRR_THREADS=4 or SIRR_MASTER_SEED=7.
#[derive(Parser, Debug)]
#[command(name = "sirr", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve min ||b - A x|| for MatrixMarket inputs and write x.
    Solve {
        /// Dense MatrixMarket file holding A.
        a: PathBuf,
        /// Dense MatrixMarket file holding b.
        b: PathBuf,
        /// Where to write x (MatrixMarket).
        #[arg(long, env = "SIRR_OUT", default_value = "x.mtx")]
        out: PathBuf,
        /// Sketch rows, absolute (200) or per column (4n). Default min(4n, m).
        #[arg(long, env = "SIRR_S")]
        s: Option<SketchDim>,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Run an experiment grid and write CSV.
    Bench {
        experiment: ExperimentArg,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        solver: SolverArgs,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ExperimentArg {
    Convergence,
    Sweep,
    ResidualSize,
    Failrate,
    Nscale,
}

impl From<ExperimentArg> for Experiment {
    fn from(e: ExperimentArg) -> Self {
        match e {
            ExperimentArg::Convergence => Experiment::Convergence,
            ExperimentArg::Sweep => Experiment::Sweep,
            ExperimentArg::ResidualSize => Experiment::ResidualSize,
            ExperimentArg::Failrate => Experiment::Failrate,
            ExperimentArg::Nscale => Experiment::Nscale,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MetaArg {
    Sketch,
    Krylov,
}

#[derive(Args, Debug)]
struct SolverArgs {
    /// Meta-solver used inside the refinement.
    #[arg(long, env = "SIRR_META", value_enum, default_value = "krylov")]
    meta: MetaArg,
    /// Steps of the Krylov meta-solver.
    #[arg(long, env = "SIRR_KRYLOV_K", default_value_t = 2)]
    krylov_k: usize,
    #[arg(long, env = "SIRR_SRR_DEPTH", default_value_t = sirr_core::DEFAULT_SRR_DEPTH)]
    srr_depth: usize,
    #[arg(long, env = "SIRR_MAX_OUTER", default_value_t = 50)]
    max_outer: usize,
    #[arg(long, env = "SIRR_MASTER_SEED", default_value_t = 0)]
    master_seed: u64,
}

impl SolverArgs {
    fn meta(&self) -> MetaConfig {
        match self.meta {
            MetaArg::Sketch => MetaConfig::sketch_solve(),
            MetaArg::Krylov => MetaConfig::krylov(self.krylov_k),
        }
    }
}

/// Grid overrides; anything left out keeps the experiment's default.
#[derive(Args, Debug)]
struct GridArgs {
    #[arg(long, env = "SIRR_M")]
    m: Option<usize>,
    #[arg(long, env = "SIRR_N", value_delimiter = ',')]
    n: Option<Vec<usize>>,
    /// Sketch rows: absolute (200) or per column (4n); comma-separated.
    #[arg(long, env = "SIRR_S", value_delimiter = ',')]
    s: Option<Vec<SketchDim>>,
    #[arg(long, env = "SIRR_KAPPA", value_delimiter = ',')]
    kappa: Option<Vec<f64>>,
    #[arg(long, env = "SIRR_BETA", value_delimiter = ',')]
    beta: Option<Vec<f64>>,
    /// Random instances per grid point.
    #[arg(long, env = "SIRR_SEEDS")]
    seeds: Option<usize>,
    /// Timing repetitions per solve.
    #[arg(long, env = "SIRR_REPEATS")]
    repeats: Option<usize>,
    /// Comma-separated subset of sirr, sir, srr, qr_direct.
    #[arg(long, env = "SIRR_SOLVERS", value_delimiter = ',')]
    solvers: Option<Vec<Solver>>,
    /// Output CSV; an existing file from the same spec is resumed. Default <experiment>.csv.
    #[arg(long, env = "SIRR_OUT")]
    out: Option<PathBuf>,
    /// Worker threads (default: logical cores).
    #[arg(long, env = "SIRR_THREADS")]
    threads: Option<usize>,
}

fn bench(experiment: Experiment, grid: GridArgs, solver: SolverArgs) -> Result<(), BenchError> {
    let mut spec = ExperimentSpec::preset(experiment);
    if let Some(m) = grid.m {
        spec.m = m;
    }
    if let Some(n) = grid.n {
        spec.n = n;
    }
    if let Some(s) = grid.s {
        spec.s = s;
    }
    if grid.kappa.is_some() || grid.beta.is_some() {
        spec.difficulty_levels = None;
    }
    if let Some(k) = grid.kappa {
        spec.kappa = k;
    }
    if let Some(b) = grid.beta {
        spec.beta = b;
    }
    if let Some(v) = grid.seeds {
        spec.seeds = v;
    }
    if let Some(v) = grid.repeats {
        spec.repeats = v;
    }
    if let Some(v) = grid.solvers {
        spec.solvers = v;
    }
    spec.threads = grid.threads;
    spec.meta = solver.meta();
    spec.srr_depth = solver.srr_depth;
    spec.max_outer = solver.max_outer;
    spec.master_seed = solver.master_seed;
    let out = grid.out.unwrap_or_else(|| PathBuf::from(format!("{}.csv", experiment.name())));
    spec.out = Some(out.clone());

    let outcome = experiments::run(&spec)?;
    println!("wrote {} rows to {} ({} instances already present)", outcome.rows.len(), out.display(), outcome.skipped);
    if experiment == Experiment::Failrate {
        for &s in &spec.solvers {
            for (sk, (fails, total)) in analysis::fail_counts(&outcome.rows, s) {
                println!("{} s={sk}: {fails}/{total} failed", s.name());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve { a, b, out, s, solver } => {
            let opts = SolveOptions {
                s,
                meta: solver.meta(),
                srr_depth: solver.srr_depth,
                max_outer: solver.max_outer,
                master_seed: solver.master_seed,
            };
            sirr_bench::run_solve(&a, &b, &out, &opts).map(|r| {
                println!(
                    "backward_kw={:.16e} outer_iterations={} converged={} meta_calls={}",
                    r.backward_kw, r.outer_iterations, r.converged, r.meta_calls
                );
            })
        }
        Command::Bench { experiment, grid, solver } => bench(experiment.into(), grid, solver),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
