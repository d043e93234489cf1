//! Experiment descriptions and their default grids.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use sirr_core::problems::difficulty_levels;
use sirr_core::{MetaConfig, DEFAULT_SRR_DEPTH};

use crate::error::{BenchError, Result};

/// Relative residual error above which a solve counts as failed.
pub const FAIL_THRESHOLD: f64 = 1e-5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Experiment {
    Convergence,
    Sweep,
    ResidualSize,
    Failrate,
    Nscale,
}

impl Experiment {
    pub const ALL: [Experiment; 5] =
        [Experiment::Convergence, Experiment::Sweep, Experiment::ResidualSize, Experiment::Failrate, Experiment::Nscale];

    /// Name written to the `experiment` column.
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Convergence => "convergence",
            Experiment::Sweep => "sweep",
            Experiment::ResidualSize => "residual_size",
            Experiment::Failrate => "failrate",
            Experiment::Nscale => "nscale",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Solver {
    Sirr,
    Sir,
    /// SRR alone on `A^T b`, one recorded iterate per depth.
    Srr,
    QrDirect,
}

impl Solver {
    pub fn name(self) -> &'static str {
        match self {
            Solver::Sirr => "sirr",
            Solver::Sir => "sir",
            Solver::Srr => "srr",
            Solver::QrDirect => "qr_direct",
        }
    }
}

impl FromStr for Solver {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sirr" => Ok(Solver::Sirr),
            "sir" => Ok(Solver::Sir),
            "srr" => Ok(Solver::Srr),
            "qr_direct" | "qr" => Ok(Solver::QrDirect),
            other => Err(BenchError::Usage(format!("unknown solver {other:?}"))),
        }
    }
}

/// Sketch dimension, either absolute or as a multiple of `n`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SketchDim {
    Rows(usize),
    PerColumn(f64),
}

impl SketchDim {
    pub fn resolve(self, n: usize) -> usize {
        match self {
            SketchDim::Rows(s) => s,
            // Rounded so that e.g. 1.1 * 100 gives 110, not 111.
            SketchDim::PerColumn(c) => (c * n as f64 - 1e-9).ceil().max(1.0) as usize,
        }
    }
}

impl FromStr for SketchDim {
    type Err = BenchError;

    /// `200` is an absolute size, `4n` or `1.75n` a multiple of `n`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || BenchError::Usage(format!("invalid sketch dimension {s:?}, expected e.g. 200 or 4n"));
        let s = s.trim();
        if let Some(c) = s.strip_suffix('n') {
            let c: f64 = c.parse().map_err(|_| bad())?;
            if !(c > 0.0 && c.is_finite()) {
                return Err(bad());
            }
            Ok(SketchDim::PerColumn(c))
        } else {
            s.parse::<usize>().map(SketchDim::Rows).map_err(|_| bad())
        }
    }
}

impl fmt::Display for SketchDim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SketchDim::Rows(s) => write!(f, "{s}"),
            SketchDim::PerColumn(c) => write!(f, "{c}n"),
        }
    }
}

/// One instance family: problem shape and conditioning.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridPoint {
    pub n: usize,
    pub s: usize,
    pub kappa: f64,
    pub beta: f64,
}

#[derive(Clone, Debug)]
pub struct ExperimentSpec {
    pub experiment: Experiment,
    pub m: usize,
    pub n: Vec<usize>,
    pub s: Vec<SketchDim>,
    pub kappa: Vec<f64>,
    pub beta: Vec<f64>,
    /// When set, replaces the `kappa x beta` product with `(d, u d)` pairs
    /// over this many difficulty levels.
    pub difficulty_levels: Option<usize>,
    pub seeds: usize,
    /// Timing repetitions per solve; the minimum wall time is reported.
    pub repeats: usize,
    pub solvers: Vec<Solver>,
    pub meta: MetaConfig,
    pub srr_depth: usize,
    pub max_outer: usize,
    /// Write one row per outer iterate instead of only the final one.
    pub trace: bool,
    pub master_seed: u64,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    /// Free-form `key=value` metadata copied into the CSV preamble.
    pub notes: Vec<(String, String)>,
}

impl ExperimentSpec {
    /// The default grid of each experiment at desk scale.
    pub fn preset(experiment: Experiment) -> Self {
        let base = ExperimentSpec {
            experiment,
            m: 2000,
            n: vec![50],
            s: vec![SketchDim::Rows(200)],
            kappa: vec![1e4, 1e8, 1e12],
            beta: vec![1e-1, 1e-3],
            difficulty_levels: None,
            seeds: 1,
            repeats: 1,
            solvers: vec![Solver::Sirr, Solver::Sir, Solver::Srr, Solver::QrDirect],
            meta: MetaConfig::default(),
            srr_depth: DEFAULT_SRR_DEPTH,
            max_outer: 50,
            trace: false,
            master_seed: 0,
            threads: None,
            out: None,
            notes: Vec::new(),
        };
        match experiment {
            Experiment::Convergence => ExperimentSpec { trace: true, ..base },
            Experiment::Sweep => ExperimentSpec {
                m: 5000,
                n: vec![200],
                s: vec![SketchDim::Rows(600)],
                difficulty_levels: Some(17),
                ..base
            },
            Experiment::ResidualSize => ExperimentSpec {
                beta: vec![1e-1, 1e-3, 1e-5, 1e-7, 1e-9],
                solvers: vec![Solver::Sirr, Solver::Srr, Solver::QrDirect],
                ..base
            },
            Experiment::Failrate => ExperimentSpec {
                n: vec![100],
                s: (0..=58).map(|i| SketchDim::PerColumn((110 + 5 * i) as f64 / 100.0)).collect(),
                seeds: 100,
                solvers: vec![Solver::Sirr],
                ..base
            },
            Experiment::Nscale => ExperimentSpec {
                m: 10000,
                n: vec![100, 200, 400],
                s: vec![SketchDim::PerColumn(4.0)],
                kappa: vec![1e8],
                beta: vec![1e-3],
                solvers: vec![Solver::Sirr, Solver::QrDirect],
                notes: vec![("desk_scale".into(), "paper grid n in [100, 1600] capped at n <= 400".into())],
                ..base
            },
        }
    }

    /// Checks every parameter before any computation starts.
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(BenchError::Usage(msg));
        if self.n.is_empty() || self.s.is_empty() || self.solvers.is_empty() {
            return fail("n, s and solver lists must be non-empty".into());
        }
        if self.difficulty_levels.is_none() && (self.kappa.is_empty() || self.beta.is_empty()) {
            return fail("kappa and beta lists must be non-empty".into());
        }
        if let Some(l) = self.difficulty_levels {
            difficulty_levels(l).map_err(|e| BenchError::Usage(e.to_string()))?;
        }
        if self.seeds == 0 {
            return fail("seeds must be >= 1".into());
        }
        if self.repeats == 0 {
            return fail("repeats must be >= 1".into());
        }
        if self.max_outer == 0 {
            return fail("max-outer must be >= 1".into());
        }
        if self.threads == Some(0) {
            return fail("threads must be >= 1".into());
        }
        self.meta.validate().map_err(|e| BenchError::Usage(e.to_string()))?;
        for &n in &self.n {
            if n == 0 || n > self.m {
                return fail(format!("need 1 <= n <= m, got n={n}, m={}", self.m));
            }
            for d in &self.s {
                let s = d.resolve(n);
                if s < n {
                    return fail(format!("sketch dimension s={s} ({d}) is below n={n}"));
                }
            }
        }
        for &k in &self.kappa {
            if !(k >= 1.0 && k.is_finite()) {
                return fail(format!("kappa must be a finite value >= 1, got {k}"));
            }
        }
        for &b in &self.beta {
            if !(b >= 0.0 && b.is_finite()) {
                return fail(format!("beta must be finite and nonnegative, got {b}"));
            }
        }
        Ok(())
    }

    /// `(kappa, beta)` pairs in run order.
    pub fn conditions(&self) -> Vec<(f64, f64)> {
        match self.difficulty_levels {
            Some(l) => difficulty_levels(l)
                .unwrap_or_default()
                .into_iter()
                .map(|d| (d, f64::EPSILON * d))
                .collect(),
            None => self.kappa.iter().flat_map(|&k| self.beta.iter().map(move |&b| (k, b))).collect(),
        }
    }

    /// Every grid point in run order: `n`, then `s`, then conditions.
    pub fn grid(&self) -> Vec<GridPoint> {
        let conditions = self.conditions();
        let mut out = Vec::new();
        for &n in &self.n {
            for d in &self.s {
                for &(kappa, beta) in &conditions {
                    out.push(GridPoint { n, s: d.resolve(n), kappa, beta });
                }
            }
        }
        out
    }

    /// `key=value` pairs describing the run, written at the top of the CSV.
    pub fn metadata(&self) -> Vec<(String, String)> {
        let list = |v: Vec<String>| v.join(";");
        let mut md = vec![
            ("experiment".to_string(), self.experiment.name().to_string()),
            ("m".into(), self.m.to_string()),
            ("n".into(), list(self.n.iter().map(|v| v.to_string()).collect())),
            ("s".into(), list(self.s.iter().map(|v| v.to_string()).collect())),
        ];
        match self.difficulty_levels {
            Some(l) => md.push(("difficulty_levels".into(), format!("{l} (kappa=d, beta=u*d)"))),
            None => {
                md.push(("kappa".into(), list(self.kappa.iter().map(|v| format!("{v:e}")).collect())));
                md.push(("beta".into(), list(self.beta.iter().map(|v| format!("{v:e}")).collect())));
            }
        }
        md.extend([
            ("seeds".into(), self.seeds.to_string()),
            ("repeats".into(), self.repeats.to_string()),
            ("solvers".into(), list(self.solvers.iter().map(|s| s.name().to_string()).collect())),
            ("meta".into(), self.meta.to_string()),
            ("srr_depth".into(), self.srr_depth.to_string()),
            ("max_outer".into(), self.max_outer.to_string()),
            ("trace".into(), self.trace.to_string()),
            ("master_seed".into(), self.master_seed.to_string()),
            ("sketch".into(), "sparse-sign, zeta=ceil(2 log2 n)".into()),
            ("backward_kw".into(), "Karlson-Walden estimate, theta=1".into()),
            ("failed".into(), format!("error, divergence, or residual_err > {FAIL_THRESHOLD:e}")),
        ]);
        md.extend(self.notes.iter().cloned());
        md
    }
}
