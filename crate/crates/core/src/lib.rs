//! Randomized solvers for dense overdetermined least-squares problems.
//!
//! A sketch `S` compresses `A` to `S A`, whose QR factor `R` preconditions
//! the normal equations. Refinement drivers ([`refine::sir`],
//! [`refine::srr`], [`refine::sirr`]) repeatedly correct a solution with a
//! cheap meta-solver built on `R`. [`metrics`] measures forward, residual and
//! backward errors, and [`problems`] generates planted test problems.
//!
//! Everything is generic over [`Real`] (`f32` or `f64`); the aliases at the
//! crate root fix the scalar to `f64`.
//!
//! ```
//! use sirr_core::{gen_synthetic, make_sparse_sign, sirr, MetaConfig, RefinePlan};
//!
//! let p = gen_synthetic::<f64>(400, 20, 1e6, 1e-3, 7).unwrap();
//! let s = make_sparse_sign(80, 400, 8, 11).unwrap();
//! let plan = RefinePlan::sirr(10, 4, MetaConfig::default());
//! let rep = sirr(&p.a, &p.b, &s, &plan, None).unwrap();
//! let x = p.x_star.unwrap();
//! let err: f64 = rep.x_hat.iter().zip(&x).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
//! assert!(err < 1e-8);
//! ```

pub mod error;
pub mod la;
pub mod meta;
pub mod metrics;
pub mod precond;
pub mod problems;
pub mod refine;
pub mod rng;
pub mod scalar;
pub mod sketch;

pub use error::{Error, Result};
pub use la::{
    householder_qr, householder_qr_unchecked, matvec, matvec_t, norm2, spectral_norm, thin_svd, tri_solve,
    DenseMatrix, QrFactors, SvdFactors,
};
pub use meta::{krylov_meta, krylov_meta_normal, sketch_solve_meta, MetaConfig, MetaKind, MetaSolver};
pub use metrics::{forward_error, kw_backward_error, residual_error, wedin_floor, ErrorTriple, WedinFloor};
pub use precond::Preconditioner;
pub use problems::{
    gen_difficulty_sweep, gen_synthetic, haar_orthonormal, load_matrix_market, load_problem, save_matrix_market,
    save_problem, LSProblem,
};
pub use refine::{
    qr_direct, sir, sirr, sirr_with, srr, srr_standalone, srr_standalone_with, IterateRecord, RefinePlan, Reference,
    Scheme, SolveReport, StopRule, DEFAULT_SRR_DEPTH,
};
pub use rng::{derive_seed, rng_from_seed, Stream};
pub use scalar::Real;
pub use sketch::{default_zeta, make_gaussian, make_sparse_sign, measure_distortion, SketchKind, SketchOperator};

pub type Matrix = DenseMatrix<f64>;
pub type Qr = QrFactors<f64>;
pub type Svd = SvdFactors<f64>;
pub type Sketch = SketchOperator<f64>;
pub type Precond = Preconditioner<f64>;
pub type Problem = LSProblem<f64>;
pub type Report = SolveReport<f64>;
pub type Plan = RefinePlan<f64>;
