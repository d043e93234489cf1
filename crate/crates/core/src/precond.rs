//! Sketched QR preconditioner: `R` from the Householder QR of `S A`.

use crate::error::{Error, Result};
use crate::la::{householder_qr, tri_solve, DenseMatrix, QrFactors};
use crate::rng::{derive_seed, Stream};
use crate::scalar::Real;
use crate::sketch::SketchOperator;

/// Number of fresh sketches drawn after the first one fails.
pub const MAX_RESAMPLES: u32 = 3;

/// Upper-triangular right preconditioner for `A`.
#[derive(Clone, Debug)]
pub struct Preconditioner<T> {
    r: DenseMatrix<T>,
    sketch_qr: QrFactors<T>,
    source_seed: u64,
    /// Optional distortion estimate of the sketch that produced `r`.
    pub distortion_hint: Option<T>,
}

impl<T: Real> Preconditioner<T> {
    /// Factors `S A`. Fails with [`Error::PreconditionerFailure`] when `S A`
    /// is numerically rank deficient.
    pub fn build(a: &DenseMatrix<T>, sketch: &SketchOperator<T>) -> Result<Self> {
        if sketch.m() != a.rows() {
            return Err(Error::ShapeMismatch(format!(
                "sketch ambient dimension {} but A has {} rows",
                sketch.m(),
                a.rows()
            )));
        }
        if sketch.s() < a.cols() {
            return Err(Error::InvalidParameter(format!(
                "sketch dimension {} smaller than the {} columns of A",
                sketch.s(),
                a.cols()
            )));
        }
        let sa = sketch.apply(a)?;
        let qr = householder_qr(&sa).map_err(|e| match e {
            Error::RankDeficient { .. } => Error::PreconditionerFailure { attempts: 1, reason: e.to_string() },
            other => other,
        })?;
        Ok(Self { r: qr.r().clone(), sketch_qr: qr, source_seed: sketch.seed(), distortion_hint: None })
    }

    /// Builds from `sketch`; when `S A` is rank deficient, redraws the
    /// sketch with the same parameters and a derived seed, at most
    /// [`MAX_RESAMPLES`] times. Returns the sketch actually used.
    pub fn build_resampling(a: &DenseMatrix<T>, sketch: &SketchOperator<T>) -> Result<(Self, SketchOperator<T>)> {
        let mut last = match Self::build(a, sketch) {
            Ok(p) => return Ok((p, sketch.clone())),
            Err(Error::PreconditionerFailure { reason, .. }) => reason,
            Err(e) => return Err(e),
        };
        for attempt in 1..=MAX_RESAMPLES {
            let fresh = sketch.reseeded(derive_seed(sketch.seed(), Stream::Resample(attempt)))?;
            match Self::build(a, &fresh) {
                Ok(p) => return Ok((p, fresh)),
                Err(Error::PreconditionerFailure { reason, .. }) => last = reason,
                Err(e) => return Err(e),
            }
        }
        Err(Error::PreconditionerFailure { attempts: MAX_RESAMPLES as usize + 1, reason: last })
    }

    /// Wraps an existing upper-triangular factor (no sketch QR is kept, so
    /// [`Preconditioner::sketch_solve`] is unavailable).
    pub fn from_r(r: DenseMatrix<T>) -> Result<Self> {
        if r.rows() != r.cols() {
            return Err(Error::ShapeMismatch("preconditioner must be square".into()));
        }
        let qr = crate::la::householder_qr_unchecked(&r)?;
        Ok(Self { r, sketch_qr: qr, source_seed: 0, distortion_hint: None })
    }

    pub fn r(&self) -> &DenseMatrix<T> {
        &self.r
    }

    pub fn dim(&self) -> usize {
        self.r.cols()
    }

    pub fn source_seed(&self) -> u64 {
        self.source_seed
    }

    /// `r^{-1} v`
    pub fn apply_rinv(&self, v: &[T]) -> Result<Vec<T>> {
        tri_solve(&self.r, v, false)
    }

    /// `r^{-T} v`
    pub fn apply_rinv_t(&self, v: &[T]) -> Result<Vec<T>> {
        tri_solve(&self.r, v, true)
    }

    /// `(r^T r)^{-1} v` as two triangular solves.
    pub fn normal_solve(&self, v: &[T]) -> Result<Vec<T>> {
        self.apply_rinv(&self.apply_rinv_t(v)?)
    }

    /// Sketch-and-solve solution `(S A)^+ (S b)` given the sketched right-hand side `S b`.
    pub fn sketch_solve(&self, sb: &[T]) -> Result<Vec<T>> {
        if self.sketch_qr.rows() != sb.len() {
            return Err(Error::ShapeMismatch(format!(
                "sketched right-hand side of length {} for a sketch with {} rows",
                sb.len(),
                self.sketch_qr.rows()
            )));
        }
        self.sketch_qr.solve_ls(sb)
    }
}
