use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("degree must be at least 2, got {degree}")]
    BadDegree { degree: u32 },

    #[error("tau domain [{lo}, {hi}] is empty")]
    EmptyTauDomain { lo: f64, hi: f64 },

    #[error("tau = {tau} lies outside the admissible domain [{lo}, {hi}]")]
    TauOutsideDomain { tau: f64, lo: f64, hi: f64 },

    #[error("map is not uniformly expanding: certified derivative bound {bound} <= 1")]
    NotExpanding { bound: f64 },

    #[error("period {n} needs degree^n = {size} itineraries, above the cap {cap}")]
    PeriodTooLarge { n: u32, size: u64, cap: u64 },

    #[error("inverse-branch contraction did not converge within {cap} iterations")]
    ContractionStalled { cap: usize },

    #[error("found {found} distinct periodic points of period {n}, expected {expected}")]
    CountMismatch { n: u32, found: usize, expected: u64 },

    #[error("x = {x} is not a fixed point of T^{n}: residual {residual:e} exceeds {tol:e}")]
    NotPeriodic { x: f64, n: u32, residual: f64, tol: f64 },

    #[error("orbit data inconsistent: {detail}")]
    OrbitInconsistent { detail: String },

    #[error("determinant zero not bracketed in the validated range (0, {z_cap}]")]
    ZeroNotBracketed { z_cap: f64 },

    #[error("determinant slope at z = {z} is degenerate: |d_z| = {slope:e}")]
    DegenerateZero { z: f64, slope: f64 },

    #[error("derivative routes for the response disagree by {diff:e}")]
    ResponseSelfCheck { diff: f64 },

    #[error("bin count {m} is too small (need at least 2)")]
    BadBinCount { m: usize },

    #[error("power iteration residual {residual:e} after {iters} iterations (target {tol:e})")]
    PowerIterationStalled { residual: f64, iters: usize, tol: f64 },

    #[error("grid of {grid} points is too coarse for degree^n = {size} fixed points")]
    GridTooCoarse { grid: usize, size: u64 },

    #[error("grid scan found {found} integer crossings, expected {expected}")]
    CrossingCountMismatch { found: usize, expected: u64 },
}

pub type Result<T> = std::result::Result<T, Error>;
