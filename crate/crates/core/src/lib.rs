//! Invariant-measure averages and linear response for smooth expanding circle
//! maps, computed from periodic orbits through the dynamical determinant
//!
//! ```text
//! d(z, u, tau) = exp( - sum_{n>=1} z^n/n  sum_{T^n x = x} e^{-u S_n g(x)} / ((T^n)'(x) - 1) )
//! ```
//!
//! The determinant is built from weighted traces over the fixed points of the
//! iterated map. Its smallest positive zero is `exp(-pressure)`; the SRB
//! average of an observable `g` is the ratio `-d_u/d_z` at `z = 1`, and the
//! derivative of that average along a map parameter comes from the mixed
//! partials of the coefficient series. Everything downstream of [`map`] is
//! exact arithmetic on analytically known derivatives: no numerical
//! differentiation enters the main pipeline.
//!
//! The [`ulam`] module provides deliberately independent brute-force
//! validators (a discretized transfer operator and a grid-scan periodic-point
//! search) that share nothing with the determinant pipeline beyond the map
//! evaluations themselves.

// index loops mirror the recursions they implement
#![allow(clippy::needless_range_loop)]

pub mod determinant;
mod error;
mod kahan;
pub mod map;
pub mod periodic;
pub mod response;
pub mod traces;
pub mod ulam;

mod dd;

pub use determinant::{det_coefficients, det_coefficient_partials, DetSeries, DetValues, DetZero, GeomTail};
pub use error::{Error, Result};
pub use kahan::KahanSum;
pub use map::{Harmonic, Observable, TauPoly, TrigMapFamily, Weight};
pub use periodic::{
    enumerate_fixed_points, BranchPartition, FixedPointRecord, FixedPointSet, DEFAULT_ENUM_CAP,
};
pub use response::{
    convergence_report, det_series, linear_response, linear_response_from, srb_average,
    srb_average_from, ConvergenceReport, ConvergenceRow, ResponseResult, SeriesDiag,
};
pub use traces::{orbit_jet, trace_b, trace_b_partials, trace_table, OrbitJet, ShiftData, TraceData};
pub use ulam::{brute_fixed_points, ulam_response_fd, UlamModel};
