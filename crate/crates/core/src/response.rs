//! SRB averages and linear response from determinant partials.
//!
//! At z = 1 (exact, because the u = 0 weight has zero pressure):
//!
//! ```text
//! average  = -d_u / d_z
//! response = -d_{u,tau} / d_z + d_{tau,z} d_u / d_z^2
//! ```
//!
//! The response is evaluated twice, once from raw coefficient sums and once
//! from the Horner forms of the same series; the two routes are algebraically
//! identical under truncation, so any disagreement beyond rounding signals a
//! miswired recursion and is reported as an error rather than averaged away.
//!
//! Convergence is certified empirically per constituent series: a geometric
//! fit of the last terms yields a tail estimate at z = 1, and any estimate
//! above 1e-6 flags the result as unconverged.

use serde::{Deserialize, Serialize};

use crate::determinant::{det_coefficient_partials, DetSeries, GeomTail};
use crate::error::{Error, Result};
use crate::kahan::KahanSum;
use crate::map::{Observable, TrigMapFamily};
use crate::traces::trace_table;

/// Per-series tail above this marks the result unconverged.
const TAIL_LIMIT: f64 = 1e-6;

/// |d_z(1)| below this is a degenerate zero.
const SLOPE_FLOOR: f64 = 1e-6;

/// Agreement required between the two response routes (relative to max(1, value)).
const SELF_CHECK_TOL: f64 = 1e-14;

/// Convergence diagnostics of one constituent series at z = 1.
///
/// `tail` is clamped to `f64::MAX` when the fitted rate admits no finite
/// estimate, so the record stays JSON-round-trippable.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeriesDiag {
    pub name: String,
    pub fitted_rate: f64,
    pub tail: f64,
}

/// Result of an SRB-average or linear-response evaluation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResponseResult {
    /// Integral of the observable against the SRB measure at the base point.
    pub srb_average: f64,
    /// d/dtau of the average, present for linear-response runs.
    pub linear_response: Option<f64>,
    /// Base point in the original family's parameter.
    pub tau: f64,
    pub n_max: usize,
    /// False when any constituent tail exceeds 1e-6.
    pub converged: bool,
    pub series: Vec<SeriesDiag>,
    /// Diagnostic location of the determinant zero (theory: exactly 1).
    pub z_star: Option<f64>,
    pub dz_at_one: f64,
}

/// Partial sums of every constituent series, per truncation order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub d: f64,
    pub dz: f64,
    pub du: f64,
    pub dtau: f64,
    pub dtauz: f64,
    pub dutau: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
    pub fits: Vec<SeriesDiag>,
}

/// Determinant series of the family re-based at `tau`.
pub fn det_series(
    family: &TrigMapFamily,
    observable: &Observable,
    tau: f64,
    n_max: usize,
    cap: u64,
) -> Result<DetSeries> {
    let rebased = family.rebase(tau)?;
    let rows = trace_table(&rebased, observable, n_max as u32, cap)?;
    Ok(det_coefficient_partials(&rows, n_max))
}

fn series_terms(series: &DetSeries) -> [(&'static str, Vec<f64>); 6] {
    let n = series.n_max;
    let weighted = |c: &[f64]| -> Vec<f64> {
        (0..=n).map(|k| k as f64 * c[k]).collect()
    };
    [
        ("d", series.a.clone()),
        ("dz", weighted(&series.a)),
        ("du", series.au.clone()),
        ("dtau", series.atau.clone()),
        ("dtauz", weighted(&series.atau)),
        ("dutau", series.autau.clone()),
    ]
}

fn diag_for(name: &str, terms: &[f64], n_max: usize) -> SeriesDiag {
    let fit = GeomTail::fit(terms);
    let tail = fit.tail_at(1.0, n_max + 1);
    SeriesDiag {
        name: name.to_string(),
        fitted_rate: fit.rate,
        tail: if tail.is_finite() { tail } else { f64::MAX },
    }
}

fn diagnostics(series: &DetSeries, names: &[&str]) -> Vec<SeriesDiag> {
    series_terms(series)
        .iter()
        .filter(|(name, _)| names.contains(name))
        .map(|(name, terms)| diag_for(name, terms, series.n_max))
        .collect()
}

/// SRB average of the observable at parameter `tau`, by Eq.-of-ratio of the
/// determinant partials at z = 1.
pub fn srb_average(
    family: &TrigMapFamily,
    observable: &Observable,
    tau: f64,
    n_max: usize,
    cap: u64,
) -> Result<ResponseResult> {
    let series = det_series(family, observable, tau, n_max, cap)?;
    srb_average_from(&series, tau)
}

/// SRB average from an already computed series (base point `tau` is metadata).
pub fn srb_average_from(series: &DetSeries, tau: f64) -> Result<ResponseResult> {
    let v = series.eval(1.0);
    if v.dz.abs() < SLOPE_FLOOR {
        return Err(Error::DegenerateZero {
            z: 1.0,
            slope: v.dz.abs(),
        });
    }
    let diags = diagnostics(series, &["dz", "du"]);
    let converged = diags.iter().all(|d| d.tail < TAIL_LIMIT);
    Ok(ResponseResult {
        srb_average: -v.du / v.dz,
        linear_response: None,
        tau,
        n_max: series.n_max,
        converged,
        series: diags,
        z_star: series.find_smallest_zero().ok().map(|z| z.z_star),
        dz_at_one: v.dz,
    })
}

/// Linear response of the SRB average at the family's base point tau = 0.
pub fn linear_response(
    family: &TrigMapFamily,
    observable: &Observable,
    n_max: usize,
    cap: u64,
) -> Result<ResponseResult> {
    let series = det_series(family, observable, 0.0, n_max, cap)?;
    linear_response_from(&series, 0.0)
}

/// Linear response from an already computed series re-based at `tau`
/// (the base point is metadata; the series itself fixes the arithmetic).
pub fn linear_response_from(series: &DetSeries, tau: f64) -> Result<ResponseResult> {
    let v = series.eval(1.0);
    if v.dz.abs() < SLOPE_FLOOR {
        return Err(Error::DegenerateZero {
            z: 1.0,
            slope: v.dz.abs(),
        });
    }

    // route one: raw coefficient sums
    let n = series.n_max;
    let sum = |terms: &dyn Fn(usize) -> f64| -> f64 {
        let mut k = KahanSum::new();
        for i in 1..=n {
            k.add(terms(i));
        }
        k.value()
    };
    let s_dutau = sum(&|i| series.autau[i]);
    let s_dz = sum(&|i| i as f64 * series.a[i]);
    let s_dtauz = sum(&|i| i as f64 * series.atau[i]);
    let s_du = sum(&|i| series.au[i]);
    let resp_sums = -s_dutau / s_dz + s_dtauz * s_du / (s_dz * s_dz);

    // route two: same series through the Horner evaluator
    let resp_horner = -v.dutau / v.dz + v.dtauz * v.du / (v.dz * v.dz);

    let diff = (resp_sums - resp_horner).abs();
    if diff > SELF_CHECK_TOL * resp_sums.abs().max(1.0) {
        return Err(Error::ResponseSelfCheck { diff });
    }

    let diags = diagnostics(series, &["dz", "du", "dtauz", "dutau"]);
    let converged = diags.iter().all(|d| d.tail < TAIL_LIMIT);
    Ok(ResponseResult {
        srb_average: -v.du / v.dz,
        linear_response: Some(resp_sums),
        tau,
        n_max: series.n_max,
        converged,
        series: diags,
        z_star: series.find_smallest_zero().ok().map(|z| z.z_star),
        dz_at_one: v.dz,
    })
}

/// Per-n partial sums of every constituent series, with the fitted rates.
pub fn convergence_report(series: &DetSeries) -> ConvergenceReport {
    let named = series_terms(series);
    let mut sums: Vec<KahanSum> = named.iter().map(|_| KahanSum::new()).collect();
    let mut rows = Vec::with_capacity(series.n_max + 1);
    for k in 0..=series.n_max {
        let mut vals = [0.0; 6];
        for (i, (_, terms)) in named.iter().enumerate() {
            sums[i].add(terms[k]);
            vals[i] = sums[i].value();
        }
        rows.push(ConvergenceRow {
            n: k,
            d: vals[0],
            dz: vals[1],
            du: vals[2],
            dtau: vals[3],
            dtauz: vals[4],
            dutau: vals[5],
        });
    }
    let fits = named
        .iter()
        .map(|(name, terms)| diag_for(name, terms, series.n_max))
        .collect();
    ConvergenceReport { rows, fits }
}
