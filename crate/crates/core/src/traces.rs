//! Weighted traces over Fix(T^n) and their exact (u, tau)-partials at the
//! base point.
//!
//! For the weight -u*g - log T' the period-n trace is
//!
//! ```text
//! b_n(u, tau) = sum_{T^n x = x} exp(-u S_n g(x)) / ((T^n)'(x) - 1)
//! ```
//!
//! and its partials at (0, 0) only involve per-orbit data: the Birkhoff sum
//! S_n g, the cycle derivatives (T^n)' and (T^n)'', and the parameter
//! derivative X_n = d/dtau T_tau^n together with its x-derivative. With
//! x_k = T^k(x) and P_k = (T^k)'(x):
//!
//! ```text
//! X_n(x)  = sum_k X(x_k) (T^{n-1-k})'(x_{k+1})
//! X_n'(x) = sum_k [ X'(x_k) P_k (T^{n-1-k})'(x_{k+1}) + X(x_k) (T^{n-1-k})''(x_{k+1}) P_{k+1} ]
//! ```
//!
//! (the suffix factors attach at the *next* orbit point; at a linear base map
//! the distinction is invisible, but finite differences pin it down at any
//! non-uniform base). All sums over Fix(T^n) run in itinerary-lexicographic
//! order with compensated accumulation, so results are reproducible for any
//! worker count.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kahan::KahanSum;
use crate::map::{circle_dist, MapAtTau, Observable, TauDerivAtTau, TrigMapFamily, Weight};
use crate::periodic::{enumerate_fixed_points, FixedPointSet};

/// Residual allowed when a caller supplies a periodic point directly.
const ORBIT_RESIDUAL_TOL: f64 = 1e-12;

/// Relative agreement required between Dn and its cyclic-shift recomputation.
const CYCLIC_PRODUCT_TOL: f64 = 1e-10;

/// One trace row: b_n and its partials at (u, tau) = (0, 0).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceData {
    pub b: f64,
    pub bu: f64,
    pub btau: f64,
    pub butau: f64,
}

/// Per-shift data of one orbit: values evaluated at x_k.
#[derive(Debug, Clone, Copy)]
pub struct ShiftData {
    /// X_n(x_k).
    pub xn: f64,
    /// g'(x_k).
    pub g_deriv: f64,
    /// (T^n)'(x_k), the cyclic product started at position k.
    pub dn: f64,
}

/// All per-periodic-point quantities for one fixed point of T^n.
#[derive(Debug, Clone)]
pub struct OrbitJet {
    pub orbit: Vec<f64>,
    /// (T^n)'(x).
    pub dn: f64,
    /// (T^n)''(x).
    pub dn2: f64,
    /// Birkhoff sum of the observable.
    pub sg: f64,
    /// X_n(x).
    pub xn: f64,
    /// X_n'(x).
    pub xn1: f64,
    pub per_shift: Vec<ShiftData>,
}

/// Internal: scalar samples along one orbit.
struct OrbitSamples {
    t1: Vec<f64>,
    t2: Vec<f64>,
    xv: Vec<f64>,
    xd: Vec<f64>,
    gv: Vec<f64>,
    gd: Vec<f64>,
}

fn sample_orbit(
    map: &MapAtTau,
    xdot: &TauDerivAtTau,
    observable: &Observable,
    orbit: &[f64],
) -> OrbitSamples {
    let n = orbit.len();
    let mut s = OrbitSamples {
        t1: Vec::with_capacity(n),
        t2: Vec::with_capacity(n),
        xv: Vec::with_capacity(n),
        xd: Vec::with_capacity(n),
        gv: Vec::with_capacity(n),
        gd: Vec::with_capacity(n),
    };
    for &y in orbit {
        let jet = map.jet(y);
        s.t1.push(jet.t1);
        s.t2.push(jet.t2);
        let (x_val, x1_val) = xdot.jet(y);
        s.xv.push(x_val);
        s.xd.push(x1_val);
        s.gv.push(observable.eval(y));
        s.gd.push(observable.deriv(y));
    }
    s
}

fn jet_from_samples(orbit: Vec<f64>, s: &OrbitSamples) -> Result<OrbitJet> {
    let n = orbit.len();
    // prefix products P_k = (T^k)'(x_0) and suffix products over t1
    let mut prefix = vec![1.0; n + 1];
    for k in 0..n {
        prefix[k + 1] = prefix[k] * s.t1[k];
    }
    let dn = prefix[n];
    let mut suffix = vec![1.0; n + 1]; // suffix[k] = prod_{j=k..n-1} t1[j]
    for k in (0..n).rev() {
        suffix[k] = s.t1[k] * suffix[k + 1];
    }

    // Dn2 = Dn * sum_k (T''/T')(x_k) P_k
    let mut log_slope = KahanSum::new();
    for k in 0..n {
        log_slope.add(s.t2[k] / s.t1[k] * prefix[k]);
    }
    let dn2 = dn * log_slope.value();

    // backward recursion for B(k) = (T^{n-1-k})''(x_{k+1})
    let mut second = vec![0.0; n]; // second[k] = B(k)
    for k in (1..n).rev() {
        second[k - 1] = second[k] * s.t1[k] * s.t1[k] + suffix[k + 1] * s.t2[k];
    }

    // X_n(x) and X_n'(x)
    let mut xn_sum = KahanSum::new();
    let mut xn1_sum = KahanSum::new();
    for k in 0..n {
        xn_sum.add(s.xv[k] * suffix[k + 1]);
        xn1_sum.add(s.xd[k] * prefix[k] * suffix[k + 1] + s.xv[k] * second[k] * prefix[k + 1]);
    }
    let xn = xn_sum.value();
    let xn1 = xn1_sum.value();

    let mut sg = KahanSum::new();
    for k in 0..n {
        sg.add(s.gv[k]);
    }

    // cyclic shifts: X_n(x_i) and the rotated full product
    let mut per_shift = Vec::with_capacity(n);
    for i in 0..n {
        let mut acc = 0.0;
        let mut tail = 1.0; // prod over rotated positions k+1..n-1
        for k in (0..n).rev() {
            acc += s.xv[(i + k) % n] * tail;
            tail *= s.t1[(i + k) % n];
        }
        let dn_shift = tail; // full rotated product
        if (dn_shift - dn).abs() > CYCLIC_PRODUCT_TOL * dn.abs() {
            return Err(Error::OrbitInconsistent {
                detail: format!(
                    "cyclic product at shift {i} is {dn_shift}, expected {dn} to relative {CYCLIC_PRODUCT_TOL:e}"
                ),
            });
        }
        per_shift.push(ShiftData {
            xn: acc,
            g_deriv: s.gd[i],
            dn: dn_shift,
        });
    }

    Ok(OrbitJet {
        orbit,
        dn,
        dn2,
        sg: sg.value(),
        xn,
        xn1,
        per_shift,
    })
}

/// Compute the full orbit jet at a fixed point of T_tau^n.
///
/// The point must satisfy the periodicity residual to 1e-12; X-quantities are
/// the parameter derivatives of the family at this `tau`.
pub fn orbit_jet(
    family: &TrigMapFamily,
    observable: &Observable,
    tau: f64,
    x: f64,
    n: u32,
) -> Result<OrbitJet> {
    let map = family.at(tau)?;
    let xdot = family.tau_deriv_at(tau);
    let orbit = build_orbit(&map, x, n as usize);
    let closing = circle_dist(map.circle(orbit[n as usize - 1]), x);
    if closing > ORBIT_RESIDUAL_TOL {
        return Err(Error::NotPeriodic {
            x,
            n,
            residual: closing,
            tol: ORBIT_RESIDUAL_TOL,
        });
    }
    let samples = sample_orbit(&map, &xdot, observable, &orbit);
    jet_from_samples(orbit, &samples)
}

fn build_orbit(map: &MapAtTau, x: f64, n: usize) -> Vec<f64> {
    let mut orbit = Vec::with_capacity(n);
    orbit.push(x);
    for _ in 1..n {
        orbit.push(map.circle(*orbit.last().unwrap()));
    }
    orbit
}

/// The weighted trace b_n at parameter `tau`.
///
/// For [`Weight::Srb`] this is `sum exp(-u S_n g)/((T^n)' - 1)`; for
/// [`Weight::Raw`] it is `sum exp(S_n phi)/(1 - (T^n)'^{-1})`.
pub fn trace_b(
    family: &TrigMapFamily,
    tau: f64,
    weight: Weight<'_>,
    n: u32,
    cap: u64,
) -> Result<f64> {
    let set = enumerate_fixed_points(family, tau, n, cap)?;
    trace_b_over(family, &set, weight)
}

/// Same as [`trace_b`] but over an already enumerated set.
pub fn trace_b_over(
    family: &TrigMapFamily,
    set: &FixedPointSet,
    weight: Weight<'_>,
) -> Result<f64> {
    let map = family.at(set.tau)?;
    let n = set.period as usize;
    let terms: Vec<f64> = set
        .points
        .par_iter()
        .map(|rec| {
            let orbit = build_orbit(&map, rec.x, n);
            let mut dn = 1.0;
            let mut birkhoff = KahanSum::new();
            for &y in &orbit {
                dn *= map.deriv(y);
                birkhoff.add(match weight {
                    Weight::Srb { observable, .. } => observable.eval(y),
                    Weight::Raw(phi) => phi.eval(y),
                });
            }
            match weight {
                Weight::Srb { u, .. } => (-u * birkhoff.value()).exp() / (dn - 1.0),
                Weight::Raw(_) => birkhoff.value().exp() / (1.0 - dn.recip()),
            }
        })
        .collect();
    Ok(KahanSum::sum_iter(terms))
}

/// b_n and its partials at (u, tau) = (0, 0) in one pass over Fix(T_0^n).
///
/// The family's base point is tau = 0; re-base first for other points.
pub fn trace_b_partials(
    family: &TrigMapFamily,
    observable: &Observable,
    n: u32,
    cap: u64,
) -> Result<TraceData> {
    let set = enumerate_fixed_points(family, 0.0, n, cap)?;
    let map = family.at(0.0)?;
    let xdot = family.tau_deriv_at(0.0);
    let nn = n as usize;

    let contributions: Vec<[f64; 4]> = set
        .points
        .par_iter()
        .map(|rec| -> Result<[f64; 4]> {
            let orbit = build_orbit(&map, rec.x, nn);
            let samples = sample_orbit(&map, &xdot, observable, &orbit);
            let jet = jet_from_samples(orbit, &samples)?;
            let denom = jet.dn - 1.0;
            let slope_dot = jet.dn2 * jet.xn / (1.0 - jet.dn) + jet.xn1;
            let mut inner = KahanSum::new();
            for shift in &jet.per_shift {
                inner.add(shift.xn * shift.g_deriv / (shift.dn - 1.0));
            }
            Ok([
                1.0 / denom,
                -jet.sg / denom,
                -slope_dot / (denom * denom),
                jet.sg / (denom * denom) * slope_dot + inner.value() / denom,
            ])
        })
        .collect::<Result<Vec<_>>>()?;

    let mut sums = [KahanSum::new(); 4];
    for c in &contributions {
        for (s, v) in sums.iter_mut().zip(c) {
            s.add(*v);
        }
    }
    Ok(TraceData {
        b: sums[0].value(),
        bu: sums[1].value(),
        btau: sums[2].value(),
        butau: sums[3].value(),
    })
}

/// Trace rows for n = 1..=n_max.
pub fn trace_table(
    family: &TrigMapFamily,
    observable: &Observable,
    n_max: u32,
    cap: u64,
) -> Result<Vec<TraceData>> {
    (1..=n_max)
        .map(|n| trace_b_partials(family, observable, n, cap))
        .collect()
}
