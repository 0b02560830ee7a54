//! Enumeration of the fixed points of T^n by symbolic inverse-branch
//! contraction.
//!
//! The lift is cut where it crosses integers; that yields d monotone branches
//! whose inverses contract by at least 1/expansion_bound. Composing the
//! inverse branches along a length-n itinerary and iterating converges to the
//! unique periodic point carrying that itinerary. A Newton polish (finishing
//! against a twice-precision orbit) lands each point on the correctly rounded
//! root, which matters because the residual of a period-n point has slope
//! (T^n)' - 1 ~ degree^n.
//!
//! Exactly one itinerary collision occurs per period (the all-first and
//! all-last itineraries can meet at the branch boundary), so d^n itineraries
//! produce d^n - 1 distinct points; the merge step asserts that count.

use rayon::prelude::*;

use crate::dd::Dd;
use crate::error::{Error, Result};
use crate::map::{circle_diff, circle_dist, mod1, MapAtTau, TrigMapFamily};

/// Default cap on degree^n for an enumeration.
pub const DEFAULT_ENUM_CAP: u64 = 1 << 22;

/// Tolerance for merging itinerary duplicates (circle metric).
const MERGE_TOL: f64 = 1e-9;

/// One enumerated fixed point of T^n.
#[derive(Debug, Clone)]
pub struct FixedPointRecord {
    /// Lexicographic rank of the itinerary (branch digits, base degree).
    pub index: u64,
    /// Branch index of T^k(x) for k = 0..n.
    pub itinerary: Vec<u8>,
    /// The point, in [0, 1).
    pub x: f64,
    /// |L^n(x) - x - m| at the returned point, evaluated in twice precision.
    pub residual: f64,
}

/// All fixed points of T_tau^n, in itinerary-lexicographic order.
///
/// Residuals scale like (T^n)'(x) * ulp(x)/2 even at the correctly rounded
/// point, so the 1e-12 budget of the test suites applies to the moderate
/// periods they request, not to arbitrarily large n.
#[derive(Debug, Clone)]
pub struct FixedPointSet {
    pub period: u32,
    pub tau: f64,
    pub points: Vec<FixedPointRecord>,
}

/// The monotone branches of the lift at one parameter value.
#[derive(Debug, Clone)]
pub struct BranchPartition {
    map: MapAtTau,
    degree: usize,
    /// c_0 < c_1 < ... < c_{d-1} in [0, 1): L(c_w) = offsets[w].
    cuts: Vec<f64>,
    /// Integer the lift attains at each cut.
    offsets: Vec<i64>,
    /// Certified lower bound on L' over the whole family domain.
    expansion: f64,
}

/// Solve f(x) = target for increasing f on [lo, hi]; f returns (value, slope).
fn solve_increasing<F: Fn(f64) -> (f64, f64)>(f: F, mut lo: f64, mut hi: f64, target: f64) -> f64 {
    let mut x = 0.5 * (lo + hi);
    for _ in 0..80 {
        let (v, slope) = f(x);
        let r = v - target;
        if r == 0.0 {
            return x;
        }
        if r > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let mut next = x - r / slope;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= 1e-16 * x.abs().max(1.0) {
            return next;
        }
        x = next;
        if hi - lo <= 4.0 * f64::EPSILON * hi.abs().max(1.0) {
            return x;
        }
    }
    x
}

impl BranchPartition {
    pub fn new(family: &TrigMapFamily, tau: f64) -> Result<Self> {
        let expansion = family.expansion_bound()?;
        let map = family.at(tau)?;
        let degree = family.degree() as usize;
        let l0 = map.lift(0.0);
        let m_first = l0.ceil();
        let mut cuts = Vec::with_capacity(degree);
        let mut offsets = Vec::with_capacity(degree);
        for j in 0..degree {
            let target = m_first + j as f64;
            let cut = if j == 0 && l0 == target {
                0.0
            } else {
                let m = &map;
                solve_increasing(
                    |x| {
                        let jet = m.jet(x);
                        (jet.t, jet.t1)
                    },
                    0.0,
                    1.0,
                    target,
                )
            };
            cuts.push(cut);
            offsets.push(target as i64);
        }
        Ok(Self {
            map,
            degree,
            cuts,
            offsets,
            expansion,
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn cuts(&self) -> &[f64] {
        &self.cuts
    }

    pub fn offsets(&self) -> &[i64] {
        &self.offsets
    }

    pub fn map(&self) -> &MapAtTau {
        &self.map
    }

    /// Certified expansion lower bound carried over from the family.
    pub fn expansion(&self) -> f64 {
        self.expansion
    }

    /// Branch containing the circle point x.
    pub(crate) fn branch_of(&self, x: f64) -> usize {
        match self.cuts.iter().rposition(|&c| c <= x) {
            Some(w) => w,
            None => self.degree - 1, // x < c_0: wrapped tail of the last branch
        }
    }

    /// Right endpoint of branch w in lift coordinates.
    pub(crate) fn branch_end(&self, w: usize) -> f64 {
        if w + 1 < self.degree {
            self.cuts[w + 1]
        } else {
            self.cuts[0] + 1.0
        }
    }

    /// Inverse of branch w: the x in [cuts[w], branch_end(w)] (lift
    /// coordinates, may exceed 1 on the wrapped branch) with L(x) = y + m_w.
    pub fn invert(&self, w: usize, y: f64) -> f64 {
        let target = self.offsets[w] as f64 + y;
        let m = &self.map;
        solve_increasing(
            |x| {
                let jet = m.jet(x);
                (jet.t, jet.t1)
            },
            self.cuts[w],
            self.branch_end(w),
            target,
        )
    }

    /// Iteration cap for the contraction phase: enough composite steps to
    /// shrink any seed error below 2^-60 at the certified rate.
    fn contraction_cap(&self, n: u32) -> usize {
        (60.0 / self.expansion.log2()).ceil() as usize + n as usize
    }

    /// The unique x with T^k(x) in branch itinerary[k] for all k and
    /// T^n(x) = x. `tol` controls the contraction stopping rule; the Newton
    /// polish afterwards is unconditional.
    pub fn periodic_point(&self, itinerary: &[u8], tol: f64) -> Result<f64> {
        self.solve_itinerary(itinerary, tol).map(|(x, _)| x)
    }

    pub(crate) fn solve_itinerary(&self, itinerary: &[u8], tol: f64) -> Result<(f64, f64)> {
        let n = itinerary.len() as u32;
        let cap = self.contraction_cap(n);
        let mut x = 0.5;
        let mut converged = false;
        for _ in 0..cap {
            let mut z = x;
            for &w in itinerary.iter().rev() {
                // fold to [0, 1] keeping the closed right endpoint: reducing
                // an exact 1.0 to 0.0 here would teleport the iterate across
                // the branch and the contraction would dither at the
                // boundary fixed point instead of converging
                z = self.invert(w as usize, z);
                if z > 1.0 {
                    z -= 1.0;
                }
            }
            let step = circle_dist(z, x);
            // keep the closed-interval representative: reducing an exact 1.0
            // to 0.0 between passes would restart the contraction from the
            // other symbolic address of the boundary point
            x = z;
            if step < tol {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::ContractionStalled { cap });
        }
        Ok(self.polish(mod1(x), n as usize))
    }

    /// Newton-polish a near-fixed point of T^n and report (x, residual).
    fn polish(&self, mut x: f64, n: usize) -> (f64, f64) {
        // plain f64 rounds
        for _ in 0..2 {
            let (r, dn) = self.orbit_residual(x, n);
            if r == 0.0 {
                break;
            }
            x = mod1(x - r / (dn - 1.0));
        }
        // one corrector step against the twice-precision orbit, then report
        // the twice-precision residual at the final point
        let (_, dn) = self.orbit_residual(x, n);
        let r = self.residual_dd(x, n);
        let x2 = mod1(x - r / (dn - 1.0));
        if x2 != x {
            let r2 = self.residual_dd(x2, n);
            if r2.abs() < r.abs() {
                return (x2, r2.abs());
            }
        }
        (x, r.abs())
    }

    /// Residual and (T^n)' of the mod-1 orbit in plain f64.
    fn orbit_residual(&self, x: f64, n: usize) -> (f64, f64) {
        let mut y = x;
        let mut dn = 1.0;
        for _ in 0..n {
            let jet = self.map.jet(y);
            dn *= jet.t1;
            y = mod1(jet.t);
        }
        (circle_diff(y, x), dn)
    }

    /// Signed circle residual of the orbit evaluated in double-double.
    fn residual_dd(&self, x: f64, n: usize) -> f64 {
        let mut y = Dd::from(x);
        for _ in 0..n {
            y = self.map.lift_dd(y);
            let m = y.value().floor();
            y = y.add_f64(-m);
        }
        let r = y.add_f64(-x).value();
        r - r.round()
    }
}

/// Enumerate all fixed points of T_tau^n in itinerary-lexicographic order.
///
/// Itineraries are solved independently (data-parallel), duplicates closer
/// than 1e-9 in the circle metric are merged keeping the lexicographically
/// first itinerary, and the final count must equal degree^n - 1.
pub fn enumerate_fixed_points(
    family: &TrigMapFamily,
    tau: f64,
    n: u32,
    cap: u64,
) -> Result<FixedPointSet> {
    let d = family.degree() as u64;
    let size = d
        .checked_pow(n)
        .filter(|&s| s <= cap)
        .ok_or(Error::PeriodTooLarge {
            n,
            size: d.checked_pow(n).unwrap_or(u64::MAX),
            cap,
        })?;
    let partition = BranchPartition::new(family, tau)?;
    let nn = n as usize;

    let solved: Vec<(f64, f64)> = (0..size as usize)
        .into_par_iter()
        .map(|idx| {
            let itin = itinerary_digits(idx as u64, d, nn);
            partition.solve_itinerary(&itin, 1e-13)
        })
        .collect::<Result<Vec<_>>>()?;

    // sort by position, cluster within the merge tolerance
    let mut order: Vec<usize> = (0..solved.len()).collect();
    order.sort_by(|&a, &b| solved[a].0.total_cmp(&solved[b].0));

    let mut clusters: Vec<usize> = Vec::with_capacity(size as usize); // representative index
    let mut last_x = f64::NEG_INFINITY;
    for &i in &order {
        let x = solved[i].0;
        if !clusters.is_empty() && x - last_x < MERGE_TOL {
            let rep = clusters.last_mut().unwrap();
            if i < *rep {
                *rep = i;
            }
        } else {
            clusters.push(i);
        }
        last_x = x;
    }
    // wrap-around pair: last cluster against the first
    if clusters.len() > 1 {
        let first = clusters[0];
        let last = *clusters.last().unwrap();
        if circle_dist(solved[first].0, solved[last].0) < MERGE_TOL {
            let rep = first.min(last);
            clusters[0] = rep;
            clusters.pop();
        }
    }

    let expected = size - 1;
    if clusters.len() as u64 != expected {
        return Err(Error::CountMismatch {
            n,
            found: clusters.len(),
            expected,
        });
    }

    clusters.sort_unstable();
    let points = clusters
        .into_iter()
        .map(|idx| FixedPointRecord {
            index: idx as u64,
            itinerary: itinerary_digits(idx as u64, d, nn),
            x: solved[idx].0,
            residual: solved[idx].1,
        })
        .collect();

    Ok(FixedPointSet {
        period: n,
        tau,
        points,
    })
}

/// Branch digits of an itinerary rank, most significant first.
fn itinerary_digits(mut idx: u64, d: u64, n: usize) -> Vec<u8> {
    let mut out = vec![0u8; n];
    for k in (0..n).rev() {
        out[k] = (idx % d) as u8;
        idx /= d;
    }
    out
}
