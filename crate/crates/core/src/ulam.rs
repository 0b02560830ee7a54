//! Independent brute-force validators.
//!
//! Nothing here touches the determinant pipeline: the Ulam matrix
//! discretizes the transfer operator directly (entries are exact interval
//! lengths obtained by inverse-branch images of bin endpoints, not Monte
//! Carlo), its stationary density comes from plain power iteration, and the
//! periodic-point oracle is a sign-change scan of L^n(x) - x over a grid.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kahan::KahanSum;
use crate::map::{mod1, Observable, TrigMapFamily};
use crate::periodic::BranchPartition;

const POWER_ITERATION_TOL: f64 = 1e-13;
const POWER_ITERATION_CAP: usize = 100_000;

/// Row-stochastic discretization of the transfer operator on m uniform bins.
///
/// Row i holds the sparse entries P[i][j] = |B_i intersect T^{-1} B_j| * m
/// with B_i = [i/m, (i+1)/m).
#[derive(Debug, Clone)]
pub struct UlamModel {
    m: usize,
    tau: f64,
    rows: Vec<Vec<(u32, f64)>>,
}

impl UlamModel {
    /// Assemble the matrix by branch inversion of every bin-edge preimage.
    pub fn build(family: &TrigMapFamily, tau: f64, m: usize) -> Result<Self> {
        if m < 2 {
            return Err(Error::BadBinCount { m });
        }
        let partition = BranchPartition::new(family, tau)?;
        let rows: Vec<Vec<(u32, f64)>> = (0..m)
            .into_par_iter()
            .map(|i| build_row(&partition, i, m))
            .collect();
        Ok(Self { m, tau, rows })
    }

    pub fn bins(&self) -> usize {
        self.m
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn row(&self, i: usize) -> &[(u32, f64)] {
        &self.rows[i]
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        KahanSum::sum_iter(self.rows[i].iter().map(|&(_, w)| w))
    }

    /// Left fixed vector of P by power iteration, normalized to mean 1.
    pub fn stationary_density(&self) -> Result<Vec<f64>> {
        let m = self.m;
        let mut rho = vec![1.0; m];
        let mut next = vec![0.0; m];
        let mut residual = f64::INFINITY;
        for _ in 0..POWER_ITERATION_CAP {
            next.iter_mut().for_each(|v| *v = 0.0);
            for (i, row) in self.rows.iter().enumerate() {
                let r = rho[i];
                for &(j, w) in row {
                    next[j as usize] += r * w;
                }
            }
            let mean = KahanSum::sum_iter(next.iter().copied()) / m as f64;
            next.iter_mut().for_each(|v| *v /= mean);
            residual = rho
                .iter()
                .zip(&next)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            std::mem::swap(&mut rho, &mut next);
            if residual < POWER_ITERATION_TOL {
                return Ok(rho);
            }
        }
        Err(Error::PowerIterationStalled {
            residual,
            iters: POWER_ITERATION_CAP,
            tol: POWER_ITERATION_TOL,
        })
    }

    /// Average of the observable against the stationary density
    /// (bin-midpoint quadrature).
    pub fn srb_average(&self, observable: &Observable) -> Result<f64> {
        let rho = self.stationary_density()?;
        Ok(self.srb_average_with(&rho, observable))
    }

    /// Same, reusing an already computed density.
    pub fn srb_average_with(&self, density: &[f64], observable: &Observable) -> f64 {
        let m = self.m as f64;
        let mut acc = KahanSum::new();
        for (i, &r) in density.iter().enumerate() {
            let mid = (i as f64 + 0.5) / m;
            acc.add(r * observable.eval(mid) / m);
        }
        acc.value()
    }
}

fn build_row(partition: &BranchPartition, i: usize, m: usize) -> Vec<(u32, f64)> {
    let mf = m as f64;
    let lo = i as f64 / mf;
    let hi = (i + 1) as f64 / mf;
    let map = partition.map();
    let degree = partition.degree();
    let cuts = partition.cuts();

    // split the bin at interior branch cuts
    let mut bounds = vec![lo];
    for &c in cuts {
        if c > lo && c < hi {
            bounds.push(c);
        }
    }
    bounds.push(hi);

    let mut entries: Vec<(u32, f64)> = Vec::with_capacity(4);
    for pair in bounds.windows(2) {
        let (p, q) = (pair[0], pair[1]);
        if q <= p {
            continue;
        }
        let mid = 0.5 * (p + q);
        let w = partition.branch_of(mid);
        // wrapped tail of the last branch lives at lift coordinates x + 1
        let shift = if w == degree - 1 && mid < cuts[0] { 1.0 } else { 0.0 };
        let (pl, ql) = (p + shift, q + shift);
        let off = partition.offsets()[w] as f64;
        let y_lo = (map.lift(pl) - off).clamp(0.0, 1.0);
        let y_hi = (map.lift(ql) - off).clamp(0.0, 1.0);
        if y_hi <= y_lo {
            continue;
        }

        let mut j = ((y_lo * mf).floor() as i64).clamp(0, m as i64 - 1) as usize;
        // reuse each solved boundary so sub-lengths telescope exactly
        let mut x_prev = pl;
        loop {
            let edge = (j + 1) as f64 / mf;
            let (sub_hi, x_next) = if edge < y_hi {
                (edge, partition.invert(w, edge))
            } else {
                (y_hi, ql)
            };
            let len = x_next - x_prev;
            if len > 0.0 {
                entries.push((j as u32, len * mf));
            }
            x_prev = x_next;
            if sub_hi >= y_hi || j + 1 >= m {
                break;
            }
            j += 1;
        }
    }

    entries.sort_by_key(|&(j, _)| j);
    entries.dedup_by(|b, a| {
        if a.0 == b.0 {
            a.1 += b.1;
            true
        } else {
            false
        }
    });
    entries
}

/// Central finite difference of the Ulam average across tau = +-h.
pub fn ulam_response_fd(
    family: &TrigMapFamily,
    observable: &Observable,
    h: f64,
    m: usize,
) -> Result<f64> {
    let plus = UlamModel::build(family, h, m)?.srb_average(observable)?;
    let minus = UlamModel::build(family, -h, m)?.srb_average(observable)?;
    Ok((plus - minus) / (2.0 * h))
}

/// Grid-scan periodic-point oracle: all x with L^n(x) = x + integer, found as
/// sign changes of L^n(x) - x against each integer level, bisected to 1e-12
/// and polished with one Newton step.
pub fn brute_fixed_points(
    family: &TrigMapFamily,
    tau: f64,
    n: u32,
    grid: usize,
) -> Result<Vec<f64>> {
    let d = family.degree() as u64;
    let size = d.checked_pow(n).ok_or(Error::PeriodTooLarge {
        n,
        size: u64::MAX,
        cap: u64::MAX,
    })?;
    if size > (grid / 10) as u64 {
        return Err(Error::GridTooCoarse { grid, size });
    }
    let map = family.at(tau)?;

    // L^n(x) - x as (integer, fraction): exact integer carries keep precision
    let orbit_value = |x: f64| -> (i64, f64) {
        let mut y = x;
        let mut carry = 0i64;
        for _ in 0..n {
            let ly = map.lift(y);
            let f = ly.floor();
            carry = carry * family.degree() as i64 + f as i64;
            y = ly - f;
        }
        (carry, y - x)
    };
    let level_value = |x: f64, j: i64| -> f64 {
        let (c, frac) = orbit_value(x);
        (c - j) as f64 + frac
    };
    let slope = |x: f64| -> f64 {
        let mut y = x;
        let mut dn = 1.0;
        for _ in 0..n {
            dn *= map.deriv(y);
            y = map.circle(y);
        }
        dn
    };

    let gf = grid as f64;
    let mut roots = Vec::with_capacity(size as usize);
    let mut prev = orbit_value(0.0);
    let mut prev_x = 0.0;
    for i in 1..=grid {
        let x = if i == grid { 1.0 } else { i as f64 / gf };
        let cur = orbit_value(x);
        // integers j with F(prev_x) <= j < F(x), where F = carry + frac and
        // frac lies in [-1, 1); frac can be exactly -1 at the right endpoint
        let j_lo = if prev.1 == -1.0 {
            prev.0 - 1
        } else if prev.1 <= 0.0 {
            prev.0
        } else {
            prev.0 + 1
        };
        let j_hi = if cur.1 == -1.0 {
            cur.0 - 2
        } else if cur.1 > 0.0 {
            cur.0
        } else {
            cur.0 - 1
        };
        for j in j_lo..=j_hi {
            let (mut lo, mut hi) = (prev_x, x);
            while hi - lo > 1e-13 {
                let mid = 0.5 * (lo + hi);
                if level_value(mid, j) <= 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let mut root = 0.5 * (lo + hi);
            for _ in 0..2 {
                let r = level_value(root, j);
                let next = (root - r / (slope(root) - 1.0)).clamp(prev_x, x);
                if next == root {
                    break;
                }
                root = next;
            }
            roots.push(mod1(root));
        }
        prev = cur;
        prev_x = x;
    }

    let expected = size - 1;
    if roots.len() as u64 != expected {
        return Err(Error::CrossingCountMismatch {
            found: roots.len(),
            expected,
        });
    }
    Ok(roots)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::{Harmonic, TauPoly};
    use approx::assert_relative_eq;

    const TWO_PI: f64 = std::f64::consts::TAU;

    fn doubling() -> TrigMapFamily {
        TrigMapFamily::linear(2)
    }

    fn tripling() -> TrigMapFamily {
        TrigMapFamily::linear(3)
    }

    fn perturbed() -> TrigMapFamily {
        TrigMapFamily::new(
            2,
            TauPoly::zero(),
            vec![Harmonic {
                sin: TauPoly::new(vec![0.0, 1.0 / TWO_PI]),
                cos: TauPoly::zero(),
            }],
            (-0.1, 0.1),
        )
        .unwrap()
    }

    #[test]
    fn doubling_four_bins() {
        let model = UlamModel::build(&doubling(), 0.0, 4).unwrap();
        // B_0 maps onto B_0 union B_1 with weight 1/2 each
        let row0 = model.row(0);
        assert_eq!(row0.len(), 2);
        assert!((row0[0].1 - 0.5).abs() < 1e-15 && row0[0].0 == 0);
        assert!((row0[1].1 - 0.5).abs() < 1e-15 && row0[1].0 == 1);
        for i in 0..4 {
            assert!((model.row_sum(i) - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn row_sums_and_positivity() {
        for (fam, tau) in [(doubling(), 0.0), (perturbed(), 0.05), (tripling(), 0.0)] {
            let model = UlamModel::build(&fam, tau, 257).unwrap();
            for i in 0..model.bins() {
                assert!((model.row_sum(i) - 1.0).abs() < 1e-12, "row {i}");
                assert!(model.row(i).iter().all(|&(_, w)| w >= 0.0));
            }
        }
    }

    #[test]
    fn linear_maps_have_uniform_density() {
        for fam in [doubling(), tripling()] {
            let model = UlamModel::build(&fam, 0.0, 64).unwrap();
            let rho = model.stationary_density().unwrap();
            for &r in &rho {
                assert_relative_eq!(r, 1.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn perturbed_density_positive_mean_one() {
        let model = UlamModel::build(&perturbed(), 0.05, 1024).unwrap();
        let rho = model.stationary_density().unwrap();
        assert!(rho.iter().all(|&r| r > 0.0));
        let mean = KahanSum::sum_iter(rho.iter().copied()) / 1024.0;
        assert_relative_eq!(mean, 1.0, epsilon = 1e-12);
        // the first-order density response vanishes for this direction, so
        // the bend is O(tau^2): small but resolvable
        let dev = rho.iter().map(|&r| (r - 1.0).abs()).fold(0.0, f64::max);
        assert!(dev > 1e-4, "perturbation should bend the density, dev={dev:e}");
    }

    #[test]
    fn averages_on_doubling() {
        let model = UlamModel::build(&doubling(), 0.0, 4096).unwrap();
        let cos1 = Observable::cosine(1, 1.0);
        assert!(model.srb_average(&cos1).unwrap().abs() < 1e-6);
        let c = Observable::constant(0.77);
        assert_relative_eq!(model.srb_average(&c).unwrap(), 0.77, epsilon = 1e-12);
    }

    #[test]
    fn refinement_consistency() {
        // doubling the resolution keeps the coarse-grained density stable
        let hi = UlamModel::build(&perturbed(), 0.05, 2048).unwrap();
        let lo = UlamModel::build(&perturbed(), 0.05, 1024).unwrap();
        let rho_hi = hi.stationary_density().unwrap();
        let rho_lo = lo.stationary_density().unwrap();
        let mut worst = 0.0_f64;
        for i in 0..1024 {
            let down = 0.5 * (rho_hi[2 * i] + rho_hi[2 * i + 1]);
            worst = worst.max((down - rho_lo[i]).abs());
        }
        assert!(worst < 1e-2, "coarse-grained deviation {worst}");
    }

    #[test]
    fn brute_scan_doubling() {
        let pts = brute_fixed_points(&doubling(), 0.0, 3, 100_000).unwrap();
        assert_eq!(pts.len(), 7);
        for (j, &x) in pts.iter().enumerate() {
            assert_relative_eq!(x, j as f64 / 7.0, epsilon = 1e-12);
        }
        let pts = brute_fixed_points(&doubling(), 0.0, 1, 100_000).unwrap();
        assert_eq!(pts, vec![0.0]);
    }

    #[test]
    fn brute_scan_matches_enumeration() {
        let fam = perturbed();
        let set =
            crate::periodic::enumerate_fixed_points(&fam, 0.05, 8, crate::periodic::DEFAULT_ENUM_CAP)
                .unwrap();
        let pts = brute_fixed_points(&fam, 0.05, 8, 100_000).unwrap();
        assert_eq!(pts.len(), set.points.len());
        for (a, b) in pts.iter().zip(&set.points) {
            assert!((a - b.x).abs() < 1e-10, "{a} vs {}", b.x);
        }
    }

    #[test]
    fn grid_too_coarse_rejected() {
        assert!(matches!(
            brute_fixed_points(&doubling(), 0.0, 10, 5000),
            Err(Error::GridTooCoarse { .. })
        ));
    }
}
