//! The truncated dynamical determinant, its coefficient recursions, and the
//! location of its smallest positive zero.
//!
//! With b_n the weighted traces, the determinant d(z) = sum a_n z^n satisfies
//!
//! ```text
//! a_0 = 1,   a_n = -(1/n) sum_{k=0}^{n-1} a_k b_{n-k}
//! ```
//!
//! and the same convolution shape propagates the (u, tau)-partials of b_n to
//! the partials of a_n (all partials of a_0 vanish). The smallest positive
//! zero is exp(-pressure). Truncation is certified empirically: a geometric
//! fit of the final coefficients gives a tail estimate, and the zero finder
//! refuses regions where that estimate exceeds 1e-8.

use crate::error::{Error, Result};
use crate::kahan::KahanSum;
use crate::traces::TraceData;

/// Tail estimates above this are outside the validated disc for zero-finding.
const ZERO_FINDER_TAIL_LIMIT: f64 = 1e-8;

/// Coefficients below this (in a whole fit window) count as converged noise.
const CONVERGED_FLOOR: f64 = 1e-13;

/// Truncated determinant coefficients and their partials at (u, tau) = (0, 0).
#[derive(Debug, Clone)]
pub struct DetSeries {
    pub n_max: usize,
    /// a_0..a_n_max.
    pub a: Vec<f64>,
    /// d/du a_n.
    pub au: Vec<f64>,
    /// d/dtau a_n.
    pub atau: Vec<f64>,
    /// d2/du dtau a_n.
    pub autau: Vec<f64>,
    /// The trace rows the recursion consumed (b_table[i] is n = i + 1).
    pub b_table: Vec<TraceData>,
}

/// All determinant values needed by the response formulas, at one z.
#[derive(Debug, Clone, Copy)]
pub struct DetValues {
    pub d: f64,
    pub dz: f64,
    pub du: f64,
    pub dtau: f64,
    pub dutau: f64,
    pub dtauz: f64,
}

/// A located determinant zero.
#[derive(Debug, Clone, Copy)]
pub struct DetZero {
    pub z_star: f64,
    /// -ln z_star.
    pub pressure: f64,
    /// d_z at the zero (simplicity diagnostic).
    pub slope: f64,
}

/// a_0..a_n_max from the plain trace values (b[i] is b_{i+1}).
pub fn det_coefficients(b: &[f64], n_max: usize) -> Vec<f64> {
    assert!(b.len() >= n_max, "need {n_max} trace values, got {}", b.len());
    let mut a = vec![0.0; n_max + 1];
    a[0] = 1.0;
    for n in 1..=n_max {
        let mut conv = KahanSum::new();
        for k in 0..n {
            conv.add(a[k] * b[n - k - 1]);
        }
        a[n] = -conv.value() / n as f64;
    }
    a
}

/// Full coefficient series with partials, from the trace rows.
pub fn det_coefficient_partials(b_table: &[TraceData], n_max: usize) -> DetSeries {
    assert!(
        b_table.len() >= n_max,
        "need {n_max} trace rows, got {}",
        b_table.len()
    );
    let mut a = vec![0.0; n_max + 1];
    let mut au = vec![0.0; n_max + 1];
    let mut atau = vec![0.0; n_max + 1];
    let mut autau = vec![0.0; n_max + 1];
    a[0] = 1.0; // all partials of a_0 are 0

    for n in 1..=n_max {
        let mut sa = KahanSum::new();
        let mut su = KahanSum::new();
        let mut st = KahanSum::new();
        let mut sut = KahanSum::new();
        for k in 0..n {
            let row = &b_table[n - k - 1];
            sa.add(a[k] * row.b);
            su.add(au[k] * row.b + a[k] * row.bu);
            st.add(atau[k] * row.b + a[k] * row.btau);
            sut.add(autau[k] * row.b + au[k] * row.btau + atau[k] * row.bu + a[k] * row.butau);
        }
        let scale = -1.0 / n as f64;
        a[n] = scale * sa.value();
        au[n] = scale * su.value();
        atau[n] = scale * st.value();
        autau[n] = scale * sut.value();
    }

    DetSeries {
        n_max,
        a,
        au,
        atau,
        autau,
        b_table: b_table[..n_max].to_vec(),
    }
}

impl DetSeries {
    /// Horner evaluation of d and the five derivative series at z.
    pub fn eval(&self, z: f64) -> DetValues {
        DetValues {
            d: horner(&self.a, z),
            dz: horner_deriv(&self.a, z),
            du: horner(&self.au, z),
            dtau: horner(&self.atau, z),
            dutau: horner(&self.autau, z),
            dtauz: horner_deriv(&self.atau, z),
        }
    }

    /// |n a_n + sum_{j<n} a_j b_{n-j}|, the defining identity of a_n.
    pub fn recursion_residual(&self, n: usize) -> f64 {
        assert!(n >= 1 && n <= self.n_max);
        let mut conv = KahanSum::new();
        for j in 0..n {
            conv.add(self.a[j] * self.b_table[n - j - 1].b);
        }
        (n as f64 * self.a[n] + conv.value()).abs()
    }

    /// Geometric tail fit of the raw coefficients |a_n|.
    pub fn coefficient_tail(&self) -> GeomTail {
        GeomTail::fit(&self.a)
    }

    /// Upper end of the zero-scan range before tail clipping.
    pub fn z_cap(&self) -> f64 {
        // a_1 = -b_1 exactly, so |a_1| recovers the first trace
        let b1 = self.a.get(1).map(|v| v.abs()).unwrap_or(0.0);
        if b1 > 0.0 {
            4.0 * (1.0 / b1 + 1.0)
        } else {
            1e6
        }
    }

    /// Scan (0, z_cap] for the smallest sign change of d, then polish.
    ///
    /// The scan walks a geometric grid, refuses the region where the fitted
    /// coefficient tail exceeds 1e-8, and the polish is a bracketed Newton
    /// iteration that degrades to bisection whenever a step leaves the
    /// bracket.
    pub fn find_smallest_zero(&self) -> Result<DetZero> {
        let tail = self.coefficient_tail();
        let z_cap = self.z_cap();
        let z_min = z_cap * 1e-9;
        const STEPS: usize = 2048;
        let ratio = (z_cap / z_min).powf(1.0 / (STEPS as f64));

        let mut prev_z = 0.0; // d(0) = a_0 = 1
        let mut prev_d = self.a[0];
        let mut z = z_min;
        let mut bracket = None;
        let mut last_valid = 0.0_f64;
        for _ in 0..=STEPS {
            let zc = z.min(z_cap);
            if tail.tail_at(zc, self.n_max + 1) > ZERO_FINDER_TAIL_LIMIT {
                break;
            }
            last_valid = zc;
            let d = self.eval(zc).d;
            if d == 0.0 || d.signum() != prev_d.signum() {
                bracket = Some((prev_z, prev_d, zc, d));
                break;
            }
            prev_z = zc;
            prev_d = d;
            if zc >= z_cap {
                break;
            }
            z *= ratio;
        }

        let (mut lo, lo_d, mut hi, _) = bracket.ok_or(Error::ZeroNotBracketed {
            z_cap: if last_valid > 0.0 { last_valid } else { z_cap },
        })?;
        let lo_sign = lo_d.signum();

        let mut z = 0.5 * (lo + hi);
        let mut slope = self.eval(z).dz;
        for _ in 0..200 {
            let v = self.eval(z);
            slope = v.dz;
            if v.d == 0.0 {
                break;
            }
            if v.d.signum() == lo_sign {
                lo = z;
            } else {
                hi = z;
            }
            let mut next = z - v.d / v.dz;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            let step = (next - z).abs();
            z = next;
            if step <= f64::EPSILON * z.abs() && v.d.abs() < 1e-13 {
                break;
            }
            if hi - lo <= f64::EPSILON * hi {
                break;
            }
        }

        Ok(DetZero {
            z_star: z,
            pressure: -z.ln(),
            slope,
        })
    }
}

fn horner(coeffs: &[f64], z: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * z + c)
}

/// Horner evaluation of sum n c_n z^{n-1}.
fn horner_deriv(coeffs: &[f64], z: f64) -> f64 {
    let mut acc = 0.0;
    for n in (1..coeffs.len()).rev() {
        acc = acc * z + n as f64 * coeffs[n];
    }
    acc
}

/// Empirical geometric model |t_n| ~ prefactor * rate^n fitted on the last
/// four series terms.
///
/// Windows that sit entirely below 1e-13 count as converged (rate 0); a
/// window that cannot support a two-point fit is reported unvalidated
/// (rate 1), which makes every tail estimate fail closed.
#[derive(Debug, Clone, Copy)]
pub struct GeomTail {
    pub rate: f64,
    pub prefactor: f64,
}

impl GeomTail {
    pub fn fit(terms: &[f64]) -> Self {
        let len = terms.len();
        let w = len.min(4);
        if w == 0 {
            return Self {
                rate: 0.0,
                prefactor: 0.0,
            };
        }
        let window = &terms[len - w..];
        if window.iter().all(|t| t.abs() < CONVERGED_FLOOR) {
            return Self {
                rate: 0.0,
                prefactor: 0.0,
            };
        }
        let pts: Vec<(f64, f64)> = window
            .iter()
            .enumerate()
            .filter(|(_, t)| t.abs() > 0.0)
            .map(|(i, t)| ((len - w + i) as f64, t.abs().ln()))
            .collect();
        if pts.len() < 2 {
            return Self {
                rate: 1.0,
                prefactor: window.iter().fold(0.0, |m, t| m.max(t.abs())),
            };
        }
        let m = pts.len() as f64;
        let sx: f64 = pts.iter().map(|p| p.0).sum();
        let sy: f64 = pts.iter().map(|p| p.1).sum();
        let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
        let slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
        let intercept = (sy - slope * sx) / m;
        Self {
            rate: slope.exp(),
            prefactor: intercept.exp(),
        }
    }

    /// Estimated sum_{m >= n_next} |t_m| z^m under the fitted model.
    pub fn tail_at(&self, z: f64, n_next: usize) -> f64 {
        if self.prefactor == 0.0 {
            return 0.0;
        }
        let q = self.rate * z.abs();
        if q >= 1.0 {
            return f64::INFINITY;
        }
        self.prefactor * q.powi(n_next as i32) / (1.0 - q)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn unit_traces_give_one_minus_z() {
        // b_n = 1 for all n: d = exp(-sum z^n/n) = 1 - z
        let b = vec![1.0; 12];
        let a = det_coefficients(&b, 12);
        assert_eq!(a[0], 1.0);
        assert_eq!(a[1], -1.0);
        for n in 2..=12 {
            assert!(a[n].abs() < 1e-15, "a_{n} = {:e}", a[n]);
        }
    }

    #[test]
    fn doubling_zero_weight_gives_one_minus_two_z() {
        let b: Vec<f64> = (1..=12).map(|n| 2f64.powi(n)).collect();
        let a = det_coefficients(&b, 12);
        assert_eq!(a[1], -2.0);
        for n in 2..=12 {
            assert!(a[n].abs() < 1e-11, "a_{n} = {:e}", a[n]);
        }
    }

    #[test]
    fn hand_expanded_example() {
        // b = (1, 2, 3): exp(-(z + z^2 + z^3)) = 1 - z - z^2/2 - z^3/6 + ...
        let a = det_coefficients(&[1.0, 2.0, 3.0], 3);
        assert_relative_eq!(a[1], -1.0, epsilon = 1e-15);
        assert_relative_eq!(a[2], -0.5, epsilon = 1e-15);
        assert_relative_eq!(a[3], -1.0 / 6.0, epsilon = 1e-15);
    }

    fn rows_constant_g(c: f64, n_max: usize) -> Vec<TraceData> {
        // doubling with g == c: b_n = 1, bu_n = -n c, btau = butau = 0
        (1..=n_max)
            .map(|n| TraceData {
                b: 1.0,
                bu: -(n as f64) * c,
                btau: 0.0,
                butau: 0.0,
            })
            .collect()
    }

    #[test]
    fn partials_hand_recursion() {
        let c = 1.3;
        let s = det_coefficient_partials(&rows_constant_g(c, 6), 6);
        assert_relative_eq!(s.au[1], c, epsilon = 1e-15);
        assert!(s.au[2].abs() < 1e-15, "au_2 = {:e}", s.au[2]);
        for n in 1..=6 {
            assert_eq!(s.atau[n], 0.0);
            assert_eq!(s.autau[n], 0.0);
        }
    }

    #[test]
    fn recursion_residual_invariant() {
        let rows: Vec<TraceData> = (1..=10)
            .map(|n| TraceData {
                b: 1.0 + 0.3 / n as f64,
                bu: 0.2 * n as f64,
                btau: -0.1,
                butau: 0.05,
            })
            .collect();
        let s = det_coefficient_partials(&rows, 10);
        for n in 1..=10 {
            let res = s.recursion_residual(n);
            let scale = (s.a[n].abs() * n as f64).max(1.0);
            assert!(res < 1e-12 * scale, "n={n}: {res:e}");
        }
    }

    #[test]
    fn eval_doubling() {
        let b = [1.0; 12];
        let a = det_coefficients(&b, 12);
        let s = DetSeries {
            n_max: 12,
            a,
            au: vec![0.0; 13],
            atau: vec![0.0; 13],
            autau: vec![0.0; 13],
            b_table: b.iter().map(|&v| TraceData { b: v, bu: 0.0, btau: 0.0, butau: 0.0 }).collect(),
        };
        let v = s.eval(1.0);
        assert!(v.d.abs() < 1e-14);
        assert_relative_eq!(v.dz, -1.0, epsilon = 1e-13);
    }

    #[test]
    fn zero_of_doubling_srb_weight() {
        let rows: Vec<TraceData> = [1.0; 12]
            .iter()
            .map(|&v| TraceData { b: v, bu: 0.0, btau: 0.0, butau: 0.0 })
            .collect();
        let s = det_coefficient_partials(&rows, 12);
        let z = s.find_smallest_zero().unwrap();
        assert_relative_eq!(z.z_star, 1.0, epsilon = 1e-12);
        assert!(z.pressure.abs() < 1e-12);
        assert!(z.slope.abs() > 1e-3);
    }

    #[test]
    fn zero_of_doubling_zero_weight() {
        let rows: Vec<TraceData> = (1..=12)
            .map(|n| TraceData {
                b: 2f64.powi(n),
                bu: 0.0,
                btau: 0.0,
                butau: 0.0,
            })
            .collect();
        let s = det_coefficient_partials(&rows, 12);
        let z = s.find_smallest_zero().unwrap();
        assert_relative_eq!(z.z_star, 0.5, epsilon = 1e-11);
        assert_relative_eq!(z.pressure, std::f64::consts::LN_2, epsilon = 1e-10);
    }

    #[test]
    fn no_zero_reported_when_series_has_none() {
        // b_n = (-1)^n: d = exp(-log... ) stays positive on the real axis
        let rows: Vec<TraceData> = (1..=12)
            .map(|n| TraceData {
                b: if n % 2 == 0 { 1.0 } else { -1.0 },
                bu: 0.0,
                btau: 0.0,
                butau: 0.0,
            })
            .collect();
        let s = det_coefficient_partials(&rows, 12);
        assert!(matches!(
            s.find_smallest_zero(),
            Err(Error::ZeroNotBracketed { .. })
        ));
    }

    #[test]
    fn tail_fit_zero_series() {
        let t = GeomTail::fit(&[1.0, -2.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(t.rate, 0.0);
        assert_eq!(t.tail_at(1.0, 7), 0.0);
    }

    #[test]
    fn tail_fit_geometric_series() {
        let terms: Vec<f64> = (0..10).map(|n| 0.5f64.powi(n)).collect();
        let t = GeomTail::fit(&terms);
        assert_relative_eq!(t.rate, 0.5, max_relative = 1e-10);
        // true tail at z=1 from n=10: 0.5^10/(1-0.5)
        assert_relative_eq!(t.tail_at(1.0, 10), 0.5f64.powi(10) * 2.0, max_relative = 1e-9);
    }
}
