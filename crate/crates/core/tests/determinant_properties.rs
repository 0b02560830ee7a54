//! Series-level properties of the determinant: agreement with an independent
//! power-series exponential, recursion residuals, truncation stability of the
//! zero, and simplicity of the zero on the standard weights.

use approx::assert_relative_eq;
use orbitdet::{
    det_coefficients, det_series, trace_b, Harmonic, Observable, TauPoly, TraceData,
    TrigMapFamily, Weight, DEFAULT_ENUM_CAP,
};
use proptest::prelude::*;

const TWO_PI: f64 = std::f64::consts::TAU;

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

/// Independent oracle: coefficients of exp(w(z)) for a polynomial w,
/// truncated at degree n_max, via the plain Taylor sum of exp.
fn poly_exp(w: &[f64], n_max: usize) -> Vec<f64> {
    let mut result = vec![0.0; n_max + 1];
    result[0] = 1.0;
    let mut power = vec![0.0; n_max + 1]; // w^k, truncated
    power[0] = 1.0;
    let mut factorial = 1.0;
    for k in 1..=n_max {
        // power <- power * w (truncated product)
        let mut next = vec![0.0; n_max + 1];
        for i in 0..=n_max {
            if power[i] == 0.0 {
                continue;
            }
            for (j, &wj) in w.iter().enumerate() {
                if i + j <= n_max {
                    next[i + j] += power[i] * wj;
                }
            }
        }
        power = next;
        factorial *= k as f64;
        for i in 0..=n_max {
            result[i] += power[i] / factorial;
        }
    }
    result
}

/// exp-log consistency: the recursion must reproduce the power-series
/// exponential of -sum b_n z^n / n, compared term-by-term and at a point z
/// inside the gate sum |b_n z^n| / n < 1/2.
fn check_exp_log(b: &[f64], z: f64) {
    let n_max = b.len();
    let gate: f64 = (1..=n_max)
        .map(|n| (b[n - 1] * z.powi(n as i32) / n as f64).abs())
        .sum();
    assert!(gate < 0.5, "test point violates its own gate: {gate}");

    let a = det_coefficients(b, n_max);
    let mut w = vec![0.0; n_max + 1];
    for n in 1..=n_max {
        w[n] = -b[n - 1] / n as f64;
    }
    let oracle = poly_exp(&w, n_max);

    let eval = |c: &[f64]| c.iter().rev().fold(0.0, |acc, &v| acc * z + v);
    let diff = (eval(&a) - eval(&oracle)).abs();
    assert!(diff < 1e-12, "series disagree at z={z}: {diff:e}");
    for n in 0..=n_max {
        assert!(
            (a[n] - oracle[n]).abs() < 1e-12 * a[n].abs().max(1.0),
            "coefficient {n}: {} vs {}",
            a[n],
            oracle[n]
        );
    }
}

#[test]
fn exp_log_consistency_unit_traces() {
    check_exp_log(&[1.0; 12], 0.35);
}

#[test]
fn exp_log_consistency_trace_pipeline() {
    let fam = perturbed();
    let g = Observable::cosine(1, 1.0);
    let b: Vec<f64> = (1..=10u32)
        .map(|n| {
            trace_b(
                &fam,
                0.05,
                Weight::Srb {
                    observable: &g,
                    u: 0.3,
                },
                n,
                DEFAULT_ENUM_CAP,
            )
            .unwrap()
        })
        .collect();
    check_exp_log(&b, 0.3);
}

#[test]
fn zero_is_stable_under_truncation_order() {
    let fam = perturbed();
    let g = Observable::cosine(1, 1.0);
    for tau in [0.0, 0.05] {
        let z10 = det_series(&fam, &g, tau, 10, DEFAULT_ENUM_CAP)
            .unwrap()
            .find_smallest_zero()
            .unwrap()
            .z_star;
        let z12 = det_series(&fam, &g, tau, 12, DEFAULT_ENUM_CAP)
            .unwrap()
            .find_smallest_zero()
            .unwrap()
            .z_star;
        assert!((z10 - z12).abs() < 1e-9, "tau={tau}: {z10} vs {z12}");
    }
}

#[test]
fn srb_weight_zero_sits_at_one_with_clear_slope() {
    let fam = perturbed();
    let g = Observable::cosine(1, 1.0);
    for tau in [0.0, 0.05, -0.05] {
        let series = det_series(&fam, &g, tau, 12, DEFAULT_ENUM_CAP).unwrap();
        let zero = series.find_smallest_zero().unwrap();
        assert!((zero.z_star - 1.0).abs() < 1e-10, "tau={tau}: {}", zero.z_star);
        assert!(zero.slope.abs() > 1e-3, "tau={tau}: slope {}", zero.slope);
    }
}

#[test]
fn pressure_of_srb_weight_vanishes() {
    // P(-log T') = 0 for any expanding map; cross-checked against the Ulam
    // oracle's leading eigenvalue implicitly (density exists, mean 1)
    let fam = perturbed();
    let g = Observable::cosine(1, 1.0);
    let series = det_series(&fam, &g, 0.05, 12, DEFAULT_ENUM_CAP).unwrap();
    let zero = series.find_smallest_zero().unwrap();
    assert!(zero.pressure.abs() < 1e-10);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn recursion_residual_holds_for_random_traces(
        b in proptest::collection::vec(-2.0f64..2.0, 8)
    ) {
        let rows: Vec<TraceData> = b
            .iter()
            .map(|&v| TraceData { b: v, bu: 0.0, btau: 0.0, butau: 0.0 })
            .collect();
        let series = orbitdet::det_coefficient_partials(&rows, 8);
        prop_assert_eq!(series.a[0], 1.0);
        for n in 1..=8 {
            let res = series.recursion_residual(n);
            let scale = (series.a[n].abs() * n as f64).max(1.0);
            prop_assert!(res < 1e-12 * scale, "n={}: {:e}", n, res);
        }
    }

    #[test]
    fn exp_log_for_random_small_traces(
        b in proptest::collection::vec(-1.0f64..1.0, 8),
        z in 0.05f64..0.45,
    ) {
        let gate: f64 = (1..=8).map(|n| (b[n-1] * z.powi(n as i32) / n as f64).abs()).sum();
        prop_assume!(gate < 0.5);
        let a = det_coefficients(&b, 8);
        let mut w = vec![0.0; 9];
        for n in 1..=8 {
            w[n] = -b[n - 1] / n as f64;
        }
        let oracle = poly_exp(&w, 8);
        let eval = |c: &[f64]| c.iter().rev().fold(0.0, |acc, &v| acc * z + v);
        prop_assert!((eval(&a) - eval(&oracle)).abs() < 1e-12);
    }
}

#[test]
fn plain_and_partial_recursions_agree() {
    let fam = perturbed();
    let g = Observable::cosine(1, 1.0);
    let series = det_series(&fam, &g, 0.05, 10, DEFAULT_ENUM_CAP).unwrap();
    let b: Vec<f64> = series.b_table.iter().map(|r| r.b).collect();
    let a = det_coefficients(&b, 10);
    for (plain, with_partials) in a.iter().zip(&series.a) {
        assert_relative_eq!(with_partials, plain, epsilon = 1e-15);
    }
}
