//! Finite-difference validation of the trace partials and the orbit jets,
//! plus the bit-level determinism contract.
//!
//! The derivative formulas are exact closed forms; central differences of the
//! plain traces (re-enumerating the periodic points on each side) are the
//! independent route that pins them down. These run at the re-based point
//! tau0 = 0.05, where none of the partials degenerate to zero.

use approx::assert_relative_eq;
use orbitdet::{
    enumerate_fixed_points, orbit_jet, trace_b, trace_b_partials, Harmonic, Observable, TauPoly,
    TrigMapFamily, Weight, DEFAULT_ENUM_CAP,
};

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

/// L^n(x) in lift coordinates (exact integer carries).
fn lift_n(family: &TrigMapFamily, tau: f64, x: f64, n: u32) -> f64 {
    let map = family.at(tau).unwrap();
    let d = family.degree() as i64;
    let mut y = x;
    let mut carry = 0i64;
    for _ in 0..n {
        let ly = map.lift(y);
        let f = ly.floor();
        carry = carry * d + f as i64;
        y = ly - f;
    }
    y + carry as f64
}

#[test]
fn bu_matches_u_difference() {
    let fam = perturbed();
    let tau0 = 0.05;
    let rebased = fam.rebase(tau0).unwrap();
    let g = Observable::cosine(1, 1.0);
    let h = 1e-5;
    for n in 1..=6u32 {
        let row = trace_b_partials(&rebased, &g, n, DEFAULT_ENUM_CAP).unwrap();
        let plus = trace_b(
            &fam,
            tau0,
            Weight::Srb {
                observable: &g,
                u: h,
            },
            n,
            DEFAULT_ENUM_CAP,
        )
        .unwrap();
        let minus = trace_b(
            &fam,
            tau0,
            Weight::Srb {
                observable: &g,
                u: -h,
            },
            n,
            DEFAULT_ENUM_CAP,
        )
        .unwrap();
        let fd = (plus - minus) / (2.0 * h);
        assert_relative_eq!(row.bu, fd, max_relative = 1e-6);
    }
}

#[test]
fn btau_matches_tau_difference() {
    let fam = perturbed();
    let tau0 = 0.05;
    let rebased = fam.rebase(tau0).unwrap();
    let g = Observable::cosine(1, 1.0);
    let h = 1e-5;
    let w = Weight::Srb {
        observable: &g,
        u: 0.0,
    };
    for n in 1..=6u32 {
        let row = trace_b_partials(&rebased, &g, n, DEFAULT_ENUM_CAP).unwrap();
        // each side re-enumerates Fix(T^n) at its own parameter
        let plus = trace_b(&fam, tau0 + h, w, n, DEFAULT_ENUM_CAP).unwrap();
        let minus = trace_b(&fam, tau0 - h, w, n, DEFAULT_ENUM_CAP).unwrap();
        let fd = (plus - minus) / (2.0 * h);
        // btau collapses below the difference quotient's own resolution
        // (~5e-12 at this h) within a few n; the floor covers exactly that
        assert_relative_eq!(row.btau, fd, max_relative = 1e-5, epsilon = 1e-10);
    }
}

#[test]
fn butau_matches_tau_difference_of_bu() {
    let fam = perturbed();
    let tau0 = 0.05;
    let rebased = fam.rebase(tau0).unwrap();
    let g = Observable::cosine(1, 1.0);
    let h = 1e-5;
    for n in 1..=6u32 {
        let row = trace_b_partials(&rebased, &g, n, DEFAULT_ENUM_CAP).unwrap();
        let bu_at = |t: f64| {
            trace_b_partials(&fam.rebase(t).unwrap(), &g, n, DEFAULT_ENUM_CAP)
                .unwrap()
                .bu
        };
        let fd = (bu_at(tau0 + h) - bu_at(tau0 - h)) / (2.0 * h);
        assert_relative_eq!(row.butau, fd, max_relative = 1e-4);
    }
}

#[test]
fn xn_matches_parameter_difference_of_iterated_lift() {
    let fam = perturbed();
    let tau0 = 0.05;
    let rebased = fam.rebase(tau0).unwrap();
    let g = Observable::cosine(1, 1.0);
    let h = 1e-6;
    for n in [2u32, 3, 5] {
        let set = enumerate_fixed_points(&rebased, 0.0, n, DEFAULT_ENUM_CAP).unwrap();
        for rec in set.points.iter().step_by(3) {
            let jet = orbit_jet(&rebased, &g, 0.0, rec.x, n).unwrap();
            let fd =
                (lift_n(&fam, tau0 + h, rec.x, n) - lift_n(&fam, tau0 - h, rec.x, n)) / (2.0 * h);
            assert_relative_eq!(jet.xn, fd, max_relative = 1e-6, epsilon = 1e-10);
        }
    }
}

#[test]
fn dn2_matches_x_difference_of_cycle_derivative() {
    let fam = perturbed();
    let tau0 = 0.05;
    let rebased = fam.rebase(tau0).unwrap();
    let g = Observable::cosine(1, 1.0);
    let map = rebased.at(0.0).unwrap();
    let h = 1e-6;
    let dn_at = |x: f64, n: u32| {
        let mut y = x;
        let mut dn = 1.0;
        for _ in 0..n {
            dn *= map.deriv(y);
            y = map.circle(y);
        }
        dn
    };
    for n in [2u32, 4] {
        let set = enumerate_fixed_points(&rebased, 0.0, n, DEFAULT_ENUM_CAP).unwrap();
        for rec in set.points.iter().step_by(2) {
            let jet = orbit_jet(&rebased, &g, 0.0, rec.x, n).unwrap();
            // the product formula for (T^n)' extends smoothly off the orbit
            let fd = (dn_at(rec.x + h, n) - dn_at(rec.x - h, n)) / (2.0 * h);
            assert_relative_eq!(jet.dn2, fd, max_relative = 1e-5, epsilon = 1e-6);
        }
    }
}

#[test]
fn results_are_bit_identical_for_any_worker_count() {
    let fam = perturbed();
    let g = Observable::cosine(1, 1.0);

    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        pool.install(|| {
            let set = enumerate_fixed_points(&fam, 0.05, 9, DEFAULT_ENUM_CAP).unwrap();
            let xs: Vec<u64> = set.points.iter().map(|r| r.x.to_bits()).collect();
            let rs: Vec<u64> = set.points.iter().map(|r| r.residual.to_bits()).collect();
            let row = trace_b_partials(&fam, &g, 9, DEFAULT_ENUM_CAP).unwrap();
            (
                xs,
                rs,
                [
                    row.b.to_bits(),
                    row.bu.to_bits(),
                    row.btau.to_bits(),
                    row.butau.to_bits(),
                ],
            )
        })
    };

    let single = run(1);
    let eight = run(8);
    assert_eq!(single.0, eight.0, "point positions must not depend on scheduling");
    assert_eq!(single.1, eight.1, "residuals must not depend on scheduling");
    assert_eq!(single.2, eight.2, "trace rows must not depend on scheduling");
}
