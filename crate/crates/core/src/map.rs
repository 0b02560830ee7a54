//! Parameterized families of expanding circle maps and trig-polynomial
//! observables, with exact derivatives in both the circle variable and the
//! family parameter.
//!
//! A family is given by its lift
//!
//! ```text
//! L_tau(x) = d*x + C(tau) + sum_k [ A_k(tau) sin(2 pi k x) + B_k(tau) cos(2 pi k x) ]
//! ```
//!
//! with every coefficient a polynomial in `tau`, so d/dtau is exact and
//! re-basing the parameter is an exact polynomial substitution. The circle is
//! `[0, 1)`; `T_tau(x)` is the lift reduced mod 1.

use crate::dd::Dd;
use crate::error::{Error, Result};

const TWO_PI: f64 = std::f64::consts::TAU;

/// Reduce to the fundamental domain `[0, 1)`; exact integers map to 0.
#[inline]
pub(crate) fn mod1(x: f64) -> f64 {
    let f = x - x.floor();
    if f >= 1.0 {
        f - 1.0
    } else {
        f
    }
}

/// Signed circle difference `a - b` in `[-1/2, 1/2)`.
#[inline]
pub(crate) fn circle_diff(a: f64, b: f64) -> f64 {
    let d = mod1(a - b);
    if d >= 0.5 {
        d - 1.0
    } else {
        d
    }
}

/// Circle metric on `[0, 1)`.
#[inline]
pub(crate) fn circle_dist(a: f64, b: f64) -> f64 {
    circle_diff(a, b).abs()
}

/// Real polynomial in the family parameter, lowest degree first.
#[derive(Debug, Clone, PartialEq)]
pub struct TauPoly {
    coeffs: Vec<f64>,
}

impl TauPoly {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Self { coeffs }
    }

    pub fn constant(c: f64) -> Self {
        Self { coeffs: vec![c] }
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Horner evaluation.
    pub fn eval(&self, tau: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * tau + c)
    }

    /// Derivative value dp/dtau at `tau`.
    pub fn deriv_eval(&self, tau: f64) -> f64 {
        let mut acc = 0.0;
        for (i, &c) in self.coeffs.iter().enumerate().skip(1).rev() {
            acc = acc * tau + (i as f64) * c;
        }
        acc
    }

    /// Upper bound for |p| on [lo, hi] from the coefficient norms.
    pub fn abs_bound(&self, lo: f64, hi: f64) -> f64 {
        let t = lo.abs().max(hi.abs());
        let mut pow = 1.0;
        let mut sum = 0.0;
        for &c in &self.coeffs {
            sum += c.abs() * pow;
            pow *= t;
        }
        sum
    }

    /// Exact substitution `tau -> tau0 + tau` (binomial expansion).
    pub fn rebase(&self, tau0: f64) -> Self {
        let n = self.coeffs.len();
        let mut out = vec![0.0; n];
        for (i, &c) in self.coeffs.iter().enumerate() {
            // c * (tau0 + tau)^i = c * sum_j C(i,j) tau0^{i-j} tau^j
            let mut binom = 1.0;
            for j in 0..=i {
                out[j] += c * binom * tau0.powi((i - j) as i32);
                binom *= (i - j) as f64 / (j + 1) as f64;
            }
        }
        Self { coeffs: out }
    }
}

/// One harmonic of the lift: `A_k(tau) sin(2 pi k x) + B_k(tau) cos(2 pi k x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Harmonic {
    pub sin: TauPoly,
    pub cos: TauPoly,
}

/// A tau-parameterized family of degree-d circle map lifts.
#[derive(Debug, Clone)]
pub struct TrigMapFamily {
    degree: u32,
    constant: TauPoly,
    harmonics: Vec<Harmonic>, // index k-1 holds frequency k
    tau_domain: (f64, f64),
}

/// Lift value together with its first two x-derivatives.
#[derive(Debug, Clone, Copy)]
pub struct Jet {
    pub t: f64,
    pub t1: f64,
    pub t2: f64,
}

impl TrigMapFamily {
    pub fn new(
        degree: u32,
        constant: TauPoly,
        harmonics: Vec<Harmonic>,
        tau_domain: (f64, f64),
    ) -> Result<Self> {
        if degree < 2 {
            return Err(Error::BadDegree { degree });
        }
        if tau_domain.0 > tau_domain.1 || tau_domain.0.is_nan() || tau_domain.1.is_nan() {
            return Err(Error::EmptyTauDomain {
                lo: tau_domain.0,
                hi: tau_domain.1,
            });
        }
        Ok(Self {
            degree,
            constant,
            harmonics,
            tau_domain,
        })
    }

    /// The pure linear lift `x -> d*x` (no harmonics, no tau dependence).
    pub fn linear(degree: u32) -> Self {
        Self {
            degree,
            constant: TauPoly::zero(),
            harmonics: Vec::new(),
            tau_domain: (-1.0, 1.0),
        }
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn tau_domain(&self) -> (f64, f64) {
        self.tau_domain
    }

    pub(crate) fn check_tau(&self, tau: f64) -> Result<()> {
        let (lo, hi) = self.tau_domain;
        if tau < lo || tau > hi {
            return Err(Error::TauOutsideDomain { tau, lo, hi });
        }
        Ok(())
    }

    /// Certified lower bound on `inf_{tau in domain, x} L_tau'(x)`.
    ///
    /// Uses the conservative coefficient-norm bound
    /// `d - sum_k 2 pi k (|A_k| + |B_k|)`; this is a certificate, not a grid
    /// observation, so it may undershoot the true minimum.
    pub fn expansion_bound(&self) -> Result<f64> {
        let (lo, hi) = self.tau_domain;
        let mut loss = 0.0;
        for (i, h) in self.harmonics.iter().enumerate() {
            let k = (i + 1) as f64;
            loss += TWO_PI * k * (h.sin.abs_bound(lo, hi) + h.cos.abs_bound(lo, hi));
        }
        let bound = self.degree as f64 - loss;
        if bound <= 1.0 {
            return Err(Error::NotExpanding { bound });
        }
        Ok(bound)
    }

    /// Coefficients frozen at a given `tau`.
    pub fn at(&self, tau: f64) -> Result<MapAtTau> {
        self.check_tau(tau)?;
        Ok(MapAtTau {
            degree: self.degree as f64,
            constant: self.constant.eval(tau),
            sin: self.harmonics.iter().map(|h| h.sin.eval(tau)).collect(),
            cos: self.harmonics.iter().map(|h| h.cos.eval(tau)).collect(),
        })
    }

    /// Tau-derivative of the coefficients frozen at a given `tau`.
    pub(crate) fn tau_deriv_at(&self, tau: f64) -> TauDerivAtTau {
        TauDerivAtTau {
            constant: self.constant.deriv_eval(tau),
            sin: self
                .harmonics
                .iter()
                .map(|h| h.sin.deriv_eval(tau))
                .collect(),
            cos: self
                .harmonics
                .iter()
                .map(|h| h.cos.deriv_eval(tau))
                .collect(),
        }
    }

    /// L_tau(x).
    pub fn eval_lift(&self, tau: f64, x: f64) -> Result<f64> {
        Ok(self.at(tau)?.lift(x))
    }

    /// Exact (L, L', L'') at x.
    pub fn eval_jet(&self, tau: f64, x: f64) -> Result<Jet> {
        Ok(self.at(tau)?.jet(x))
    }

    /// (X, X') at the base point: `X = d/dtau L_tau |_{tau=0}` and its
    /// x-derivative. Pure polynomial/trig arithmetic, no domain constraint.
    pub fn eval_tau_jet(&self, x: f64) -> (f64, f64) {
        self.tau_deriv_at(0.0).jet(x)
    }

    /// Exact re-basing `tau -> tau0 + tau`; the domain shifts accordingly.
    pub fn rebase(&self, tau0: f64) -> Result<Self> {
        self.check_tau(tau0)?;
        Ok(Self {
            degree: self.degree,
            constant: self.constant.rebase(tau0),
            harmonics: self
                .harmonics
                .iter()
                .map(|h| Harmonic {
                    sin: h.sin.rebase(tau0),
                    cos: h.cos.rebase(tau0),
                })
                .collect(),
            tau_domain: (self.tau_domain.0 - tau0, self.tau_domain.1 - tau0),
        })
    }
}

/// A family with its coefficient polynomials evaluated at one `tau`.
///
/// This is the hot-path view: orbit code evaluates the polynomials once and
/// then works with plain trig sums.
#[derive(Debug, Clone)]
pub struct MapAtTau {
    degree: f64,
    constant: f64,
    sin: Vec<f64>,
    cos: Vec<f64>,
}

impl MapAtTau {
    pub fn degree(&self) -> f64 {
        self.degree
    }

    /// Lift value. The trig part is evaluated on the fractional part of x, so
    /// periodicity does not drift for arguments outside [0, 1).
    #[inline]
    pub fn lift(&self, x: f64) -> f64 {
        let f = x - x.floor();
        let mut acc = self.constant;
        for (i, (&a, &b)) in self.sin.iter().zip(&self.cos).enumerate() {
            let th = TWO_PI * (i + 1) as f64 * f;
            let (s, c) = th.sin_cos();
            acc += a * s + b * c;
        }
        self.degree * x + acc
    }

    /// Lift derivative L'.
    #[inline]
    pub fn deriv(&self, x: f64) -> f64 {
        let f = x - x.floor();
        let mut acc = self.degree;
        for (i, (&a, &b)) in self.sin.iter().zip(&self.cos).enumerate() {
            let k = (i + 1) as f64;
            let th = TWO_PI * k * f;
            let (s, c) = th.sin_cos();
            acc += TWO_PI * k * (a * c - b * s);
        }
        acc
    }

    /// (L, L', L'') in one pass.
    #[inline]
    pub fn jet(&self, x: f64) -> Jet {
        let f = x - x.floor();
        let mut t = self.constant;
        let mut t1 = self.degree;
        let mut t2 = 0.0;
        for (i, (&a, &b)) in self.sin.iter().zip(&self.cos).enumerate() {
            let k = (i + 1) as f64;
            let th = TWO_PI * k * f;
            let (s, c) = th.sin_cos();
            let w = TWO_PI * k;
            t += a * s + b * c;
            t1 += w * (a * c - b * s);
            t2 += w * w * (-a * s - b * c);
        }
        Jet {
            t: self.degree * x + t,
            t1,
            t2,
        }
    }

    /// Circle map T(x) = L(x) mod 1.
    #[inline]
    pub fn circle(&self, x: f64) -> f64 {
        mod1(self.lift(x))
    }

    /// Double-double lift evaluation (used only to polish periodic points).
    #[inline]
    pub(crate) fn lift_dd(&self, x: Dd) -> Dd {
        let mut acc = x.mul_f64(self.degree).add_f64(self.constant);
        for (i, (&a, &b)) in self.sin.iter().zip(&self.cos).enumerate() {
            let k = (i + 1) as f64;
            if a != 0.0 {
                acc = acc.add(x.sin_2pik(k).mul_f64(a));
            }
            if b != 0.0 {
                acc = acc.add(x.cos_2pik(k).mul_f64(b));
            }
        }
        acc
    }
}

/// Evaluated tau-derivative of the lift coefficients at a fixed `tau`.
#[derive(Debug, Clone)]
pub(crate) struct TauDerivAtTau {
    constant: f64,
    sin: Vec<f64>,
    cos: Vec<f64>,
}

impl TauDerivAtTau {
    /// (X, X') at x, where X = d/dtau L_tau.
    #[inline]
    pub fn jet(&self, x: f64) -> (f64, f64) {
        let f = x - x.floor();
        let mut v = self.constant;
        let mut v1 = 0.0;
        for (i, (&a, &b)) in self.sin.iter().zip(&self.cos).enumerate() {
            let k = (i + 1) as f64;
            let th = TWO_PI * k * f;
            let (s, c) = th.sin_cos();
            v += a * s + b * c;
            v1 += TWO_PI * k * (a * c - b * s);
        }
        (v, v1)
    }
}

/// A trigonometric polynomial on the circle with exact derivative.
#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    constant: f64,
    sin: Vec<f64>,
    cos: Vec<f64>,
}

impl Observable {
    /// `constant + sum_k sin[k-1] sin(2 pi k x) + cos[k-1] cos(2 pi k x)`.
    pub fn new(constant: f64, sin: Vec<f64>, cos: Vec<f64>) -> Self {
        Self { constant, sin, cos }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(c, Vec::new(), Vec::new())
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    /// `amp * cos(2 pi k x)`.
    pub fn cosine(k: usize, amp: f64) -> Self {
        let mut cos = vec![0.0; k];
        cos[k - 1] = amp;
        Self::new(0.0, Vec::new(), cos)
    }

    /// `amp * sin(2 pi k x)`.
    pub fn sine(k: usize, amp: f64) -> Self {
        let mut sin = vec![0.0; k];
        sin[k - 1] = amp;
        Self::new(0.0, sin, Vec::new())
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        let f = x - x.floor();
        let mut acc = self.constant;
        let kmax = self.sin.len().max(self.cos.len());
        for i in 0..kmax {
            let k = (i + 1) as f64;
            let th = TWO_PI * k * f;
            let (s, c) = th.sin_cos();
            if let Some(&a) = self.sin.get(i) {
                acc += a * s;
            }
            if let Some(&b) = self.cos.get(i) {
                acc += b * c;
            }
        }
        acc
    }

    /// Exact derivative g'.
    #[inline]
    pub fn deriv(&self, x: f64) -> f64 {
        let f = x - x.floor();
        let mut acc = 0.0;
        let kmax = self.sin.len().max(self.cos.len());
        for i in 0..kmax {
            let k = (i + 1) as f64;
            let th = TWO_PI * k * f;
            let (s, c) = th.sin_cos();
            if let Some(&a) = self.sin.get(i) {
                acc += TWO_PI * k * a * c;
            }
            if let Some(&b) = self.cos.get(i) {
                acc -= TWO_PI * k * b * s;
            }
        }
        acc
    }
}

/// Weight entering the trace sums.
#[derive(Debug, Clone, Copy)]
pub enum Weight<'a> {
    /// `-u*g - log T'`: the SRB weight tilted by the observable. The trace
    /// term reduces to `exp(-u S_n g) / ((T^n)' - 1)`.
    Srb { observable: &'a Observable, u: f64 },
    /// A general trig-polynomial weight `phi`; the trace term is
    /// `exp(S_n phi) / (1 - (T^n)'^{-1})`.
    Raw(&'a Observable),
}
