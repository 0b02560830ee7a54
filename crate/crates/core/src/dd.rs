//! Minimal double-double arithmetic used to polish periodic points.
//!
//! The residual of a period-n point has slope (T^n)' ~ degree^n, so plain f64
//! evaluation of the orbit loses exactly the digits the residual check needs.
//! One corrector step against a twice-precision orbit lands the point on the
//! correctly rounded root; only +, *, and a first-order trig correction are
//! required for that.

#[derive(Debug, Clone, Copy)]
pub(crate) struct Dd {
    pub hi: f64,
    pub lo: f64,
}

/// 2*pi split into two doubles (hi + lo represents 2*pi to ~1e-32).
pub(crate) const TWO_PI_HI: f64 = std::f64::consts::TAU;
pub(crate) const TWO_PI_LO: f64 = 2.4492935982947064e-16;

#[inline]
fn two_sum(a: f64, b: f64) -> Dd {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    Dd { hi: s, lo: err }
}

#[inline]
fn two_prod(a: f64, b: f64) -> Dd {
    let p = a * b;
    let e = a.mul_add(b, -p);
    Dd { hi: p, lo: e }
}

impl Dd {
    #[inline]
    pub fn from(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.hi + self.lo
    }

    #[inline]
    pub fn add_f64(self, b: f64) -> Self {
        let s = two_sum(self.hi, b);
        let lo = s.lo + self.lo;
        let r = two_sum(s.hi, lo);
        Dd { hi: r.hi, lo: r.lo }
    }

    #[inline]
    pub fn add(self, other: Dd) -> Self {
        let s = two_sum(self.hi, other.hi);
        let lo = s.lo + self.lo + other.lo;
        let r = two_sum(s.hi, lo);
        Dd { hi: r.hi, lo: r.lo }
    }

    #[inline]
    pub fn mul_f64(self, b: f64) -> Self {
        let p = two_prod(self.hi, b);
        let lo = p.lo + self.lo * b;
        let r = two_sum(p.hi, lo);
        Dd { hi: r.hi, lo: r.lo }
    }

    /// sin(2*pi*k*self) with a first-order correction for the low word.
    #[inline]
    pub fn sin_2pik(self, k: f64) -> Dd {
        let theta = self.mul_f64(k).mul_2pi();
        let s = theta.hi.sin();
        let c = theta.hi.cos();
        Dd::from(s).add_f64(c * theta.lo)
    }

    /// cos(2*pi*k*self) with a first-order correction for the low word.
    #[inline]
    pub fn cos_2pik(self, k: f64) -> Dd {
        let theta = self.mul_f64(k).mul_2pi();
        let s = theta.hi.sin();
        let c = theta.hi.cos();
        Dd::from(c).add_f64(-s * theta.lo)
    }

    #[inline]
    fn mul_2pi(self) -> Self {
        let p = two_prod(self.hi, TWO_PI_HI);
        let lo = p.lo + self.hi * TWO_PI_LO + self.lo * TWO_PI_HI;
        let r = two_sum(p.hi, lo);
        Dd { hi: r.hi, lo: r.lo }
    }
}
