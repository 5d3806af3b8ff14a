//! Compensated double-double arithmetic (~31 significant digits).
//!
//! The identity checks in this module weight band values by factors up to
//! 2^{(n-1) s} / c_j ~ 7e10, so sampling must carry roughly 17 extra bits
//! beyond f64 for the checks to resolve absolute errors of 1e-6. A value
//! is stored as an unevaluated sum hi + lo with |lo| <= ulp(hi)/2.

use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let err = b - (s - a);
    (s, err)
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let err = f64::mul_add(a, b, -p);
    (p, err)
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };
    pub const PI: Dd = Dd {
        hi: 3.141592653589793116e0,
        lo: 1.224646799147353207e-16,
    };
    pub const TWO_PI: Dd = Dd {
        hi: 6.283185307179586232e0,
        lo: 2.449293598294706414e-16,
    };
    pub const FRAC_PI_2: Dd = Dd {
        hi: 1.570796326794896558e0,
        lo: 6.123233995736766036e-17,
    };
    pub const LN_2: Dd = Dd {
        hi: 6.931471805599452862e-1,
        lo: 2.319046813846299558e-17,
    };

    #[inline]
    pub fn from_f64(v: f64) -> Dd {
        Dd { hi: v, lo: 0.0 }
    }

    /// Exact ratio of two moderate integers.
    pub fn from_ratio(num: i64, den: i64) -> Dd {
        Dd::from_f64(num as f64) / Dd::from_f64(den as f64)
    }

    #[inline]
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    #[inline]
    fn renorm(hi: f64, lo: f64) -> Dd {
        let (s, e) = quick_two_sum(hi, lo);
        Dd { hi: s, lo: e }
    }

    pub fn abs(self) -> Dd {
        if self.hi < 0.0 || (self.hi == 0.0 && self.lo < 0.0) {
            -self
        } else {
            self
        }
    }

    /// Exact product with a power of two.
    #[inline]
    pub fn scale_pow2(self, p: f64) -> Dd {
        Dd {
            hi: self.hi * p,
            lo: self.lo * p,
        }
    }

    pub fn powi(self, mut n: u32) -> Dd {
        let mut base = self;
        let mut acc = Dd::ONE;
        while n > 0 {
            if n & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            n >>= 1;
        }
        acc
    }

    pub fn sqrt(self) -> Dd {
        if self.hi == 0.0 {
            return Dd::ZERO;
        }
        // one Newton step from the f64 seed is enough for double-double
        let approx = self.hi.sqrt();
        let x = Dd::from_f64(approx);
        let r = (self - x * x) / (x + x);
        x + r
    }

    pub fn recip(self) -> Dd {
        Dd::ONE / self
    }

    /// sin and cos evaluated together after range reduction by pi/2.
    pub fn sin_cos(self) -> (Dd, Dd) {
        let k = (self.to_f64() / Dd::FRAC_PI_2.to_f64()).round();
        let r = self - Dd::FRAC_PI_2 * Dd::from_f64(k);
        let (s, c) = sin_cos_taylor(r);
        match (k as i64).rem_euclid(4) {
            0 => (s, c),
            1 => (c, -s),
            2 => (-s, -c),
            _ => (-c, s),
        }
    }

    pub fn sin(self) -> Dd {
        self.sin_cos().0
    }

    pub fn cos(self) -> Dd {
        self.sin_cos().1
    }

    pub fn exp(self) -> Dd {
        // e^x = 2^k e^r with r = x - k ln 2, |r| <= ln(2)/2
        if self.hi < -745.0 {
            return Dd::ZERO;
        }
        let k = (self.to_f64() / Dd::LN_2.to_f64()).round();
        let r = self - Dd::LN_2 * Dd::from_f64(k);
        let mut term = Dd::ONE;
        let mut sum = Dd::ONE;
        for i in 1..=26i64 {
            term = term * r / Dd::from_f64(i as f64);
            sum = sum + term;
        }
        sum.scale_pow2(2f64.powi(k as i32))
    }
}

/// Taylor series on |r| <= pi/4, summed by Horner from the tail.
/// Sixteen terms bound the truncation below 1e-35 on that range.
fn sin_cos_taylor(r: Dd) -> (Dd, Dd) {
    let r2 = r * r;
    // sin r = r (1 - r^2/(2*3) (1 - r^2/(4*5) (1 - ...)))
    let mut sin_acc = Dd::ONE;
    // cos r = 1 - r^2/(1*2) (1 - r^2/(3*4) (1 - ...))
    let mut cos_acc = Dd::ONE;
    for m in (1..=16i64).rev() {
        let sdiv = (2 * m * (2 * m + 1)) as f64;
        let cdiv = ((2 * m - 1) * 2 * m) as f64;
        sin_acc = Dd::ONE - r2 * sin_acc / Dd::from_f64(sdiv);
        cos_acc = Dd::ONE - r2 * cos_acc / Dd::from_f64(cdiv);
    }
    (r * sin_acc, cos_acc)
}

impl Neg for Dd {
    type Output = Dd;

    #[inline]
    fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Add for Dd {
    type Output = Dd;

    #[inline]
    fn add(self, o: Dd) -> Dd {
        let (s1, s2) = two_sum(self.hi, o.hi);
        let (t1, t2) = two_sum(self.lo, o.lo);
        let (s1, s2) = quick_two_sum(s1, s2 + t1);
        Dd::renorm(s1, s2 + t2)
    }
}

impl Sub for Dd {
    type Output = Dd;

    #[inline]
    fn sub(self, o: Dd) -> Dd {
        self + (-o)
    }
}

impl Mul for Dd {
    type Output = Dd;

    #[inline]
    fn mul(self, o: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, o.hi);
        Dd::renorm(p, e + self.hi * o.lo + self.lo * o.hi)
    }
}

impl Div for Dd {
    type Output = Dd;

    fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let r = self - o * Dd::from_f64(q1);
        let q2 = r.hi / o.hi;
        let r2 = r - o * Dd::from_f64(q2);
        let q3 = r2.hi / o.hi;
        let (s, e) = quick_two_sum(q1, q2);
        Dd::renorm(s, e + q3)
    }
}
