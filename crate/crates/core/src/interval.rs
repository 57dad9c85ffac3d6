//! Closed floating-point intervals with outward rounding.
//!
//! Every operation rounds the lower end down and the upper end up by one
//! ulp, so the true real result of the operation on any members of the
//! operands lies in the output. IEEE basic operations and `sqrt` are
//! correctly rounded, which makes a one-ulp widening sufficient.

use std::ops::{Add, Mul, Neg, Sub};

use crate::rational::{to_f64, Q};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi, "empty interval [{lo}, {hi}]");
        Interval { lo, hi }
    }

    pub fn point(x: f64) -> Self {
        Interval { lo: x, hi: x }
    }

    /// Encloses a rational; exact when the rational is a float.
    pub fn from_q(x: &Q) -> Self {
        let f = to_f64(x);
        if crate::rational::from_f64_exact(f) == *x {
            Interval::point(f)
        } else {
            Interval::new(f.next_down(), f.next_up())
        }
    }

    /// `x` carrying a relative error of at most `ulps` units in the last place.
    pub fn around(x: f64, ulps: u32) -> Self {
        let e = x.abs() * f64::EPSILON * ulps as f64 + f64::MIN_POSITIVE;
        Interval::new((x - e).next_down(), (x + e).next_up())
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn hull(&self, other: &Interval) -> Interval {
        Interval::new(self.lo.min(other.lo), self.hi.max(other.hi))
    }

    pub fn widen(&self, e: f64) -> Interval {
        Interval::new((self.lo - e).next_down(), (self.hi + e).next_up())
    }

    pub fn sqrt(&self) -> Interval {
        assert!(self.lo >= 0.0, "sqrt of interval with negative part");
        Interval::new(self.lo.sqrt().next_down().max(0.0), self.hi.sqrt().next_up())
    }

    pub fn recip(&self) -> Interval {
        assert!(self.lo > 0.0 || self.hi < 0.0, "reciprocal of interval containing 0");
        Interval::new((1.0 / self.hi).next_down(), (1.0 / self.lo).next_up())
    }

    pub fn div(&self, other: &Interval) -> Interval {
        *self * other.recip()
    }

    pub fn scale(&self, c: f64) -> Interval {
        *self * Interval::point(c)
    }
}

impl Add for Interval {
    type Output = Interval;
    fn add(self, o: Interval) -> Interval {
        Interval::new((self.lo + o.lo).next_down(), (self.hi + o.hi).next_up())
    }
}

impl Sub for Interval {
    type Output = Interval;
    fn sub(self, o: Interval) -> Interval {
        Interval::new((self.lo - o.hi).next_down(), (self.hi - o.lo).next_up())
    }
}

impl Neg for Interval {
    type Output = Interval;
    fn neg(self) -> Interval {
        Interval::new(-self.hi, -self.lo)
    }
}

impl Mul for Interval {
    type Output = Interval;
    fn mul(self, o: Interval) -> Interval {
        let c = [self.lo * o.lo, self.lo * o.hi, self.hi * o.lo, self.hi * o.hi];
        let lo = c.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = c.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Interval::new(lo.next_down(), hi.next_up())
    }
}
