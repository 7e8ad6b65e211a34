//! Closed intervals with outward rounding.
//!
//! Field operations step one ulp outward with `next_up`/`next_down`. Library
//! transcendentals (`exp`, `ln`, `ln_1p`, `exp_m1`) are not correctly rounded,
//! so their results are widened by a relative slop of 2^-45 plus one subnormal.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Relative widening applied to libm results.
pub const SLOP: f64 = 2.842_170_943_040_401e-14;

#[inline]
pub fn down(x: f64) -> f64 {
    if x.is_infinite() || x.is_nan() {
        x
    } else {
        x.next_down()
    }
}

#[inline]
pub fn up(x: f64) -> f64 {
    if x.is_infinite() || x.is_nan() {
        x
    } else {
        x.next_up()
    }
}

#[inline]
fn widen_lo(y: f64) -> f64 {
    if y.is_infinite() {
        y
    } else {
        down(y - y.abs() * SLOP - f64::MIN_POSITIVE)
    }
}

#[inline]
fn widen_hi(y: f64) -> f64 {
    if y.is_infinite() {
        y
    } else {
        up(y + y.abs() * SLOP + f64::MIN_POSITIVE)
    }
}

#[inline]
fn div_bounds(a: f64, b: f64) -> (f64, f64) {
    let q = a / b;
    if !q.is_finite() || q == 0.0 || q.abs() < 1e-290 || b.is_infinite() {
        return (down(q), up(q));
    }
    let r = (-q).mul_add(b, a);
    let err = if b > 0.0 { r } else { -r };
    if err == 0.0 {
        (q, q)
    } else if err > 0.0 {
        (q, q.next_up())
    } else {
        (q.next_down(), q)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const ZERO: Interval = Interval { lo: 0.0, hi: 0.0 };
    pub const ONE: Interval = Interval { lo: 1.0, hi: 1.0 };
    pub const ENTIRE: Interval = Interval { lo: f64::NEG_INFINITY, hi: f64::INFINITY };

    pub fn new(lo: f64, hi: f64) -> Self {
        if lo.is_nan() || hi.is_nan() {
            return Self::ENTIRE;
        }
        debug_assert!(lo <= hi, "inverted interval [{lo}, {hi}]");
        Interval { lo, hi }
    }

    pub fn point(x: f64) -> Self {
        Interval::new(x, x)
    }

    pub fn width(&self) -> f64 {
        up(self.hi - self.lo)
    }

    pub fn mid(&self) -> f64 {
        if self.lo.is_infinite() || self.hi.is_infinite() {
            return if self.lo.is_infinite() { self.hi } else { self.lo };
        }
        self.lo + 0.5 * (self.hi - self.lo)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    pub fn is_subset_of(&self, other: &Interval) -> bool {
        other.lo <= self.lo && self.hi <= other.hi
    }

    pub fn hull(self, other: Interval) -> Interval {
        Interval::new(self.lo.min(other.lo), self.hi.max(other.hi))
    }

    pub fn is_finite(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    /// Sign-definite predicates.
    pub fn is_pos(&self) -> bool {
        self.lo > 0.0
    }

    pub fn is_neg(&self) -> bool {
        self.hi < 0.0
    }

    pub fn scale(self, c: f64) -> Interval {
        self * Interval::point(c)
    }

    pub fn recip(self) -> Interval {
        assert!(self.lo > 0.0 || self.hi < 0.0, "reciprocal of interval containing zero");
        Interval::new(div_bounds(1.0, self.hi).0, div_bounds(1.0, self.lo).1)
    }

    pub fn sqr(self) -> Interval {
        if self.lo >= 0.0 {
            Interval::new(down(self.lo * self.lo), up(self.hi * self.hi))
        } else if self.hi <= 0.0 {
            Interval::new(down(self.hi * self.hi), up(self.lo * self.lo))
        } else {
            let m = self.lo.abs().max(self.hi);
            Interval::new(0.0, up(m * m))
        }
    }

    pub fn exp(self) -> Interval {
        let lo = if self.lo == f64::NEG_INFINITY { 0.0 } else { widen_lo(self.lo.exp()).max(0.0) };
        let hi = if self.hi == f64::NEG_INFINITY { 0.0 } else { widen_hi(self.hi.exp()) };
        Interval::new(lo, hi)
    }

    pub fn exp_m1(self) -> Interval {
        Interval::new(widen_lo(self.lo.exp_m1()).max(-1.0), widen_hi(self.hi.exp_m1()))
    }

    /// Natural logarithm; requires `lo >= 0` (zero maps to negative infinity).
    pub fn ln(self) -> Interval {
        assert!(self.lo >= 0.0, "ln of interval with negative part");
        Interval::new(widen_lo(self.lo.ln()), widen_hi(self.hi.ln()))
    }

    pub fn ln_1p(self) -> Interval {
        assert!(self.lo > -1.0, "ln_1p domain");
        Interval::new(widen_lo(self.lo.ln_1p()), widen_hi(self.hi.ln_1p()))
    }

    /// `1 / (1 + e^{-x})`, monotone increasing.
    pub fn logistic(self) -> Interval {
        let f = |x: f64, upper: bool| -> f64 {
            let e = Interval::point(-x).exp();
            let d = Interval::ONE + e;
            let r = d.recip();
            if upper {
                r.hi.min(1.0)
            } else {
                r.lo.max(0.0)
            }
        };
        Interval::new(f(self.lo, false), f(self.hi, true))
    }

    /// `ln(e^a + e^b)` for enclosures `a`, `b`.
    pub fn logaddexp(a: Interval, b: Interval) -> Interval {
        let lo = {
            let (m, n) = if a.lo >= b.lo { (a.lo, b.lo) } else { (b.lo, a.lo) };
            if n == f64::NEG_INFINITY {
                m
            } else {
                (Interval::point(m) + (Interval::point(n) - Interval::point(m)).exp().ln_1p()).lo
            }
        };
        let hi = {
            let (m, n) = if a.hi >= b.hi { (a.hi, b.hi) } else { (b.hi, a.hi) };
            if n == f64::NEG_INFINITY {
                m
            } else {
                (Interval::point(m) + (Interval::point(n) - Interval::point(m)).exp().ln_1p()).hi
            }
        };
        Interval::new(lo, hi)
    }

    pub fn max(self, other: Interval) -> Interval {
        Interval::new(self.lo.max(other.lo), self.hi.max(other.hi))
    }

    pub fn min(self, other: Interval) -> Interval {
        Interval::new(self.lo.min(other.lo), self.hi.min(other.hi))
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:e}, {:e}]", self.lo, self.hi)
    }
}

impl Neg for Interval {
    type Output = Interval;
    fn neg(self) -> Interval {
        Interval::new(-self.hi, -self.lo)
    }
}

#[inline]
fn overflow(finite_args: bool, s: f64) -> (f64, f64) {
    if !finite_args {
        (s, s)
    } else if s > 0.0 {
        (f64::MAX, s)
    } else {
        (s, f64::MIN)
    }
}

/// Lower and upper bounds of `a + b`, exact when the float sum is exact.
#[inline]
fn add_bounds(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    if !s.is_finite() {
        return overflow(a.is_finite() && b.is_finite(), s);
    }
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    if err == 0.0 {
        (s, s)
    } else if err > 0.0 {
        (s, s.next_up())
    } else {
        (s.next_down(), s)
    }
}

#[inline]
fn mul_bounds(a: f64, b: f64) -> (f64, f64) {
    if a == 0.0 || b == 0.0 {
        return (0.0, 0.0);
    }
    let p = a * b;
    if p.is_infinite() {
        return overflow(a.is_finite() && b.is_finite(), p);
    }
    if p.is_nan() || p.abs() < 1e-290 {
        // keep the sign of the exact product through underflow
        return if (a > 0.0) == (b > 0.0) { (down(p).max(0.0), up(p)) } else { (down(p), up(p).min(0.0)) };
    }
    let err = a.mul_add(b, -p);
    if err == 0.0 {
        (p, p)
    } else if err > 0.0 {
        (p, p.next_up())
    } else {
        (p.next_down(), p)
    }
}

impl Add for Interval {
    type Output = Interval;
    fn add(self, o: Interval) -> Interval {
        Interval::new(add_bounds(self.lo, o.lo).0, add_bounds(self.hi, o.hi).1)
    }
}

impl Sub for Interval {
    type Output = Interval;
    fn sub(self, o: Interval) -> Interval {
        self + (-o)
    }
}

impl Mul for Interval {
    type Output = Interval;
    fn mul(self, o: Interval) -> Interval {
        if self == Interval::ZERO || o == Interval::ZERO {
            return Interval::ZERO;
        }
        let p = [
            mul_bounds(self.lo, o.lo),
            mul_bounds(self.lo, o.hi),
            mul_bounds(self.hi, o.lo),
            mul_bounds(self.hi, o.hi),
        ];
        let lo = p.iter().map(|b| b.0).fold(f64::INFINITY, f64::min);
        let hi = p.iter().map(|b| b.1).fold(f64::NEG_INFINITY, f64::max);
        Interval::new(lo, hi)
    }
}

impl Div for Interval {
    type Output = Interval;
    fn div(self, o: Interval) -> Interval {
        self * o.recip()
    }
}

impl Add<f64> for Interval {
    type Output = Interval;
    fn add(self, o: f64) -> Interval {
        self + Interval::point(o)
    }
}

impl Sub<f64> for Interval {
    type Output = Interval;
    fn sub(self, o: f64) -> Interval {
        self + Interval::point(-o)
    }
}

impl Mul<f64> for Interval {
    type Output = Interval;
    fn mul(self, o: f64) -> Interval {
        self * Interval::point(o)
    }
}

/// Codomain of every pressure computation: a certified enclosure or divergence.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ExtendedReal {
    Interval(Interval),
    Infinite,
}

impl ExtendedReal {
    pub fn is_infinite(&self) -> bool {
        matches!(self, ExtendedReal::Infinite)
    }

    pub fn interval(&self) -> Option<Interval> {
        match self {
            ExtendedReal::Interval(i) => Some(*i),
            ExtendedReal::Infinite => None,
        }
    }

    /// Apply the natural logarithm; infinity propagates.
    pub fn ln(self) -> ExtendedReal {
        match self {
            ExtendedReal::Interval(i) => ExtendedReal::Interval(i.ln()),
            ExtendedReal::Infinite => ExtendedReal::Infinite,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn addition_rounds_outward() {
        let x = Interval::point(0.1) + Interval::point(0.2);
        assert!(x.lo < 0.30000000000000004 && x.hi >= 0.30000000000000004);
        assert!(x.contains(0.3));
    }

    #[test]
    fn exact_operations_stay_points() {
        let x = Interval::point(-1.0) * Interval::point(1.0);
        assert_eq!(x, Interval::point(-1.0));
        assert_eq!(Interval::point(0.5) + Interval::point(0.25), Interval::point(0.75));
        assert_eq!(Interval::point(4.0).recip(), Interval::point(0.25));
        let t = Interval::point(1.0) / Interval::point(3.0);
        assert!(t.lo < t.hi && t.contains(1.0 / 3.0));
    }

    #[test]
    fn zero_times_infinite_endpoint() {
        let z = Interval::ZERO * Interval::new(0.0, f64::INFINITY);
        assert_eq!(z, Interval::ZERO);
        let y = Interval::new(0.0, 1.0) * Interval::new(2.0, f64::INFINITY);
        assert_eq!(y.lo, 0.0);
        assert_eq!(y.hi, f64::INFINITY);
    }

    #[test]
    fn exp_ln_enclose() {
        let e = Interval::ONE.exp();
        assert!(e.contains(std::f64::consts::E));
        let l = Interval::point(2.0).ln();
        assert!(l.contains(std::f64::consts::LN_2));
        assert_eq!(Interval::point(f64::NEG_INFINITY).exp(), Interval::ZERO);
    }

    #[test]
    fn logaddexp_matches_direct() {
        let a = Interval::point(3.0_f64.ln());
        let b = Interval::point(5.0_f64.ln());
        let r = Interval::logaddexp(a, b);
        assert!(r.contains(8.0_f64.ln()) || (r.lo - 8.0_f64.ln()).abs() < 1e-15);
        assert!(r.width() < 1e-13);
    }

    #[test]
    fn logistic_bounds() {
        let r = Interval::new(-1.0, 2.0).logistic();
        assert!(r.lo <= 1.0 / (1.0 + 1f64.exp()));
        assert!(r.hi >= 1.0 / (1.0 + (-2f64).exp()));
        assert!(r.lo >= 0.0 && r.hi <= 1.0);
    }
}
