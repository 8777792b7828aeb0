//! Outward-rounded interval arithmetic over `f64`.
//!
//! Endpoints are computed in round-to-nearest and then pushed one ulp outward,
//! except when an error-free transformation (TwoSum, FMA residual) shows the
//! rounded result is already exact on that side.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

// Below this magnitude FMA residuals may underflow, so we always nudge.
const TINY: f64 = 1.0e-290;

#[inline]
fn clamp_dn(x: f64) -> f64 {
    if x == f64::INFINITY {
        f64::MAX
    } else {
        x
    }
}

#[inline]
fn clamp_up(x: f64) -> f64 {
    if x == f64::NEG_INFINITY {
        -f64::MAX
    } else {
        x
    }
}

#[inline]
pub(crate) fn add_dn(a: f64, b: f64) -> f64 {
    let s = a + b;
    if !s.is_finite() {
        return clamp_dn(s);
    }
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    if err < 0.0 {
        s.next_down()
    } else {
        s
    }
}

#[inline]
pub(crate) fn add_up(a: f64, b: f64) -> f64 {
    let s = a + b;
    if !s.is_finite() {
        return clamp_up(s);
    }
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    if err > 0.0 {
        s.next_up()
    } else {
        s
    }
}

#[inline]
pub(crate) fn mul_dn(a: f64, b: f64) -> f64 {
    let p = a * b;
    if !p.is_finite() {
        return clamp_dn(p);
    }
    if p.abs() < TINY {
        return if a == 0.0 || b == 0.0 { 0.0 } else { p.next_down() };
    }
    if a.mul_add(b, -p) < 0.0 {
        p.next_down()
    } else {
        p
    }
}

#[inline]
pub(crate) fn mul_up(a: f64, b: f64) -> f64 {
    let p = a * b;
    if !p.is_finite() {
        return clamp_up(p);
    }
    if p.abs() < TINY {
        return if a == 0.0 || b == 0.0 { 0.0 } else { p.next_up() };
    }
    if a.mul_add(b, -p) > 0.0 {
        p.next_up()
    } else {
        p
    }
}

#[inline]
fn div_dn(a: f64, b: f64) -> f64 {
    let q = a / b;
    if !q.is_finite() {
        return clamp_dn(q);
    }
    if q.abs() < TINY || b.abs() < TINY || a.abs() > 1e300 {
        return if a == 0.0 { 0.0 } else { q.next_down() };
    }
    // sign of (a/b - q) equals sign(r)*sign(b)
    let r = (-q).mul_add(b, a);
    if (r < 0.0) != (b < 0.0) && r != 0.0 {
        q.next_down()
    } else {
        q
    }
}

#[inline]
fn div_up(a: f64, b: f64) -> f64 {
    let q = a / b;
    if !q.is_finite() {
        return clamp_up(q);
    }
    if q.abs() < TINY || b.abs() < TINY || a.abs() > 1e300 {
        return if a == 0.0 { 0.0 } else { q.next_up() };
    }
    let r = (-q).mul_add(b, a);
    if (r > 0.0) == (b > 0.0) && r != 0.0 {
        q.next_up()
    } else {
        q
    }
}

#[inline]
fn sqrt_dn(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let q = x.sqrt();
    if x < TINY || !q.is_finite() {
        return q.next_down().max(0.0);
    }
    if (-q).mul_add(q, x) < 0.0 {
        q.next_down()
    } else {
        q
    }
}

#[inline]
fn sqrt_up(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let q = x.sqrt();
    if x < TINY || !q.is_finite() {
        return q.next_up();
    }
    if (-q).mul_add(q, x) > 0.0 {
        q.next_up()
    } else {
        q
    }
}

/// Closed interval `[lo, hi]` of reals.
#[derive(Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl fmt::Debug for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:e}, {:e}]", self.lo, self.hi)
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

impl Default for Interval {
    fn default() -> Self {
        Interval::ZERO
    }
}

impl From<f64> for Interval {
    fn from(x: f64) -> Self {
        Interval::point(x)
    }
}

impl Interval {
    pub const ZERO: Interval = Interval { lo: 0.0, hi: 0.0 };
    pub const ONE: Interval = Interval { lo: 1.0, hi: 1.0 };
    pub const ENTIRE: Interval = Interval {
        lo: f64::NEG_INFINITY,
        hi: f64::INFINITY,
    };

    /// Panics if `lo > hi` or either endpoint is NaN.
    pub fn new(lo: f64, hi: f64) -> Self {
        assert!(lo <= hi, "invalid interval [{lo}, {hi}]");
        Interval { lo, hi }
    }

    pub fn try_new(lo: f64, hi: f64) -> Result<Self> {
        if lo <= hi {
            Ok(Interval { lo, hi })
        } else {
            Err(Error::Domain(format!("invalid interval [{lo}, {hi}]")))
        }
    }

    pub const fn point(x: f64) -> Self {
        Interval { lo: x, hi: x }
    }

    /// `[c - r, c + r]` rounded outward.
    pub fn centered(c: f64, r: f64) -> Self {
        Interval {
            lo: add_dn(c, -r.abs()),
            hi: add_up(c, r.abs()),
        }
    }

    /// Smallest interval holding both numbers.
    pub fn hull_of(a: f64, b: f64) -> Self {
        Interval {
            lo: a.min(b),
            hi: a.max(b),
        }
    }

    #[inline]
    pub fn lo(self) -> f64 {
        self.lo
    }

    #[inline]
    pub fn hi(self) -> f64 {
        self.hi
    }

    pub fn mid(self) -> f64 {
        if self.lo == f64::NEG_INFINITY && self.hi == f64::INFINITY {
            return 0.0;
        }
        let m = 0.5 * self.lo + 0.5 * self.hi;
        m.clamp(self.lo, self.hi)
    }

    /// Upper bound on `hi - lo`.
    pub fn width(self) -> f64 {
        add_up(self.hi, -self.lo)
    }

    /// Upper bound on the radius about `mid()`.
    pub fn rad(self) -> f64 {
        let m = self.mid();
        add_up(m, -self.lo).max(add_up(self.hi, -m))
    }

    /// Largest absolute value.
    pub fn mag(self) -> f64 {
        self.lo.abs().max(self.hi.abs())
    }

    /// Smallest absolute value.
    pub fn mig(self) -> f64 {
        if self.contains_zero() {
            0.0
        } else {
            self.lo.abs().min(self.hi.abs())
        }
    }

    pub fn is_finite(self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    pub fn is_point(self) -> bool {
        self.lo == self.hi
    }

    pub fn contains(self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn contains_zero(self) -> bool {
        self.lo <= 0.0 && 0.0 <= self.hi
    }

    /// `other ⊆ self`.
    pub fn encloses(self, other: Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    /// `other ⊂ int(self)`.
    pub fn strictly_encloses(self, other: Interval) -> bool {
        self.lo < other.lo && other.hi < self.hi
    }

    pub fn overlaps(self, other: Interval) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    pub fn intersect(self, other: Interval) -> Option<Interval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo <= hi).then_some(Interval { lo, hi })
    }

    pub fn hull(self, other: Interval) -> Interval {
        Interval {
            lo: self.lo.min(other.lo),
            hi: self.hi.max(other.hi),
        }
    }

    /// Widen both endpoints by `r ≥ 0`.
    pub fn inflate(self, r: f64) -> Interval {
        if r == 0.0 {
            return self;
        }
        Interval {
            lo: add_dn(self.lo, -r),
            hi: add_up(self.hi, r),
        }
    }

    /// Strictly positive.
    pub fn is_pos(self) -> bool {
        self.lo > 0.0
    }

    /// Strictly negative.
    pub fn is_neg(self) -> bool {
        self.hi < 0.0
    }

    pub fn bisect(self) -> (Interval, Interval) {
        let m = self.mid();
        (Interval::new(self.lo, m), Interval::new(m, self.hi))
    }

    /// Split into `n` consecutive pieces sharing endpoints.
    pub fn split(self, n: usize) -> Vec<Interval> {
        let n = n.max(1);
        let mut cuts = Vec::with_capacity(n + 1);
        for k in 0..=n {
            let t = k as f64 / n as f64;
            let c = if k == 0 {
                self.lo
            } else if k == n {
                self.hi
            } else {
                (self.lo + t * (self.hi - self.lo)).clamp(self.lo, self.hi)
            };
            cuts.push(c);
        }
        cuts.windows(2)
            .map(|w| Interval::new(w[0], w[1].max(w[0])))
            .collect()
    }

    pub fn abs(self) -> Interval {
        if self.lo >= 0.0 {
            self
        } else if self.hi <= 0.0 {
            -self
        } else {
            Interval {
                lo: 0.0,
                hi: self.mag(),
            }
        }
    }

    pub fn max(self, other: Interval) -> Interval {
        Interval {
            lo: self.lo.max(other.lo),
            hi: self.hi.max(other.hi),
        }
    }

    pub fn min(self, other: Interval) -> Interval {
        Interval {
            lo: self.lo.min(other.lo),
            hi: self.hi.min(other.hi),
        }
    }

    pub fn sqr(self) -> Interval {
        let a = self.mig();
        let b = self.mag();
        Interval {
            lo: mul_dn(a, a),
            hi: mul_up(b, b),
        }
    }

    /// Integer power by repeated squaring, split on the parity of `n`.
    pub fn powi(self, n: u32) -> Interval {
        if n == 0 {
            return Interval::ONE;
        }
        if n % 2 == 0 {
            let a = pow_nonneg(Interval::point(self.mig()), n);
            let b = pow_nonneg(Interval::point(self.mag()), n);
            Interval { lo: a.lo, hi: b.hi }
        } else {
            // odd powers are increasing
            let lo = signed_pow(self.lo, n).lo;
            let hi = signed_pow(self.hi, n).hi;
            Interval { lo, hi }
        }
    }

    pub fn sqrt(self) -> Result<Interval> {
        if self.lo < 0.0 {
            return Err(Error::Domain(format!("sqrt of {self:?}")));
        }
        Ok(Interval {
            lo: sqrt_dn(self.lo),
            hi: sqrt_up(self.hi),
        })
    }

    /// libm `exp` is trusted to within one ulp; we widen by two.
    pub fn exp(self) -> Interval {
        let lo = self.lo.exp().next_down().next_down().max(0.0);
        let hi = self.hi.exp().next_up().next_up();
        Interval { lo, hi }
    }

    pub fn atan(self) -> Interval {
        let h = std::f64::consts::FRAC_PI_2.next_up();
        Interval {
            lo: self.lo.atan().next_down().next_down().max(-h),
            hi: self.hi.atan().next_up().next_up().min(h),
        }
    }

    pub fn ln(self) -> Result<Interval> {
        if self.lo <= 0.0 {
            return Err(Error::Domain(format!("ln of {self:?}")));
        }
        Ok(Interval {
            lo: self.lo.ln().next_down().next_down(),
            hi: self.hi.ln().next_up().next_up(),
        })
    }

    /// `ln(1 + x)`.
    pub fn ln_1p(self) -> Result<Interval> {
        if self.lo <= -1.0 {
            return Err(Error::Domain(format!("ln_1p of {self:?}")));
        }
        Ok(Interval {
            lo: self.lo.ln_1p().next_down().next_down(),
            hi: self.hi.ln_1p().next_up().next_up(),
        })
    }

    pub fn recip(self) -> Result<Interval> {
        Interval::ONE.checked_div(self)
    }

    pub fn checked_div(self, rhs: Interval) -> Result<Interval> {
        if rhs.contains_zero() {
            return Err(Error::Domain(format!("division by {rhs:?}")));
        }
        Ok(self.div_nonzero(rhs))
    }

    fn div_nonzero(self, b: Interval) -> Interval {
        let (a0, a1, b0, b1) = (self.lo, self.hi, b.lo, b.hi);
        let lo = div_dn(a0, b0)
            .min(div_dn(a0, b1))
            .min(div_dn(a1, b0))
            .min(div_dn(a1, b1));
        let hi = div_up(a0, b0)
            .max(div_up(a0, b1))
            .max(div_up(a1, b0))
            .max(div_up(a1, b1));
        Interval { lo, hi }
    }
}

fn pow_nonneg(x: Interval, mut n: u32) -> Interval {
    // x ≥ 0 here, so products stay monotone
    let mut base = x;
    let mut acc = Interval::ONE;
    while n > 0 {
        if n & 1 == 1 {
            acc = acc * base;
        }
        n >>= 1;
        if n > 0 {
            base = base.sqr();
        }
    }
    acc
}

fn signed_pow(x: f64, n: u32) -> Interval {
    let p = pow_nonneg(Interval::point(x.abs()), n);
    if x < 0.0 {
        -p
    } else {
        p
    }
}

impl Neg for Interval {
    type Output = Interval;
    fn neg(self) -> Interval {
        Interval {
            lo: -self.hi,
            hi: -self.lo,
        }
    }
}

impl Add for Interval {
    type Output = Interval;
    #[inline]
    fn add(self, rhs: Interval) -> Interval {
        Interval {
            lo: add_dn(self.lo, rhs.lo),
            hi: add_up(self.hi, rhs.hi),
        }
    }
}

impl Sub for Interval {
    type Output = Interval;
    #[inline]
    fn sub(self, rhs: Interval) -> Interval {
        Interval {
            lo: add_dn(self.lo, -rhs.hi),
            hi: add_up(self.hi, -rhs.lo),
        }
    }
}

impl Mul for Interval {
    type Output = Interval;
    #[inline]
    fn mul(self, rhs: Interval) -> Interval {
        let (a, b, c, d) = (self.lo, self.hi, rhs.lo, rhs.hi);
        if a >= 0.0 && c >= 0.0 {
            return Interval {
                lo: mul_dn(a, c),
                hi: mul_up(b, d),
            };
        }
        if a == b && c == d {
            return Interval {
                lo: mul_dn(a, c),
                hi: mul_up(a, c),
            };
        }
        let lo = mul_dn(a, c).min(mul_dn(a, d)).min(mul_dn(b, c)).min(mul_dn(b, d));
        let hi = mul_up(a, c).max(mul_up(a, d)).max(mul_up(b, c)).max(mul_up(b, d));
        Interval { lo, hi }
    }
}

/// Division by an interval containing zero yields `ENTIRE`; use
/// [`Interval::checked_div`] to get a `Domain` error instead.
impl Div for Interval {
    type Output = Interval;
    fn div(self, rhs: Interval) -> Interval {
        if rhs.contains_zero() {
            Interval::ENTIRE
        } else {
            self.div_nonzero(rhs)
        }
    }
}

macro_rules! scalar_ops {
    ($($tr:ident $f:ident),*) => {$(
        impl $tr<f64> for Interval {
            type Output = Interval;
            #[inline]
            fn $f(self, rhs: f64) -> Interval {
                $tr::$f(self, Interval::point(rhs))
            }
        }
        impl $tr<Interval> for f64 {
            type Output = Interval;
            #[inline]
            fn $f(self, rhs: Interval) -> Interval {
                $tr::$f(Interval::point(self), rhs)
            }
        }
    )*};
}
scalar_ops!(Add add, Sub sub, Mul mul, Div div);

impl AddAssign for Interval {
    fn add_assign(&mut self, rhs: Interval) {
        *self = *self + rhs;
    }
}

impl SubAssign for Interval {
    fn sub_assign(&mut self, rhs: Interval) {
        *self = *self - rhs;
    }
}

impl MulAssign for Interval {
    fn mul_assign(&mut self, rhs: Interval) {
        *self = *self * rhs;
    }
}

impl std::iter::Sum for Interval {
    fn sum<I: Iterator<Item = Interval>>(iter: I) -> Interval {
        iter.fold(Interval::ZERO, |a, b| a + b)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
    /// `b` must be a non-negative integer point interval.
    Pow,
}

pub fn arith(op: ArithOp, a: Interval, b: Interval) -> Result<Interval> {
    let r = match op {
        ArithOp::Add => a + b,
        ArithOp::Sub => a - b,
        ArithOp::Mul => a * b,
        ArithOp::Div => a.checked_div(b)?,
        ArithOp::Pow => {
            let n = b.lo;
            if !b.is_point() || n < 0.0 || n.fract() != 0.0 || n > u32::MAX as f64 {
                return Err(Error::Domain(format!("exponent {b:?}")));
            }
            a.powi(n as u32)
        }
    };
    if r.lo.is_nan() || r.hi.is_nan() {
        return Err(Error::Numerical(format!("{op:?} produced NaN")));
    }
    Ok(r)
}

/// Outcome of one interval Newton step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum NewtonVerdict {
    UniqueRoot(Interval),
    NoRoot,
    Inconclusive,
}

impl NewtonVerdict {
    pub fn root(self) -> Option<Interval> {
        match self {
            NewtonVerdict::UniqueRoot(r) => Some(r),
            _ => None,
        }
    }
}

/// `N = x̂ − f(x̂)/f'(X)` compared against `X`.
pub fn newton_step<F, D>(f: F, df: D, x: Interval, xhat: f64) -> Result<NewtonVerdict>
where
    F: Fn(Interval) -> Result<Interval>,
    D: Fn(Interval) -> Result<Interval>,
{
    let range = f(x)?;
    if range.lo.is_nan() || range.hi.is_nan() {
        return Err(Error::Numerical("f(X) is NaN".into()));
    }
    if !range.contains_zero() {
        return Ok(NewtonVerdict::NoRoot);
    }
    let d = df(x)?;
    if d.lo.is_nan() || d.hi.is_nan() {
        return Err(Error::Numerical("f'(X) is NaN".into()));
    }
    if d.contains_zero() {
        return Ok(NewtonVerdict::Inconclusive);
    }
    let fx = f(Interval::point(xhat))?;
    if !fx.is_finite() || !d.is_finite() {
        return Err(Error::Numerical(format!("f({xhat}) = {fx:?}")));
    }
    let n = xhat - fx.div_nonzero(d);
    if x.strictly_encloses(n) {
        Ok(NewtonVerdict::UniqueRoot(n))
    } else if n.intersect(x).is_none() {
        Ok(NewtonVerdict::NoRoot)
    } else {
        Ok(NewtonVerdict::Inconclusive)
    }
}

/// Iterates [`newton_step`], intersecting with the current box, until the
/// enclosure stops shrinking or `max_iter` steps were taken.
pub fn newton_solve<F, D>(f: F, df: D, x: Interval, max_iter: usize) -> Result<NewtonVerdict>
where
    F: Fn(Interval) -> Result<Interval>,
    D: Fn(Interval) -> Result<Interval>,
{
    let mut cur = x;
    let mut unique = false;
    for _ in 0..max_iter {
        match newton_step(&f, &df, cur, cur.mid())? {
            NewtonVerdict::NoRoot => {
                return Ok(if unique {
                    // cannot happen for sound enclosures; be conservative
                    NewtonVerdict::Inconclusive
                } else {
                    NewtonVerdict::NoRoot
                })
            }
            NewtonVerdict::UniqueRoot(n) => {
                unique = true;
                let shrunk = n.width() < 0.5 * cur.width();
                cur = n;
                if !shrunk {
                    break;
                }
            }
            NewtonVerdict::Inconclusive => {
                // root (if any) still lies in N ∩ X; without derivative
                // information we cannot shrink, so stop.
                break;
            }
        }
    }
    Ok(if unique {
        NewtonVerdict::UniqueRoot(cur)
    } else {
        NewtonVerdict::Inconclusive
    })
}

/// Point of the plane with interval coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct IVec2 {
    pub x: Interval,
    pub u: Interval,
}

impl IVec2 {
    pub const fn new(x: Interval, u: Interval) -> Self {
        IVec2 { x, u }
    }

    pub const fn point(x: f64, u: f64) -> Self {
        IVec2 {
            x: Interval::point(x),
            u: Interval::point(u),
        }
    }

    /// Box `[x0,x1] × [u0,u1]`.
    pub fn from_bounds(x0: f64, x1: f64, u0: f64, u1: f64) -> Self {
        IVec2 {
            x: Interval::new(x0, x1),
            u: Interval::new(u0, u1),
        }
    }

    pub fn mid(&self) -> [f64; 2] {
        [self.x.mid(), self.u.mid()]
    }

    pub fn mid_box(&self) -> IVec2 {
        IVec2::point(self.x.mid(), self.u.mid())
    }

    pub fn contains_point(&self, p: [f64; 2]) -> bool {
        self.x.contains(p[0]) && self.u.contains(p[1])
    }

    pub fn encloses(&self, o: &IVec2) -> bool {
        self.x.encloses(o.x) && self.u.encloses(o.u)
    }

    pub fn strictly_encloses(&self, o: &IVec2) -> bool {
        self.x.strictly_encloses(o.x) && self.u.strictly_encloses(o.u)
    }

    pub fn intersect(&self, o: &IVec2) -> Option<IVec2> {
        Some(IVec2 {
            x: self.x.intersect(o.x)?,
            u: self.u.intersect(o.u)?,
        })
    }

    pub fn hull(&self, o: &IVec2) -> IVec2 {
        IVec2 {
            x: self.x.hull(o.x),
            u: self.u.hull(o.u),
        }
    }

    pub fn overlaps(&self, o: &IVec2) -> bool {
        self.x.overlaps(o.x) && self.u.overlaps(o.u)
    }

    pub fn inflate(&self, r: f64) -> IVec2 {
        IVec2 {
            x: self.x.inflate(r),
            u: self.u.inflate(r),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.u.is_finite()
    }

    /// Involution `(x, u) ↦ (x, −u)`.
    pub fn reflect(&self) -> IVec2 {
        IVec2 { x: self.x, u: -self.u }
    }

    pub fn dot(&self, o: &IVec2) -> Interval {
        self.x * o.x + self.u * o.u
    }

    pub fn norm(&self) -> Interval {
        (self.x.sqr() + self.u.sqr()).sqrt().expect("sum of squares")
    }

    pub fn max_width(&self) -> f64 {
        self.x.width().max(self.u.width())
    }

    /// Enclosure of the Euclidean distance between any two members.
    pub fn distance(&self, o: &IVec2) -> Interval {
        let dx = gap(self.x, o.x);
        let du = gap(self.u, o.u);
        let lo = (dx.0 * dx.0 + du.0 * du.0).sqrt();
        let hi = (dx.1 * dx.1 + du.1 * du.1).sqrt();
        Interval::new(lo.next_down().max(0.0), hi.next_up())
    }
}

// (min, max) of |a - b| over a ∈ A, b ∈ B
fn gap(a: Interval, b: Interval) -> (f64, f64) {
    let d = a - b;
    (d.mig(), d.mag())
}

impl Add for IVec2 {
    type Output = IVec2;
    fn add(self, o: IVec2) -> IVec2 {
        IVec2 {
            x: self.x + o.x,
            u: self.u + o.u,
        }
    }
}

impl Sub for IVec2 {
    type Output = IVec2;
    fn sub(self, o: IVec2) -> IVec2 {
        IVec2 {
            x: self.x - o.x,
            u: self.u - o.u,
        }
    }
}

impl Mul<Interval> for IVec2 {
    type Output = IVec2;
    fn mul(self, k: Interval) -> IVec2 {
        IVec2 {
            x: self.x * k,
            u: self.u * k,
        }
    }
}

impl Neg for IVec2 {
    type Output = IVec2;
    fn neg(self) -> IVec2 {
        IVec2 {
            x: -self.x,
            u: -self.u,
        }
    }
}

/// 2×2 interval matrix, row major.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IMat2 {
    pub a11: Interval,
    pub a12: Interval,
    pub a21: Interval,
    pub a22: Interval,
}

impl IMat2 {
    pub const fn new(a11: Interval, a12: Interval, a21: Interval, a22: Interval) -> Self {
        IMat2 { a11, a12, a21, a22 }
    }

    pub const fn from_f64(m: [[f64; 2]; 2]) -> Self {
        IMat2 {
            a11: Interval::point(m[0][0]),
            a12: Interval::point(m[0][1]),
            a21: Interval::point(m[1][0]),
            a22: Interval::point(m[1][1]),
        }
    }

    pub const fn identity() -> Self {
        IMat2::from_f64([[1.0, 0.0], [0.0, 1.0]])
    }

    pub fn diag(a: Interval, d: Interval) -> Self {
        IMat2::new(a, Interval::ZERO, Interval::ZERO, d)
    }

    /// Matrix with columns `c1`, `c2`.
    pub fn from_columns(c1: IVec2, c2: IVec2) -> Self {
        IMat2::new(c1.x, c2.x, c1.u, c2.u)
    }

    pub fn det(&self) -> Interval {
        self.a11 * self.a22 - self.a12 * self.a21
    }

    pub fn trace(&self) -> Interval {
        self.a11 + self.a22
    }

    pub fn transpose(&self) -> IMat2 {
        IMat2::new(self.a11, self.a21, self.a12, self.a22)
    }

    pub fn mul_vec(&self, v: &IVec2) -> IVec2 {
        IVec2 {
            x: self.a11 * v.x + self.a12 * v.u,
            u: self.a21 * v.x + self.a22 * v.u,
        }
    }

    pub fn mul_mat(&self, o: &IMat2) -> IMat2 {
        IMat2 {
            a11: self.a11 * o.a11 + self.a12 * o.a21,
            a12: self.a11 * o.a12 + self.a12 * o.a22,
            a21: self.a21 * o.a11 + self.a22 * o.a21,
            a22: self.a21 * o.a12 + self.a22 * o.a22,
        }
    }

    pub fn sub(&self, o: &IMat2) -> IMat2 {
        IMat2 {
            a11: self.a11 - o.a11,
            a12: self.a12 - o.a12,
            a21: self.a21 - o.a21,
            a22: self.a22 - o.a22,
        }
    }

    pub fn hull(&self, o: &IMat2) -> IMat2 {
        IMat2 {
            a11: self.a11.hull(o.a11),
            a12: self.a12.hull(o.a12),
            a21: self.a21.hull(o.a21),
            a22: self.a22.hull(o.a22),
        }
    }

    pub fn mid(&self) -> [[f64; 2]; 2] {
        [
            [self.a11.mid(), self.a12.mid()],
            [self.a21.mid(), self.a22.mid()],
        ]
    }

    /// Encloses the inverse of every member matrix.
    pub fn inverse(&self) -> Result<IMat2> {
        let d = self.det();
        if d.contains_zero() {
            return Err(Error::Singular(format!("det = {d:?}")));
        }
        Ok(IMat2 {
            a11: self.a22 / d,
            a12: -self.a12 / d,
            a21: -self.a21 / d,
            a22: self.a11 / d,
        })
    }

    pub fn entries(&self) -> [Interval; 4] {
        [self.a11, self.a12, self.a21, self.a22]
    }

    pub fn is_finite(&self) -> bool {
        self.entries().iter().all(|e| e.is_finite())
    }
}

/// Cramer's rule; encloses `A⁻¹b` for every member `A`, `b`.
pub fn mat2_solve(a: &IMat2, b: &IVec2) -> Result<IVec2> {
    let d = a.det();
    if d.contains_zero() {
        return Err(Error::Singular(format!("det = {d:?}")));
    }
    Ok(IVec2 {
        x: (a.a22 * b.x - a.a12 * b.u).div_nonzero(d),
        u: (a.a11 * b.u - a.a21 * b.x).div_nonzero(d),
    })
}

/// Real eigenvalues of a 2×2 interval matrix, larger modulus first when the
/// ordering is decidable.
pub fn eig2_real(a: &IMat2) -> Result<(Interval, Interval)> {
    let t = a.trace();
    let disc = (a.a11 - a.a22).sqr() + 4.0 * (a.a12 * a.a21);
    if !disc.is_pos() {
        return Err(Error::Inconclusive(format!("discriminant {disc:?}")));
    }
    let r = disc.sqrt()?;
    let l1 = (t + r) * 0.5;
    let l2 = (t - r) * 0.5;
    if l1.overlaps(l2) {
        return Err(Error::Inconclusive("eigenvalue enclosures overlap".into()));
    }
    if l2.mig() > l1.mag() {
        Ok((l2, l1))
    } else {
        Ok((l1, l2))
    }
}

/// 2D interval Newton step for `H(p) = 0`: `N = p̂ − DH(X)⁻¹ H(p̂)`.
pub fn newton2_step<H, D>(h: H, dh: D, x: &IVec2) -> Result<Option<IVec2>>
where
    H: Fn(&IVec2) -> Result<IVec2>,
    D: Fn(&IVec2) -> Result<IMat2>,
{
    let c = x.mid_box();
    let hc = h(&c)?;
    let j = dh(x)?;
    let step = mat2_solve(&j, &hc)?;
    let n = c - step;
    if !n.is_finite() {
        return Err(Error::Numerical("2D Newton image not finite".into()));
    }
    Ok(x.strictly_encloses(&n).then_some(n))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_sums_are_not_widened() {
        let r = Interval::new(1.0, 2.0) + Interval::new(3.0, 4.0);
        assert_eq!((r.lo(), r.hi()), (4.0, 6.0));
    }

    #[test]
    fn inexact_sum_is_widened() {
        let r = Interval::point(0.1) + Interval::point(0.2);
        assert!(r.lo() < r.hi());
        assert!(r.width() <= 2.0 * f64::EPSILON);
    }

    #[test]
    fn odd_and_even_powers() {
        let x = Interval::new(-2.0, 1.0);
        assert_eq!(x.powi(2), Interval::new(0.0, 4.0));
        assert_eq!(x.powi(3), Interval::new(-8.0, 1.0));
        assert_eq!(x.powi(0), Interval::ONE);
    }

    #[test]
    fn div_by_zero_interval() {
        assert!(Interval::ONE.checked_div(Interval::new(-1.0, 1.0)).is_err());
        assert_eq!(Interval::ONE / Interval::new(-1.0, 1.0), Interval::ENTIRE);
    }

    #[test]
    fn eig_order_by_modulus() {
        let m = IMat2::from_f64([[-0.5, 0.0], [0.0, 2.0]]);
        let (a, b) = eig2_real(&m).unwrap();
        assert!(a.contains(2.0) && b.contains(-0.5));
    }
}
