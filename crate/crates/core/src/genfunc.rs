//! Generating functions as polynomial balls.
//!
//! A [`PolyBall`] stores interval coefficients `c_ij` against the shifted and
//! scaled monomials `x̂^i ŷ^j`, `x̂ = (x − center)/rho`, together with a radius
//! `r`. It stands for every analytic `g` with `Σ |g_ij − p_ij| ≤ r` for some
//! polynomial `p` drawn from the coefficient intervals. On the bidisk
//! `|x̂|, |ŷ| ≤ 1` the coefficient ℓ¹ sum bounds the sup norm, so evaluation
//! only has to widen the Horner enclosure by `r`.

use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hexfloat::{parse_f64, to_hex};
use crate::interval::{add_up, mul_up, Interval};

pub const DEFAULT_RHO: f64 = 1.6;
pub const DEFAULT_CENTER: f64 = 0.5;

/// Derivatives live on the bidisk of radius `SHRINK * rho`.
pub const SHRINK: f64 = 15.0 / 16.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Var {
    X,
    Y,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolyBall {
    degree: usize,
    rho: f64,
    center: f64,
    ball: f64,
    /// Row `i` holds `c_ij` for `j = 0..=degree-i`.
    coeffs: Vec<Interval>,
}

#[inline]
fn tri_len(n: usize) -> usize {
    (n + 1) * (n + 2) / 2
}

#[inline]
fn row_off(n: usize, i: usize) -> usize {
    // Σ_{k<i} (n + 1 - k)
    i * (n + 1) - i * i.saturating_sub(1) / 2
}

impl PolyBall {
    pub fn zero(degree: usize, rho: f64, center: f64) -> Self {
        assert!(rho > 0.0, "rho must be positive");
        PolyBall {
            degree,
            rho,
            center,
            ball: 0.0,
            coeffs: vec![Interval::ZERO; tri_len(degree)],
        }
    }

    /// Constant function in the default basis.
    pub fn constant(degree: usize, c: Interval) -> Self {
        let mut p = PolyBall::zero(degree, DEFAULT_RHO, DEFAULT_CENTER);
        p.set(0, 0, c);
        p
    }

    /// Builds from point coefficients `f(i, j)`.
    pub fn from_fn(degree: usize, rho: f64, center: f64, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut p = PolyBall::zero(degree, rho, center);
        for i in 0..=degree {
            for j in 0..=degree - i {
                p.set(i, j, Interval::point(f(i, j)));
            }
        }
        p
    }

    /// Same basis and degree, zero coefficients.
    pub fn zero_like(&self) -> Self {
        PolyBall::zero(self.degree, self.rho, self.center)
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(i + j <= self.degree);
        row_off(self.degree, i) + j
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn ball_radius(&self) -> f64 {
        self.ball
    }

    /// `c_ij`, zero beyond the degree.
    pub fn coeff(&self, i: usize, j: usize) -> Interval {
        if i + j > self.degree {
            Interval::ZERO
        } else {
            self.coeffs[self.idx(i, j)]
        }
    }

    pub fn set(&mut self, i: usize, j: usize, c: Interval) {
        let k = self.idx(i, j);
        self.coeffs[k] = c;
    }

    pub fn with_ball(mut self, r: f64) -> Self {
        assert!(r >= 0.0);
        self.ball = r;
        self
    }

    /// Adds `r` to the ball radius.
    pub fn inflate_ball(&self, r: f64) -> Self {
        assert!(r >= 0.0, "negative inflation");
        let mut p = self.clone();
        p.ball = add_up(p.ball, r);
        p
    }

    /// Iterates `(i, j, c_ij)`.
    pub fn terms(&self) -> impl Iterator<Item = (usize, usize, Interval)> + '_ {
        let n = self.degree;
        (0..=n).flat_map(move |i| (0..=n - i).map(move |j| (i, j, self.coeff(i, j))))
    }

    pub fn same_basis(&self, o: &PolyBall) -> bool {
        self.rho == o.rho && self.center == o.center
    }

    /// Hat coordinate `(t − center)/rho`.
    pub fn hat(&self, t: Interval) -> Interval {
        (t - self.center) / Interval::point(self.rho)
    }

    fn hat_checked(&self, t: Interval) -> Result<Interval> {
        let h = self.hat(t);
        if !(h.mag() <= 1.0) {
            return Err(Error::Domain(format!(
                "{t:?} outside |t − {}| ≤ {}",
                self.center, self.rho
            )));
        }
        Ok(h)
    }

    /// Horner evaluation of the coefficient polynomial in hat coordinates,
    /// without the ball.
    pub fn eval_hat_poly(&self, xh: Interval, yh: Interval) -> Interval {
        let n = self.degree;
        let mut acc = Interval::ZERO;
        for i in (0..=n).rev() {
            let off = row_off(n, i);
            let row = &self.coeffs[off..off + n - i + 1];
            let mut r = Interval::ZERO;
            for c in row.iter().rev() {
                r = r * yh + *c;
            }
            acc = acc * xh + r;
        }
        acc
    }

    /// Encloses `g(x, y)` for every member `g`.
    pub fn eval(&self, x: Interval, y: Interval) -> Result<Interval> {
        let xh = self.hat_checked(x)?;
        let yh = self.hat_checked(y)?;
        let v = self.eval_hat_poly(xh, yh).inflate(self.ball);
        if v.lo().is_nan() || v.hi().is_nan() {
            return Err(Error::Numerical("PolyBall evaluation".into()));
        }
        Ok(v)
    }

    /// Non-rigorous evaluation with coefficient midpoints.
    pub fn eval_f64(&self, x: f64, y: f64) -> f64 {
        let xh = (x - self.center) / self.rho;
        let yh = (y - self.center) / self.rho;
        let n = self.degree;
        let mut acc = 0.0;
        for i in (0..=n).rev() {
            let off = row_off(n, i);
            let mut r = 0.0;
            for c in self.coeffs[off..off + n - i + 1].iter().rev() {
                r = r * yh + c.mid();
            }
            acc = acc * xh + r;
        }
        acc
    }

    /// Midpoint evaluation at complex hat coordinates.
    pub fn eval_hat_complex(&self, xh: Complex64, yh: Complex64) -> Complex64 {
        let n = self.degree;
        let mut acc = Complex64::new(0.0, 0.0);
        for i in (0..=n).rev() {
            let off = row_off(n, i);
            let mut r = Complex64::new(0.0, 0.0);
            for c in self.coeffs[off..off + n - i + 1].iter().rev() {
                r = r * yh + c.mid();
            }
            acc = acc * xh + r;
        }
        acc
    }

    /// Formal derivative in `which`, re-expanded on the bidisk of radius
    /// `SHRINK·rho`; the ball grows by the Cauchy factor `16/rho`.
    pub fn partial(&self, which: Var) -> PolyBall {
        let n = self.degree;
        let new_rho = self.rho * SHRINK;
        let nd = n.saturating_sub(1);
        let mut out = PolyBall::zero(nd, new_rho, self.center);
        // exact ratio of the two float radii, not SHRINK itself
        let q = Interval::point(new_rho) / Interval::point(self.rho);
        let inv_rho = Interval::ONE / Interval::point(self.rho);
        if n > 0 {
            for (i, j, c) in self.terms() {
                let (k, a, b) = match which {
                    Var::X if i > 0 => (i, i - 1, j),
                    Var::Y if j > 0 => (j, i, j - 1),
                    _ => continue,
                };
                let v = c * Interval::point(k as f64) * inv_rho * q.powi((a + b) as u32);
                out.set(a, b, v);
            }
        }
        out.ball = mul_up(self.ball, (Interval::point(16.0) * inv_rho).hi());
        out
    }

    /// Enclosure of `‖g‖_rho` over members: `Σ|c_ij| ± r`.
    pub fn norm_rho(&self) -> Interval {
        let mut hi = 0.0;
        let mut lo = Interval::ZERO;
        for c in &self.coeffs {
            hi = add_up(hi, c.mag());
            lo = lo + Interval::point(c.mig());
        }
        let hi = add_up(hi, self.ball);
        let lo = (lo.lo() - self.ball).next_down().max(0.0);
        Interval::new(lo.min(hi), hi)
    }

    /// Upper bound of the ℓ¹ sum of coefficient magnitudes (no ball).
    pub fn coeff_norm_upper(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |a, c| add_up(a, c.mag()))
    }

    /// `(i+1)c_{i+1,j}` and `(j+1)c_{j+1,i}` overlap for all `i, j`.
    pub fn check_symmetric(&self) -> bool {
        let n = self.degree;
        for i in 0..n {
            for j in 0..n - i {
                let a = self.coeff(i + 1, j) * Interval::point((i + 1) as f64);
                let b = self.coeff(j + 1, i) * Interval::point((j + 1) as f64);
                if !a.overlaps(b) {
                    return false;
                }
            }
        }
        true
    }

    /// Swaps the roles of the two variables.
    pub fn transposed(&self) -> PolyBall {
        let mut out = self.zero_like();
        for (i, j, c) in self.terms() {
            out.set(j, i, c);
        }
        out.ball = self.ball;
        out
    }

    /// Coefficientwise hull with another polynomial in the same basis.
    pub fn hull(&self, o: &PolyBall) -> PolyBall {
        assert!(self.same_basis(o) && self.degree == o.degree);
        let mut out = self.clone();
        for (c, d) in out.coeffs.iter_mut().zip(&o.coeffs) {
            *c = c.hull(*d);
        }
        out.ball = self.ball.max(o.ball);
        out
    }

    /// Re-expands at a different degree; dropped terms go into the ball.
    pub fn truncate(&self, degree: usize) -> PolyBall {
        let mut out = PolyBall::zero(degree, self.rho, self.center);
        let mut ball = self.ball;
        for (i, j, c) in self.terms() {
            if i + j <= degree {
                out.set(i, j, c);
            } else {
                ball = add_up(ball, c.mag());
            }
        }
        out.ball = ball;
        out
    }

    pub fn add(&self, o: &PolyBall) -> PolyBall {
        self.combine(o, |a, b| a + b)
    }

    pub fn sub(&self, o: &PolyBall) -> PolyBall {
        self.combine(o, |a, b| a - b)
    }

    fn combine(&self, o: &PolyBall, f: impl Fn(Interval, Interval) -> Interval) -> PolyBall {
        assert!(self.same_basis(o), "basis mismatch");
        let n = self.degree.max(o.degree);
        let mut out = PolyBall::zero(n, self.rho, self.center);
        for i in 0..=n {
            for j in 0..=n - i {
                out.set(i, j, f(self.coeff(i, j), o.coeff(i, j)));
            }
        }
        out.ball = add_up(self.ball, o.ball);
        out
    }

    pub fn scale(&self, k: Interval) -> PolyBall {
        let mut out = self.clone();
        for c in out.coeffs.iter_mut() {
            *c = *c * k;
        }
        out.ball = mul_up(self.ball, k.mag());
        out
    }

    pub fn add_const(&self, k: Interval) -> PolyBall {
        let mut out = self.clone();
        out.coeffs[0] = out.coeffs[0] + k;
        out
    }

    /// Product truncated at `degree`; discarded terms and ball cross terms
    /// are folded into the ball (ℓ¹ is submultiplicative on the bidisk).
    pub fn mul(&self, o: &PolyBall, degree: usize) -> PolyBall {
        assert!(self.same_basis(o), "basis mismatch");
        let mut out = PolyBall::zero(degree, self.rho, self.center);
        let mut tail = 0.0;
        for (i, j, a) in self.terms() {
            if a == Interval::ZERO {
                continue;
            }
            for (k, l, b) in o.terms() {
                let p = a * b;
                if i + k + j + l <= degree {
                    let t = out.idx(i + k, j + l);
                    out.coeffs[t] += p;
                } else {
                    tail = add_up(tail, p.mag());
                }
            }
        }
        let na = self.coeff_norm_upper();
        let nb = o.coeff_norm_upper();
        let cross = add_up(
            add_up(mul_up(na, o.ball), mul_up(nb, self.ball)),
            mul_up(self.ball, o.ball),
        );
        out.ball = add_up(tail, cross);
        out
    }

    /// Encloses `g(a, b)` for every member `g` of `self` and every member
    /// of the argument balls. The arguments carry physical values; their
    /// hat images under `self`'s basis must have norm at most one.
    pub fn compose(&self, a: &PolyBall, b: &PolyBall, degree: usize) -> Result<PolyBall> {
        let inv = Interval::ONE / Interval::point(self.rho);
        let ah = a.add_const(-Interval::point(self.center)).scale(inv);
        let bh = b.add_const(-Interval::point(self.center)).scale(inv);
        for (name, h) in [("first", &ah), ("second", &bh)] {
            if !(h.norm_rho().hi() <= 1.0) {
                return Err(Error::Domain(format!(
                    "{name} argument leaves the bidisk (norm {:?})",
                    h.norm_rho()
                )));
            }
        }
        let n = self.degree;
        let mut bpow = Vec::with_capacity(n + 1);
        bpow.push(PolyBall::constant_in(a, degree, Interval::ONE));
        for j in 1..=n {
            let next = bpow[j - 1].mul(&bh, degree);
            bpow.push(next);
        }
        let mut acc = PolyBall::constant_in(a, degree, Interval::ZERO);
        for i in (0..=n).rev() {
            let mut row = PolyBall::constant_in(a, degree, Interval::ZERO);
            for j in 0..=n - i {
                let c = self.coeff(i, j);
                if c != Interval::ZERO {
                    row = row.add(&bpow[j].scale(c));
                }
            }
            acc = acc.mul(&ah, degree).add(&row);
        }
        acc.ball = add_up(acc.ball, self.ball);
        Ok(acc)
    }

    fn constant_in(like: &PolyBall, degree: usize, c: Interval) -> PolyBall {
        let mut p = PolyBall::zero(degree, like.rho, like.center);
        p.set(0, 0, c);
        p
    }

    /// The physical coordinate `x` (or `y`) as a degree-one polynomial.
    pub fn coordinate(which: Var, degree: usize, rho: f64, center: f64) -> PolyBall {
        let mut p = PolyBall::zero(degree.max(1), rho, center);
        p.set(0, 0, Interval::point(center));
        match which {
            Var::X => p.set(1, 0, Interval::point(rho)),
            Var::Y => p.set(0, 1, Interval::point(rho)),
        }
        p
    }

    /// Text form: header lines then `i j lo hi` with hex floats.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "degree {}", self.degree);
        let _ = writeln!(s, "rho {}", to_hex(self.rho));
        let _ = writeln!(s, "center {}", to_hex(self.center));
        let _ = writeln!(s, "ball_radius {}", to_hex(self.ball));
        for (i, j, c) in self.terms() {
            if c != Interval::ZERO {
                let _ = writeln!(s, "{i} {j} {} {}", to_hex(c.lo()), to_hex(c.hi()));
            }
        }
        s
    }

    pub fn from_text(text: &str) -> Result<PolyBall> {
        let mut degree = None;
        let mut rho = DEFAULT_RHO;
        let mut center = DEFAULT_CENTER;
        let mut ball = 0.0;
        let mut terms = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let perr = |msg: String| Error::Parse { line: ln + 1, msg };
            let num = |t: &str| parse_f64(t).map_err(|_| perr(format!("bad number `{t}`")));
            let toks: Vec<&str> = line.split_whitespace().collect();
            match toks.as_slice() {
                ["degree", d] => degree = Some(d.parse::<usize>().map_err(|e| perr(e.to_string()))?),
                ["rho", v] => rho = num(v)?,
                ["center", v] => center = num(v)?,
                ["ball_radius", v] => ball = num(v)?,
                [i, j, lo, hi] => {
                    let i = i.parse::<usize>().map_err(|e| perr(e.to_string()))?;
                    let j = j.parse::<usize>().map_err(|e| perr(e.to_string()))?;
                    let (lo, hi) = (num(lo)?, num(hi)?);
                    let c = Interval::try_new(lo, hi).map_err(|e| perr(e.to_string()))?;
                    terms.push((ln + 1, i, j, c));
                }
                _ => return Err(perr(format!("unrecognised line `{line}`"))),
            }
        }
        let degree = degree.ok_or(Error::Parse {
            line: 0,
            msg: "missing degree".into(),
        })?;
        if !(rho > 0.0) || !(ball >= 0.0) {
            return Err(Error::Parse {
                line: 0,
                msg: "rho must be positive and ball_radius non-negative".into(),
            });
        }
        let mut p = PolyBall::zero(degree, rho, center);
        p.ball = ball;
        for (line, i, j, c) in terms {
            if i + j > degree {
                return Err(Error::Parse {
                    line,
                    msg: format!("term ({i},{j}) exceeds degree {degree}"),
                });
            }
            p.set(i, j, c);
        }
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_is_dense() {
        let n = 5;
        let mut seen = vec![false; tri_len(n)];
        let p = PolyBall::zero(n, 1.0, 0.0);
        for i in 0..=n {
            for j in 0..=n - i {
                let k = p.idx(i, j);
                assert!(!seen[k]);
                seen[k] = true;
            }
        }
        assert!(seen.iter().all(|&b| b));
    }

    #[test]
    fn text_round_trip() {
        let p = PolyBall::from_fn(4, 1.6, 0.5, |i, j| 0.1 * i as f64 - 0.3 * j as f64 + 1e-3)
            .with_ball(1.5e-9);
        let q = PolyBall::from_text(&p.to_text()).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn compose_matches_pointwise() {
        let p = PolyBall::from_fn(3, 1.6, 0.5, |i, j| 1.0 / (1 + i + 2 * j) as f64);
        let half = Interval::point(0.5);
        let x = PolyBall::coordinate(Var::X, 3, 1.6, 0.5).add_const(-half).scale(half).add_const(half);
        let y = PolyBall::coordinate(Var::Y, 3, 1.6, 0.5);
        let y = y.mul(&y, 3).scale(Interval::point(0.2));
        let q = p.compose(&x, &y, 6).unwrap();
        for &(a, b) in &[(0.1, 0.2), (1.5, -0.7), (0.5, 0.5)] {
            let want = p.eval_f64(0.5 + 0.5 * (a - 0.5), 0.2 * b * b);
            let got = q.eval(Interval::point(a), Interval::point(b)).unwrap();
            assert!(got.inflate(1e-13).contains(want), "{got:?} vs {want}");
        }
    }

}
