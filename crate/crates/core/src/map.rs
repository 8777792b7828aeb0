//! The area-preserving map generated by `s`: `F(x, −s(y, x)) = (y, s(x, y))`.
//!
//! Given `(x, u)` the map solves `u + s(y, x) = 0` for `y` by interval Newton
//! and returns `(y, s(x, y))`. Reversibility `T∘F∘T = F⁻¹` with
//! `T(x, u) = (x, −u)` gives the inverse for free.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::genfunc::{PolyBall, Var};
use crate::hsets::HSet;
use crate::interval::{eig2_real, newton2_step, newton_solve, IMat2, IVec2, Interval, NewtonVerdict};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NewtonPolicy {
    /// Samples of `u + s(·, x)` used to bracket the root.
    pub scan_samples: usize,
    pub max_iter: usize,
    /// Growth factor of the Newton box after an inconclusive attempt.
    pub inflation: f64,
    /// Bisection depth for boxes on which the solve is inconclusive.
    pub max_depth: usize,
}

impl Default for NewtonPolicy {
    fn default() -> Self {
        NewtonPolicy {
            scan_samples: 64,
            max_iter: 30,
            inflation: 4.0,
            max_depth: 12,
        }
    }
}

/// Symmetric Hessian `[[f_xx, f_xu], [f_xu, f_uu]]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hess {
    pub xx: Interval,
    pub xu: Interval,
    pub uu: Interval,
}

impl Hess {
    pub const ZERO: Hess = Hess {
        xx: Interval::ZERO,
        xu: Interval::ZERO,
        uu: Interval::ZERO,
    };

    fn scale(&self, k: Interval) -> Hess {
        Hess {
            xx: self.xx * k,
            xu: self.xu * k,
            uu: self.uu * k,
        }
    }

    fn add(&self, o: &Hess) -> Hess {
        Hess {
            xx: self.xx + o.xx,
            xu: self.xu + o.xu,
            uu: self.uu + o.uu,
        }
    }

    /// `Jᵀ H J`.
    fn congruence(&self, j: &IMat2) -> Hess {
        let (a, b, c, d) = (j.a11, j.a12, j.a21, j.a22);
        Hess {
            xx: self.xx * a.sqr() + 2.0 * (self.xu * (a * c)) + self.uu * c.sqr(),
            xu: self.xx * (a * b) + self.xu * (a * d + b * c) + self.uu * (c * d),
            uu: self.xx * b.sqr() + 2.0 * (self.xu * (b * d)) + self.uu * d.sqr(),
        }
    }
}

/// Second-order enclosure of a planar map over a box.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Jet2 {
    pub val: IVec2,
    pub jac: IMat2,
    /// Hessians of the two components.
    pub hess: [Hess; 2],
}

impl Jet2 {
    /// Jet of `f ∘ g` given the jet of `g` over a box and the jet of `f`
    /// over a box containing `g`'s image.
    pub fn compose(f: &Jet2, g: &Jet2) -> Jet2 {
        let jf = &f.jac;
        let jac = jf.mul_mat(&g.jac);
        let row = [[jf.a11, jf.a12], [jf.a21, jf.a22]];
        let mut hess = [Hess::ZERO; 2];
        for k in 0..2 {
            let inner = g.hess[0].scale(row[k][0]).add(&g.hess[1].scale(row[k][1]));
            hess[k] = inner.add(&f.hess[k].congruence(&g.jac));
        }
        Jet2 { val: f.val, jac, hess }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MapHandle {
    pub s: PolyBall,
    pub policy: NewtonPolicy,
    s1: PolyBall,
    s2: PolyBall,
    s11: PolyBall,
    s12: PolyBall,
    s22: PolyBall,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixedPointCert {
    pub p0: IVec2,
    /// Unstable eigenvalue (modulus > 1).
    pub eig_plus: Interval,
    pub eig_minus: Interval,
    pub evec_u: IVec2,
    pub evec_s: IVec2,
}

impl MapHandle {
    pub fn new(s: PolyBall) -> Self {
        MapHandle::with_policy(s, NewtonPolicy::default())
    }

    pub fn with_policy(s: PolyBall, policy: NewtonPolicy) -> Self {
        let s1 = s.partial(Var::X);
        let s2 = s.partial(Var::Y);
        let s11 = s1.partial(Var::X);
        let s12 = s1.partial(Var::Y);
        let s22 = s2.partial(Var::Y);
        MapHandle {
            s,
            policy,
            s1,
            s2,
            s11,
            s12,
            s22,
        }
    }

    /// `(∂₁s, ∂₂s)` balls.
    pub fn first_partials(&self) -> (&PolyBall, &PolyBall) {
        (&self.s1, &self.s2)
    }

    /// Float root of `u + s(y, x) = 0`, bracketed by a sign scan.
    pub fn locate_y(&self, x: f64, u: f64) -> Option<f64> {
        let c = self.s1.center();
        let r = self.s1.rho();
        let n = self.policy.scan_samples.max(2);
        let h = |y: f64| u + self.s.eval_f64(y, x);
        let mut bracket = None;
        let mut prev = (c - r, h(c - r));
        for k in 1..=n {
            let y = c - r + 2.0 * r * k as f64 / n as f64;
            let v = h(y);
            if prev.1 == 0.0 || prev.1.signum() != v.signum() {
                if bracket.is_some() {
                    return None; // ambiguous branch
                }
                bracket = Some((prev.0, y));
            }
            prev = (y, v);
        }
        let (mut a, mut b) = bracket?;
        let ha_neg = h(a) < 0.0;
        let mut y = 0.5 * (a + b);
        for _ in 0..100 {
            let v = h(y);
            if v == 0.0 {
                return Some(y);
            }
            if (v < 0.0) == ha_neg {
                a = y;
            } else {
                b = y;
            }
            let d = self.s1.eval_f64(y, x);
            let mut next = y - v / d;
            if !(next > a.min(b) && next < a.max(b)) {
                next = 0.5 * (a + b);
            }
            if (next - y).abs() <= 4.0 * f64::EPSILON * (1.0 + y.abs()) {
                return Some(next);
            }
            y = next;
        }
        Some(y)
    }

    /// Interval Newton for `u + s(y, x) = 0` on `Y`.
    pub fn solve_y(&self, x: Interval, u: Interval, y: Interval) -> Result<NewtonVerdict> {
        let f = |yy: Interval| Ok(u + self.s.eval(yy, x)?);
        let df = |yy: Interval| self.s1.eval(yy, x);
        match newton_solve(f, df, y, self.policy.max_iter) {
            Err(Error::Domain(_)) => Ok(NewtonVerdict::Inconclusive),
            other => other,
        }
    }

    /// Certified `y` enclosure for the box `x × u`, without subdivision.
    fn y_enclosure(&self, x: Interval, u: Interval) -> Result<Interval> {
        let (xm, um) = (x.mid(), u.mid());
        let y0 = self
            .locate_y(xm, um)
            .ok_or_else(|| Error::MapDomain(format!("no unique y for ({xm}, {um})")))?;
        let a = self.s1.eval_f64(y0, xm);
        let b = self.s2.eval_f64(y0, xm);
        let mut w = 2.0 * ((b / a).abs() * x.rad() + (u.rad() + self.s.ball_radius()) / a.abs())
            + 1e-13 * (1.0 + y0.abs());
        for _ in 0..10 {
            let yb = Interval::centered(y0, w);
            if let NewtonVerdict::UniqueRoot(r) = self.solve_y(x, u, yb)? {
                return Ok(r);
            }
            w *= self.policy.inflation;
        }
        Err(Error::MapDomain(format!("y solve inconclusive on {x:?} × {u:?}")))
    }

    fn y_enclosure_split(&self, p: &IVec2, depth: usize) -> Result<Interval> {
        match self.y_enclosure(p.x, p.u) {
            Ok(y) => Ok(y),
            Err(e) if depth >= self.policy.max_depth => Err(e),
            Err(_) => {
                let (a, b) = if p.x.width() >= p.u.width() {
                    let (l, r) = p.x.bisect();
                    (IVec2::new(l, p.u), IVec2::new(r, p.u))
                } else {
                    let (l, r) = p.u.bisect();
                    (IVec2::new(p.x, l), IVec2::new(p.x, r))
                };
                let ya = self.y_enclosure_split(&a, depth + 1)?;
                let yb = self.y_enclosure_split(&b, depth + 1)?;
                Ok(ya.hull(yb))
            }
        }
    }

    /// Encloses `y(x, u)` over the box.
    pub fn solve_box(&self, p: &IVec2) -> Result<Interval> {
        self.y_enclosure_split(p, 0)
    }

    /// Direct enclosure `(y, s(x, y))`.
    pub fn apply_f(&self, p: &IVec2) -> Result<IVec2> {
        let y = self.solve_box(p)?;
        let v = self.s.eval(p.x, y).map_err(|e| Error::MapDomain(e.to_string()))?;
        Ok(IVec2::new(y, v))
    }

    pub fn apply_f_inv(&self, p: &IVec2) -> Result<IVec2> {
        Ok(self.apply_f(&p.reflect())?.reflect())
    }

    fn dfy(&self, x: Interval, y: Interval) -> Result<IMat2> {
        let me = |e: Error| Error::MapDomain(e.to_string());
        let a = self.s1.eval(y, x).map_err(me)?;
        let b = self.s2.eval(y, x).map_err(me)?;
        let p = self.s1.eval(x, y).map_err(me)?;
        let q = self.s2.eval(x, y).map_err(me)?;
        if a.contains_zero() {
            return Err(Error::Singular(format!("∂₁s(y, x) = {a:?}")));
        }
        let ia = a.recip()?;
        let ba = b * ia;
        Ok(IMat2::new(-ba, -ia, p - q * ba, -q * ia))
    }

    /// Derivative enclosure over the box.
    pub fn df(&self, p: &IVec2) -> Result<IMat2> {
        let y = self.solve_box(p)?;
        self.dfy(p.x, y)
    }

    pub fn df_inv(&self, p: &IVec2) -> Result<IMat2> {
        let t = IMat2::from_f64([[1.0, 0.0], [0.0, -1.0]]);
        Ok(t.mul_mat(&self.df(&p.reflect())?).mul_mat(&t))
    }

    /// Mean-value enclosure `F(c) + DF(p)(p − c)` intersected with the
    /// direct one, together with `DF(p)`.
    pub fn image_and_df(&self, p: &IVec2) -> Result<(IVec2, IMat2)> {
        let y = self.solve_box(p)?;
        let j = self.dfy(p.x, y)?;
        let direct = IVec2::new(y, self.s.eval(p.x, y).map_err(|e| Error::MapDomain(e.to_string()))?);
        if p.x.is_point() && p.u.is_point() {
            return Ok((direct, j));
        }
        let c = p.mid_box();
        let fc = self.apply_f(&c)?;
        let mv = fc + j.mul_vec(&(*p - c));
        Ok((mv.intersect(&direct).unwrap_or(mv), j))
    }

    /// Second-order jet of `F` over the box.
    pub fn jet(&self, p: &IVec2) -> Result<Jet2> {
        let (val, jac) = self.image_and_df(p)?;
        let (x, y) = (p.x, val.x);
        let me = |e: Error| Error::MapDomain(e.to_string());
        let a = self.s1.eval(y, x).map_err(me)?;
        let b = self.s2.eval(y, x).map_err(me)?;
        let q = self.s2.eval(x, y).map_err(me)?;
        let (a11, a12, a22) = (
            self.s11.eval(y, x).map_err(me)?,
            self.s12.eval(y, x).map_err(me)?,
            self.s22.eval(y, x).map_err(me)?,
        );
        let (p11, p12, p22) = (
            self.s11.eval(x, y).map_err(me)?,
            self.s12.eval(x, y).map_err(me)?,
            self.s22.eval(x, y).map_err(me)?,
        );
        let ia = a.recip()?;
        let yx = -b * ia;
        let yu = -ia;
        let yxx = -(a11 * yx.sqr() + 2.0 * (a12 * yx) + a22) * ia;
        let yxu = -(a11 * (yu * yx) + a12 * yu) * ia;
        let yuu = -(a11 * yu.sqr()) * ia;
        let uxx = p11 + 2.0 * (p12 * yx) + p22 * yx.sqr() + q * yxx;
        let uxu = p12 * yu + p22 * (yx * yu) + q * yxu;
        let uuu = p22 * yu.sqr() + q * yuu;
        Ok(Jet2 {
            val,
            jac,
            hess: [
                Hess {
                    xx: yxx,
                    xu: yxu,
                    uu: yuu,
                },
                Hess {
                    xx: uxx,
                    xu: uxu,
                    uu: uuu,
                },
            ],
        })
    }

    /// Float image, `None` outside the domain.
    pub fn f_f64(&self, p: [f64; 2]) -> Option<[f64; 2]> {
        let y = self.locate_y(p[0], p[1])?;
        Some([y, self.s.eval_f64(p[0], y)])
    }

    pub fn f_inv_f64(&self, p: [f64; 2]) -> Option<[f64; 2]> {
        let q = self.f_f64([p[0], -p[1]])?;
        Some([q[0], -q[1]])
    }

    pub fn df_f64(&self, p: [f64; 2]) -> Option<[[f64; 2]; 2]> {
        let y = self.locate_y(p[0], p[1])?;
        let x = p[0];
        let a = self.s1.eval_f64(y, x);
        let b = self.s2.eval_f64(y, x);
        let pp = self.s1.eval_f64(x, y);
        let q = self.s2.eval_f64(x, y);
        Some([[-b / a, -1.0 / a], [pp - q * b / a, -q / a]])
    }

    /// Certified fixed point near `guess` by 2D interval Newton.
    pub fn fixed_point_near(&self, guess: [f64; 2]) -> Result<FixedPointCert> {
        let mut p = guess;
        for _ in 0..50 {
            let Some(fp) = self.f_f64(p) else { break };
            let Some(j) = self.df_f64(p) else { break };
            let (g0, g1) = (fp[0] - p[0], fp[1] - p[1]);
            let (a, b, c, d) = (j[0][0] - 1.0, j[0][1], j[1][0], j[1][1] - 1.0);
            let det = a * d - b * c;
            let dx = (d * g0 - b * g1) / det;
            let du = (a * g1 - c * g0) / det;
            p = [p[0] - dx, p[1] - du];
            if dx.abs().max(du.abs()) < 1e-16 {
                break;
            }
        }
        let h = |q: &IVec2| Ok(self.apply_f(q)? - *q);
        let dh = |q: &IVec2| Ok(self.df(q)?.sub(&IMat2::identity()));
        let mut w = 1e-10;
        let mut found = None;
        for _ in 0..12 {
            let x = IVec2::new(Interval::centered(p[0], w), Interval::centered(p[1], w));
            if let Some(n) = newton2_step(h, dh, &x)? {
                found = Some(n);
                break;
            }
            w *= 8.0;
        }
        let mut p0 = found.ok_or_else(|| Error::Inconclusive("fixed-point Newton did not contract".into()))?;
        // a few refinements; each image still lies inside the previous box
        for _ in 0..3 {
            match newton2_step(h, dh, &p0) {
                Ok(Some(n)) if n.max_width() < p0.max_width() => p0 = n,
                _ => break,
            }
        }
        let j = self.df(&p0)?;
        let (e1, e2) = eig2_real(&j)?;
        if !(e1.mig() > 1.0 && e2.mag() < 1.0) {
            return Err(Error::Inconclusive(format!("not hyperbolic: {e1:?}, {e2:?}")));
        }
        Ok(FixedPointCert {
            p0,
            eig_plus: e1,
            eig_minus: e2,
            evec_u: eigvec(&j, e1)?,
            evec_s: eigvec(&j, e2)?,
        })
    }

    /// The fixed point `p₀` near `(0.5776, 0)`.
    pub fn fixed_point(&self) -> Result<FixedPointCert> {
        self.fixed_point_near([0.5776, 0.0])
    }
}

/// Unit eigenvector enclosure with positive first component.
fn eigvec(j: &IMat2, l: Interval) -> Result<IVec2> {
    let v = IVec2::new(j.a12, l - j.a11);
    let n = v.norm();
    let mut e = IVec2::new(v.x.checked_div(n)?, v.u.checked_div(n)?);
    if e.x.hi() < 0.0 {
        e = -e;
    }
    Ok(e)
}

/// Planar map with box enclosures, as consumed by the covering and cone
/// checks.
pub trait PlanarMap: Sync {
    /// Enclosure of the image of the box and of the derivative over it.
    fn image_and_jacobian(&self, p: &IVec2) -> Result<(IVec2, IMat2)>;

    fn image(&self, p: &IVec2) -> Result<IVec2> {
        Ok(self.image_and_jacobian(p)?.0)
    }

    fn jacobian(&self, p: &IVec2) -> Result<IMat2> {
        Ok(self.image_and_jacobian(p)?.1)
    }

    /// Float evaluation for sampling; `None` outside the domain.
    fn eval_f64(&self, p: [f64; 2]) -> Option<[f64; 2]>;
}

/// `F^power` or `F^{-power}`.
#[derive(Clone, Copy, Debug)]
pub struct Iterate<'a> {
    pub map: &'a MapHandle,
    pub power: usize,
    pub inverse: bool,
}

impl<'a> Iterate<'a> {
    pub fn new(map: &'a MapHandle, power: usize) -> Self {
        Iterate {
            map,
            power,
            inverse: false,
        }
    }

    pub fn inverse(self) -> Self {
        Iterate {
            inverse: !self.inverse,
            ..self
        }
    }
}

impl PlanarMap for Iterate<'_> {
    fn image_and_jacobian(&self, p: &IVec2) -> Result<(IVec2, IMat2)> {
        let t = IMat2::from_f64([[1.0, 0.0], [0.0, -1.0]]);
        let mut b = if self.inverse { p.reflect() } else { *p };
        let mut j = IMat2::identity();
        for _ in 0..self.power {
            let (nb, dj) = self.map.image_and_df(&b)?;
            j = dj.mul_mat(&j);
            b = nb;
        }
        if self.inverse {
            Ok((b.reflect(), t.mul_mat(&j).mul_mat(&t)))
        } else {
            Ok((b, j))
        }
    }

    fn eval_f64(&self, p: [f64; 2]) -> Option<[f64; 2]> {
        let mut q = p;
        for _ in 0..self.power {
            q = if self.inverse {
                self.map.f_inv_f64(q)?
            } else {
                self.map.f_f64(q)?
            };
        }
        Some(q)
    }
}

pub fn apply_g(m: &MapHandle, p: &IVec2) -> Result<IVec2> {
    Iterate::new(m, 3).image(p)
}

pub fn dg(m: &MapHandle, p: &IVec2) -> Result<IMat2> {
    Iterate::new(m, 3).jacobian(p)
}

/// Rectangular grid of cells for domain finding.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainGrid {
    pub x: (f64, f64),
    pub u: (f64, f64),
    pub nx: usize,
    pub nu: usize,
    /// Number of iterates that must be defined on each cell.
    pub power: usize,
    /// Bisection depth for cells that fail.
    #[serde(default)]
    pub refine: usize,
}

impl DomainGrid {
    pub fn cells(&self) -> Vec<IVec2> {
        if self.nx == 0 || self.nu == 0 {
            return Vec::new();
        }
        let xs = Interval::new(self.x.0, self.x.1).split(self.nx);
        let us = Interval::new(self.u.0, self.u.1).split(self.nu);
        let mut out = Vec::with_capacity(self.nx * self.nu);
        for x in &xs {
            for u in &us {
                out.push(IVec2::new(*x, *u));
            }
        }
        out
    }
}

/// Cells of the grid on which `F, …, F^power` are certified. A failing
/// cell is bisected up to `grid.refine` times and its certified parts kept.
pub fn find_domain(m: &MapHandle, grid: &DomainGrid) -> Vec<IVec2> {
    let quick = MapHandle {
        policy: NewtonPolicy {
            max_depth: 0,
            ..m.policy
        },
        ..m.clone()
    };
    let ok = |c: &IVec2| {
        let mut b = *c;
        for _ in 0..grid.power.max(1) {
            match quick.image_and_df(&b) {
                Ok((nb, _)) => b = nb,
                Err(_) => return false,
            }
        }
        true
    };
    let mut out = Vec::new();
    let mut stack: Vec<(IVec2, usize)> = grid.cells().into_iter().rev().map(|c| (c, 0)).collect();
    while let Some((c, depth)) = stack.pop() {
        if ok(&c) {
            out.push(c);
        } else if depth < grid.refine {
            let (xs, us) = (c.x.split(2), c.u.split(2));
            for x in xs.iter().rev() {
                for u in us.iter().rev() {
                    stack.push((IVec2::new(*x, *u), depth + 1));
                }
            }
        }
    }
    out
}

/// Whether the union of `cells` covers the parallelogram of `set`.
pub fn cells_cover_set(cells: &[IVec2], set: &HSet) -> bool {
    let n = 24;
    (0..=n).all(|a| {
        (0..=n).all(|b| {
            let p = set.point_f64([2.0 * a as f64 / n as f64 - 1.0, 2.0 * b as f64 / n as f64 - 1.0]);
            cells.iter().any(|c| c.contains_point(p))
        })
    })
}

/// Whether the union of `cells` covers `query`.
pub fn cells_cover(cells: &[IVec2], query: &IVec2) -> bool {
    // sample the query on a fine lattice including its corners
    let n = 24;
    for a in 0..=n {
        for b in 0..=n {
            let x = query.x.lo() + (query.x.hi() - query.x.lo()) * a as f64 / n as f64;
            let u = query.u.lo() + (query.u.hi() - query.u.lo()) * b as f64 / n as f64;
            if !cells.iter().any(|c| c.contains_point([x, u])) {
                return false;
            }
        }
    }
    true
}

pub fn domain_csv(cells: &[IVec2]) -> String {
    let mut s = String::from("x_lo,x_hi,u_lo,u_hi\n");
    for c in cells {
        s.push_str(&format!("{},{},{},{}\n", c.x.lo(), c.x.hi(), c.u.lo(), c.u.hi()));
    }
    s
}
