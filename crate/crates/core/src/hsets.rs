//! Planar h-sets and covering relations.
//!
//! An h-set is the parallelogram `c + p·l_u·e_u + q·l_s·e_s`, `|p|, |q| ≤ 1`.
//! `p` is the exit (unstable) model coordinate and `q` the entry (stable) one.
//! A covering `N ⟹ M` is certified through the planar conditions
//!
//! * exit edges `p = ±1` of `N` land in `p < −1` and `p > 1` of `M`
//!   (in either order),
//! * the image of `N` misses `M⁺ = {|p| ≤ 1, |q| = 1}`,
//! * the image of the centre line `q = 0` has `|q| < 1` wherever `|p| ≤ 1`,
//!
//! each checked on adaptively bisected pieces with interval enclosures.

use serde::{Deserialize, Serialize};

use crate::cones::{check_cone_condition, ConeCert, QuadraticForm};
use crate::error::{Error, Result};
use crate::interval::{IMat2, IVec2, Interval};
use crate::map::PlanarMap;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HSet {
    pub center: [f64; 2],
    pub e_u: [f64; 2],
    pub e_s: [f64; 2],
    pub l_u: f64,
    pub l_s: f64,
}

impl HSet {
    pub fn new(center: [f64; 2], e_u: [f64; 2], e_s: [f64; 2], l_u: f64, l_s: f64) -> Result<Self> {
        let det = e_u[0] * e_s[1] - e_u[1] * e_s[0];
        if !(l_u > 0.0 && l_s > 0.0) {
            return Err(Error::Domain(format!("h-set scales must be positive, got {l_u}, {l_s}")));
        }
        if !(det.abs() > 1e-12 * (norm(e_u) * norm(e_s))) {
            return Err(Error::Singular("h-set spanning vectors are dependent".into()));
        }
        Ok(HSet {
            center,
            e_u,
            e_s,
            l_u,
            l_s,
        })
    }

    /// Reflection-symmetric set with `e_s = T(e_u)`.
    pub fn symmetric(center: [f64; 2], e_u: [f64; 2], l_u: f64, l_s: f64) -> Result<Self> {
        HSet::new(center, e_u, [e_u[0], -e_u[1]], l_u, l_s)
    }

    /// `[l_u·e_u | l_s·e_s]`.
    pub fn frame(&self) -> IMat2 {
        let lu = Interval::point(self.l_u);
        let ls = Interval::point(self.l_s);
        IMat2::new(
            lu * self.e_u[0],
            ls * self.e_s[0],
            lu * self.e_u[1],
            ls * self.e_s[1],
        )
    }

    pub fn frame_inv(&self) -> Result<IMat2> {
        self.frame().inverse()
    }

    pub fn center_box(&self) -> IVec2 {
        IVec2::point(self.center[0], self.center[1])
    }

    /// `c_N⁻¹`: model coordinates to phase space.
    pub fn from_model(&self, b: &IVec2) -> IVec2 {
        self.center_box() + self.frame().mul_vec(b)
    }

    /// `c_N`: phase space to model coordinates.
    pub fn to_model(&self, x: &IVec2) -> Result<IVec2> {
        Ok(self.frame_inv()?.mul_vec(&(*x - self.center_box())))
    }

    /// Interval hull of the support.
    pub fn hull(&self) -> IVec2 {
        self.from_model(&unit_box())
    }

    pub fn corners(&self) -> [[f64; 2]; 4] {
        let at = |p: f64, q: f64| {
            [
                self.center[0] + p * self.l_u * self.e_u[0] + q * self.l_s * self.e_s[0],
                self.center[1] + p * self.l_u * self.e_u[1] + q * self.l_s * self.e_s[1],
            ]
        };
        [at(-1.0, -1.0), at(1.0, -1.0), at(1.0, 1.0), at(-1.0, 1.0)]
    }

    /// Float model coordinates of a point.
    pub fn model_f64(&self, x: [f64; 2]) -> [f64; 2] {
        let (a, b) = (self.l_u * self.e_u[0], self.l_s * self.e_s[0]);
        let (c, d) = (self.l_u * self.e_u[1], self.l_s * self.e_s[1]);
        let det = a * d - b * c;
        let (dx, du) = (x[0] - self.center[0], x[1] - self.center[1]);
        [(d * dx - b * du) / det, (a * du - c * dx) / det]
    }

    pub fn point_f64(&self, b: [f64; 2]) -> [f64; 2] {
        [
            self.center[0] + b[0] * self.l_u * self.e_u[0] + b[1] * self.l_s * self.e_s[0],
            self.center[1] + b[0] * self.l_u * self.e_u[1] + b[1] * self.l_s * self.e_s[1],
        ]
    }

    /// `N^T`: same support, exit and entry roles swapped.
    pub fn transposed(&self) -> HSet {
        HSet {
            center: self.center,
            e_u: self.e_s,
            e_s: self.e_u,
            l_u: self.l_s,
            l_s: self.l_u,
        }
    }
}

fn norm(v: [f64; 2]) -> f64 {
    v[0].hypot(v[1])
}

pub(crate) fn unit_box() -> IVec2 {
    IVec2::new(Interval::new(-1.0, 1.0), Interval::new(-1.0, 1.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum HSetTransform {
    /// The involution `(x, u) ↦ (x, −u)`.
    T,
    /// `Λ^k` with `Λ(x, u) = (λx, μu)`.
    Lambda { k: i32, lambda: Interval, mu: Interval },
}

/// Image of an h-set under `T` or `Λ^k`. For `Λ^k` the set is built from
/// the midpoint scalings and its scales are inflated so that it contains
/// the image under every member of the scaling intervals.
pub fn transform_hset(n: &HSet, op: HSetTransform) -> Result<HSet> {
    match op {
        HSetTransform::T => Ok(HSet {
            center: [n.center[0], -n.center[1]],
            e_u: [n.e_u[0], -n.e_u[1]],
            e_s: [n.e_s[0], -n.e_s[1]],
            ..*n
        }),
        HSetTransform::Lambda { k, lambda, mu } => {
            if k == 0 {
                return Ok(*n);
            }
            let pow = |v: Interval| -> Result<Interval> {
                let p = v.powi(k.unsigned_abs());
                if k < 0 {
                    p.recip()
                } else {
                    Ok(p)
                }
            };
            let (lk, mk) = (pow(lambda)?, pow(mu)?);
            let (lm, mm) = (lk.mid(), mk.mid());
            let mut out = HSet::new(
                [lm * n.center[0], mm * n.center[1]],
                [lm * n.e_u[0], mm * n.e_u[1]],
                [lm * n.e_s[0], mm * n.e_s[1]],
                n.l_u,
                n.l_s,
            )?;
            // member image in the midpoint set's model coordinates:
            // shift + K·[−1,1]², K = M⁻¹ D M, D = diag(λ'/λm, μ'/μm)
            let minv = out.frame_inv()?;
            let d = IMat2::diag(lk * Interval::point(lm).recip()?, mk * Interval::point(mm).recip()?);
            let k_mat = minv.mul_mat(&d).mul_mat(&out.frame());
            let c = n.center_box();
            let dc = IVec2::new((lk - lm) * c.x, (mk - mm) * c.u);
            let shift = minv.mul_vec(&dc);
            let bp = (shift.x.abs() + k_mat.a11.abs() + k_mat.a12.abs()).hi();
            let bq = (shift.u.abs() + k_mat.a21.abs() + k_mat.a22.abs()).hi();
            out.l_u *= bp.max(1.0);
            out.l_s *= bq.max(1.0);
            Ok(out)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Backward,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverOptions {
    /// Initial number of pieces per edge.
    pub subdivision: usize,
    /// Finest allowed subdivision of `[−1, 1]`.
    pub max_subdivision: usize,
    /// Initial grid per side for the interior condition.
    pub interior_grid: usize,
}

impl Default for CoverOptions {
    fn default() -> Self {
        CoverOptions {
            subdivision: 64,
            max_subdivision: 1024,
            interior_grid: 8,
        }
    }
}

impl CoverOptions {
    pub fn with_subdivision(subdivision: usize) -> Self {
        CoverOptions {
            subdivision,
            max_subdivision: subdivision.max(1024),
            ..Default::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverCert {
    pub from: HSet,
    pub to: HSet,
    pub direction: Direction,
    pub iterate: i32,
    /// Worst clearance in model coordinates over all checked pieces.
    pub margin: f64,
    pub pieces: usize,
    /// Interval hull of the model derivative over the source.
    pub model_derivative: IMat2,
}

/// Model-coordinate map `f_c = c_M ∘ f ∘ c_N⁻¹`.
struct ModelMap<'a> {
    f: &'a dyn PlanarMap,
    n: HSet,
    m: HSet,
    n_frame: IMat2,
    m_inv: IMat2,
}

impl<'a> ModelMap<'a> {
    fn new(f: &'a dyn PlanarMap, n: &HSet, m: &HSet) -> Result<Self> {
        Ok(ModelMap {
            f,
            n: *n,
            m: *m,
            n_frame: n.frame(),
            m_inv: m.frame_inv()?,
        })
    }

    /// Mean-value enclosure of `f_c` over a model piece, and `Df_c` there.
    fn enclose(&self, b: &IVec2) -> Result<(IVec2, IMat2)> {
        let x = self.n.from_model(b);
        let (y, j) = self.f.image_and_jacobian(&x)?;
        let jm = self.m_inv.mul_mat(&j).mul_mat(&self.n_frame);
        let direct = self.m_inv.mul_vec(&(y - self.m.center_box()));
        let c = b.mid_box();
        let yc = self.f.image(&self.n.from_model(&c))?;
        let fc = self.m_inv.mul_vec(&(yc - self.m.center_box()));
        let mv = fc + jm.mul_vec(&(*b - c));
        Ok((mv.intersect(&direct).unwrap_or(mv), jm))
    }

    fn eval_f64(&self, b: [f64; 2]) -> Option<[f64; 2]> {
        let y = self.f.eval_f64(self.n.point_f64(b))?;
        Some(self.m.model_f64(y))
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Verdict {
    Ok,
    Refine,
    Fail,
}

struct Sweep<'a> {
    model: &'a ModelMap<'a>,
    min_width: f64,
    margin: f64,
    pieces: usize,
    jac: Option<IMat2>,
}

impl Sweep<'_> {
    fn note_jac(&mut self, j: IMat2) {
        self.jac = Some(match self.jac {
            Some(h) => h.hull(&j),
            None => j,
        });
    }

    /// Adaptive check of `test` over `piece`, bisecting refinable failures.
    fn run(
        &mut self,
        piece: IVec2,
        condition: &str,
        test: &dyn Fn(&IVec2, &ModelMap) -> (Verdict, f64),
    ) -> Result<()> {
        let mut stack = vec![piece];
        while let Some(b) = stack.pop() {
            let (v, clearance) = match self.model.enclose(&b) {
                Ok((img, j)) => {
                    self.note_jac(j);
                    let (v, c) = test(&img, self.model);
                    if v == Verdict::Refine {
                        (refine_or_decide(&b, self.model, test), c)
                    } else {
                        (v, c)
                    }
                }
                Err(Error::MapDomain(_)) | Err(Error::Singular(_)) | Err(Error::Domain(_)) => {
                    (Verdict::Refine, f64::NEG_INFINITY)
                }
                Err(e) => return Err(e),
            };
            self.pieces += 1;
            match v {
                Verdict::Ok => self.margin = self.margin.min(clearance),
                Verdict::Refine if b.max_width() > self.min_width => {
                    let (l, r) = split_longest(&b);
                    stack.push(l);
                    stack.push(r);
                }
                _ => {
                    return Err(Error::NotCovered {
                        condition: condition.to_string(),
                        piece: [b.x.lo(), b.x.hi(), b.u.lo(), b.u.hi()],
                        refinable: v == Verdict::Refine,
                    })
                }
            }
        }
        Ok(())
    }
}

/// A piece whose enclosure does not separate: look at the float image of
/// its centre to tell a real violation from a loose enclosure.
fn refine_or_decide(b: &IVec2, m: &ModelMap, test: &dyn Fn(&IVec2, &ModelMap) -> (Verdict, f64)) -> Verdict {
    match m.eval_f64(b.mid()) {
        Some(y) => match test(&IVec2::point(y[0], y[1]), m).0 {
            Verdict::Ok | Verdict::Refine => Verdict::Refine,
            Verdict::Fail => Verdict::Fail,
        },
        None => Verdict::Refine,
    }
}

fn split_longest(b: &IVec2) -> (IVec2, IVec2) {
    if b.x.width() >= b.u.width() {
        let (l, r) = b.x.bisect();
        (IVec2::new(l, b.u), IVec2::new(r, b.u))
    } else {
        let (l, r) = b.u.bisect();
        (IVec2::new(b.x, l), IVec2::new(b.x, r))
    }
}

fn exit_test(sign: f64) -> impl Fn(&IVec2, &ModelMap) -> (Verdict, f64) {
    move |img: &IVec2, _: &ModelMap| {
        let p = img.x * sign;
        if p.lo() > 1.0 {
            (Verdict::Ok, p.lo() - 1.0)
        } else if p.hi() <= 1.0 {
            (Verdict::Fail, p.hi() - 1.0)
        } else {
            (Verdict::Refine, 0.0)
        }
    }
}

/// Image box misses `{|p| ≤ 1, |q| = 1}`.
fn entry_test(img: &IVec2, _: &ModelMap) -> (Verdict, f64) {
    let p_out = (img.x.abs().lo() - 1.0).max(0.0);
    if img.x.abs().lo() > 1.0 {
        return (Verdict::Ok, p_out);
    }
    let q = img.u.abs();
    if q.hi() < 1.0 {
        (Verdict::Ok, 1.0 - q.hi())
    } else if q.lo() > 1.0 {
        (Verdict::Ok, q.lo() - 1.0)
    } else if img.x.is_point() && img.u.is_point() && img.x.abs().hi() <= 1.0 && q.lo() == 1.0 {
        (Verdict::Fail, 0.0)
    } else {
        (Verdict::Refine, 0.0)
    }
}

/// Centre-line image stays in `|q| < 1` where `|p| ≤ 1`.
fn centre_test(img: &IVec2, _: &ModelMap) -> (Verdict, f64) {
    if img.x.abs().lo() > 1.0 {
        return (Verdict::Ok, img.x.abs().lo() - 1.0);
    }
    let q = img.u.abs();
    if q.hi() < 1.0 {
        (Verdict::Ok, 1.0 - q.hi())
    } else if q.lo() >= 1.0 && img.x.abs().hi() <= 1.0 {
        (Verdict::Fail, 1.0 - q.lo())
    } else {
        (Verdict::Refine, 0.0)
    }
}

/// Certifies `N ⟹ M` under `f`.
pub fn check_covering(f: &dyn PlanarMap, n: &HSet, m: &HSet, opts: &CoverOptions) -> Result<CoverCert> {
    let model = ModelMap::new(f, n, m)?;
    let mut sweep = Sweep {
        model: &model,
        min_width: 2.0 / opts.max_subdivision.max(1) as f64,
        margin: f64::INFINITY,
        pieces: 0,
        jac: None,
    };
    let k = opts.subdivision.max(1);
    let qs = Interval::new(-1.0, 1.0).split(k);

    // orientation from the float image of the edge midpoints
    let left = model.eval_f64([-1.0, 0.0]);
    let right = model.eval_f64([1.0, 0.0]);
    let sign = match (left, right) {
        (Some(l), Some(r)) if l[0] < r[0] => 1.0,
        (Some(_), Some(_)) => -1.0,
        _ => 1.0,
    };
    let neg = exit_test(-sign);
    let pos = exit_test(sign);
    for q in &qs {
        sweep.run(IVec2::new(Interval::point(-1.0), *q), "exit edge p = -1", &neg)?;
        sweep.run(IVec2::new(Interval::point(1.0), *q), "exit edge p = +1", &pos)?;
    }
    for p in &qs {
        sweep.run(IVec2::new(*p, Interval::ZERO), "centre line", &centre_test)?;
    }
    let g = opts.interior_grid.max(1);
    let cells = Interval::new(-1.0, 1.0).split(g);
    for p in &cells {
        for q in &cells {
            sweep.run(IVec2::new(*p, *q), "entry set", &entry_test)?;
        }
    }
    Ok(CoverCert {
        from: *n,
        to: *m,
        direction: Direction::Forward,
        iterate: 1,
        margin: sweep.margin,
        pieces: sweep.pieces,
        model_derivative: sweep.jac.unwrap_or(IMat2::identity()),
    })
}

/// Certifies `N ⟸ M` for `f`, i.e. `M^T ⟹ N^T` under `f⁻¹`; `f_inv` is
/// the inverse map.
pub fn check_backcovering(f_inv: &dyn PlanarMap, n: &HSet, m: &HSet, opts: &CoverOptions) -> Result<CoverCert> {
    let mut cert = check_covering(f_inv, &m.transposed(), &n.transposed(), opts)?;
    cert.from = *n;
    cert.to = *m;
    cert.direction = Direction::Backward;
    Ok(cert)
}

/// Hull of `Df_c` over the whole source, from an `grid × grid` tiling.
pub fn model_derivative(f: &dyn PlanarMap, n: &HSet, m: &HSet, grid: usize) -> Result<IMat2> {
    let model = ModelMap::new(f, n, m)?;
    let cells = Interval::new(-1.0, 1.0).split(grid.max(1));
    let mut acc: Option<IMat2> = None;
    for p in &cells {
        for q in &cells {
            let (_, j) = model.enclose(&IVec2::new(*p, *q))?;
            acc = Some(acc.map_or(j, |a| a.hull(&j)));
        }
    }
    Ok(acc.unwrap_or(IMat2::identity()))
}

/// One link of a chain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainLink {
    pub from: usize,
    pub to: usize,
    /// Power of the base map.
    pub power: usize,
    pub direction: Direction,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkCert {
    pub cover: CoverCert,
    pub cone: Option<ConeCert>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ChainCert {
    pub links: Vec<LinkCert>,
    pub closed: bool,
}

/// Supplies forward and inverse iterates of the base map.
pub trait IterateSource {
    fn forward(&self, power: usize) -> Box<dyn PlanarMap + '_>;
    fn backward(&self, power: usize) -> Box<dyn PlanarMap + '_>;
}

impl IterateSource for crate::map::MapHandle {
    fn forward(&self, power: usize) -> Box<dyn PlanarMap + '_> {
        Box::new(crate::map::Iterate::new(self, power))
    }

    fn backward(&self, power: usize) -> Box<dyn PlanarMap + '_> {
        Box::new(crate::map::Iterate::new(self, power).inverse())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainOptions {
    pub cover: CoverOptions,
    /// Cone form used on every set, if any.
    pub cone: Option<QuadraticForm>,
    /// Tiling per side for the cone derivative hull.
    pub cone_grid: usize,
}

impl Default for ChainOptions {
    fn default() -> Self {
        ChainOptions {
            cover: CoverOptions::default(),
            cone: None,
            cone_grid: 16,
        }
    }
}

/// Verifies every link, stopping at the first failure.
pub fn verify_chain(
    src: &dyn IterateSource,
    sets: &[HSet],
    links: &[ChainLink],
    opts: &ChainOptions,
) -> Result<ChainCert> {
    let mut out = Vec::with_capacity(links.len());
    for (i, l) in links.iter().enumerate() {
        let wrap = |e: Error| -> Error {
            match e {
                Error::NotCovered {
                    condition,
                    piece,
                    refinable,
                } => Error::NotCovered {
                    condition: format!("link {i} ({} -> {}): {condition}", l.from, l.to),
                    piece,
                    refinable,
                },
                Error::ConeFailure(m) => Error::ConeFailure(format!("link {i} ({} -> {}): {m}", l.from, l.to)),
                other => other,
            }
        };
        let (n, m) = (
            sets.get(l.from).ok_or_else(|| Error::Incomplete(format!("no set {}", l.from)))?,
            sets.get(l.to).ok_or_else(|| Error::Incomplete(format!("no set {}", l.to)))?,
        );
        let (cover, cone) = match l.direction {
            Direction::Forward => {
                let f = src.forward(l.power);
                let mut c = check_covering(f.as_ref(), n, m, &opts.cover).map_err(wrap)?;
                c.iterate = l.power as i32;
                let cone = match opts.cone {
                    Some(q) => {
                        let j = model_derivative(f.as_ref(), n, m, opts.cone_grid).map_err(wrap)?;
                        Some(check_cone_condition(&j, &q, &q).map_err(wrap)?)
                    }
                    None => None,
                };
                (c, cone)
            }
            Direction::Backward => {
                let f = src.backward(l.power);
                let mut c = check_backcovering(f.as_ref(), n, m, &opts.cover).map_err(wrap)?;
                c.iterate = -(l.power as i32);
                let cone = match opts.cone {
                    Some(q) => {
                        let (nt, mt) = (n.transposed(), m.transposed());
                        let j = model_derivative(f.as_ref(), &mt, &nt, opts.cone_grid).map_err(wrap)?;
                        let qt = q.transposed();
                        Some(check_cone_condition(&j, &qt, &qt).map_err(wrap)?)
                    }
                    None => None,
                };
                (c, cone)
            }
        };
        out.push(LinkCert { cover, cone });
    }
    let closed = match (links.first(), links.last()) {
        (Some(a), Some(b)) => a.from == b.to,
        _ => false,
    };
    Ok(ChainCert { links: out, closed })
}
