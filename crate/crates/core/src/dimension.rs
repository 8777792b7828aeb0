//! Horseshoe certification for `G = F³` and Hausdorff dimension bounds for
//! its hyperbolic set.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coords::{CoordChange, JetMap};
use crate::error::{Error, Result};
use crate::hsets::{verify_chain, ChainCert, ChainLink, ChainOptions, HSet, IterateSource};
use crate::interval::{IMat2, IVec2, Interval};
use crate::map::{Hess, Jet2, PlanarMap};

/// Unstable cone slopes `v₂/v₁` per component, in `𝒯` coordinates. Stable
/// cones are their images under `T` unless `HorseshoeSpec::stable` is set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConeFieldSpec {
    pub slopes: Vec<Interval>,
}

impl ConeFieldSpec {
    pub fn new(slopes: Vec<Interval>) -> Result<Self> {
        for s in &slopes {
            if !(s.is_finite() && s.width() > 0.0) {
                return Err(Error::Domain(format!("degenerate cone slope interval {s:?}")));
            }
        }
        Ok(ConeFieldSpec { slopes })
    }
}

/// Which part of each component enters the sup bounds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SupDomain {
    /// The whole component.
    Whole,
    /// Pieces whose image meets the interval hull of all components.
    ImageMeetsHull,
    /// Pieces whose image meets some component.
    ImageMeetsComponents,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    /// Initial tiling per side, in model coordinates.
    pub grid: usize,
    /// Bisection depth below the initial tiling.
    pub max_depth: usize,
    /// Stop splitting once every entry of the derivative has width below
    /// this fraction of the largest entry.
    pub rel_width: f64,
    /// Relative slack allowed between a piece bound and the largest point
    /// estimate before the piece is split further.
    pub tolerance: f64,
    pub domain: SupDomain,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            grid: 16,
            max_depth: 10,
            rel_width: 0.01,
            tolerance: 0.03,
            domain: SupDomain::ImageMeetsComponents,
        }
    }
}

/// One piece of a component together with the jet of `𝒯 ∘ g ∘ 𝒯⁻¹` there.
#[derive(Clone, Debug)]
pub struct Leaf {
    pub component: usize,
    /// Piece in model coordinates of its component.
    pub model: IVec2,
    pub depth: usize,
    /// Piece in original coordinates.
    pub phase: IVec2,
    /// Image of the piece, original coordinates.
    pub image: IVec2,
    pub jet: Jet2,
    /// Components met by the image.
    pub targets: Vec<usize>,
}

impl Leaf {
    /// Centre of the piece in original coordinates.
    pub fn centre(&self) -> [f64; 2] {
        self.phase.mid()
    }
}

fn model_overlaps(h: &HSet, b: &IVec2) -> bool {
    match h.to_model(b) {
        Ok(m) => m.x.lo() <= 1.0 && m.x.hi() >= -1.0 && m.u.lo() <= 1.0 && m.u.hi() >= -1.0,
        Err(_) => true,
    }
}

fn tilde_jet(coord: &CoordChange, x: &IVec2, f: &Jet2) -> Result<Jet2> {
    let ti = coord.inv_jet_at(x)?;
    let t = coord.jet(&f.val);
    Ok(Jet2::compose(&t, &Jet2::compose(f, &ti)))
}

fn quarter(b: &IVec2) -> [IVec2; 4] {
    let (x0, x1) = b.x.bisect();
    let (u0, u1) = b.u.bisect();
    [IVec2::new(x0, u0), IVec2::new(x0, u1), IVec2::new(x1, u0), IVec2::new(x1, u1)]
}

/// Whether every derivative entry has width below `rel` times the largest.
pub fn jacobian_tight(j: &IMat2, rel: f64) -> bool {
    let e = j.entries();
    let scale = e.iter().map(|v| v.mag()).fold(0.0, f64::max);
    e.iter().all(|v| v.width() <= rel * scale)
}

#[derive(Clone, Copy, Debug)]
struct Item {
    comp: usize,
    model: IVec2,
    depth: usize,
}

impl Item {
    fn children(&self) -> impl Iterator<Item = Item> + '_ {
        quarter(&self.model).into_iter().map(move |m| Item {
            comp: self.comp,
            model: m,
            depth: self.depth + 1,
        })
    }
}

/// Tiles components of a horseshoe and encloses the conjugated jet on each
/// piece.
pub struct Sweeper<'a> {
    g: &'a dyn JetMap,
    coord: CoordChange,
    comps: &'a [HSet],
    hull: IVec2,
    opts: SweepOptions,
    hessians: bool,
}

impl<'a> Sweeper<'a> {
    pub fn new(
        g: &'a dyn JetMap,
        coord: &CoordChange,
        comps: &'a [HSet],
        opts: &SweepOptions,
        hessians: bool,
    ) -> Result<Self> {
        let hull = comps
            .iter()
            .map(|c| c.hull())
            .reduce(|a, b| a.hull(&b))
            .ok_or_else(|| Error::Domain("no components".into()))?;
        Ok(Sweeper {
            g,
            coord: *coord,
            comps,
            hull,
            opts: *opts,
            hessians,
        })
    }

    fn leaf(&self, it: &Item) -> Result<Option<Leaf>> {
        let x = self.comps[it.comp].from_model(&it.model);
        let f = if self.hessians {
            self.g.jet(&x)?
        } else {
            let (val, jac) = self.g.image_and_jacobian(&x)?;
            Jet2 {
                val,
                jac,
                hess: [Hess::ZERO; 2],
            }
        };
        let targets: Vec<usize> = (0..self.comps.len())
            .filter(|&j| model_overlaps(&self.comps[j], &f.val))
            .collect();
        let keep = match self.opts.domain {
            SupDomain::Whole => true,
            SupDomain::ImageMeetsHull => f.val.overlaps(&self.hull),
            SupDomain::ImageMeetsComponents => !targets.is_empty(),
        };
        if !keep {
            return Ok(None);
        }
        let jet = tilde_jet(&self.coord, &x, &f)?;
        Ok(Some(Leaf {
            component: it.comp,
            model: it.model,
            depth: it.depth,
            phase: x,
            image: f.val,
            jet,
            targets,
        }))
    }

    fn run(&self, mut pending: Vec<Item>, mut out: Vec<Leaf>, split: &(dyn Fn(&Leaf) -> bool + Sync)) -> Result<Vec<Leaf>> {
        let max = self.opts.max_depth;
        while !pending.is_empty() {
            let res: Vec<Result<(Option<Leaf>, Vec<Item>)>> = pending
                .par_iter()
                .map(|it| match self.leaf(it) {
                    Ok(None) => Ok((None, Vec::new())),
                    Ok(Some(l)) if it.depth < max && split(&l) => Ok((None, it.children().collect())),
                    Ok(Some(l)) => Ok((Some(l), Vec::new())),
                    Err(_) if it.depth < max => Ok((None, it.children().collect())),
                    Err(e) => Err(e),
                })
                .collect();
            pending = Vec::new();
            for r in res {
                let (l, c) = r?;
                out.extend(l);
                pending.extend(c);
            }
        }
        Ok(out)
    }

    /// Initial tiling, split while `split` holds.
    pub fn tile(&self, split: &(dyn Fn(&Leaf) -> bool + Sync)) -> Result<Vec<Leaf>> {
        let n = self.opts.grid.max(1);
        let side = Interval::new(-1.0, 1.0).split(n);
        let mut items = Vec::with_capacity(self.comps.len() * n * n);
        for comp in 0..self.comps.len() {
            for p in &side {
                for q in &side {
                    items.push(Item {
                        comp,
                        model: IVec2::new(*p, *q),
                        depth: 0,
                    });
                }
            }
        }
        self.run(items, Vec::new(), split)
    }

    /// Splits the leaves on which `split` holds, recursively.
    pub fn refine(&self, leaves: Vec<Leaf>, split: &(dyn Fn(&Leaf) -> bool + Sync)) -> Result<Vec<Leaf>> {
        let max = self.opts.max_depth;
        let (todo, keep): (Vec<Leaf>, Vec<Leaf>) = leaves.into_iter().partition(|l| l.depth < max && split(l));
        let items = todo
            .iter()
            .flat_map(|l| {
                Item {
                    comp: l.component,
                    model: l.model,
                    depth: l.depth,
                }
                .children()
                .collect::<Vec<_>>()
            })
            .collect();
        self.run(items, keep, split)
    }

    /// Point jet of the conjugated map at a piece centre.
    pub fn point_jet(&self, p: [f64; 2]) -> Result<Jet2> {
        let x = IVec2::point(p[0], p[1]);
        let f = if self.hessians {
            self.g.jet(&x)?
        } else {
            let (val, jac) = self.g.image_and_jacobian(&x)?;
            Jet2 {
                val,
                jac,
                hess: [Hess::ZERO; 2],
            }
        };
        tilde_jet(&self.coord, &x, &f)
    }
}

/// Adaptive tiling of the components until the derivative entries are
/// tight to `opts.rel_width`.
pub fn sweep(
    g: &dyn JetMap,
    coord: &CoordChange,
    comps: &[HSet],
    opts: &SweepOptions,
    hessians: bool,
) -> Result<Vec<Leaf>> {
    let rel = opts.rel_width;
    Sweeper::new(g, coord, comps, opts, hessians)?.tile(&|l: &Leaf| !jacobian_tight(&l.jet.jac, rel))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HorseshoeSpec {
    /// `Δ′ᵢ` in original coordinates.
    pub components: Vec<HSet>,
    pub links: Vec<ChainLink>,
    pub cones: ConeFieldSpec,
    pub coord: CoordChange,
    pub chain: ChainOptions,
    pub sweep: SweepOptions,
    /// Subintervals of each cone used for the expansion bounds.
    pub slope_splits: usize,
    /// Stable cones as ranges of `v₁/v₂` in original coordinates. `None`
    /// takes the reflection of the unstable cones, as for reversible maps.
    pub stable: Option<Vec<Interval>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HorseshoeCert {
    pub components: Vec<HSet>,
    pub chain: ChainCert,
    /// Pieces on which cone invariance was checked.
    pub cone_pieces: usize,
    /// Smallest distance from an image slope to the target cone boundary.
    pub cone_margin: f64,
    pub a_minus: f64,
    pub a_plus: f64,
    /// Unstable cone slopes in original coordinates, per component.
    pub transversal_slopes: Vec<Interval>,
    /// Lower bound on the angle between stable and unstable cones.
    pub min_angle: f64,
}

/// Image slope interval of the cone `S` under `j`.
pub fn image_slopes(j: &IMat2, s: Interval) -> Result<Interval> {
    let den = j.a11 + j.a12 * s;
    if den.contains_zero() {
        return Err(Error::ConeFailure(format!("cone maps through the vertical, a + bσ = {den:?}")));
    }
    let at = |v: f64| -> Result<Interval> { (j.a21 + j.a22 * v).checked_div(j.a11 + j.a12 * v) };
    Ok(at(s.lo())?.hull(at(s.hi())?))
}

/// Enclosure of `|j v| / |v|` over `v = (1, σ)`, `σ ∈ s`.
pub fn cone_expansion(j: &IMat2, s: Interval, splits: usize) -> Result<Interval> {
    let mut acc: Option<Interval> = None;
    for p in s.split(splits.max(1)) {
        let w1 = j.a11 + j.a12 * p;
        let w2 = j.a21 + j.a22 * p;
        let r = ((w1.sqr() + w2.sqr()).checked_div(p.sqr() + 1.0)?).sqrt()?;
        acc = Some(acc.map_or(r, |a| a.hull(r)));
    }
    acc.ok_or_else(|| Error::Domain("empty cone".into()))
}

fn cone_margin(l: &Leaf, cones: &ConeFieldSpec) -> Result<f64> {
    let r = image_slopes(&l.jet.jac, cones.slopes[l.component])?;
    let mut m = f64::INFINITY;
    for &t in &l.targets {
        let st = cones.slopes[t];
        m = m.min((r.lo() - st.lo()).min(st.hi() - r.hi()));
    }
    Ok(m)
}

pub fn verify_horseshoe(
    src: &dyn IterateSource,
    g: &dyn JetMap,
    spec: &HorseshoeSpec,
) -> Result<HorseshoeCert> {
    let k = spec.components.len();
    if spec.cones.slopes.len() != k {
        return Err(Error::Domain(format!("{k} components but {} cones", spec.cones.slopes.len())));
    }
    let chain = verify_chain(src, &spec.components, &spec.links, &spec.chain)?;
    let mut sw = spec.sweep;
    sw.domain = SupDomain::ImageMeetsComponents;
    let sweeper = Sweeper::new(g, &spec.coord, &spec.components, &sw, false)?;
    let cones = &spec.cones;
    let splits = spec.slope_splits;
    let bad = |l: &Leaf| !matches!(cone_margin(l, cones), Ok(m) if m > 0.0);
    let leaves = sweeper.tile(&bad)?;
    if leaves.is_empty() {
        return Err(Error::Incomplete("no piece maps into the components".into()));
    }
    // point estimates of the extreme expansion steer the refinement
    let est: Vec<(f64, f64)> = leaves
        .par_iter()
        .filter_map(|l| {
            let j = sweeper.point_jet(l.centre()).ok()?;
            let e = cone_expansion(&j.jac, cones.slopes[l.component], splits).ok()?;
            Some((e.lo(), e.hi()))
        })
        .collect();
    let lo_est = est.iter().map(|e| e.0).fold(f64::INFINITY, f64::min);
    let hi_est = est.iter().map(|e| e.1).fold(0.0, f64::max);
    let tol = sw.tolerance;
    let loose = |l: &Leaf| {
        bad(l)
            || match cone_expansion(&l.jet.jac, cones.slopes[l.component], splits) {
                Ok(e) => e.lo() < lo_est * (1.0 - tol) || e.hi() > hi_est * (1.0 + tol),
                Err(_) => true,
            }
    };
    let leaves = sweeper.refine(leaves, &loose)?;
    let mut margin = f64::INFINITY;
    let (mut a_minus, mut a_plus) = (f64::INFINITY, 0.0f64);
    for l in &leaves {
        let m = cone_margin(l, cones)?;
        if !(m > 0.0) {
            let r = image_slopes(&l.jet.jac, cones.slopes[l.component])?;
            return Err(Error::ConeFailure(format!(
                "component {}: image slopes {r:?} leave the target cone on piece {:?}",
                l.component, l.phase
            )));
        }
        margin = margin.min(m);
        let e = cone_expansion(&l.jet.jac, cones.slopes[l.component], splits)?;
        a_minus = a_minus.min(e.lo());
        a_plus = a_plus.max(e.hi());
    }
    if !(a_minus > 1.0) {
        return Err(Error::ConeFailure(format!("cone vectors are not expanded, A- = {a_minus}")));
    }
    let mut slopes = Vec::with_capacity(k);
    let mut angle = f64::INFINITY;
    for (i, (c, s)) in spec.components.iter().zip(&spec.cones.slopes).enumerate() {
        let h = c.hull();
        let g1 = spec.coord.jacobian(&h).a21 * (1.0 / spec.coord.scale);
        let u = *s - g1;
        let a = match &spec.stable {
            None => {
                if u.contains_zero() {
                    return Err(Error::ConeFailure(format!("unstable cone {u:?} contains the horizontal")));
                }
                // stable cone at the same point is the reflection −u
                2.0 * u.mig().atan()
            }
            Some(st) => {
                let w = st
                    .get(i)
                    .ok_or_else(|| Error::Domain(format!("no stable cone for component {i}")))?;
                let d = Interval::point(std::f64::consts::FRAC_PI_2) - w.atan() - u.atan();
                let pi = std::f64::consts::PI;
                if !(d.lo() > 0.0 && d.hi() < pi) {
                    return Err(Error::ConeFailure(format!("stable cone {w:?} meets unstable cone {u:?}")));
                }
                d.lo().min(pi - d.hi())
            }
        };
        angle = angle.min(a);
        slopes.push(u);
    }
    Ok(HorseshoeCert {
        components: spec.components.clone(),
        chain,
        cone_pieces: leaves.len(),
        cone_margin: margin,
        a_minus,
        a_plus,
        transversal_slopes: slopes,
        min_angle: angle,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClauseCheck {
    pub clause: String,
    pub ok: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ClassFReport {
    pub c: f64,
    pub epsilon: f64,
    pub gamma: f64,
    /// Factor applied to coordinates so that the diameters are at most 1.
    pub rescale: f64,
    pub pieces: usize,
    pub clauses: Vec<ClauseCheck>,
}

impl ClassFReport {
    pub fn all_ok(&self) -> bool {
        self.clauses.iter().all(|c| c.ok)
    }
}

#[derive(Clone, Copy, Debug)]
struct PieceBounds {
    eps: f64,
    c: f64,
    gamma: f64,
    a_mag: f64,
    a_mig: f64,
    d_mag: f64,
    det_has_one: bool,
    grad_eta: f64,
}

fn ratio(num: Interval, den: Interval) -> f64 {
    if !(den.lo() > 0.0) {
        return f64::INFINITY;
    }
    num.abs().checked_div(den).map(|r| r.hi()).unwrap_or(f64::INFINITY)
}

/// Tighter of two enclosures of the same quantity.
fn meet(a: Interval, b: Interval) -> Interval {
    a.intersect(b).unwrap_or(a)
}

fn piece_bounds(jet: &Jet2, scale: f64) -> PieceBounds {
    let j = &jet.jac;
    let (a, b, c, d) = (j.a11, j.a12, j.a21, j.a22);
    // second derivatives scale inversely with the coordinates
    let h = |v: Interval| v * (1.0 / scale);
    let [h1, h2] = jet.hess;
    let (ax, au, bu) = (h(h1.xx), h(h1.xu), h(h1.uu));
    let (cx, cu, du) = (h(h2.xx), h(h2.xu), h(h2.uu));
    let (bx, dx) = (au, cu);
    let tx = |px: Interval, pu: Interval| px * d - pu * c;
    let tu = |px: Interval, pu: Interval| -(px * b) + pu * a;
    // area preservation: ∂ã/∂x = −∂c̃/∂u and ∂b̃/∂x = −∂d̃/∂u
    let atx = meet(tx(ax, au), -tu(cx, cu));
    let btx = meet(tx(bx, bu), -tu(dx, du));
    let aa = a.abs();
    let am1 = aa - 1.0;
    let aam1 = aa * am1;
    let m = b.abs().max(c.abs());
    let eps = ratio(m, am1);
    let cc = if am1.lo() > 0.0 {
        (aa * m).checked_div(am1).map(|r| r.hi()).unwrap_or(f64::INFINITY)
    } else {
        f64::INFINITY
    };
    let g_a = [btx, tu(bx, bu), tx(cx, cu), atx];
    let g_b = [au, bu, cx, cu];
    let g_c = [tu(ax, au), tx(dx, du)];
    let g_d = [ax, du];
    let mut gamma = 0.0f64;
    for v in g_a.iter().chain(&g_b) {
        gamma = gamma.max(ratio(*v, am1));
    }
    for v in g_c.iter().chain(&g_d) {
        gamma = gamma.max(ratio(*v, aam1));
    }
    let grad = (ax.sqr() + au.sqr())
        .sqrt()
        .and_then(|r| r.checked_div(aa))
        .map(|r| r.hi())
        .unwrap_or(f64::INFINITY);
    PieceBounds {
        eps,
        c: cc,
        gamma,
        a_mag: aa.hi(),
        a_mig: aa.lo(),
        d_mag: d.mag(),
        det_has_one: j.det().contains(1.0),
        grad_eta: grad,
    }
}

fn diameter(b: &IVec2) -> f64 {
    (Interval::point(b.x.width()).sqr() + Interval::point(b.u.width()).sqr())
        .sqrt()
        .map(|r| r.hi())
        .unwrap_or(f64::INFINITY)
}

/// Constants `C, ε, γ` of the class ℱ(C, ε, γ) for `𝒯 ∘ g ∘ 𝒯⁻¹` on the
/// components, with a per-clause report.
pub fn duarte_constants(
    g: &dyn JetMap,
    coord: &CoordChange,
    comps: &[HSet],
    opts: &SweepOptions,
) -> Result<ClassFReport> {
    let sweeper = Sweeper::new(g, coord, comps, opts, true)?;
    let leaves = sweeper.tile(&|_: &Leaf| false)?;
    if leaves.is_empty() {
        return Err(Error::Incomplete("no pieces in the sup domain".into()));
    }
    // hulls of the components and their images in 𝒯 coordinates
    let k = comps.len();
    let hulls = |leaves: &[Leaf]| {
        let mut dom: Vec<Option<IVec2>> = vec![None; k];
        let mut img: Vec<Option<IVec2>> = vec![None; k];
        for l in leaves {
            let p = coord.apply(&l.phase);
            let q = l.jet.val;
            dom[l.component] = Some(dom[l.component].map_or(p, |h| h.hull(&p)));
            img[l.component] = Some(img[l.component].map_or(q, |h| h.hull(&q)));
        }
        (dom, img)
    };
    let union = |v: &[Option<IVec2>]| v.iter().flatten().copied().reduce(|a, b| a.hull(&b));
    let (dom, img) = hulls(&leaves);
    let (du, iu) = (union(&dom).unwrap(), union(&img).unwrap());
    let diam = diameter(&du).max(diameter(&iu));
    let scale = if diam > 1.0 { 1.0 / diam } else { 1.0 };

    // point estimates at the piece centres steer the refinement
    let est: Vec<PieceBounds> = leaves
        .par_iter()
        .filter_map(|l| sweeper.point_jet(l.centre()).ok().map(|j| piece_bounds(&j, scale)))
        .collect();
    let top = |f: fn(&PieceBounds) -> f64| est.iter().map(f).fold(0.0, f64::max);
    let (eps_e, c_e, gamma_e) = (top(|b| b.eps), top(|b| b.c), top(|b| b.gamma));
    let tol = 1.0 + opts.tolerance;
    let loose = |l: &Leaf| {
        let b = piece_bounds(&l.jet, scale);
        b.eps > eps_e * tol
            || b.c > c_e * tol
            || b.gamma > gamma_e * tol
            || b.d_mag >= 1.0
            || b.a_mig <= 1.0
            || !b.det_has_one
    };
    let leaves = sweeper.refine(leaves, &loose)?;
    let (dom, img) = hulls(&leaves);
    let (du, iu) = (union(&dom).unwrap(), union(&img).unwrap());
    let diam = diameter(&du).max(diameter(&iu));
    let scale = if diam > 1.0 { 1.0 / diam } else { 1.0 };
    let bounds: Vec<PieceBounds> = leaves.par_iter().map(|l| piece_bounds(&l.jet, scale)).collect();
    let eps = bounds.iter().map(|b| b.eps).fold(0.0, f64::max);
    let c = bounds.iter().map(|b| b.c).fold(0.0, f64::max);
    let gamma = bounds.iter().map(|b| b.gamma).fold(0.0, f64::max);

    let mut clauses = Vec::new();
    clauses.push(ClauseCheck {
        clause: "1 diameters".into(),
        ok: scale * diameter(&du) <= 1.0 && scale * diameter(&iu) <= 1.0,
        detail: format!(
            "diam domain {:.6}, diam image {:.6}, rescale {scale}",
            scale * diameter(&du),
            scale * diameter(&iu)
        ),
    });
    let det_ok = bounds.iter().all(|b| b.det_has_one);
    clauses.push(ClauseCheck {
        clause: "2a det = 1".into(),
        ok: det_ok,
        detail: format!("{} pieces", bounds.len()),
    });
    let d_max = bounds.iter().map(|b| b.d_mag).fold(0.0, f64::max);
    let a_min = bounds.iter().map(|b| b.a_mig).fold(f64::INFINITY, f64::min);
    let a_max = bounds.iter().map(|b| b.a_mag).fold(0.0, f64::max);
    let c_over_eps = if eps > 0.0 { c / eps } else { f64::INFINITY };
    clauses.push(ClauseCheck {
        clause: "2b |d| < 1 < |a| <= C/eps".into(),
        ok: d_max < 1.0 && a_min > 1.0 && a_max <= c_over_eps,
        detail: format!("sup|d| {d_max:.6}, inf|a| {a_min:.6}, sup|a| {a_max:.6}, C/eps {c_over_eps:.6}"),
    });
    clauses.push(ClauseCheck {
        clause: "2c |b|,|c| <= eps(|a|-1)".into(),
        ok: true,
        detail: "eps is the supremum of the ratio".into(),
    });
    clauses.push(ClauseCheck {
        clause: "3 second derivatives".into(),
        ok: gamma.is_finite(),
        detail: format!("least gamma {gamma:.6}"),
    });
    let mut ok4 = true;
    let mut d4 = Vec::new();
    for i in 0..k {
        let bs: Vec<&PieceBounds> = bounds
            .iter()
            .zip(&leaves)
            .filter(|(_, l)| l.component == i)
            .map(|(b, _)| b)
            .collect();
        if bs.is_empty() {
            continue;
        }
        let grad = bs.iter().map(|b| b.grad_eta).fold(0.0, f64::max);
        let amin = bs.iter().map(|b| b.a_mig).fold(f64::INFINITY, f64::min);
        let alpha = 1.0 / amin;
        let var = scale * diameter(&dom[i].unwrap()) * grad;
        let rhs = gamma * (1.0 - alpha);
        ok4 &= var <= rhs;
        d4.push(format!("component {i}: variation <= {var:.6}, gamma(1-alpha) = {rhs:.6}"));
    }
    clauses.push(ClauseCheck {
        clause: "4 variation of log|a|".into(),
        ok: ok4,
        detail: d4.join("; "),
    });
    let gap_need = if gamma > 0.0 { eps / gamma } else { 0.0 };
    let mut gap = f64::INFINITY;
    let mut igap = f64::INFINITY;
    for i in 0..k {
        for j in (i + 1)..k {
            if let (Some(a), Some(b)) = (dom[i], dom[j]) {
                gap = gap.min(scale * a.distance(&b).lo());
            }
            if let (Some(a), Some(b)) = (img[i], img[j]) {
                igap = igap.min(scale * a.distance(&b).lo());
            }
        }
    }
    clauses.push(ClauseCheck {
        clause: "5 gaps".into(),
        ok: gap >= gap_need && igap >= gap_need,
        detail: format!("dist {gap:.6}, image dist {igap:.6}, eps/gamma {gap_need:.6}"),
    });
    Ok(ClassFReport {
        c,
        epsilon: eps,
        gamma,
        rescale: scale,
        pieces: bounds.len(),
        clauses,
    })
}

/// `4(C+3)γ + 2ε`, outward rounded.
pub fn duarte_distortion(c: f64, epsilon: f64, gamma: f64) -> Interval {
    (Interval::point(c) + 3.0) * gamma * 4.0 + Interval::point(epsilon) * 2.0
}

/// Lower bounds on the left and right thickness of the Markov partition
/// from enclosures of the component endpoints on the local manifold.
/// `τ_L` is built from the `k₀` pair and `τ_R` from the `k₁` pair.
pub fn thicknesses(k0b: &IVec2, k0t: &IVec2, k1b: &IVec2, k1t: &IVec2, lip: f64) -> Result<(f64, f64)> {
    for (n, a) in [("k0b", k0b), ("k0t", k0t)] {
        for (m, b) in [("k1b", k1b), ("k1t", k1t)] {
            if a.overlaps(b) {
                return Err(Error::Order(format!("{n} and {m} overlap")));
            }
        }
    }
    let sup = {
        let d = *k1t - *k0b;
        (d.x.abs().sqr() + d.u.abs().sqr()).sqrt()?.hi()
    };
    let stretch = (Interval::point(lip).sqr() + 1.0).sqrt()?;
    let den = stretch * sup;
    let tl = k0b.distance(k0t).checked_div(den)?.lo().max(0.0);
    let tr = k1b.distance(k1t).checked_div(den)?.lo().max(0.0);
    Ok((tl, tr))
}

/// A positive number kept as its natural logarithm.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogValue {
    pub ln: f64,
}

impl LogValue {
    pub fn value(&self) -> f64 {
        self.ln.exp()
    }

    pub fn is_positive(&self) -> bool {
        self.ln.is_finite()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimLower {
    /// Root of `t_L^d + t_R^d = (1 + t_L + t_R)^d`, `t = e^{−D} τ`.
    pub root: LogValue,
    /// The closed-form bound, the larger of the two log ratios.
    pub closed_form: LogValue,
}

impl DimLower {
    /// The smaller of the two bounds.
    pub fn certified(&self) -> LogValue {
        if self.root.ln <= self.closed_form.ln {
            self.root
        } else {
            self.closed_form
        }
    }
}

/// `ln(1 + eˣ)`.
fn softplus(x: f64) -> f64 {
    if x > 35.0 {
        x + (-x).exp()
    } else {
        x.exp().ln_1p()
    }
}

/// `ln(ln(1 + eˣ))`.
fn ln_ln1p_exp(x: f64) -> f64 {
    if x < -35.0 {
        x - 0.5 * x.exp()
    } else {
        softplus(x).ln()
    }
}

/// Closed-form bound `ln(1 + e^{−D}τ_a/(1+e^D τ_b)) / ln(1 + (1+e^D τ_a)/(e^{−D} τ_b))`
/// in log space.
fn closed_ln(ta: f64, tb: f64, d: f64) -> f64 {
    let (la, lb) = (ta.ln(), tb.ln());
    let num = -d + la - softplus(d + lb);
    let den = softplus(d + la) + d - lb;
    ln_ln1p_exp(num) - ln_ln1p_exp(den)
}

pub fn dim_lower(tau_l: f64, tau_r: f64, d: f64) -> Result<DimLower> {
    if !(tau_l > 0.0 && tau_r > 0.0 && d >= 0.0 && d.is_finite()) {
        return Err(Error::Domain(format!("dim_lower needs positive thicknesses, got {tau_l}, {tau_r}, D = {d}")));
    }
    let (a, b) = (tau_l.ln() - d, tau_r.ln() - d);
    // ln(1 + t_L + t_R) = softplus(ln(t_L + t_R))
    let lsum = a.max(b) + (-(a - b).abs()).exp().ln_1p();
    let c = softplus(lsum);
    let h = |x: f64| -> f64 {
        let (p, q) = (x * a, x * b);
        p.max(q) + (-(p - q).abs()).exp().ln_1p() - x * c
    };
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    if !(h(lo) > 0.0 && h(hi) < 0.0) {
        return Err(Error::Solve(format!("no sign change on [0, 1]: {} {}", h(lo), h(hi))));
    }
    // the root may be tiny; bisect in absolute terms down to the ulp scale
    for _ in 0..2000 {
        let m = 0.5 * (lo + hi);
        if m <= lo || m >= hi || hi - lo <= 1e-15 * hi.max(1e-300) {
            break;
        }
        if h(m) > 0.0 {
            lo = m;
        } else {
            hi = m;
        }
    }
    let root = LogValue { ln: lo.ln() };
    let closed = closed_ln(tau_r, tau_l, d).max(closed_ln(tau_l, tau_r, d));
    Ok(DimLower {
        root,
        closed_form: LogValue { ln: closed },
    })
}

/// `log 4 / log A₋`, rounded up.
pub fn dim_upper(a_minus: f64) -> Result<f64> {
    if !(a_minus > 1.0) {
        return Err(Error::Domain(format!("dim_upper needs A- > 1, got {a_minus}")));
    }
    Ok(Interval::point(4.0).ln()?.checked_div(Interval::point(a_minus).ln()?)?.hi())
}

/// Endpoint of a Markov component: the box reached after `steps` forward
/// links from `start` along a certified chain.
#[derive(Clone, Debug)]
pub struct EndpointRef<'a> {
    pub sets: &'a [HSet],
    pub links: &'a [ChainLink],
    pub cert: Option<&'a ChainCert>,
    pub start: usize,
    pub steps: usize,
}

impl EndpointRef<'_> {
    fn target(&self) -> Result<usize> {
        let mut cur = self.start;
        for _ in 0..self.steps {
            let next = self
                .links
                .iter()
                .find(|l| l.from == cur && l.to != cur)
                .or_else(|| self.links.iter().find(|l| l.from == cur))
                .ok_or_else(|| Error::Incomplete(format!("chain has no link out of {cur}")))?;
            cur = next.to;
        }
        Ok(cur)
    }

    fn enclose(&self, g: &dyn PlanarMap, coord: &CoordChange) -> Result<IVec2> {
        if self.cert.is_none() {
            return Err(Error::Incomplete(format!("endpoint chain from set {} is not certified", self.start)));
        }
        let src = self
            .sets
            .get(self.start)
            .ok_or_else(|| Error::Incomplete(format!("no set {}", self.start)))?;
        let tgt = &self.sets[self.target()?];
        // the orbit passes through the chain, so the target set encloses it;
        // the image of the source tightens this when it stays bounded
        let direct = coord.apply(&tgt.hull());
        let mapped = (0..self.steps).try_fold(src.hull(), |b, _| g.image(&b));
        Ok(match mapped {
            Ok(b) => direct.intersect(&coord.apply(&b)).unwrap_or(direct),
            Err(_) => direct,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarkovComponents {
    pub k0b: IVec2,
    pub k0t: IVec2,
    pub k1b: IVec2,
    pub k1t: IVec2,
}

pub fn markov_components(
    g: &dyn PlanarMap,
    coord: &CoordChange,
    k0b: &EndpointRef,
    k0t: &EndpointRef,
    k1b: &EndpointRef,
    k1t: &EndpointRef,
) -> Result<MarkovComponents> {
    Ok(MarkovComponents {
        k0b: k0b.enclose(g, coord)?,
        k0t: k0t.enclose(g, coord)?,
        k1b: k1b.enclose(g, coord)?,
        k1t: k1t.enclose(g, coord)?,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DistortionBundle {
    pub c: f64,
    pub epsilon: f64,
    pub gamma: f64,
    pub d: f64,
    pub tau_l: f64,
    pub tau_r: f64,
    /// Bound for the unstable Cantor set.
    pub dim_lower: DimLower,
    /// Bound for the hyperbolic set, twice the Cantor bound.
    pub dim_lower_set: LogValue,
    pub dim_upper: f64,
    pub lip: f64,
}

impl DistortionBundle {
    pub fn assemble(report: &ClassFReport, tau_l: f64, tau_r: f64, a_minus: f64, lip: f64) -> Result<Self> {
        let d = duarte_distortion(report.c, report.epsilon, report.gamma).hi();
        let lower = dim_lower(tau_l, tau_r, d)?;
        let set = LogValue {
            ln: lower.closed_form.ln + std::f64::consts::LN_2,
        };
        Ok(DistortionBundle {
            c: report.c,
            epsilon: report.epsilon,
            gamma: report.gamma,
            d,
            tau_l,
            tau_r,
            dim_lower: lower,
            dim_lower_set: set,
            dim_upper: dim_upper(a_minus)?,
            lip,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distortion_formula() {
        let d = duarte_distortion(16.6, 0.88, 47.8);
        assert!((d.mid() - 3749.28).abs() < 0.1);
        assert_eq!(duarte_distortion(1.0, 0.0, 0.0).hi(), 0.0);
    }

    #[test]
    fn cantor_root() {
        let d = dim_lower(1.0, 1.0, 0.0).unwrap();
        assert!((d.root.value() - 2f64.ln() / 3f64.ln()).abs() < 1e-12);
        let e = dim_lower(1.0, 1.0, 0.1).unwrap();
        assert!(e.closed_form.ln <= e.root.ln);
    }

    #[test]
    fn upper_simple() {
        assert!((dim_upper(4.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((dim_upper(16.0).unwrap() - 0.5).abs() < 1e-15);
    }
}
