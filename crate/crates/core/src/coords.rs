//! Polynomial shear coordinates and maps carrying second-order jets.
//!
//! `𝒯(x, u) = s·(x − x₀, u + g(x − b))`, `g` a cubic. The inverse is
//! explicit, `x = X/s + x₀`, `u = U/s − g(x − b)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hsets::IterateSource;
use crate::interval::{IMat2, IVec2, Interval};
use crate::map::{Hess, Iterate, Jet2, MapHandle, PlanarMap};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoordChange {
    pub scale: f64,
    pub x0: f64,
    pub base: f64,
    /// `g(δ) = g₀ + g₁δ + g₂δ² + g₃δ³`.
    pub shear: [f64; 4],
}

impl Default for CoordChange {
    fn default() -> Self {
        CoordChange {
            scale: 0.55,
            x0: 0.5,
            base: 0.577619,
            shear: [
                0.0265461632116977382,
                -0.658388496175704694,
                -0.611583723237529069,
                0.102408008658008658,
            ],
        }
    }
}

impl CoordChange {
    pub fn identity() -> Self {
        CoordChange {
            scale: 1.0,
            x0: 0.0,
            base: 0.0,
            shear: [0.0; 4],
        }
    }

    fn g(&self, d: Interval) -> Interval {
        let [g0, g1, g2, g3] = self.shear;
        ((Interval::point(g3) * d + g2) * d + g1) * d + g0
    }

    fn g1(&self, d: Interval) -> Interval {
        let [_, g1, g2, g3] = self.shear;
        (Interval::point(3.0 * g3) * d + 2.0 * g2) * d + g1
    }

    fn g2(&self, d: Interval) -> Interval {
        let [_, _, g2, g3] = self.shear;
        Interval::point(6.0 * g3) * d + 2.0 * g2
    }

    fn delta(&self, x: Interval) -> Interval {
        x - self.base
    }

    pub fn apply(&self, p: &IVec2) -> IVec2 {
        let s = Interval::point(self.scale);
        IVec2::new(s * (p.x - self.x0), s * (p.u + self.g(self.delta(p.x))))
    }

    pub fn apply_inv(&self, p: &IVec2) -> Result<IVec2> {
        let rs = Interval::point(self.scale).recip()?;
        let x = p.x * rs + self.x0;
        Ok(IVec2::new(x, p.u * rs - self.g(self.delta(x))))
    }

    pub fn apply_f64(&self, p: [f64; 2]) -> [f64; 2] {
        let d = p[0] - self.base;
        let [g0, g1, g2, g3] = self.shear;
        [
            self.scale * (p[0] - self.x0),
            self.scale * (p[1] + ((g3 * d + g2) * d + g1) * d + g0),
        ]
    }

    pub fn inv_f64(&self, p: [f64; 2]) -> [f64; 2] {
        let x = p[0] / self.scale + self.x0;
        let d = x - self.base;
        let [g0, g1, g2, g3] = self.shear;
        [x, p[1] / self.scale - (((g3 * d + g2) * d + g1) * d + g0)]
    }

    /// `D𝒯` over an original-coordinate box.
    pub fn jacobian(&self, p: &IVec2) -> IMat2 {
        let s = Interval::point(self.scale);
        IMat2::new(s, Interval::ZERO, s * self.g1(self.delta(p.x)), s)
    }

    /// `D𝒯⁻¹` at `𝒯(p)`, for `p` in the original-coordinate box.
    pub fn jacobian_inv_at(&self, p: &IVec2) -> Result<IMat2> {
        let rs = Interval::point(self.scale).recip()?;
        Ok(IMat2::new(rs, Interval::ZERO, -(self.g1(self.delta(p.x)) * rs), rs))
    }

    /// Jet of `𝒯` over an original-coordinate box.
    pub fn jet(&self, p: &IVec2) -> Jet2 {
        let s = Interval::point(self.scale);
        Jet2 {
            val: self.apply(p),
            jac: self.jacobian(p),
            hess: [
                Hess::ZERO,
                Hess {
                    xx: s * self.g2(self.delta(p.x)),
                    ..Hess::ZERO
                },
            ],
        }
    }

    /// Jet of `𝒯⁻¹` at `𝒯(p)`, written in terms of the original box `p`.
    pub fn inv_jet_at(&self, p: &IVec2) -> Result<Jet2> {
        let rs = Interval::point(self.scale).recip()?;
        Ok(Jet2 {
            val: *p,
            jac: self.jacobian_inv_at(p)?,
            hess: [
                Hess::ZERO,
                Hess {
                    xx: -(self.g2(self.delta(p.x)) * rs.sqr()),
                    ..Hess::ZERO
                },
            ],
        })
    }
}

/// A planar map that also provides second-order jets.
pub trait JetMap: PlanarMap {
    fn jet(&self, p: &IVec2) -> Result<Jet2>;
}

impl JetMap for Iterate<'_> {
    fn jet(&self, p: &IVec2) -> Result<Jet2> {
        if self.inverse {
            return Err(Error::Domain("jets of inverse iterates are not provided".into()));
        }
        let mut acc = Jet2 {
            val: *p,
            jac: IMat2::identity(),
            hess: [Hess::ZERO; 2],
        };
        for _ in 0..self.power {
            let j = self.map.jet(&acc.val)?;
            acc = Jet2::compose(&j, &acc);
        }
        Ok(acc)
    }
}

/// Affine map `p ↦ A p + b`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineMap {
    pub a: [[f64; 2]; 2],
    pub b: [f64; 2],
}

impl AffineMap {
    pub fn linear(a: [[f64; 2]; 2]) -> Self {
        AffineMap { a, b: [0.0; 2] }
    }

    pub fn inverse(&self) -> Result<AffineMap> {
        let [[a, b], [c, d]] = self.a;
        let det = a * d - b * c;
        if det == 0.0 {
            return Err(Error::Singular("affine map is singular".into()));
        }
        let inv = [[d / det, -b / det], [-c / det, a / det]];
        let off = [
            -(inv[0][0] * self.b[0] + inv[0][1] * self.b[1]),
            -(inv[1][0] * self.b[0] + inv[1][1] * self.b[1]),
        ];
        Ok(AffineMap { a: inv, b: off })
    }
}

impl PlanarMap for AffineMap {
    fn image_and_jacobian(&self, p: &IVec2) -> Result<(IVec2, IMat2)> {
        let m = IMat2::from_f64(self.a);
        Ok((m.mul_vec(p) + IVec2::point(self.b[0], self.b[1]), m))
    }

    fn eval_f64(&self, p: [f64; 2]) -> Option<[f64; 2]> {
        Some([
            self.a[0][0] * p[0] + self.a[0][1] * p[1] + self.b[0],
            self.a[1][0] * p[0] + self.a[1][1] * p[1] + self.b[1],
        ])
    }
}

impl JetMap for AffineMap {
    fn jet(&self, p: &IVec2) -> Result<Jet2> {
        let (val, jac) = self.image_and_jacobian(p)?;
        Ok(Jet2 {
            val,
            jac,
            hess: [Hess::ZERO; 2],
        })
    }
}

impl<T: PlanarMap + ?Sized> PlanarMap for &T {
    fn image_and_jacobian(&self, p: &IVec2) -> Result<(IVec2, IMat2)> {
        (**self).image_and_jacobian(p)
    }

    fn eval_f64(&self, p: [f64; 2]) -> Option<[f64; 2]> {
        (**self).eval_f64(p)
    }
}

impl<T: JetMap + ?Sized> JetMap for &T {
    fn jet(&self, p: &IVec2) -> Result<Jet2> {
        (**self).jet(p)
    }
}

/// `𝒯 ∘ f ∘ 𝒯⁻¹`, taking and returning boxes in `𝒯` coordinates.
pub struct Conjugated<M> {
    pub inner: M,
    pub coord: CoordChange,
}

impl<M: PlanarMap> Conjugated<M> {
    pub fn new(inner: M, coord: CoordChange) -> Self {
        Conjugated { inner, coord }
    }

    /// Image and derivative of the conjugated map at `𝒯(p)`.
    pub fn image_and_jacobian_at_preimage(&self, p: &IVec2) -> Result<(IVec2, IMat2)> {
        let (y, j) = self.inner.image_and_jacobian(p)?;
        let jt = self
            .coord
            .jacobian(&y)
            .mul_mat(&j)
            .mul_mat(&self.coord.jacobian_inv_at(p)?);
        Ok((self.coord.apply(&y), jt))
    }
}

impl<M: JetMap> Conjugated<M> {
    /// Jet of the conjugated map at `𝒯(p)` for an original-coordinate box.
    pub fn jet_at_preimage(&self, p: &IVec2) -> Result<Jet2> {
        let ti = self.coord.inv_jet_at(p)?;
        let f = self.inner.jet(p)?;
        let t = self.coord.jet(&f.val);
        Ok(Jet2::compose(&t, &Jet2::compose(&f, &ti)))
    }
}

impl<M: PlanarMap> PlanarMap for Conjugated<M> {
    fn image_and_jacobian(&self, p: &IVec2) -> Result<(IVec2, IMat2)> {
        let x = self.coord.apply_inv(p)?;
        self.image_and_jacobian_at_preimage(&x)
    }

    fn eval_f64(&self, p: [f64; 2]) -> Option<[f64; 2]> {
        let y = self.inner.eval_f64(self.coord.inv_f64(p))?;
        Some(self.coord.apply_f64(y))
    }
}

impl<M: JetMap> JetMap for Conjugated<M> {
    fn jet(&self, p: &IVec2) -> Result<Jet2> {
        let x = self.coord.apply_inv(p)?;
        self.jet_at_preimage(&x)
    }
}

/// Iterates of `F` conjugated by `𝒯`.
pub struct ConjugatedSource<'a> {
    pub map: &'a MapHandle,
    pub coord: CoordChange,
}

impl IterateSource for ConjugatedSource<'_> {
    fn forward(&self, power: usize) -> Box<dyn PlanarMap + '_> {
        Box::new(Conjugated::new(Iterate::new(self.map, power), self.coord))
    }

    fn backward(&self, power: usize) -> Box<dyn PlanarMap + '_> {
        Box::new(Conjugated::new(Iterate::new(self.map, power).inverse(), self.coord))
    }
}

/// Convenience: the third iterate of `F`.
pub fn g_iterate(m: &MapHandle) -> Iterate<'_> {
    Iterate::new(m, 3)
}

/// Affine branches on disjoint boxes. A box must lie inside one domain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseAffine {
    pub pieces: Vec<(IVec2, AffineMap)>,
}

impl PiecewiseAffine {
    fn branch(&self, p: &IVec2) -> Result<&AffineMap> {
        self.pieces
            .iter()
            .find(|(d, _)| d.encloses(p))
            .map(|(_, a)| a)
            .ok_or_else(|| Error::MapDomain(format!("box {p:?} is not inside a single branch")))
    }

    fn branch_f64(&self, p: [f64; 2]) -> Option<&AffineMap> {
        self.pieces
            .iter()
            .find(|(d, _)| d.contains_point(p))
            .map(|(_, a)| a)
    }

    /// Branch inverses on the branch images.
    pub fn inverse(&self) -> Result<PiecewiseAffine> {
        let pieces = self
            .pieces
            .iter()
            .map(|(d, a)| Ok((a.image(d)?, a.inverse()?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(PiecewiseAffine { pieces })
    }
}

impl PlanarMap for PiecewiseAffine {
    fn image_and_jacobian(&self, p: &IVec2) -> Result<(IVec2, IMat2)> {
        self.branch(p)?.image_and_jacobian(p)
    }

    fn eval_f64(&self, p: [f64; 2]) -> Option<[f64; 2]> {
        self.branch_f64(p)?.eval_f64(p)
    }
}

impl JetMap for PiecewiseAffine {
    fn jet(&self, p: &IVec2) -> Result<Jet2> {
        self.branch(p)?.jet(p)
    }
}

/// `f^power` by repeated enclosure.
pub struct Power<M> {
    pub inner: M,
    pub power: usize,
}

impl<M: PlanarMap> PlanarMap for Power<M> {
    fn image_and_jacobian(&self, p: &IVec2) -> Result<(IVec2, IMat2)> {
        let (mut y, mut j) = (*p, IMat2::identity());
        for _ in 0..self.power {
            let (y1, j1) = self.inner.image_and_jacobian(&y)?;
            y = y1;
            j = j1.mul_mat(&j);
        }
        Ok((y, j))
    }

    fn eval_f64(&self, p: [f64; 2]) -> Option<[f64; 2]> {
        (0..self.power).try_fold(p, |q, _| self.inner.eval_f64(q))
    }
}

/// A map together with its inverse, as an iterate source.
pub struct Invertible<M> {
    pub forward: M,
    pub backward: M,
}

impl<M: PlanarMap> IterateSource for Invertible<M> {
    fn forward(&self, power: usize) -> Box<dyn PlanarMap + '_> {
        Box::new(Power {
            inner: &self.forward,
            power,
        })
    }

    fn backward(&self, power: usize) -> Box<dyn PlanarMap + '_> {
        Box::new(Power {
            inner: &self.backward,
            power,
        })
    }
}
