//! Affine horseshoe `diag(k, 1/k)` on two vertical strips of the unit
//! square. Its unstable Cantor set is the middle-`(1 − 2/k)` set, with
//! dimension `ln 2 / ln k`.

use crate::coords::{AffineMap, Invertible, PiecewiseAffine};
use crate::dimension::MarkovComponents;
use crate::error::{Error, Result};
use crate::hsets::{ChainLink, Direction, HSet};
use crate::interval::{IVec2, Interval};

/// Collar added around each strip so that the covering is strict.
const PAD: f64 = 0.01;

#[derive(Clone, Debug)]
pub struct AffineHorseshoe {
    pub k: f64,
    pub map: PiecewiseAffine,
    pub components: Vec<HSet>,
}

impl AffineHorseshoe {
    pub fn new(k: f64) -> Result<Self> {
        if !(k > 2.0 + 4.0 * PAD * k) {
            return Err(Error::Domain(format!("expansion {k} leaves no gap between the strips")));
        }
        let w = 1.0 / k;
        let strips = [(0.0, w), (1.0 - w, 1.0)];
        let mut pieces = Vec::new();
        let mut components = Vec::new();
        for (i, &(a, b)) in strips.iter().enumerate() {
            let dom = IVec2::from_bounds(a - 2.0 * PAD, b + 2.0 * PAD, -2.0 * PAD, 1.0 + 2.0 * PAD);
            let shift = i as f64;
            let f = AffineMap {
                a: [[k, 0.0], [0.0, w]],
                b: [-shift * (k - 1.0), shift * (1.0 - w)],
            };
            pieces.push((dom, f));
            components.push(HSet::new(
                [0.5 * (a + b), 0.5],
                [1.0, 0.0],
                [0.0, 1.0],
                0.5 * w + PAD,
                0.5 + PAD,
            )?);
        }
        Ok(AffineHorseshoe {
            k,
            map: PiecewiseAffine { pieces },
            components,
        })
    }

    pub fn source(&self) -> Result<Invertible<PiecewiseAffine>> {
        Ok(Invertible {
            forward: self.map.clone(),
            backward: self.map.inverse()?,
        })
    }

    /// The four transitions of the full 2-shift.
    pub fn links(&self) -> Vec<ChainLink> {
        [(0, 0), (0, 1), (1, 1), (1, 0)]
            .into_iter()
            .map(|(from, to)| ChainLink {
                from,
                to,
                power: 1,
                direction: Direction::Forward,
            })
            .collect()
    }

    /// Strip endpoints on `u = 0`, in the order the thickness bound reads
    /// them: bridge `k₁`, gap, bridge `k₀`.
    pub fn endpoints(&self) -> MarkovComponents {
        let w = Interval::ONE / Interval::point(self.k);
        let at = |x: Interval| IVec2::new(x, Interval::ZERO);
        MarkovComponents {
            k1b: at(Interval::ZERO),
            k1t: at(w),
            k0b: at(Interval::ONE - w),
            k0t: at(Interval::ONE),
        }
    }

    pub fn cantor_dim(&self) -> f64 {
        2f64.ln() / self.k.ln()
    }
}
