//! Box covers of the local stable manifold of `p₀`, in `𝒯` coordinates.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cones::{manifold_lipschitz, QuadraticForm};
use crate::coords::{ConjugatedSource, CoordChange};
use crate::error::{Error, Result};
use crate::hsets::{verify_chain, ChainLink, ChainOptions, CoverOptions, Direction, HSet};
use crate::map::{FixedPointCert, MapHandle};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifoldOptions {
    pub seed_count: usize,
    /// Backward iterates per seed.
    pub depth: usize,
    pub box_half_width: f64,
    /// Seeds lie on `(p₀, p₀ + segment·direction)`.
    pub segment: f64,
    pub direction: [f64; 2],
    /// Expanding and contracting directions of `DF̃(p₀)`.
    pub e_u: [f64; 2],
    pub e_s: [f64; 2],
    pub lip: f64,
    pub chain: ChainOptions,
}

impl Default for ManifoldOptions {
    fn default() -> Self {
        ManifoldOptions {
            seed_count: 200,
            depth: 10,
            box_half_width: 0.001,
            segment: 0.00011,
            direction: [0.788578889012330, -0.614933602760558],
            e_u: [0.992704972028756258, 0.120568812341277774],
            e_s: [0.570868623900820281, -0.821041420541974730],
            lip: 0.95,
            chain: ChainOptions {
                cover: CoverOptions {
                    subdivision: 8,
                    max_subdivision: 1024,
                    interior_grid: 2,
                },
                cone: None,
                cone_grid: 2,
            },
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ManifoldCover {
    /// `B₀` first, then `B_{i,n}` seed by seed with `n = 0..=depth`.
    pub boxes: Vec<HSet>,
    pub lip: f64,
    pub seed_count: usize,
    pub depth: usize,
    pub links: usize,
}

impl ManifoldCover {
    pub fn base(&self) -> &HSet {
        &self.boxes[0]
    }

    pub fn seed_boxes(&self, i: usize) -> &[HSet] {
        let k = self.depth + 1;
        &self.boxes[1 + i * k..1 + (i + 1) * k]
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("seed,n,cx,cu,eu_x,eu_u,es_x,es_u,l_u,l_s\n");
        let row = |out: &mut String, seed: String, n: String, b: &HSet| {
            out.push_str(&format!(
                "{seed},{n},{},{},{},{},{},{},{},{}\n",
                b.center[0], b.center[1], b.e_u[0], b.e_u[1], b.e_s[0], b.e_s[1], b.l_u, b.l_s
            ));
        };
        row(&mut out, "base".into(), "0".into(), self.base());
        for i in 0..self.seed_count {
            for (n, b) in self.seed_boxes(i).iter().enumerate() {
                row(&mut out, i.to_string(), n.to_string(), b);
            }
        }
        out
    }
}

/// Floating backward orbits of the seeds, `z[i][n] = F⁻ⁿ(q_i)`.
pub fn seed_orbits(m: &MapHandle, p0: [f64; 2], opts: &ManifoldOptions) -> Result<Vec<Vec<[f64; 2]>>> {
    (1..=opts.seed_count)
        .map(|i| {
            let t = opts.segment * i as f64 / opts.seed_count as f64;
            let mut q = [p0[0] + t * opts.direction[0], p0[1] + t * opts.direction[1]];
            let mut orbit = vec![q];
            for n in 0..opts.depth {
                q = m
                    .f_inv_f64(q)
                    .ok_or_else(|| Error::MapDomain(format!("seed {i}: backward iterate {} undefined", n + 1)))?;
                orbit.push(q);
            }
            Ok(orbit)
        })
        .collect()
}

/// Certifies `B_{i,depth} ⇒ … ⇒ B_{i,0} ⇒ B₀ ⇒ B₀` under `F̃` with cones.
pub fn enclose_stable_manifold(
    m: &MapHandle,
    cert: &FixedPointCert,
    coord: &CoordChange,
    opts: &ManifoldOptions,
) -> Result<ManifoldCover> {
    let q = QuadraticForm::with_lipschitz(opts.lip)?;
    let chain = ChainOptions {
        cone: Some(q),
        ..opts.chain
    };
    let p0 = [cert.p0.x.mid(), cert.p0.u.mid()];
    let w = opts.box_half_width;
    let mk = |p: [f64; 2]| HSet::new(coord.apply_f64(p), opts.e_u, opts.e_s, w, w);
    let base = mk(p0)?;
    let src = ConjugatedSource { map: m, coord: *coord };
    let fwd = |from, to| ChainLink {
        from,
        to,
        power: 1,
        direction: Direction::Forward,
    };
    verify_chain(&src, &[base], &[fwd(0, 0)], &chain)
        .map_err(|e| Error::Inconclusive(format!("base box: {e}")))?;

    let orbits = seed_orbits(m, p0, opts)?;
    let per_seed: Vec<Result<Vec<HSet>>> = orbits
        .par_iter()
        .enumerate()
        .map(|(i, orbit)| {
            let mut sets = vec![base];
            for z in orbit {
                sets.push(mk(*z)?);
            }
            let links: Vec<ChainLink> = (1..sets.len()).rev().map(|k| fwd(k, k - 1)).collect();
            verify_chain(&src, &sets, &links, &chain).map_err(|e| Error::Inconclusive(format!("seed {i}: {e}")))?;
            Ok(sets.split_off(1))
        })
        .collect();
    let mut boxes = vec![base];
    for r in per_seed {
        boxes.extend(r?);
    }
    Ok(ManifoldCover {
        boxes,
        lip: manifold_lipschitz(&q),
        seed_count: opts.seed_count,
        depth: opts.depth,
        links: opts.seed_count * (opts.depth + 1) + 1,
    })
}
