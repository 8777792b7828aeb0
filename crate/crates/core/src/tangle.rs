//! Symbolic assembly of the heteroclinic tangle from verified base
//! relations and the scaling `Λ(x, u) = (λx, μu)`.
//!
//! Nothing here iterates the map. The base chain links `B₁ ⇒ … ⇒ B₀` with
//! `B₀ = Λ⁻¹(B₁)`; conjugating by `Λ^k` carries it to the chain between
//! `Λ^k(p₀)` and `Λ^{k+1}(p₀)`, for the power `n·2^k` of the map when
//! `k > 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::{IVec2, Interval};
use crate::renorm::Scalings;
use crate::tables::ChainReport;

/// Tridiagonal 0/1 matrix on the symbols `−n..=m`.
pub fn transition_matrix(n: usize, m: usize) -> Vec<Vec<u8>> {
    let k = n + m + 1;
    (0..k)
        .map(|i| (0..k).map(|j| u8::from(i.abs_diff(j) <= 1)).collect())
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaledPoint {
    pub k: i64,
    /// Enclosure of `Λ^k(p₀)`.
    pub point: IVec2,
    /// Power of `F` fixing it, `2^k` for `k ≥ 0`, else 1.
    pub period: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TangleCert {
    pub n: usize,
    pub m: usize,
    pub matrix: Vec<Vec<u8>>,
    pub points: Vec<ScaledPoint>,
    /// Power of `F` used by the base chain.
    pub base_power: usize,
    /// Orbits reach `|Λ^{−n}(p₀)|` and come within `|Λ^m(p₀)|` of the origin.
    pub reach: f64,
    pub approach: f64,
}

fn scaled(p0: &IVec2, s: &Scalings, k: i64) -> Result<IVec2> {
    let pow = |v: Interval| -> Result<Interval> {
        let p = v.powi(k.unsigned_abs() as u32);
        if k < 0 {
            p.recip()
        } else {
            Ok(p)
        }
    };
    Ok(IVec2::new(p0.x * pow(s.lambda)?, p0.u * pow(s.mu)?))
}

/// Requires a verified heteroclinic report that contains the self-link on
/// its first set.
pub fn assemble_tangle(base: &ChainReport, scalings: &Scalings, p0: &IVec2, n: usize, m: usize) -> Result<TangleCert> {
    if !base.verified {
        let bad: Vec<String> = base
            .links
            .iter()
            .filter(|l| !l.ok)
            .map(|l| format!("{} -> {}", l.from, l.to))
            .collect();
        return Err(Error::Incomplete(format!("base chain {} not verified: {}", base.name, bad.join(", "))));
    }
    let self_link = base
        .links
        .iter()
        .find(|l| l.from == 0 && l.to == 0)
        .ok_or_else(|| Error::Incomplete("base chain lacks the self-covering of its first set".into()))?;
    if n + m > 62 {
        return Err(Error::Domain(format!("symbol range {n} + {m} too large")));
    }
    let points = (-(n as i64)..=m as i64)
        .map(|k| {
            Ok(ScaledPoint {
                k,
                point: scaled(p0, scalings, k)?,
                period: if k >= 0 { 1u64 << k } else { 1 },
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let reach = points.first().map_or(0.0, |p| p.point.norm().lo());
    let approach = points.last().map_or(0.0, |p| p.point.norm().hi());
    Ok(TangleCert {
        n,
        m,
        matrix: transition_matrix(n, m),
        points,
        base_power: self_link.power,
        reach,
        approach,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_matrices() {
        assert_eq!(transition_matrix(0, 0), vec![vec![1]]);
        assert_eq!(
            transition_matrix(1, 1),
            vec![vec![1, 1, 0], vec![1, 1, 1], vec![0, 1, 1]]
        );
    }
}
