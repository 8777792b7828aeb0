//! Cone conditions with quadratic forms `Q(p, q) = α p² − β q²`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::{IMat2, Interval};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadraticForm {
    pub alpha: f64,
    pub beta: f64,
}

impl QuadraticForm {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && beta > 0.0) {
            return Err(Error::Domain(format!("cone form needs α, β > 0, got {alpha}, {beta}")));
        }
        Ok(QuadraticForm { alpha, beta })
    }

    /// `α = 1`, `β = lip²`.
    pub fn with_lipschitz(lip: f64) -> Result<Self> {
        QuadraticForm::new(1.0, lip * lip)
    }

    /// Form of the transposed h-set, where exit and entry swap.
    pub fn transposed(&self) -> Self {
        QuadraticForm {
            alpha: self.beta,
            beta: self.alpha,
        }
    }

    pub fn eval(&self, v: [f64; 2]) -> f64 {
        self.alpha * v[0] * v[0] - self.beta * v[1] * v[1]
    }
}

pub fn manifold_lipschitz(q: &QuadraticForm) -> f64 {
    (q.beta / q.alpha).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConeCert {
    pub q_n: QuadraticForm,
    pub q_m: QuadraticForm,
    /// Lower bound on the smallest eigenvalue of `V` over all members.
    pub epsilon: f64,
    /// Enclosures of `V₁₁, V₁₂, V₂₂`.
    pub v: [Interval; 3],
}

/// Entries of `V = Bᵀ Q_M B − Q_N` over the interval matrix `B`.
pub fn cone_matrix(b: &IMat2, q_n: &QuadraticForm, q_m: &QuadraticForm) -> [Interval; 3] {
    let (am, bm) = (q_m.alpha, q_m.beta);
    let v11 = am * b.a11.sqr() - bm * b.a21.sqr() - q_n.alpha;
    let v12 = am * (b.a11 * b.a12) - bm * (b.a21 * b.a22);
    let v22 = am * b.a12.sqr() - bm * b.a22.sqr() + q_n.beta;
    [v11, v12, v22]
}

/// Sylvester criterion on the interval matrix `V`.
pub fn check_cone_condition(b: &IMat2, q_n: &QuadraticForm, q_m: &QuadraticForm) -> Result<ConeCert> {
    let [v11, v12, v22] = cone_matrix(b, q_n, q_m);
    if !v11.is_finite() || !v12.is_finite() || !v22.is_finite() {
        return Err(Error::ConeFailure("derivative enclosure is unbounded".into()));
    }
    if v11.lo() <= 0.0 {
        return Err(Error::ConeFailure(format!("first minor V11 = {v11:?} not positive")));
    }
    let det = Interval::point(v11.lo()) * Interval::point(v22.lo()) - v12.sqr();
    if !(v22.lo() > 0.0 && det.lo() > 0.0) {
        return Err(Error::ConeFailure(format!(
            "second minor not positive: V11 {v11:?}, V12 {v12:?}, V22 {v22:?}"
        )));
    }
    let gersh = (v11.min(v22) - v12.abs()).lo();
    let disc = (v11 - v22).sqr() + 4.0 * v12.sqr();
    let closed = match disc.sqrt() {
        Ok(r) => ((v11 + v22 - r) * 0.5).lo(),
        Err(_) => f64::NEG_INFINITY,
    };
    let epsilon = gersh.max(closed);
    if !(epsilon > 0.0) {
        // positive definite by Sylvester; bound via det / trace instead
        let alt = (det * (v11 + v22).recip()?).lo();
        if !(alt > 0.0) {
            return Err(Error::ConeFailure("no positive eigenvalue bound".into()));
        }
        return Ok(ConeCert {
            q_n: *q_n,
            q_m: *q_m,
            epsilon: alt,
            v: [v11, v12, v22],
        });
    }
    Ok(ConeCert {
        q_n: *q_n,
        q_m: *q_m,
        epsilon,
        v: [v11, v12, v22],
    })
}

/// Symbolic conjugacy statement for a Markov chain of h-sets with cones.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniquenessCert {
    pub transitions: Vec<Vec<bool>>,
    /// Number of allowed transitions backed by a covering and a cone cert.
    pub certified_links: usize,
}

/// Every allowed transition `i → j` must appear among both the certified
/// coverings and the certified cone conditions.
pub fn markov_uniqueness(
    transitions: &[Vec<bool>],
    covers: &[(usize, usize)],
    cones: &[(usize, usize)],
) -> Result<UniquenessCert> {
    let k = transitions.len();
    let mut count = 0;
    for (i, row) in transitions.iter().enumerate() {
        if row.len() != k {
            return Err(Error::Domain("transition matrix is not square".into()));
        }
        for (j, &allowed) in row.iter().enumerate() {
            if !allowed {
                continue;
            }
            if !covers.contains(&(i, j)) {
                return Err(Error::Incomplete(format!("no covering for transition {i} -> {j}")));
            }
            if !cones.contains(&(i, j)) {
                return Err(Error::Incomplete(format!("no cone condition for transition {i} -> {j}")));
            }
            count += 1;
        }
    }
    Ok(UniquenessCert {
        transitions: transitions.to_vec(),
        certified_links: count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_expansion() {
        let q = QuadraticForm::new(1.0, 1.0).unwrap();
        let b = IMat2::diag(Interval::point(3.0), Interval::point(1.0 / 3.0));
        let c = check_cone_condition(&b, &q, &q).unwrap();
        assert!(c.v[0].contains(8.0) && c.v[2].contains(8.0 / 9.0));
        assert!(c.epsilon >= 8.0 / 9.0 - 1e-12);
    }
}
