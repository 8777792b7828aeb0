//! Independent oracles shared by the integration suites.

#![allow(dead_code)]

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Zero};
use rand::Rng;

use tangleproof::cones::{check_cone_condition, QuadraticForm};
use tangleproof::coords::AffineMap;
use tangleproof::hsets::{check_covering, CoverOptions, HSet};
use tangleproof::map::PlanarMap;
use tangleproof::{IMat2, Interval};

pub fn rat(x: f64) -> BigRational {
    BigRational::from_f64(x).expect("finite")
}

fn within(r: &BigRational, i: Interval) -> bool {
    &rat(i.lo()) <= r && r <= &rat(i.hi())
}

/// A float with a random exponent in `±2^span`.
pub fn wide_f64<R: Rng>(rng: &mut R, span: i32) -> f64 {
    let m: f64 = rng.gen_range(-1.0..1.0);
    m * 2f64.powi(rng.gen_range(-span..=span))
}

pub fn random_interval<R: Rng>(rng: &mut R, span: i32) -> Interval {
    let a = wide_f64(rng, span);
    let b = if rng.gen_bool(0.2) {
        a
    } else {
        a + wide_f64(rng, span).abs() * rng.gen_range(0.0..1.0)
    };
    Interval::new(a.min(b), a.max(b))
}

pub fn member<R: Rng>(rng: &mut R, i: Interval) -> f64 {
    match rng.gen_range(0..4) {
        0 => i.lo(),
        1 => i.hi(),
        _ => (i.lo() + rng.gen_range(0.0..=1.0) * (i.hi() - i.lo())).clamp(i.lo(), i.hi()),
    }
}

fn sub_interval<R: Rng>(rng: &mut R, i: Interval) -> Interval {
    let (a, b) = (member(rng, i), member(rng, i));
    Interval::new(a.min(b), a.max(b))
}

#[derive(Clone, Copy, Debug)]
pub enum Op {
    Add,
    Sub,
    Mul,
    Div,
    Sqr,
    Sqrt,
}

const OPS: [Op; 6] = [Op::Add, Op::Sub, Op::Mul, Op::Div, Op::Sqr, Op::Sqrt];

fn apply(op: Op, a: Interval, b: Interval) -> Option<Interval> {
    match op {
        Op::Add => Some(a + b),
        Op::Sub => Some(a - b),
        Op::Mul => Some(a * b),
        Op::Div => a.checked_div(b).ok(),
        Op::Sqr => Some(a.sqr()),
        Op::Sqrt => a.abs().sqrt().ok(),
    }
}

/// Exact check of one operation on random members, plus inclusion
/// monotonicity on random sub-intervals.
pub fn inclusion_case<R: Rng>(rng: &mut R) -> Result<(), String> {
    let op = OPS[rng.gen_range(0..OPS.len())];
    let (a, b) = (random_interval(rng, 40), random_interval(rng, 40));
    let Some(r) = apply(op, a, b) else {
        return Ok(());
    };
    let (x, y) = (member(rng, a), member(rng, b));
    let (qx, qy) = (rat(x), rat(y));
    let ok = match op {
        Op::Add => within(&(qx + qy), r),
        Op::Sub => within(&(qx - qy), r),
        Op::Mul => within(&(qx * qy), r),
        Op::Div => y == 0.0 || within(&(qx / qy), r),
        Op::Sqr => within(&(qx.clone() * qx), r),
        Op::Sqrt => {
            // lo² ≤ |x| ≤ hi²
            let ax = rat(x.abs());
            let (lo, hi) = (rat(r.lo().max(0.0)), rat(r.hi()));
            lo.clone() * lo <= ax && ax <= hi.clone() * hi
        }
    };
    if !ok {
        return Err(format!("{op:?} on {a:?}, {b:?} at ({x:e}, {y:e}) gave {r:?}"));
    }
    let (sa, sb) = (sub_interval(rng, a), sub_interval(rng, b));
    if let Some(sr) = apply(op, sa, sb) {
        if !r.encloses(sr) {
            return Err(format!("{op:?}: sub-result {sr:?} escapes {r:?}"));
        }
    }
    Ok(())
}

#[derive(Debug, PartialEq, Eq)]
pub enum Trial {
    Certified,
    Rejected,
}

fn random_imat<R: Rng>(rng: &mut R) -> IMat2 {
    let mut e = || {
        let m = rng.gen_range(-3.0..3.0);
        let r = if rng.gen_bool(0.3) { 0.0 } else { rng.gen_range(0.0..0.05) };
        Interval::new(m - r, m + r)
    };
    let (mut a11, a12, a21, mut a22) = (e(), e(), e(), e());
    if rng.gen_bool(0.6) {
        // bias towards hyperbolic members so that both verdicts occur
        let s = rng.gen_range(1.2..4.0);
        a11 = a11 * 0.2 + s;
        a22 = a22 * 0.2;
    }
    IMat2::new(a11, a12, a21, a22)
}

/// Cone trial: a certificate must satisfy `vᵀVv ≥ ε|v|²` on every
/// sampled member matrix and direction.
pub fn cone_trial<R: Rng>(rng: &mut R) -> Result<Trial, String> {
    let b = random_imat(rng);
    let qn = QuadraticForm::new(rng.gen_range(0.1..2.0), rng.gen_range(0.1..2.0)).unwrap();
    let qm = QuadraticForm::new(rng.gen_range(0.1..2.0), rng.gen_range(0.1..2.0)).unwrap();
    let Ok(cert) = check_cone_condition(&b, &qn, &qm) else {
        return Ok(Trial::Rejected);
    };
    for _ in 0..40 {
        let [e11, e12, e21, e22] = b.entries().map(|i| member(rng, i));
        let t: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let v = [t.cos(), t.sin()];
        let w = [e11 * v[0] + e12 * v[1], e21 * v[0] + e22 * v[1]];
        let val = qm.eval(w) - qn.eval(v);
        let scale = 1.0 + qm.alpha * (w[0] * w[0]) + qm.beta * (w[1] * w[1]) + qn.alpha + qn.beta;
        if val < cert.epsilon - 1e-12 * scale {
            return Err(format!("cone cert eps {} but vᵀVv = {val} for {b:?}", cert.epsilon));
        }
    }
    Ok(Trial::Certified)
}

fn unit<R: Rng>(rng: &mut R) -> [f64; 2] {
    let t: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    [t.cos(), t.sin()]
}

/// Covering trial with an affine map: a certificate must agree with dense
/// sampling of both exit edges and the interior.
pub fn cover_trial<R: Rng>(rng: &mut R) -> Result<Trial, String> {
    let eu = unit(rng);
    let mut es = unit(rng);
    if (eu[0] * es[1] - eu[1] * es[0]).abs() < 0.2 {
        es = [-eu[1], eu[0]];
    }
    let n = HSet::new(
        [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)],
        eu,
        es,
        rng.gen_range(0.05..0.5),
        rng.gen_range(0.05..0.5),
    )
    .unwrap();
    let a = [
        [rng.gen_range(-4.0..4.0), rng.gen_range(-1.0..1.0)],
        [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)],
    ];
    let f = AffineMap {
        a,
        b: [rng.gen_range(-0.2..0.2), rng.gen_range(-0.2..0.2)],
    };
    // target near the image so that both outcomes are common
    let fc = f.eval_f64(n.center).unwrap();
    let img_u = [a[0][0] * eu[0] + a[0][1] * eu[1], a[1][0] * eu[0] + a[1][1] * eu[1]];
    let len = img_u[0].hypot(img_u[1]) * n.l_u;
    if !(len > 1e-3) {
        return Ok(Trial::Rejected);
    }
    let mut mu = [img_u[0] / len * n.l_u, img_u[1] / len * n.l_u];
    let tilt = rng.gen_range(-0.3..0.3);
    mu = [mu[0] - tilt * mu[1], mu[1] + tilt * mu[0]];
    let ms = [-mu[1] + rng.gen_range(-0.3..0.3), mu[0]];
    let shift = rng.gen_range(0.0..0.3) * len;
    let m = HSet::new(
        [fc[0] + shift * unit(rng)[0], fc[1] + shift * unit(rng)[1]],
        mu,
        ms,
        len * rng.gen_range(0.4..1.3),
        len * rng.gen_range(0.1..1.5),
    );
    let Ok(m) = m else {
        return Ok(Trial::Rejected);
    };
    let opts = CoverOptions {
        subdivision: 8,
        max_subdivision: 64,
        interior_grid: 2,
    };
    if check_covering(&f, &n, &m, &opts).is_err() {
        return Ok(Trial::Rejected);
    }
    let k = 60;
    let to_m = |b: [f64; 2]| m.model_f64(f.eval_f64(n.point_f64(b)).unwrap());
    let mut sides = [0.0f64; 2];
    for (e, p) in [-1.0, 1.0].into_iter().enumerate() {
        for j in 0..=k {
            let q = -1.0 + 2.0 * j as f64 / k as f64;
            let img = to_m([p, q]);
            if img[0].abs() <= 1.0 + 1e-12 {
                return Err(format!("exit edge {p} meets the target at q = {q}: {img:?}"));
            }
            if sides[e] == 0.0 {
                sides[e] = img[0].signum();
            } else if sides[e] != img[0].signum() {
                return Err(format!("exit edge {p} crosses the target"));
            }
        }
    }
    if sides[0] == sides[1] {
        return Err("both exit edges on one side".into());
    }
    // the image must miss {|p| ≤ 1, |q| = 1}: no sampled segment inside
    // |p| ≤ 1 may cross |q| = 1
    let at = |i: usize, j: usize| to_m([-1.0 + 2.0 * i as f64 / k as f64, -1.0 + 2.0 * j as f64 / k as f64]);
    let side = |v: [f64; 2]| (v[1].abs() - 1.0).signum();
    for i in 0..=k {
        for j in 0..=k {
            let v = at(i, j);
            for w in [(i + 1 <= k).then(|| at(i + 1, j)), (j + 1 <= k).then(|| at(i, j + 1))].into_iter().flatten() {
                if v[0].abs() < 1.0 - 1e-9 && w[0].abs() < 1.0 - 1e-9 && side(v) * side(w) < 0.0 {
                    return Err(format!("image crosses the entry set near {v:?}"));
                }
            }
        }
    }
    // and the centre line stays in the strip where it meets the target
    for i in 0..=k {
        let v = to_m([-1.0 + 2.0 * i as f64 / k as f64, 0.0]);
        if v[0].abs() <= 1.0 && v[1].abs() >= 1.0 - 1e-12 {
            return Err(format!("centre line leaves the strip at {v:?}"));
        }
    }
    Ok(Trial::Certified)
}

/// Exact `4(C+3)γ + 2ε`.
pub fn distortion_exact(c: f64, eps: f64, gamma: f64) -> BigRational {
    let four = BigRational::from_integer(BigInt::from(4));
    let two = BigRational::from_integer(BigInt::from(2));
    let three = BigRational::from_integer(BigInt::from(3));
    four * (rat(c) + three) * rat(gamma) + two * rat(eps)
}

pub fn encloses_exact(i: Interval, r: &BigRational) -> bool {
    within(r, i)
}

pub fn is_zero(r: &BigRational) -> bool {
    r.is_zero()
}

pub struct Universal {
    pub s: tangleproof::PolyBall,
    pub map: tangleproof::map::MapHandle,
    pub scalings: tangleproof::renorm::Scalings,
}

/// `s*` at degree 16 with its ball inflated by 1e-9, computed once per
/// test binary.
pub fn universal() -> &'static Universal {
    static U: std::sync::OnceLock<Universal> = std::sync::OnceLock::new();
    U.get_or_init(|| {
        let (s, map) = tangleproof::pipeline::universal_map(16, 1e-9).unwrap();
        let scalings = tangleproof::renorm::scalings_of(&s).unwrap();
        Universal { s, map, scalings }
    })
}
