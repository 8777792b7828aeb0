//! The renormalization operator on generating functions.
//!
//! `R[s](x, y) = μ⁻¹ s(z(x, y), λy)` where `z` solves the midpoint equation
//! `s(λx, z) + s(λy, z) = 0`, `λ` is the root of `s(λ, 1) + s(0, 1) = 0` and
//! `μ = ∂₁z(1, 0)`.
//!
//! Two evaluation routes exist. The float route samples `R[s]` on the
//! distinguished torus `|x̂| = |ŷ| = 1` and recovers coefficients by FFT; it
//! drives the Newton search for the fixed point. The interval route composes
//! polynomial balls and yields enclosures valid for every member of the input
//! ball.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::genfunc::{PolyBall, Var, DEFAULT_CENTER, DEFAULT_RHO};
use crate::interval::{add_up, mul_up, newton_solve, Interval, NewtonVerdict};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scalings {
    pub lambda: Interval,
    pub mu: Interval,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MidpointPoly {
    pub z: PolyBall,
    /// ℓ¹ bound of `s(λx, z) + s(λy, z)` for the polynomial part of `z`.
    pub residual: f64,
}

/// λ by interval Newton on `(−0.3, −0.2)`; μ from implicit differentiation
/// of the midpoint equation at `(1, 0)`, where `z = 1`.
pub fn scalings_of(s: &PolyBall) -> Result<Scalings> {
    let s1 = s.partial(Var::X);
    let s2 = s.partial(Var::Y);
    let one = Interval::ONE;
    let zero = Interval::ZERO;
    let s01 = s.eval(zero, one)?;
    let g = |l: Interval| Ok(s.eval(l, one)? + s01);
    let dg = |l: Interval| s1.eval(l, one);
    let lambda = match newton_solve(g, dg, Interval::new(-0.3, -0.2), 40)? {
        NewtonVerdict::UniqueRoot(l) => l,
        v => return Err(Error::Solve(format!("λ equation: {v:?}"))),
    };
    let num = -lambda * s1.eval(lambda, one)?;
    let den = s2.eval(lambda, one)? + s2.eval(zero, one)?;
    let mu = num
        .checked_div(den)
        .map_err(|e| Error::Solve(format!("μ: {e}")))?;
    Ok(Scalings { lambda, mu })
}

// ---------------------------------------------------------------------------
// float route

/// Plain float polynomial in the hat basis, for fast sampling.
#[derive(Clone, Debug)]
struct FPoly {
    n: usize,
    rho: f64,
    center: f64,
    c: Vec<f64>,
}

impl FPoly {
    fn from_ball(p: &PolyBall) -> Self {
        FPoly {
            n: p.degree(),
            rho: p.rho(),
            center: p.center(),
            c: p.terms().map(|(_, _, c)| c.mid()).collect(),
        }
    }

    #[inline]
    fn eval(&self, x: Complex64, y: Complex64) -> Complex64 {
        let xh = (x - self.center) / self.rho;
        let yh = (y - self.center) / self.rho;
        let n = self.n;
        let mut acc = Complex64::new(0.0, 0.0);
        let mut end = self.c.len();
        for i in (0..=n).rev() {
            let len = n - i + 1;
            let row = &self.c[end - len..end];
            end -= len;
            let mut r = Complex64::new(0.0, 0.0);
            for &c in row.iter().rev() {
                r = r * yh + c;
            }
            acc = acc * xh + r;
        }
        acc
    }
}

struct Sampled {
    lambda: f64,
    mu: f64,
    /// `R[s]` hat coefficients up to the working degree, row-major triangular.
    coeffs: Vec<f64>,
    z: Vec<Complex64>,
}

fn float_lambda(s: &FPoly, s1: &FPoly) -> Result<f64> {
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let s01 = s.eval(zero, one).re;
    let mut l = -0.25;
    for _ in 0..60 {
        let g = s.eval(Complex64::new(l, 0.0), one).re + s01;
        let dg = s1.eval(Complex64::new(l, 0.0), one).re;
        let step = g / dg;
        l -= step;
        if !l.is_finite() {
            break;
        }
        if step.abs() < 1e-16 {
            return Ok(l);
        }
    }
    if l.is_finite() && l > -1.0 && l < 0.0 {
        Ok(l)
    } else {
        Err(Error::Solve("λ iteration diverged".into()))
    }
}

fn float_mu(s1: &FPoly, s2: &FPoly, l: f64) -> f64 {
    let one = Complex64::new(1.0, 0.0);
    let lc = Complex64::new(l, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    (-l * s1.eval(lc, one).re) / (s2.eval(lc, one).re + s2.eval(zero, one).re)
}

/// Grid size used for torus sampling at a given degree.
fn grid_size(degree: usize) -> usize {
    if degree <= 12 {
        32
    } else {
        64
    }
}

/// Pointwise midpoint solutions on the torus, indexed `a * m + b`.
fn torus_midpoint(
    s: &FPoly,
    s2: &FPoly,
    lambda: f64,
    mu: f64,
    m: usize,
    warm: Option<&[Complex64]>,
) -> Result<Vec<Complex64>> {
    let (rho, c0) = (s.rho, s.center);
    let nodes: Vec<Complex64> = (0..m)
        .map(|k| Complex64::from_polar(1.0, 2.0 * PI * k as f64 / m as f64) * rho + c0)
        .collect();
    let mut out = Vec::with_capacity(m * m);
    for a in 0..m {
        for b in 0..m {
            let (x, y) = (nodes[a], nodes[b]);
            let (lx, ly) = (x * lambda, y * lambda);
            let mut z = match warm {
                Some(w) => w[a * m + b],
                None => 1.0 + mu * (x + y - 1.0),
            };
            let mut ok = false;
            for _ in 0..50 {
                let e = s.eval(lx, z) + s.eval(ly, z);
                let d = s2.eval(lx, z) + s2.eval(ly, z);
                let step = e / d;
                z -= step;
                if !(z.re.is_finite() && z.im.is_finite()) {
                    break;
                }
                if step.norm() < 1e-15 * (1.0 + z.norm()) {
                    ok = true;
                    break;
                }
            }
            if !ok {
                return Err(Error::Solve(format!("midpoint Newton failed at node ({a},{b})")));
            }
            out.push(z);
        }
    }
    Ok(out)
}

/// Hat-basis Taylor coefficients, up to total degree `n`, of a function
/// sampled on the `m × m` torus grid.
fn torus_coeffs(vals: &[Complex64], m: usize, n: usize) -> Vec<f64> {
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(m);
    let mut buf = vals.to_vec();
    // rows (b index) then columns (a index)
    for row in buf.chunks_mut(m) {
        fft.process(row);
    }
    let mut col = vec![Complex64::new(0.0, 0.0); m];
    for b in 0..m {
        for a in 0..m {
            col[a] = buf[a * m + b];
        }
        fft.process(&mut col);
        for a in 0..m {
            buf[a * m + b] = col[a];
        }
    }
    let scale = 1.0 / (m * m) as f64;
    let mut out = Vec::with_capacity((n + 1) * (n + 2) / 2);
    for i in 0..=n {
        for j in 0..=n - i {
            out.push(buf[i * m + j].re * scale);
        }
    }
    out
}

fn sample_operator(s: &PolyBall, warm: Option<&[Complex64]>) -> Result<Sampled> {
    let n = s.degree();
    let fs = FPoly::from_ball(s);
    let f1 = FPoly::from_ball(&s.partial(Var::X));
    let f2 = FPoly::from_ball(&s.partial(Var::Y));
    let lambda = float_lambda(&fs, &f1)?;
    let mu = float_mu(&f1, &f2, lambda);
    if !(mu.is_finite() && mu != 0.0) {
        return Err(Error::Solve(format!("μ = {mu}")));
    }
    let m = grid_size(n);
    let z = torus_midpoint(&fs, &f2, lambda, mu, m, warm)?;
    let (rho, c0) = (s.rho(), s.center());
    let mut vals = Vec::with_capacity(m * m);
    for a in 0..m {
        for b in 0..m {
            let y = Complex64::from_polar(1.0, 2.0 * PI * b as f64 / m as f64) * rho + c0;
            vals.push(fs.eval(z[a * m + b], y * lambda) / mu);
        }
    }
    Ok(Sampled {
        lambda,
        mu,
        coeffs: torus_coeffs(&vals, m, n),
        z,
    })
}

/// Float image `R[s]` at the degree of `s`, with its scalings.
pub fn renormalize_float(s: &PolyBall) -> Result<(PolyBall, f64, f64)> {
    let out = sample_operator(s, None)?;
    Ok((point_poly(s.degree(), &out.coeffs), out.lambda, out.mu))
}

fn point_poly(n: usize, c: &[f64]) -> PolyBall {
    let mut p = PolyBall::zero(n, DEFAULT_RHO, DEFAULT_CENTER);
    let mut k = 0;
    for i in 0..=n {
        for j in 0..=n - i {
            p.set(i, j, Interval::point(c[k]));
            k += 1;
        }
    }
    p
}

// Parameters of the symmetric subspace: c_{0j} for all j, and
// σ_ij = (i+1) c_{i+1,j} for i ≤ j, i + j ≤ n − 1.
#[derive(Clone, Copy, Debug)]
enum Param {
    Free(usize),
    Sigma(usize, usize),
}

fn params_layout(n: usize) -> Vec<Param> {
    let mut v: Vec<Param> = (0..=n).map(Param::Free).collect();
    for i in 0..n {
        for j in i..n - i {
            v.push(Param::Sigma(i, j));
        }
    }
    v
}

fn tri_index(n: usize, i: usize, j: usize) -> usize {
    i * (n + 1) - i * i.saturating_sub(1) / 2 + j
}

fn params_of(n: usize, layout: &[Param], c: &[f64]) -> DVector<f64> {
    DVector::from_iterator(
        layout.len(),
        layout.iter().map(|p| match *p {
            Param::Free(j) => c[tri_index(n, 0, j)],
            Param::Sigma(i, j) => {
                // average the two representations of the same quantity
                let a = (i + 1) as f64 * c[tri_index(n, i + 1, j)];
                let b = (j + 1) as f64 * c[tri_index(n, j + 1, i)];
                0.5 * (a + b)
            }
        }),
    )
}

fn coeffs_of(n: usize, layout: &[Param], p: &DVector<f64>) -> Vec<f64> {
    let mut c = vec![0.0; (n + 1) * (n + 2) / 2];
    for (k, q) in layout.iter().enumerate() {
        match *q {
            Param::Free(j) => c[tri_index(n, 0, j)] = p[k],
            Param::Sigma(i, j) => {
                c[tri_index(n, i + 1, j)] = p[k] / (i + 1) as f64;
                c[tri_index(n, j + 1, i)] = p[k] / (j + 1) as f64;
            }
        }
    }
    c
}

/// `∂₁` of a hat-basis float polynomial at physical `(x, y)`.
fn d1_at(n: usize, c: &[f64], x: f64, y: f64) -> f64 {
    let xh = (x - DEFAULT_CENTER) / DEFAULT_RHO;
    let yh = (y - DEFAULT_CENTER) / DEFAULT_RHO;
    let mut acc = 0.0;
    for i in 1..=n {
        for j in 0..=n - i {
            acc += i as f64 * c[tri_index(n, i, j)] * xh.powi(i as i32 - 1) * yh.powi(j as i32);
        }
    }
    acc / DEFAULT_RHO
}

struct Operator {
    n: usize,
    layout: Vec<Param>,
}

impl Operator {
    /// `G(p) = P(R̃[c(p)]) − p` with `R̃ = R / ∂₁R(1, 0)`.
    fn residual(&self, p: &DVector<f64>, warm: Option<&[Complex64]>) -> Result<(DVector<f64>, Vec<Complex64>)> {
        let c = coeffs_of(self.n, &self.layout, p);
        let s = point_poly(self.n, &c);
        let out = sample_operator(&s, warm)?;
        let k = d1_at(self.n, &out.coeffs, 1.0, 0.0);
        let scaled: Vec<f64> = out.coeffs.iter().map(|v| v / k).collect();
        let g = params_of(self.n, &self.layout, &scaled) - p;
        Ok((g, out.z))
    }

    fn jacobian(&self, p: &DVector<f64>, g0: &DVector<f64>, warm: &[Complex64]) -> Result<DMatrix<f64>> {
        let d = p.len();
        let mut j = DMatrix::zeros(d, d);
        for k in 0..d {
            let h = 1e-7 * (1.0 + p[k].abs());
            let mut q = p.clone();
            q[k] += h;
            let (g, _) = self.residual(&q, Some(warm))?;
            j.set_column(k, &((g - g0) / h));
        }
        Ok(j)
    }
}

/// Progress record of [`approx_fixed_point_traced`].
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct FixedPointTrace {
    /// `(degree, iteration, max |Δc|, max |G|)`.
    pub steps: Vec<(usize, usize, f64, f64)>,
}

fn initial_guess(n: usize) -> Vec<f64> {
    // s = x − 1 + 1.2 y² written in hat coordinates
    let r = DEFAULT_RHO;
    let mut c = vec![0.0; (n + 1) * (n + 2) / 2];
    c[tri_index(n, 0, 0)] = -0.2;
    c[tri_index(n, 1, 0)] = r;
    c[tri_index(n, 0, 1)] = 1.2 * r;
    if n >= 2 {
        c[tri_index(n, 0, 2)] = 1.2 * r * r;
    }
    c
}

fn embed(from: usize, c: &[f64], to: usize) -> Vec<f64> {
    let mut out = vec![0.0; (to + 1) * (to + 2) / 2];
    for i in 0..=from.min(to) {
        for j in 0..=from.min(to) - i {
            out[tri_index(to, i, j)] = c[tri_index(from, i, j)];
        }
    }
    out
}

fn newton_at_degree(n: usize, c0: &[f64], max_iters: usize, trace: &mut FixedPointTrace) -> Result<Vec<f64>> {
    let op = Operator {
        n,
        layout: params_layout(n),
    };
    let mut p = params_of(n, &op.layout, c0);
    let (mut g, mut z) = op.residual(&p, None)?;
    let mut jac: Option<nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>> = None;
    let mut fresh = false;
    for it in 0..max_iters {
        if jac.is_none() {
            jac = Some(op.jacobian(&p, &g, &z)?.lu());
            fresh = true;
        }
        // G has the form P(R̃) − p, so the Newton matrix is J = DG
        let step = jac
            .as_ref()
            .unwrap()
            .solve(&(-&g))
            .ok_or_else(|| Error::Solve(format!("singular Jacobian at degree {n}")))?;
        let g_norm = g.amax();
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..12 {
            let q = &p + &step * t;
            if let Ok((gq, zq)) = op.residual(&q, Some(&z)) {
                if gq.amax() < g_norm || g_norm < 1e-13 {
                    accepted = Some((q, gq, zq));
                    break;
                }
            }
            t *= 0.5;
        }
        match accepted {
            Some((q, gq, zq)) => {
                let dc = (&q - &p).amax();
                p = q;
                g = gq;
                z = zq;
                fresh = false;
                trace.steps.push((n, it, dc, g.amax()));
                if dc < 1e-12 || g.amax() < 1e-14 {
                    return Ok(coeffs_of(n, &op.layout, &p));
                }
                if t < 1.0 {
                    jac = None;
                }
            }
            None if !fresh => jac = None,
            None => {
                if g_norm < 1e-11 {
                    return Ok(coeffs_of(n, &op.layout, &p));
                }
                return Err(Error::Solve(format!(
                    "line search failed at degree {n}, residual {g_norm:e}"
                )));
            }
        }
    }
    Err(Error::Solve(format!("no convergence in {max_iters} iterations at degree {n}")))
}

/// Non-rigorous fixed point of the normalized operator at `degree`, reached
/// by continuation through lower degrees. Point coefficients, zero ball.
pub fn approx_fixed_point(degree: usize, max_iters: usize) -> Result<PolyBall> {
    approx_fixed_point_traced(degree, max_iters).map(|(p, _)| p)
}

pub fn approx_fixed_point_traced(degree: usize, max_iters: usize) -> Result<(PolyBall, FixedPointTrace)> {
    if degree < 4 {
        return Err(Error::Solve("degree must be at least 4".into()));
    }
    let mut trace = FixedPointTrace::default();
    let mut ladder: Vec<usize> = [6, 10, 14].into_iter().filter(|&d| d < degree).collect();
    ladder.push(degree);
    let mut n = ladder[0];
    let mut c = initial_guess(n);
    for &d in &ladder {
        c = embed(n, &c, d);
        n = d;
        c = newton_at_degree(n, &c, max_iters, &mut trace)?;
    }
    Ok((point_poly(n, &c), trace))
}

// ---------------------------------------------------------------------------
// interval route

fn scaled_coordinate(which: Var, degree: usize, k: Interval) -> PolyBall {
    PolyBall::coordinate(which, degree, DEFAULT_RHO, DEFAULT_CENTER).scale(k)
}

/// Norm of the hat image of a physical-valued ball in a basis of radius `rho`.
fn hat_norm(p: &PolyBall, rho: f64, center: f64) -> f64 {
    p.add_const(-Interval::point(center))
        .scale(Interval::ONE / Interval::point(rho))
        .norm_rho()
        .hi()
}

/// Midpoint function for the interval `lambda`. The polynomial part comes
/// from torus sampling; the ball holds an ℓ¹ contraction bound on the
/// distance to the true solution.
pub fn solve_midpoint(s: &PolyBall, lambda: Interval, degree: usize) -> Result<MidpointPoly> {
    let fs = FPoly::from_ball(s);
    let s1b = s.partial(Var::X);
    let s2b = s.partial(Var::Y);
    let f2 = FPoly::from_ball(&s2b);
    let lm = lambda.mid();
    let mu_guess = {
        let f1 = FPoly::from_ball(&s1b);
        let m = float_mu(&f1, &f2, lm);
        if m.is_finite() { m } else { 0.0 }
    };
    let m = grid_size(degree).max(2 * degree + 2).next_power_of_two();
    let zs = torus_midpoint(&fs, &f2, lm, mu_guess, m, None)?;
    let zc = torus_coeffs(&zs, m, degree);
    let mut z = PolyBall::zero(degree, DEFAULT_RHO, DEFAULT_CENTER);
    for i in 0..=degree {
        for j in 0..=degree - i {
            // symmetric by construction
            let v = 0.5 * (zc[tri_index(degree, i, j)] + zc[tri_index(degree, j, i)]);
            z.set(i, j, Interval::point(v));
        }
    }
    let a = scaled_coordinate(Var::X, degree, lambda);
    let b = scaled_coordinate(Var::Y, degree, lambda);
    let e = s.compose(&a, &z, degree)?.add(&s.compose(&b, &z, degree)?);
    let residual = e.norm_rho().hi();

    // Φ(w) = w − K·E(z + w) contracts on the ℓ¹ ball of radius δ when
    // |K|e + (κ₀ + 2|K|Lδ)δ ≤ δ.
    let jz = s2b.compose(&a, &z, degree)?.add(&s2b.compose(&b, &z, degree)?);
    let j0 = jz.coeff(0, 0).mid();
    let k = Interval::point(1.0 / j0);
    let kappa0 = jz.scale(-k).add_const(Interval::ONE).norm_rho().hi();
    let s22 = s2b.partial(Var::Y);
    let l2 = s22.norm_rho().hi();
    let kabs = k.mag();
    let ke = mul_up(kabs, residual);
    if !(kappa0 < 1.0) {
        return Err(Error::Solve(format!("midpoint contraction fails: κ₀ = {kappa0}")));
    }
    let mut delta = 1.5 * ke / (1.0 - kappa0) + 1e-300;
    let rho2 = s22.rho();
    let mut ok = false;
    for _ in 0..4 {
        let lip = add_up(kappa0, mul_up(mul_up(2.0 * kabs, l2), delta));
        let fits = hat_norm(&a, rho2, s22.center()) <= 1.0
            && hat_norm(&b, rho2, s22.center()) <= 1.0
            && add_up(hat_norm(&z, rho2, s22.center()), delta / rho2 * (1.0 + 1e-12)) <= 1.0;
        if fits && lip < 1.0 && add_up(ke, mul_up(lip, delta)) <= delta {
            ok = true;
            break;
        }
        delta *= 2.0;
    }
    if !ok {
        return Err(Error::Solve("midpoint contraction bound not established".into()));
    }
    Ok(MidpointPoly {
        z: z.inflate_ball(delta),
        residual,
    })
}

/// Encloses `R[g]` for every member `g` of `s`, truncated at `degree`.
pub fn renormalize(s: &PolyBall, degree: usize) -> Result<(PolyBall, Scalings)> {
    let sc = scalings_of(s)?;
    let mid = solve_midpoint(s, sc.lambda, degree)?;
    let b = scaled_coordinate(Var::Y, degree, sc.lambda);
    let raw = s.compose(&mid.z, &b, degree)?;
    let inv_mu = sc.mu.recip()?;
    Ok((raw.scale(inv_mu), sc))
}

/// Adds `r` to the ball radius.
pub fn inflate_ball(s: &PolyBall, r: f64) -> PolyBall {
    s.inflate_ball(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_round_trip() {
        let n = 7;
        let layout = params_layout(n);
        let p = DVector::from_iterator(layout.len(), (0..layout.len()).map(|k| k as f64 * 0.37 - 1.0));
        let c = coeffs_of(n, &layout, &p);
        let q = params_of(n, &layout, &c);
        assert!((p - q).amax() < 1e-14);
    }

    #[test]
    fn torus_coeffs_recover_polynomial() {
        let m = 16;
        let mut vals = Vec::new();
        for a in 0..m {
            for b in 0..m {
                let x = Complex64::from_polar(1.0, 2.0 * PI * a as f64 / m as f64);
                let y = Complex64::from_polar(1.0, 2.0 * PI * b as f64 / m as f64);
                vals.push(2.0 + 3.0 * x - 0.5 * x * y * y);
            }
        }
        let c = torus_coeffs(&vals, m, 4);
        assert!((c[tri_index(4, 0, 0)] - 2.0).abs() < 1e-14);
        assert!((c[tri_index(4, 1, 0)] - 3.0).abs() < 1e-14);
        assert!((c[tri_index(4, 1, 2)] + 0.5).abs() < 1e-14);
    }
}
