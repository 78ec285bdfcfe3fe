//! The polynomial triples `(Q_n, G_n, R_n)` and `φ_n`, built level by level.
//!
//! With `t = (e3−e1)/(e2−e1)`, `H(x; y) = x(x−y)(x−ty)` and `H′` its
//! derivative in `x`, level `n ≥ 1` is obtained from level `n−1` by
//!
//! ```text
//! φ_{n−1} = R_{n−1}Q_{n−2} + (n−1)/2 · G_{n−1}
//! G_n     = H(φ_{n−1}; Q_{n−3}Q_{n−2}Q_{n−1}) / (G_{n−1} Q_{n−3}³)
//! Q_n     = Q_{n−3}G_n/G_{n−1} − n/2 · H′(φ_{n−1}; …) / (G_{n−1} Q_{n−3}²)
//! R_n     = (φ_{n−1}Q_n + (n+1)/2 · Q_{n−3}G_n) / (Q_{n−3}Q_{n−1})
//! ```
//!
//! Since `Q_{n−3}` divides `φ_{n−1}`, the implementation first forms
//! `ψ = φ_{n−1}/Q_{n−3}` and works with `H(ψ; Q_{n−2}Q_{n−1})`, which keeps
//! every division at the lowest possible degree.

use crate::elliptic::{hecke_z, HeckeValue, LatticeData, TorsionPoint};
use crate::error::{Error, Result};
use crate::painleve::t_of_tau;
use crate::poly::{circle_points, ComplexPoly};
use crate::scalar::Scalar;

/// Tolerances and limits for a recursion build.
#[derive(Clone, Debug, PartialEq)]
pub struct RecursionConfig {
    /// Highest level allowed; `None` uses the backend default.
    pub max_level: Option<usize>,
    /// Relative remainder allowed in an exact division.
    pub division_tol: f64,
    /// Rebuild every level by pointwise evaluation and interpolation.
    pub crosscheck: bool,
    pub crosscheck_tol: f64,
}

impl Default for RecursionConfig {
    fn default() -> Self {
        RecursionConfig { max_level: None, division_tol: 1e-8, crosscheck: true, crosscheck_tol: 1e-6 }
    }
}

impl RecursionConfig {
    pub fn fast() -> Self {
        RecursionConfig { crosscheck: false, ..Self::default() }
    }
}

/// One level of the recursion for fixed `(r, s, τ)`.
#[derive(Clone, Debug)]
pub struct RecursionLevel<S> {
    pub n: usize,
    pub q_prev3: ComplexPoly<S>,
    pub q_prev2: ComplexPoly<S>,
    pub q_prev1: ComplexPoly<S>,
    pub q: ComplexPoly<S>,
    pub g: ComplexPoly<S>,
    pub r: ComplexPoly<S>,
    /// `φ_n = R_n Q_{n−1} + n/2 · G_n`
    pub phi: ComplexPoly<S>,
    /// `φ_{n−1}/Q_{n−3}` (for `n = 0`, `R_0`)
    pub psi: ComplexPoly<S>,
    pub q_lead: S,
    pub g_lead: S,
    pub r_lead: S,
    pub t: S,
    /// Radius `max(1, |Z|)` of the circle on which norms are measured.
    pub rho: f64,
}

pub fn deg_q(n: usize) -> usize {
    (n + 1) * (n + 2) / 2
}

pub fn deg_g(n: usize) -> usize {
    3 * n * (n + 1) / 2
}

pub fn deg_r(n: usize) -> usize {
    n * (n + 1) + 1
}

fn half<S: Scalar>(c: S::Ctx, k: i64) -> S {
    S::from_ratio(c, k, 2)
}

/// Closed forms `(𝔮_n, 𝔤_n, 𝔯_n)` of the leading coefficients of
/// `Q_n, G_n, R_n`.
pub fn leading_coeffs<S: Scalar>(n: usize, hv: &HeckeValue<S>, ld: &LatticeData<S>) -> (S, S, S) {
    let d = ld.e2.clone() - &ld.e1;
    let two = S::from_ratio(d.ctx(), 2, 1);
    let n = n as i64;
    // (power of 2, power of d) for each coefficient
    let (q2, qd, g2, gd, r2, rd) = if n % 2 == 0 {
        let m = n / 2;
        (-2 * m * (m + 1), -m * (m + 1), -6 * m * m, -3 * m * m - 1, -n * n, -2 * m * m - 1)
    } else {
        let m = (n - 1) / 2;
        (
            -2 * (m + 1) * (m + 1),
            -(m + 1) * (m + 1),
            -(6 * m * m + 6 * m + 2),
            -(3 * m * m + 3 * m + 1) - 1,
            -n * n - 1,
            -(2 * m * m + 2 * m + 1) - 1,
        )
    };
    let ql = two.powi(q2) * d.powi(qd);
    let gl = two.powi(g2) * d.powi(gd) * &hv.wp_prime;
    let rl = two.powi(r2) * d.powi(rd) * (hv.wp.clone() - &ld.e1);
    (ql, gl, rl)
}

/// Rejects `a = r + sτ` in `½Λ_τ`, where `℘′(a) = 0` and the seed
/// degenerates. Judged on the real lattice coordinates of `a`, which stay
/// well scaled for any `Im τ`.
pub fn check_not_two_torsion<S: Scalar>(hv: &HeckeValue<S>, ld: &LatticeData<S>) -> Result<()> {
    if hv.point.is_half_lattice() || hv.wp_prime.is_zero() {
        return Err(Error::SingularConfiguration);
    }
    let a = hv.a.to_c64();
    let tau = ld.tau.to_c64();
    let s = a.im / tau.im;
    let r = a.re - s * tau.re;
    let off = |x: f64| (2.0 * x - (2.0 * x).round()).abs();
    if off(r).max(off(s)) < 1e-12 {
        return Err(Error::SingularConfiguration);
    }
    Ok(())
}

/// Level 0: `Q_0 = X`, `G_0 = ℘′(a)/(e2−e1)`, `R_0 = (℘(a)−e1)/(e2−e1)·X + G_0/2`.
pub fn seed_level0<S: Scalar>(hv: &HeckeValue<S>, ld: &LatticeData<S>) -> Result<RecursionLevel<S>> {
    let c = ld.tau.ctx();
    check_not_two_torsion(hv, ld)?;
    let p = &hv.wp;
    let dp = &hv.wp_prime;
    let d = ld.e2.clone() - &ld.e1;
    let g0 = dp.clone() / &d;
    let r0 = ComplexPoly::new(vec![g0.clone() * half::<S>(c, 1), (p.clone() - &ld.e1) / &d]);
    let one = ComplexPoly::one(c);
    let (q_lead, g_lead, r_lead) = leading_coeffs(0, hv, ld);
    Ok(RecursionLevel {
        n: 0,
        q_prev3: one.clone(),
        q_prev2: one.clone(),
        q_prev1: one,
        q: ComplexPoly::x(c),
        g: ComplexPoly::constant(g0),
        phi: r0.clone(),
        psi: r0.clone(),
        r: r0,
        q_lead,
        g_lead,
        r_lead,
        t: t_of_tau(ld),
        rho: hv.z.norm().max(1.0),
    })
}

/// Advance from level `n−1` to level `n`.
pub fn step<S: Scalar>(
    level: &RecursionLevel<S>,
    hv: &HeckeValue<S>,
    ld: &LatticeData<S>,
    cfg: &RecursionConfig,
) -> Result<RecursionLevel<S>> {
    let n = level.n + 1;
    let c = ld.tau.ctx();
    let cap = cfg.max_level.unwrap_or_else(|| S::level_cap(c));
    if n > cap {
        return Err(Error::LevelCap { requested: n, cap });
    }
    let rho = level.rho;
    let tol = cfg.division_tol;
    let t = &level.t;
    let (q3, q2, q1) = (&level.q_prev2, &level.q_prev1, &level.q);
    let g1 = &level.g;

    let nr = |p: &ComplexPoly<S>| p.norm_on(rho);
    let psi = if n >= 3 {
        let size = nr(&level.r) * nr(&level.q_prev1) + (n - 1) as f64 / 2.0 * nr(g1);
        level.phi.exact_div(q3, rho, size, tol, n, "phi / Q_{n-3}")?
    } else {
        level.phi.scaled(&(S::one(c) / q3.coeff(0)))
    };
    let p = q2 * q1;
    let a = &psi - &p;
    let b = &psi - &p.scaled(t);
    let h = &(&psi * &a) * &b;
    let hp = &(&(&psi * &a) + &(&psi * &b)) + &(&a * &b);
    // sizes of the terms each dividend is built from
    let (n_psi, n_p) = (nr(&psi), nr(&p));
    let n_a = n_psi + n_p;
    let n_b = n_psi + t.norm() * n_p;
    let size_h = n_psi * n_a * n_b;
    let size_hp = n_psi * n_a + n_psi * n_b + n_a * n_b;

    let g = h.exact_div(g1, rho, size_h, tol, n, "H / G_{n-1}")?;
    let qnum = &(q3 * &g) - &hp.scaled(&half::<S>(c, n as i64));
    let size_q = nr(q3) * nr(&g) + n as f64 / 2.0 * size_hp;
    let q = qnum.exact_div(g1, rho, size_q, tol, n, "Q_n numerator / G_{n-1}")?;
    let rnum = &(&psi * &q) + &g.scaled(&half::<S>(c, n as i64 + 1));
    let size_r = n_psi * nr(&q) + (n + 1) as f64 / 2.0 * nr(&g);
    let r = rnum.exact_div(q1, rho, size_r, tol, n, "R_n numerator / Q_{n-1}")?;
    let phi = &(&r * q1) + &g.scaled(&half::<S>(c, n as i64));

    if q.degree() != deg_q(n) || g.degree() != deg_g(n) || r.degree() != deg_r(n) {
        return Err(Error::Inconsistency(format!(
            "degrees ({}, {}, {}) at level {n}",
            q.degree(),
            g.degree(),
            r.degree()
        )));
    }

    if cfg.crosscheck {
        crosscheck(level, &g, &q, &r, n, cfg)?;
    }

    let (q_lead, g_lead, r_lead) = leading_coeffs(n, hv, ld);
    Ok(RecursionLevel {
        n,
        q_prev3: q3.clone(),
        q_prev2: q2.clone(),
        q_prev1: q1.clone(),
        q,
        g,
        r,
        phi,
        psi,
        q_lead,
        g_lead,
        r_lead,
        t: t.clone(),
        rho,
    })
}

/// Pointwise values of the undivided right-hand sides at `x`.
fn pointwise<S: Scalar>(level: &RecursionLevel<S>, x: &S, n: usize) -> (S, S, S) {
    let c = x.ctx();
    let t = &level.t;
    let phi = level.phi.eval(x);
    let q3 = level.q_prev2.eval(x);
    let q2 = level.q_prev1.eval(x);
    let q1 = level.q.eval(x);
    let g1 = level.g.eval(x);
    let p = q3.clone() * &q2 * &q1;
    let a = phi.clone() - &p;
    let b = phi.clone() - p * t;
    let h = phi.clone() * &a * &b;
    let hp = phi.clone() * &a + phi.clone() * &b + a * &b;
    let g = h / (g1.clone() * &q3 * &q3 * &q3);
    let q = q3.clone() * &g / &g1 - half::<S>(c, n as i64) * hp / (g1 * &q3 * &q3);
    let r = (phi * &q + half::<S>(c, n as i64 + 1) * &q3 * &g) / (q3 * &q1);
    (g, q, r)
}

fn crosscheck<S: Scalar>(
    level: &RecursionLevel<S>,
    g: &ComplexPoly<S>,
    q: &ComplexPoly<S>,
    r: &ComplexPoly<S>,
    n: usize,
    cfg: &RecursionConfig,
) -> Result<()> {
    let c = level.t.ctx();
    let rho = level.rho;
    let mut worst = f64::INFINITY;
    // a second phase guards against a sample landing on a zero of G_{n−1}
    for phase in [0.37, 1.13, 2.71] {
        let mut dist = 0.0f64;
        for (target, pick) in [(g, 0usize), (q, 1), (r, 2)] {
            let m = target.degree() + 1;
            let vals: Vec<S> = circle_points::<S>(c, m, rho, phase)
                .iter()
                .map(|x| {
                    let (gv, qv, rv) = pointwise(level, x, n);
                    [gv, qv, rv][pick].clone()
                })
                .collect();
            let back = ComplexPoly::interpolate_circle(&vals, rho, phase);
            dist = dist.max(back.rel_distance(target, rho));
        }
        if dist <= cfg.crosscheck_tol {
            return Ok(());
        }
        worst = worst.min(dist);
    }
    Err(Error::NumericalBreakdown {
        level: n,
        detail: format!("interpolation cross-check disagrees by {worst:.3e}"),
    })
}

/// Build from a precomputed Hecke value and return every level `0..=n`.
pub fn build_levels<S: Scalar>(
    n: usize,
    hv: &HeckeValue<S>,
    ld: &LatticeData<S>,
    cfg: &RecursionConfig,
) -> Result<Vec<RecursionLevel<S>>> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(seed_level0(hv, ld)?);
    for _ in 0..n {
        let next = step(out.last().unwrap(), hv, ld, cfg)?;
        out.push(next);
    }
    Ok(out)
}

/// Level `n` for the point `pt`.
pub fn build_to<S: Scalar>(
    n: usize,
    pt: &TorsionPoint,
    ld: &LatticeData<S>,
    cfg: &RecursionConfig,
) -> Result<RecursionLevel<S>> {
    let hv = hecke_z(pt, ld)?;
    let mut level = seed_level0(&hv, ld)?;
    for _ in 0..n {
        level = step(&level, &hv, ld, cfg)?;
    }
    Ok(level)
}

/// `Q_k(x), G_k(x), R_k(x)` for `k = 0..=n` at one point `x`.
///
/// The recursion run on values instead of polynomials: no polynomial
/// division happens, so it does not suffer the coefficient growth of the
/// polynomial build and stays accurate far beyond its level cap. Every
/// division is by a value that the theory keeps away from zero for generic
/// `x`; a zero divisor is reported as a numerical breakdown.
#[derive(Clone, Debug)]
pub struct PointLevels<S> {
    pub x: S,
    pub t: S,
    /// `Q_{−2}, Q_{−1}, Q_0, …, Q_n`
    q: Vec<S>,
    g: Vec<S>,
    r: Vec<S>,
    /// Magnitude of the terms each `Q_k(x)` was formed from; `|Q_k(x)|`
    /// much smaller than this means `x` is close to a zero of `Q_k`.
    q_size: Vec<f64>,
}

impl<S: Scalar> PointLevels<S> {
    pub fn top(&self) -> usize {
        self.g.len() - 1
    }

    /// `Q_k(x)` for `k ≥ −2`.
    pub fn q(&self, k: i64) -> &S {
        &self.q[(k + 2) as usize]
    }

    pub fn q_size(&self, k: i64) -> f64 {
        self.q_size[(k + 2) as usize]
    }

    pub fn g(&self, k: usize) -> &S {
        &self.g[k]
    }

    pub fn r(&self, k: usize) -> &S {
        &self.r[k]
    }

    /// `φ_k = R_kQ_{k−1} + k/2 · G_k`
    pub fn phi(&self, k: usize) -> S {
        self.r[k].clone() * self.q(k as i64 - 1) + half::<S>(self.x.ctx(), k as i64) * &self.g[k]
    }
}

/// Evaluates levels `0..=n` at `x`.
pub fn eval_levels<S: Scalar>(x: &S, n: usize, hv: &HeckeValue<S>, ld: &LatticeData<S>) -> Result<PointLevels<S>> {
    let c = x.ctx();
    check_not_two_torsion(hv, ld)?;
    let d = ld.e2.clone() - &ld.e1;
    let g0 = hv.wp_prime.clone() / &d;
    let r0 = (hv.wp.clone() - &ld.e1) / &d * x + g0.clone() * half::<S>(c, 1);
    let mut out = PointLevels {
        x: x.clone(),
        t: t_of_tau(ld),
        q: vec![S::one(c), S::one(c), x.clone()],
        g: vec![g0],
        r: vec![r0],
        q_size: vec![1.0, 1.0, 1.0],
    };
    for k in 1..=n {
        let ki = k as i64;
        let (q3, q2, q1) = (out.q(ki - 3).clone(), out.q(ki - 2).clone(), out.q(ki - 1).clone());
        let g1 = out.g[k - 1].clone();
        let psi = out.phi(k - 1) / &q3;
        let p = q2 * &q1;
        let a = psi.clone() - &p;
        let b = psi.clone() - p * &out.t;
        let h = psi.clone() * &a * &b;
        let hp = psi.clone() * &a + psi.clone() * &b + a * &b;
        let g = h / &g1;
        let first = q3.clone() * &g / &g1;
        let second = half::<S>(c, ki) * hp / &g1;
        let q = first.clone() - &second;
        let r = (psi * &q + half::<S>(c, ki + 1) * &g) / &q1;
        if ![&g, &q, &r].iter().all(|v| v.re().is_finite() && v.im().is_finite()) {
            return Err(Error::NumericalBreakdown {
                level: k,
                detail: "pointwise recursion divided by zero".into(),
            });
        }
        out.q_size.push(first.norm() + second.norm());
        out.q.push(q);
        out.g.push(g);
        out.r.push(r);
    }
    Ok(out)
}

/// Residuals of the structural properties of one level.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LevelReport {
    pub n: usize,
    pub degrees_ok: bool,
    /// `|lead(Q_n) − 𝔮_n| / |𝔮_n|`, likewise for `G_n`, `R_n`.
    pub lead_q: f64,
    pub lead_g: f64,
    pub lead_r: f64,
    /// Remainder of `φ_n` by `Q_{n−2}`, relative to operand norms.
    pub div_phi: f64,
    /// Remainder of `R_nQ_{n−1} − (n+1)/2·G_n` by `Q_n`.
    pub div_rq: f64,
    /// `R_nQ_{n−1} − (n+1)/2·G_n = ψ·Q_n` at `2·deg+1` points.
    pub identity: f64,
    /// Top coefficients of `R_n − Q_{n−2}Q_n` and `R_n − tQ_{n−2}Q_n`
    /// against the closed forms.
    pub top_minus: f64,
    pub top_minus_t: f64,
}

fn rel<S: Scalar>(a: &S, b: &S) -> f64 {
    (a.clone() - b).norm() / b.norm()
}

fn rem_ratio<S: Scalar>(num: &ComplexPoly<S>, d: &ComplexPoly<S>, rho: f64, size: f64) -> f64 {
    num.exact_quotient_with_residual(d, rho, size).1
}

/// Checks degree law, leading coefficients, divisibility, the
/// `R_nQ_{n−1}` identity and degree preservation of `R_n − Q_{n−2}Q_n`.
pub fn check_level<S: Scalar>(level: &RecursionLevel<S>) -> LevelReport {
    let n = level.n;
    let c = level.t.ctx();
    let rho = level.rho;
    let degrees_ok =
        level.q.degree() == deg_q(n) && level.g.degree() == deg_g(n) && level.r.degree() == deg_r(n);

    let lhs = &(&level.r * &level.q_prev1) - &level.g.scaled(&half::<S>(c, n as i64 + 1));
    let rhs = &level.psi * &level.q;
    let nr = |p: &ComplexPoly<S>| p.norm_on(rho);
    let size_lhs = nr(&level.r) * nr(&level.q_prev1) + (n + 1) as f64 / 2.0 * nr(&level.g);
    let size_phi = nr(&level.r) * nr(&level.q_prev1) + n as f64 / 2.0 * nr(&level.g);
    let m = 2 * lhs.degree().max(rhs.degree()) + 1;
    let mut identity = 0.0f64;
    let scale = lhs.norm_on(rho).max(rhs.norm_on(rho));
    // level 0 has no φ_{−1}, so the identity starts at n = 1
    for x in circle_points::<S>(c, if n == 0 { 0 } else { m }, rho, 0.61) {
        identity = identity.max((lhs.eval(&x) - rhs.eval(&x)).norm() / scale);
    }

    let qq = &level.q_prev2 * &level.q;
    let top = |p: ComplexPoly<S>| p.coeff(deg_r(n));
    let d_minus = top(&level.r - &qq);
    let d_minus_t = top(&level.r - &qq.scaled(&level.t));
    let q2_lead = level.q_prev2.leading();
    let qn_lead = level.q.leading();
    // deg Q_{n−2} + deg Q_n = deg R_n, so only the top terms meet
    let want_minus = level.r_lead.clone() - q2_lead.clone() * &qn_lead;
    let want_minus_t = level.r_lead.clone() - level.t.clone() * &q2_lead * &qn_lead;

    LevelReport {
        n,
        degrees_ok,
        lead_q: rel(&level.q.leading(), &level.q_lead),
        lead_g: rel(&level.g.leading(), &level.g_lead),
        lead_r: rel(&level.r.leading(), &level.r_lead),
        div_phi: rem_ratio(&level.phi, &level.q_prev2, rho, size_phi),
        div_rq: rem_ratio(&lhs, &level.q, rho, size_lhs),
        identity,
        top_minus: rel(&d_minus, &want_minus),
        top_minus_t: rel(&d_minus_t, &want_minus_t),
    }
}
