//! Painlevé VI solutions from the recursion, Okamoto transformations and
//! residual checks.
//!
//! With `t = t(τ)` the level-`n` solution is
//! `λ = R_n(Z)/(Q_{n−2}(Z)Q_n(Z))`, `μ = Q_{n−2}(Z)Q_{n−1}(Z)Q_n(Z)/G_n(Z)`
//! at `Z = Z_{r,s}(τ)`; it solves PVI with `θ = θⁿ = (−(n+1)/2, ½, ½, ½, n+½)`.

use num_complex::Complex64;

use crate::elliptic::{hecke_z, lattice_data, theta34, LatticeData, Tau, TorsionPoint};
use crate::error::{Error, Result};
use crate::recursion::eval_levels;
use crate::scalar::Scalar;

/// `t = (e3−e1)/(e2−e1)`.
pub fn t_of_tau<S: Scalar>(ld: &LatticeData<S>) -> S {
    (ld.e3.clone() - &ld.e1) / (ld.e2.clone() - &ld.e1)
}

/// The holomorphic square root `t^{1/2} = θ4²/θ3²`, which tends to 1 as
/// `Im τ → ∞`.
pub fn sqrt_t<S: Scalar>(ld: &LatticeData<S>) -> Result<S> {
    let (t3, t4) = theta34(ld)?;
    Ok((t4.clone() * &t4) / (t3.clone() * &t3))
}

/// `(θ0, θ1, θ2, θ3, θ4)` with `2θ0 + θ1 + θ2 + θ3 + θ4 = 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThetaParams(pub [Complex64; 5]);

impl ThetaParams {
    /// `θⁿ = (−(n+1)/2, ½, ½, ½, n+½)`.
    pub fn level(n: usize) -> Self {
        let n = n as f64;
        let c = |x: f64| Complex64::new(x, 0.0);
        ThetaParams([c(-(n + 1.0) / 2.0), c(0.5), c(0.5), c(0.5), c(n + 0.5)])
    }

    pub fn constraint_defect(&self) -> f64 {
        let [a, b, c, d, e] = self.0;
        (2.0 * a + b + c + d + e - 1.0).norm()
    }

    /// PVI parameters `(α, β, γ, δ) = (θ4²/2, −θ1²/2, θ2²/2, (1−θ3²)/2)`.
    pub fn pvi_params(&self) -> [Complex64; 4] {
        let [_, t1, t2, t3, t4] = self.0;
        [t4 * t4 / 2.0, -t1 * t1 / 2.0, t2 * t2 / 2.0, (1.0 - t3 * t3) / 2.0]
    }

    /// The `n` with `self = θⁿ`, if there is one.
    pub fn as_level(&self) -> Option<usize> {
        let n = self.0[4].re - 0.5;
        let k = n.round();
        if k < 0.0 || (n - k).abs() > 1e-9 {
            return None;
        }
        let want = Self::level(k as usize);
        let close = self.0.iter().zip(want.0.iter()).all(|(a, b)| (a - b).norm() < 1e-9);
        close.then_some(k as usize)
    }
}

/// A point `(λ, μ)` of the Hamiltonian system at time `t` and parameter `θ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PviState {
    pub t: Complex64,
    pub lambda: Complex64,
    pub mu: Complex64,
    pub theta: ThetaParams,
}

impl PviState {
    /// `∂K/∂μ`, which the flow equates with `dλ/dt`.
    pub fn dk_dmu(&self) -> Complex64 {
        self.dk_dmu_terms().iter().sum::<Complex64>() / (self.t * (self.t - 1.0))
    }

    fn dk_dmu_terms(&self) -> [Complex64; 4] {
        let (l, m, t) = (self.lambda, self.mu, self.t);
        let [_, t1, t2, t3, _] = self.theta.0;
        [
            2.0 * l * (l - 1.0) * (l - t) * m,
            -t1 * (l - 1.0) * (l - t),
            -t2 * l * (l - t),
            -(t3 - 1.0) * l * (l - 1.0),
        ]
    }

    /// `∂K/∂λ`, which the flow equates with `−dμ/dt`.
    pub fn dk_dlambda(&self) -> Complex64 {
        self.dk_dlambda_terms().iter().sum::<Complex64>() / (self.t * (self.t - 1.0))
    }

    fn dk_dlambda_terms(&self) -> [Complex64; 3] {
        let (l, m, t) = (self.lambda, self.mu, self.t);
        let [t0, t1, t2, t3, t4] = self.theta.0;
        [
            ((l - 1.0) * (l - t) + l * (l - t) + l * (l - 1.0)) * m * m,
            t0 * (t0 + t4),
            -(t1 * (2.0 * l - 1.0 - t) + t2 * (2.0 * l - t) + (t3 - 1.0) * (2.0 * l - 1.0)) * m,
        ]
    }
}

/// Which of the generators `κ0, …, κ4` or the composite `κ5`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kappa {
    K0,
    K1,
    K2,
    K3,
    K4,
    /// `κ0 (κ3κ2κ1κ0)² κ4`
    K5,
}

fn nonzero(x: Complex64, name: &'static str) -> Result<Complex64> {
    if x.norm() == 0.0 || !x.norm().is_finite() {
        Err(Error::SingularTransformation(name))
    } else {
        Ok(x)
    }
}

/// Applies one Okamoto transformation; `λ, μ` are updated with the old `θ`.
pub fn okamoto_apply(k: Kappa, st: &PviState) -> Result<PviState> {
    let [t0, t1, t2, t3, t4] = st.theta.0;
    let (l, m, t) = (st.lambda, st.mu, st.t);
    let out = |theta: [Complex64; 5], lambda, mu| PviState { t, lambda, mu, theta: ThetaParams(theta) };
    Ok(match k {
        Kappa::K0 => out([-t0, t1 + t0, t2 + t0, t3 + t0, t4 + t0], l + t0 / nonzero(m, "kappa0: mu = 0")?, m),
        Kappa::K1 => out([t0 + t1, -t1, t2, t3, t4], l, m - t1 / nonzero(l, "kappa1: lambda = 0")?),
        Kappa::K2 => out([t0 + t2, t1, -t2, t3, t4], l, m - t2 / nonzero(l - 1.0, "kappa2: lambda = 1")?),
        Kappa::K3 => out([t0 + t3, t1, t2, -t3, t4], l, m - t3 / nonzero(l - t, "kappa3: lambda = t")?),
        Kappa::K4 => out([t0 + t4, t1, t2, t3, -t4], l, m),
        Kappa::K5 => {
            // rightmost first
            let word = [Kappa::K4, Kappa::K0, Kappa::K1, Kappa::K2, Kappa::K3, Kappa::K0, Kappa::K1, Kappa::K2, Kappa::K3, Kappa::K0];
            let mut cur = *st;
            for g in word {
                cur = okamoto_apply(g, &cur)?;
            }
            cur
        }
    })
}

/// `κ^{0,1} = κ0κ3κ2κ1`, rightmost first.
pub fn kappa01(st: &PviState) -> Result<PviState> {
    let mut cur = *st;
    for g in [Kappa::K1, Kappa::K2, Kappa::K3, Kappa::K0] {
        cur = okamoto_apply(g, &cur)?;
    }
    Ok(cur)
}

/// `κ^{0,n}`: `κ5^m` for `n = 2m`, `κ5^m κ^{0,1}` for `n = 2m+1`.
pub fn kappa0n(n: usize, st: &PviState) -> Result<PviState> {
    let mut cur = if n % 2 == 1 { kappa01(st)? } else { *st };
    for _ in 0..n / 2 {
        cur = okamoto_apply(Kappa::K5, &cur)?;
    }
    Ok(cur)
}

/// Level `n` from level `n−1` through
/// `μⁿ = μ − n/2 (1/λ̂ + 1/(λ̂−1) + 1/(λ̂−t))`, `λ̂ = λ + (n−1)/(2μ)`,
/// `λⁿ = λ̂ + (n+1)/(2μⁿ)`.
pub fn lift_step(prev: &PviState) -> Result<PviState> {
    let m = prev
        .theta
        .as_level()
        .ok_or_else(|| Error::Domain(format!("lift_step needs a state with theta = theta^n, got {:?}", prev.theta)))?;
    let n = (m + 1) as f64;
    let t = prev.t;
    let hat = prev.lambda + (n - 1.0) / (2.0 * nonzero(prev.mu, "lift: mu = 0")?);
    let inv = |x: Complex64, what| nonzero(x, what).map(|v| 1.0 / v);
    let mu = prev.mu
        - n / 2.0 * (inv(hat, "lift: shifted lambda = 0")? + inv(hat - 1.0, "lift: shifted lambda = 1")? + inv(hat - t, "lift: shifted lambda = t")?);
    let lambda = hat + (n + 1.0) / (2.0 * nonzero(mu, "lift: new mu = 0")?);
    Ok(PviState { t, lambda, mu, theta: ThetaParams::level(m + 1) })
}

/// Why a sample sits near a pole of `λ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PoleFlag {
    /// `Q_{n−2}(Z)` nearly vanishes.
    Positive,
    /// `Q_n(Z)` nearly vanishes.
    Negative,
}

#[derive(Clone, Debug)]
pub struct PviSample<S> {
    pub n: usize,
    pub point: TorsionPoint,
    pub tau: Complex64,
    pub t: S,
    pub lambda: S,
    pub mu: S,
    /// `℘(p⁽ⁿ⁾) = (e2−e1)λ + e1`
    pub wp_p: S,
    pub pole: Option<PoleFlag>,
}

impl<S: Scalar> PviSample<S> {
    pub fn state(&self) -> PviState {
        PviState {
            t: self.t.to_c64(),
            lambda: self.lambda.to_c64(),
            mu: self.mu.to_c64(),
            theta: ThetaParams::level(self.n),
        }
    }
}

/// Relative size below which `|Q_k(Z)|` flags a pole.
pub const POLE_FLAG: f64 = 1e-6;

pub fn pvi_sample<S: Scalar>(n: usize, pt: &TorsionPoint, ld: &LatticeData<S>) -> Result<PviSample<S>> {
    let hv = hecke_z(pt, ld)?;
    let lv = eval_levels(&hv.z, n, &hv, ld)?;
    let ni = n as i64;
    let (qm2, qm1, qn) = (lv.q(ni - 2), lv.q(ni - 1), lv.q(ni));
    let lambda = lv.r(n).clone() / (qm2.clone() * qn);
    let mu = qm2.clone() * qm1 * qn / lv.g(n);
    let d = ld.e2.clone() - &ld.e1;
    let wp_p = d * &lambda + &ld.e1;
    let small = |k: i64| lv.q(k).norm() < POLE_FLAG * lv.q_size(k);
    let pole = if small(ni) {
        Some(PoleFlag::Negative)
    } else if small(ni - 2) {
        Some(PoleFlag::Positive)
    } else {
        None
    };
    Ok(PviSample { n, point: pt.clone(), tau: ld.tau.to_c64(), t: lv.t, lambda, mu, wp_p, pole })
}

/// Step control for the finite differences in `τ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FdOptions {
    /// `None` picks `10⁻⁴·max(1, |τ|)`.
    pub h: Option<f64>,
    /// Combine steps `h` and `h/2` to cancel the leading error term.
    pub richardson: bool,
}

impl Default for FdOptions {
    fn default() -> Self {
        FdOptions { h: None, richardson: true }
    }
}

impl FdOptions {
    pub fn plain(h: f64) -> Self {
        FdOptions { h: Some(h), richardson: false }
    }

    fn step(&self, tau: Complex64) -> f64 {
        self.h.unwrap_or(1e-4 * tau.norm().max(1.0))
    }
}

/// `(t, λ, μ)` at `τ`, refusing flagged samples.
fn tlm<S: Scalar>(n: usize, pt: &TorsionPoint, ctx: S::Ctx, tau: Complex64) -> Result<[Complex64; 3]> {
    let ld = lattice_data(&Tau::<S>::from_c64(ctx, tau)?, None)?;
    let smp = pvi_sample(n, pt, &ld)?;
    if smp.pole.is_some() {
        return Err(Error::PoleProximity { tau: tau.to_string() });
    }
    Ok([smp.t.to_c64(), smp.lambda.to_c64(), smp.mu.to_c64()])
}

/// First and second `τ`-derivatives of `(t, λ, μ)` from a 5-point stencil
/// of step `h` along the real axis, plus the centre values.
fn stencil<S: Scalar>(
    n: usize,
    pt: &TorsionPoint,
    ctx: S::Ctx,
    tau: Complex64,
    h: f64,
) -> Result<([Complex64; 3], [Complex64; 3], [Complex64; 3])> {
    let v: Vec<[Complex64; 3]> = [-2.0, -1.0, 0.0, 1.0, 2.0]
        .iter()
        .map(|k| tlm::<S>(n, pt, ctx, tau + Complex64::new(k * h, 0.0)))
        .collect::<Result<_>>()?;
    let mut d1 = [Complex64::new(0.0, 0.0); 3];
    let mut d2 = d1;
    for i in 0..3 {
        d1[i] = (v[0][i] - 8.0 * v[1][i] + 8.0 * v[3][i] - v[4][i]) / (12.0 * h);
        d2[i] = (-v[0][i] + 16.0 * v[1][i] - 30.0 * v[2][i] + 16.0 * v[3][i] - v[4][i]) / (12.0 * h * h);
    }
    Ok((v[2], d1, d2))
}

/// Central first differences of `(t, λ, μ)` in `τ`.
fn central<S: Scalar>(n: usize, pt: &TorsionPoint, ctx: S::Ctx, tau: Complex64, h: f64) -> Result<[Complex64; 3]> {
    let a = tlm::<S>(n, pt, ctx, tau + Complex64::new(h, 0.0))?;
    let b = tlm::<S>(n, pt, ctx, tau - Complex64::new(h, 0.0))?;
    Ok([0, 1, 2].map(|i| (a[i] - b[i]) / (2.0 * h)))
}

/// `(res1, res2)`: the two Hamiltonian equations `dλ/dt = ∂K/∂μ` and
/// `dμ/dt = −∂K/∂λ` at `θⁿ`, with `d/dt = (d/dτ)/t′(τ)`, each relative to
/// the largest term involved.
pub fn hamiltonian_residual<S: Scalar>(
    n: usize,
    pt: &TorsionPoint,
    ctx: S::Ctx,
    tau: Complex64,
    fd: FdOptions,
) -> Result<(f64, f64)> {
    let h = fd.step(tau);
    let centre = tlm::<S>(n, pt, ctx, tau)?;
    let mut d = central::<S>(n, pt, ctx, tau, h)?;
    if fd.richardson {
        let d2 = central::<S>(n, pt, ctx, tau, h / 2.0)?;
        d = [0, 1, 2].map(|i| (4.0 * d2[i] - d[i]) / 3.0);
    }
    let st = PviState { t: centre[0], lambda: centre[1], mu: centre[2], theta: ThetaParams::level(n) };
    let lam_t = d[1] / d[0];
    let mu_t = d[2] / d[0];
    let tt = (st.t * (st.t - 1.0)).norm();
    let s1 = st.dk_dmu_terms().iter().map(|x| x.norm()).fold(lam_t.norm() * tt, f64::max);
    let s2 = st.dk_dlambda_terms().iter().map(|x| x.norm()).fold(mu_t.norm() * tt, f64::max);
    let res1 = (lam_t - st.dk_dmu()).norm() * tt / s1;
    let res2 = (mu_t + st.dk_dlambda()).norm() * tt / s2;
    Ok((res1, res2))
}

/// Residual of the second-order PVI equation at `θⁿ`, relative to its
/// largest term; derivatives from 5-point stencils in `τ`.
pub fn pvi_residual<S: Scalar>(n: usize, pt: &TorsionPoint, ctx: S::Ctx, tau: Complex64, h: f64) -> Result<f64> {
    let (v, d1, d2) = stencil::<S>(n, pt, ctx, tau, h)?;
    let (t, l) = (v[0], v[1]);
    let lt = d1[1] / d1[0];
    let ltt = (d2[1] - lt * d2[0]) / (d1[0] * d1[0]);
    let [alpha, beta, gamma, delta] = ThetaParams::level(n).pvi_params();
    let one = Complex64::new(1.0, 0.0);
    let terms = [
        -ltt,
        0.5 * (one / l + one / (l - 1.0) + one / (l - t)) * lt * lt,
        -(one / t + one / (t - 1.0) + one / (l - t)) * lt,
        l * (l - 1.0) * (l - t) / (t * t * (t - 1.0) * (t - 1.0))
            * (alpha + beta * t / (l * l) + gamma * (t - 1.0) / ((l - 1.0) * (l - 1.0)) + delta * t * (t - 1.0) / ((l - t) * (l - t))),
    ];
    let scale = terms.iter().map(|x| x.norm()).fold(0.0, f64::max);
    Ok(terms.iter().sum::<Complex64>().norm() / scale)
}

/// `λμ` approaching a pole of `λ`.
#[derive(Clone, Debug, PartialEq)]
pub struct PoleLimit {
    pub tau0: Complex64,
    pub kind: PoleFlag,
    /// `(n+1)/2` at a negative pole, `−n/2` at a positive one.
    pub expected: f64,
    /// `(|δ|, λμ(τ0 + δ))` for shrinking `δ`.
    pub approach: Vec<(f64, Complex64)>,
    /// Linear extrapolation of the last two values to `δ = 0`.
    pub limit: Complex64,
}

/// `λμ` near `τ0`, a zero of `Z^{(n+1)}` (`kind = Negative`, i.e. of `Q_n`)
/// or of `Z^{(n−1)}` (`kind = Positive`, i.e. of `Q_{n−2}`).
pub fn pole_limit_check<S: Scalar>(
    n: usize,
    pt: &TorsionPoint,
    ctx: S::Ctx,
    tau0: Complex64,
    kind: PoleFlag,
) -> Result<PoleLimit> {
    let factor = match kind {
        PoleFlag::Negative => n + 1,
        PoleFlag::Positive if n >= 1 => n - 1,
        PoleFlag::Positive => return Err(Error::NoZeroNearby { tau: tau0.to_string() }),
    };
    let f = |tau: Complex64| -> Result<Complex64> {
        let ld = lattice_data(&Tau::<S>::from_c64(ctx, tau)?, None)?;
        Ok(crate::premodular::z_n(factor, pt, &ld)?.value.to_c64())
    };
    let zero = crate::zeros::refine_zero(&f, tau0).map_err(|_| Error::NoZeroNearby { tau: tau0.to_string() })?;
    if (zero.tau0 - tau0).norm() > 0.1 {
        return Err(Error::NoZeroNearby { tau: tau0.to_string() });
    }
    let dir = Complex64::from_polar(1.0, 0.7);
    let mut approach = Vec::new();
    for k in 2..=5 {
        let delta = 10f64.powi(-k);
        let tau = zero.tau0 + dir * delta;
        let ld = lattice_data(&Tau::<S>::from_c64(ctx, tau)?, None)?;
        let smp = pvi_sample(n, pt, &ld)?;
        approach.push((delta, (smp.lambda * &smp.mu).to_c64()));
    }
    let (d1, v1) = approach[approach.len() - 2];
    let (d2, v2) = approach[approach.len() - 1];
    let limit = v2 - (v1 - v2) * d2 / (d1 - d2);
    let expected = match kind {
        PoleFlag::Negative => (n as f64 + 1.0) / 2.0,
        PoleFlag::Positive => -(n as f64) / 2.0,
    };
    Ok(PoleLimit { tau0: zero.tau0, kind, expected, approach, limit })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elliptic::hecke_z;
    use crate::scalar::Mp;
    use proptest::prelude::*;

    fn ld(tau: Complex64) -> LatticeData<Complex64> {
        lattice_data(&Tau::from_c64((), tau).unwrap(), None).unwrap()
    }

    fn rel(a: Complex64, b: Complex64) -> f64 {
        (a - b).norm() / b.norm()
    }

    #[test]
    fn t_examples() {
        let l = ld(Complex64::new(0.0, 8.0));
        let t = t_of_tau(&l);
        assert!((t - 1.0 + 16.0 * l.q.sqrt()).norm() < 1e-8);
        assert!((t_of_tau(&ld(Complex64::new(0.0, 1.0))) - 0.5).norm() < 1e-12);
        let tau = Complex64::new(0.3, 0.8);
        assert!((t_of_tau(&ld(tau)) - t_of_tau(&ld(tau + 2.0))).norm() < 1e-10);
        let st = sqrt_t(&ld(tau)).unwrap();
        assert!((st * st - t_of_tau(&ld(tau))).norm() < 1e-12);
    }

    #[test]
    fn level_zero_is_hitchin() {
        let l = ld(Complex64::new(0.17, 1.2));
        let pt = TorsionPoint::real(0.23, 0.31);
        let hv = hecke_z(&pt, &l).unwrap();
        let smp = pvi_sample(0, &pt, &l).unwrap();
        let d = l.e2 - l.e1;
        let hitchin = (hv.wp + hv.wp_prime / (2.0 * hv.z) - l.e1) / d;
        assert!(rel(smp.lambda, hitchin) < 1e-9);
        assert!(rel(smp.mu, d * hv.z / hv.wp_prime) < 1e-9);
        assert!(rel(smp.wp_p, d * smp.lambda + l.e1) < 1e-14);
    }

    #[test]
    fn level_one_and_two_closed_forms() {
        let l = ld(Complex64::new(-0.21, 1.05));
        let pt = TorsionPoint::real(0.13, 0.27);
        let hv = hecke_z(&pt, &l).unwrap();
        let (z, p, dp, g2, g3, e1) = (hv.z, hv.wp, hv.wp_prime, l.g2, l.g3, l.e1);
        let d = l.e2 - l.e1;
        let z2 = z * z * z - 3.0 * p * z - dp;
        let num = (p - e1) * z.powi(3) + 1.5 * dp * z * z + (6.0 * p * p + 6.0 * e1 * p - g2) / 2.0 * z + (p + 2.0 * e1) / 2.0 * dp;
        let s1 = pvi_sample(1, &pt, &l).unwrap();
        assert!(rel(s1.lambda, num / (d * z2)) < 1e-8);
        let mu1 = 2.0 * d * z * z2 / (2.0 * dp * z.powi(3) + (12.0 * p * p - g2) * z * z + 6.0 * p * dp * z + dp * dp);
        assert!(rel(s1.mu, mu1) < 1e-8);

        let z3 = z.powi(6) - 15.0 * p * z.powi(4) - 20.0 * dp * z.powi(3) + (27.0 / 4.0 * g2 - 45.0 * p * p) * z * z
            - 12.0 * p * dp * z
            - 1.25 * dp * dp;
        let xi = 28.0 * dp * z.powi(6) + (288.0 * p * p - 24.0 * g2) * z.powi(5) + 300.0 * p * dp * z.powi(4)
            + (640.0 * p.powi(3) - 88.0 * g2 * p - 52.0 * g3) * z.powi(3)
            + (180.0 * p * p - 3.0 * g2) * dp * z * z
            + 24.0 * p * dp * dp * z
            + dp.powi(3);
        let s2 = pvi_sample(2, &pt, &l).unwrap();
        assert!(rel(s2.wp_p, p + xi / (8.0 * z * z3)) < 1e-7);
    }

    fn random_state(seed: [f64; 6]) -> PviState {
        let c = |a: f64, b: f64| Complex64::new(a, b);
        let th = [c(seed[0], 0.1), c(seed[1], -0.2), c(0.3, seed[2]), c(seed[3], 0.0), c(0.0, 0.0)];
        let t4 = c(1.0, 0.0) - 2.0 * th[0] - th[1] - th[2] - th[3];
        PviState {
            t: c(seed[4], 0.4),
            lambda: c(seed[5], 0.7),
            mu: c(0.3, seed[4]),
            theta: ThetaParams([th[0], th[1], th[2], th[3], t4]),
        }
    }

    proptest! {
        #[test]
        fn generators_are_involutions(seed in proptest::array::uniform6(-2.0f64..2.0)) {
            let st = random_state(seed);
            for k in [Kappa::K0, Kappa::K1, Kappa::K2, Kappa::K3, Kappa::K4] {
                let back = okamoto_apply(k, &okamoto_apply(k, &st).unwrap()).unwrap();
                prop_assert!(rel(back.lambda, st.lambda) < 1e-10);
                prop_assert!(rel(back.mu, st.mu) < 1e-10);
                for j in 0..5 {
                    prop_assert!((back.theta.0[j] - st.theta.0[j]).norm() < 1e-12);
                }
                prop_assert!(okamoto_apply(k, &st).unwrap().theta.constraint_defect() < 1e-12);
            }
        }

        #[test]
        fn kappa5_shifts_parameters(seed in proptest::array::uniform6(-2.0f64..2.0)) {
            let st = random_state(seed);
            let out = okamoto_apply(Kappa::K5, &st).unwrap();
            let [a, b, c, d, e] = st.theta.0;
            let want = [a - 1.0, b, c, d, e + 2.0];
            for j in 0..5 {
                prop_assert!((out.theta.0[j] - want[j]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn kappa_chain_reaches_each_level() {
        let c = Complex64::new(0.0, 0.0);
        for n in 0..=6 {
            let st = PviState { t: c, lambda: c + 0.3, mu: c + 0.7, theta: ThetaParams::level(0) };
            let st = PviState { t: Complex64::new(0.4, 0.2), ..st };
            let out = kappa0n(n, &st).unwrap();
            assert_eq!(out.theta.as_level(), Some(n));
        }
    }

    #[test]
    fn okamoto_lift_and_recursion_agree() {
        let l = ld(Complex64::new(0.11, 1.3));
        let pt = TorsionPoint::real(0.19, 0.28);
        let s0 = pvi_sample(0, &pt, &l).unwrap().state();
        let mut lifted = s0;
        for n in 1..=5 {
            lifted = lift_step(&lifted).unwrap();
            let want = pvi_sample(n, &pt, &l).unwrap().state();
            assert!(rel(lifted.lambda, want.lambda) < 1e-8, "lift, level {n}");
            assert!(rel(lifted.mu, want.mu) < 1e-8, "lift, level {n}");
            let viak = kappa0n(n, &s0).unwrap();
            assert!(rel(viak.lambda, want.lambda) < 1e-8, "okamoto, level {n}");
            assert!(rel(viak.mu, want.mu) < 1e-8, "okamoto, level {n}");
        }
    }

    #[test]
    fn quarter_point_family() {
        let l = ld(Complex64::new(0.2, 1.1));
        let pt = TorsionPoint::ratio(1, 4, 0, 1);
        let rt = sqrt_t(&l).unwrap();
        let mut st = pvi_sample(0, &pt, &l).unwrap().state();
        for n in 0..=6 {
            let smp = pvi_sample(n, &pt, &l).unwrap();
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            assert!(rel(smp.lambda, sign * rt / (2.0 * n as f64 + 1.0)) < 1e-7, "level {n}");
            assert!((smp.lambda * smp.mu - 0.25).norm() < 1e-8, "level {n}");
            if n > 0 {
                st = lift_step(&st).unwrap();
            }
            assert!((st.lambda * st.mu - 0.25).norm() < 1e-8, "lift level {n}");
        }
    }

    #[test]
    fn hamiltonian_and_pvi_residuals() {
        let pt = TorsionPoint::real(0.21, 0.34);
        let tau = Complex64::new(0.12, 1.1);
        for n in 0..=4 {
            let (a, b) = hamiltonian_residual::<Complex64>(n, &pt, (), tau, FdOptions::default()).unwrap();
            assert!(a < 1e-4 && b < 1e-4, "level {n}: {a:e} {b:e}");
            let r = pvi_residual::<Complex64>(n, &pt, (), tau, 1e-3).unwrap();
            assert!(r < 1e-3, "level {n}: {r:e}");
        }
        let quarter = TorsionPoint::ratio(1, 4, 0, 1);
        let (a, b) = hamiltonian_residual::<Complex64>(0, &quarter, (), Complex64::new(0.0, 1.5), FdOptions::default()).unwrap();
        assert!(a < 1e-6 && b < 1e-6);
        for n in 0..=6 {
            let r = pvi_residual::<Mp>(n, &quarter, 192, Complex64::new(0.1, 1.5), 1e-3).unwrap();
            assert!(r < 1e-6, "level {n}: {r:e}");
        }
    }

    #[test]
    fn central_difference_is_second_order() {
        let pt = TorsionPoint::real(0.21, 0.34);
        let tau = Complex64::new(0.12, 1.1);
        let (a, _) = hamiltonian_residual::<Complex64>(2, &pt, (), tau, FdOptions::plain(2e-3)).unwrap();
        let (b, _) = hamiltonian_residual::<Complex64>(2, &pt, (), tau, FdOptions::plain(1e-3)).unwrap();
        assert!((a / b - 4.0).abs() < 0.4, "ratio {}", a / b);
    }

    #[test]
    fn quarter_point_in_extended() {
        let tau = Complex64::new(0.0, 3.0);
        let l = lattice_data(&Tau::<Mp>::from_c64(256, tau).unwrap(), None).unwrap();
        let pt = TorsionPoint::ratio(1, 4, 0, 1);
        let rt = sqrt_t(&l).unwrap();
        for n in 0..=6 {
            let smp = pvi_sample(n, &pt, &l).unwrap();
            let want = rt.clone() * Mp::from_ratio(256, if n % 2 == 0 { 1 } else { -1 }, 2 * n as i64 + 1);
            let err = (smp.lambda.clone() - &want).norm() / want.norm();
            assert!(err < 1e-30, "level {n}: {err:e}");
        }
    }

    fn first_zero(k: usize, pt: &TorsionPoint, rect: crate::zeros::Rect) -> Complex64 {
        let p = pt.clone();
        let f = move |tau: Complex64| -> Result<Complex64> {
            let l = lattice_data(&Tau::<Complex64>::from_c64((), tau)?, None)?;
            Ok(crate::premodular::z_n(k, &p, &l)?.value)
        };
        crate::zeros::find_zeros(&f, &rect, 8, 8).unwrap()[0].tau0
    }

    #[test]
    fn pole_limits() {
        let pt = TorsionPoint::real(0.2, 0.3);
        let tau0 = first_zero(2, &pt, crate::zeros::Rect::new(-1.0, 1.0, 0.2, 2.5).unwrap());
        let neg = pole_limit_check::<Complex64>(1, &pt, (), tau0 + 1e-4, PoleFlag::Negative).unwrap();
        assert!((neg.limit - 1.0).norm() < 1e-3, "{neg:?}");

        let pt = TorsionPoint::ratio(1, 3, 1, 3);
        let tau0 = first_zero(1, &pt, crate::zeros::Rect::new(0.0, 2.0, 0.3, 3.0).unwrap());
        let pos = pole_limit_check::<Complex64>(2, &pt, (), tau0, PoleFlag::Positive).unwrap();
        assert!((pos.limit + 1.0).norm() < 1e-3, "{pos:?}");
        assert!(pole_limit_check::<Complex64>(0, &pt, (), tau0, PoleFlag::Positive).is_err());

        let l = ld(tau0);
        let flagged = pvi_sample(2, &pt, &l).unwrap();
        assert_eq!(flagged.pole, Some(PoleFlag::Positive));
        assert!(matches!(pvi_residual::<Complex64>(2, &pt, (), tau0, 1e-9), Err(Error::PoleProximity { .. })));
    }
}
