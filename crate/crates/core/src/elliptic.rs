//! Lattice quantities for `Λ = Z + Zτ` from q-series, the Hecke function
//! `Z_{r,s}(τ)`, and torsion points.

use std::f64::consts::PI;

use num_complex::Complex64;
use num_integer::Integer;
use num_rational::Rational64;
use num_traits::ToPrimitive;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Smallest `Im τ` accepted by the series kernel (`|q| ≈ 0.73`).
pub const IM_TAU_FLOOR: f64 = 0.05;
/// Hard cap on the number of series terms.
pub const MAX_TERMS: usize = 1_000_000;

/// A point of the upper half-plane.
#[derive(Clone, Debug, PartialEq)]
pub struct Tau<S> {
    value: S,
}

impl<S: Scalar> Tau<S> {
    pub fn new(value: S) -> Result<Self> {
        let im = value.im();
        if im > 0.0 {
            Ok(Tau { value })
        } else {
            Err(Error::Domain(format!("Im tau must be positive, got {im}")))
        }
    }

    pub fn from_c64(ctx: S::Ctx, z: Complex64) -> Result<Self> {
        Self::new(S::from_c64(ctx, z))
    }

    pub fn value(&self) -> &S {
        &self.value
    }

    pub fn ctx(&self) -> S::Ctx {
        self.value.ctx()
    }

    pub fn to_c64(&self) -> Complex64 {
        self.value.to_c64()
    }

    pub fn im(&self) -> f64 {
        self.value.im()
    }

    /// `τ + h`.
    pub fn shifted(&self, h: Complex64) -> Result<Self> {
        Self::new(self.value.clone() + S::from_c64(self.ctx(), h))
    }

    /// Möbius action `(aτ+b)/(cτ+d)`.
    pub fn act(&self, m: [[i64; 2]; 2]) -> Result<Self> {
        let c = self.ctx();
        let [[a, b], [cc, d]] = m;
        let num = self.value.clone() * S::from_ratio(c, a, 1) + S::from_ratio(c, b, 1);
        let den = self.value.clone() * S::from_ratio(c, cc, 1) + S::from_ratio(c, d, 1);
        Self::new(num / den)
    }

    /// Move into the standard fundamental domain of Γ(2),
    /// `{0 ≤ Re τ < 2, |τ−1/2| ≥ 1/2, |τ−3/2| > 1/2}`.
    ///
    /// Returns the image and the matrix `γ` with `image = γ·τ`.
    pub fn normalize_f2(&self) -> Result<(Self, [[i64; 2]; 2])> {
        let mut m = [[1i64, 0], [0, 1]];
        let mut cur = self.clone();
        for _ in 0..10_000 {
            let z = cur.to_c64();
            let shift = -(z.re / 2.0).floor() as i64 * 2;
            if shift != 0 {
                let g = [[1, shift], [0, 1]];
                cur = cur.act(g)?;
                m = matmul(g, m);
                continue;
            }
            let z = cur.to_c64();
            if (z - Complex64::new(0.5, 0.0)).norm() < 0.5 {
                let g = [[1, 0], [-2, 1]];
                cur = cur.act(g)?;
                m = matmul(g, m);
                continue;
            }
            if (z - Complex64::new(1.5, 0.0)).norm() <= 0.5 {
                let g = [[5, -8], [2, -3]];
                cur = cur.act(g)?;
                m = matmul(g, m);
                continue;
            }
            return Ok((cur, m));
        }
        Err(Error::Domain("F2 normalization did not terminate".into()))
    }
}

fn matmul(a: [[i64; 2]; 2], b: [[i64; 2]; 2]) -> [[i64; 2]; 2] {
    [
        [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
        [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
    ]
}

/// Monodromy parameters `(r, s)`, exact when built from rationals.
#[derive(Clone, Debug, PartialEq)]
pub struct TorsionPoint {
    pub r: Complex64,
    pub s: Complex64,
    /// Exact coordinates, used instead of `r`, `s` when present.
    pub exact: Option<(Rational64, Rational64)>,
    pub exact_order: Option<u32>,
}

impl serde::Serialize for TorsionPoint {
    fn serialize<Ser: serde::Serializer>(&self, ser: Ser) -> std::result::Result<Ser::Ok, Ser::Error> {
        match self.exact {
            Some((r, s)) => (r.to_string(), s.to_string()).serialize(ser),
            None => ((self.r.re, self.r.im), (self.s.re, self.s.im)).serialize(ser),
        }
    }
}

impl TorsionPoint {
    pub fn new(r: Complex64, s: Complex64) -> Self {
        TorsionPoint { r, s, exact: None, exact_order: None }
    }

    pub fn real(r: f64, s: f64) -> Self {
        Self::new(Complex64::new(r, 0.0), Complex64::new(s, 0.0))
    }

    pub fn rational(r: Rational64, s: Rational64) -> Self {
        let order = r.denom().lcm(s.denom());
        TorsionPoint {
            r: Complex64::new(r.to_f64().unwrap_or(f64::NAN), 0.0),
            s: Complex64::new(s.to_f64().unwrap_or(f64::NAN), 0.0),
            exact: Some((r, s)),
            exact_order: u32::try_from(order).ok(),
        }
    }

    /// `(rn/rd, sn/sd)`.
    pub fn ratio(rn: i64, rd: i64, sn: i64, sd: i64) -> Self {
        Self::rational(Rational64::new(rn, rd), Rational64::new(sn, sd))
    }

    pub fn r_as<S: Scalar>(&self, ctx: S::Ctx) -> S {
        match &self.exact {
            Some((r, _)) => S::from_ratio(ctx, *r.numer(), *r.denom()),
            None => S::from_c64(ctx, self.r),
        }
    }

    pub fn s_as<S: Scalar>(&self, ctx: S::Ctx) -> S {
        match &self.exact {
            Some((_, s)) => S::from_ratio(ctx, *s.numer(), *s.denom()),
            None => S::from_c64(ctx, self.s),
        }
    }

    pub fn is_real(&self) -> bool {
        self.exact.is_some() || (self.r.im == 0.0 && self.s.im == 0.0)
    }

    /// True when `(r, s) ∈ ½Z²`.
    pub fn is_half_lattice(&self) -> bool {
        if let Some((r, s)) = &self.exact {
            let two = Rational64::from_integer(2);
            return (r * two).is_integer() && (s * two).is_integer();
        }
        let near = |x: Complex64| {
            let y = 2.0 * x;
            x.im.abs() < 1e-12 && (y.re - y.re.round()).abs() < 1e-12
        };
        near(self.r) && near(self.s)
    }

    fn describe(&self) -> (String, String) {
        match &self.exact {
            Some((r, s)) => (r.to_string(), s.to_string()),
            None => (self.r.to_string(), self.s.to_string()),
        }
    }

    pub(crate) fn invalid(&self) -> Error {
        let (r, s) = self.describe();
        Error::InvalidPoint { r, s }
    }
}

impl std::fmt::Display for TorsionPoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let (r, s) = self.describe();
        write!(f, "({r}, {s})")
    }
}

/// All τ-dependent lattice invariants.
#[derive(Clone, Debug)]
pub struct LatticeData<S> {
    pub tau: Tau<S>,
    pub q: S,
    pub g2: S,
    pub g3: S,
    pub e1: S,
    pub e2: S,
    pub e3: S,
    pub eta1: S,
    pub eta2: S,
    pub delta: S,
    pub j: S,
    /// Natural log of the truncation tolerance the series were summed to.
    pub ln_tol: f64,
    /// Largest number of terms any series needed.
    pub terms: usize,
}

/// Sum `Σ_{n≥1} term(n)` until the geometric tail bounded by `envelope`
/// drops below `tol·(1+|partial|)`.
fn sum_series<S: Scalar>(
    zero: S,
    ln_tol: f64,
    mut term: impl FnMut(usize) -> S,
    ln_envelope: impl Fn(usize) -> f64,
) -> Result<(S, usize)> {
    let mut acc = zero;
    for n in 1..=MAX_TERMS {
        acc = acc + term(n);
        if tail_below(ln_envelope(n + 1), ln_envelope(n + 2), ln_tol + acc.norm().ln_1p()) {
            return Ok((acc, n));
        }
    }
    Err(Error::SeriesNonconvergence { terms: MAX_TERMS })
}

/// Whether a tail with log-terms `ln_next, ln_after, …` (geometric from
/// there on) is below `e^{ln_bound}`.
fn tail_below(ln_next: f64, ln_after: f64, ln_bound: f64) -> bool {
    let ln_ratio = ln_after - ln_next;
    ln_ratio < 0.0 && ln_next - (-ln_ratio.exp()).ln_1p() < ln_bound
}

fn two_pi_i<S: Scalar>(c: S::Ctx) -> S {
    S::pi(c).mul_pow2(1) * S::i(c)
}

/// The three w-dependent sums behind ℘, ℘′ and ζ on a reduced argument.
struct WSums<S> {
    wp: S,
    wp_prime: S,
    /// `πi(w+1)/(w−1) − 2πi Σ ((qw)^n − (q/w)^n)/(1−q^n)`
    zeta_part: S,
    terms: usize,
}

fn w_sums<S: Scalar>(w: &S, q: &S, ln_tol: f64) -> Result<WSums<S>> {
    let c = w.ctx();
    let one = S::one(c);
    let qw = q.clone() * w;
    let qiw = q.clone() / w;
    let ln_rho = qw.ln_norm().max(qiw.ln_norm());
    let ln_qa = q.ln_norm();
    let (mut pw, mut pi, mut pq) = (one.clone(), one.clone(), one.clone());
    let mut sum_a = S::zero(c);
    let mut sum_b = S::zero(c);
    let mut sum_c = S::zero(c);
    let mut terms = 0;
    let env = |n: usize| {
        let nf = n as f64;
        // n² · 2(ρ^n + |q|^n)/(1 − |q|)
        2.0 * nf.ln() + 2f64.ln() + 2f64.ln() + (nf * ln_rho).max(nf * ln_qa) - (-ln_qa.exp()).ln_1p()
    };
    for n in 1..=MAX_TERMS {
        pw = pw * &qw;
        pi = pi * &qiw;
        pq = pq * q;
        let nf = S::from_ratio(c, n as i64, 1);
        let inv = one.clone() / (one.clone() - &pq);
        let plus = pw.clone() + &pi - pq.mul_pow2(1);
        let minus = pw.clone() - &pi;
        sum_a = sum_a + nf.clone() * &inv * &plus;
        sum_b = sum_b + nf.clone() * &nf * &inv * &minus;
        sum_c = sum_c + inv * &minus;
        terms = n;
        let scale = sum_a.norm().max(sum_b.norm()).max(sum_c.norm()).ln_1p();
        if tail_below(env(n + 1), env(n + 2), ln_tol + scale) {
            break;
        }
        if n == MAX_TERMS {
            return Err(Error::SeriesNonconvergence { terms: MAX_TERMS });
        }
    }
    let pi_s = S::pi(c);
    let pi2 = pi_s.clone() * &pi_s;
    let i = S::i(c);
    let omw = one.clone() - w;
    let base_a = w.clone() / (omw.clone() * &omw);
    let base_b = w.clone() * (one.clone() + w) / (omw.clone() * &omw * &omw);
    let wp = -(pi2.clone() / S::from_ratio(c, 3, 1)) - pi2.mul_pow2(2) * (base_a + sum_a);
    let wp_prime = -(pi2.clone() * &pi_s * &i).mul_pow2(3) * (base_b + sum_b);
    let pii = pi_s * &i;
    let zeta_part =
        pii.clone() * (w.clone() + &one) / (w.clone() - &one) - pii.mul_pow2(1) * sum_c;
    Ok(WSums { wp, wp_prime, zeta_part, terms })
}

/// `z = z_red + m1 + m2·τ` with `Im z_red/Im τ ∈ [−½, ½]`, `Re` likewise
/// centred.
fn reduce<S: Scalar>(z: &S, tau: &S) -> (S, i64, i64) {
    let c = z.ctx();
    let m2 = (z.im() / tau.im()).round() as i64;
    let z1 = z.clone() - tau.clone() * S::from_ratio(c, m2, 1);
    let m1 = z1.re().round() as i64;
    (z1 - S::from_ratio(c, m1, 1), m1, m2)
}

fn exp_2pi_i<S: Scalar>(z: &S) -> S {
    (two_pi_i::<S>(z.ctx()) * z).exp()
}

fn check_pole<S: Scalar>(zr: &S) -> Result<()> {
    let eps = S::epsilon(zr.ctx());
    if zr.norm() <= 1e3 * eps {
        Err(Error::Pole)
    } else {
        Ok(())
    }
}

/// Computes every field of [`LatticeData`] from q-series.
///
/// `tol` is the truncation tolerance; pass `None` for the backend roundoff.
pub fn lattice_data<S: Scalar>(tau: &Tau<S>, tol: Option<f64>) -> Result<LatticeData<S>> {
    let im = tau.im();
    if im < IM_TAU_FLOOR {
        return Err(Error::TauBelowFloor { im, floor: IM_TAU_FLOOR });
    }
    let c = tau.ctx();
    let ln_tol = tol.map(f64::ln).unwrap_or_else(|| S::ln_epsilon(c));
    let t = tau.value().clone();
    let q = exp_2pi_i(&t);
    let ln_qa = -2.0 * PI * im;

    // Σ σ_k(m) q^m = Σ m^k q^m / (1 − q^m)
    let lambert = |k: i32| {
        let mut pq = S::one(c);
        sum_series(
            S::zero(c),
            ln_tol,
            |m| {
                pq = pq.clone() * &q;
                let mk = S::from_f64(c, (m as f64).powi(k));
                mk * &pq / (S::one(c) - &pq)
            },
            |m| k as f64 * (m as f64).ln() + m as f64 * ln_qa - (-ln_qa.exp()).ln_1p(),
        )
    };
    let (s1, n1) = lambert(1)?;
    let (s3, n3) = lambert(3)?;
    let (s5, n5) = lambert(5)?;

    let pi = S::pi(c);
    let pi2 = pi.clone() * &pi;
    let pi4 = pi2.clone() * &pi2;
    let pi6 = pi4.clone() * &pi2;
    let r = |a: i64, b: i64| S::from_ratio(c, a, b);
    let g2 = pi4.clone() * r(4, 3) + pi4 * r(320, 1) * s3;
    let g3 = pi6.clone() * r(8, 27) - pi6 * r(448, 3) * s5;
    let eta1 = pi2.clone() / r(3, 1) * (S::one(c) - r(24, 1) * s1);
    let eta2 = t.clone() * &eta1 - two_pi_i::<S>(c);

    let half = r(1, 2);
    let mut terms = n1.max(n3).max(n5);
    let mut half_value = |z: S| -> Result<S> {
        let (zr, _, _) = reduce(&z, &t);
        let ws = w_sums(&exp_2pi_i(&zr), &q, ln_tol)?;
        terms = terms.max(ws.terms);
        Ok(ws.wp)
    };
    let e1 = half_value(half.clone())?;
    let e2 = half_value(t.clone() * &half)?;
    let e3 = half_value((t.clone() + S::one(c)) * &half)?;

    // Δ = (2π)^12 q ∏ (1 − q^m)^24
    let mut prod = S::one(c);
    let mut pq = S::one(c);
    let mut m = 0usize;
    loop {
        m += 1;
        pq = pq * &q;
        prod = prod * (S::one(c) - &pq);
        if (m as f64 + 1.0) * ln_qa - (-ln_qa.exp()).ln_1p() < ln_tol {
            break;
        }
        if m == MAX_TERMS {
            return Err(Error::SeriesNonconvergence { terms: MAX_TERMS });
        }
    }
    terms = terms.max(m);
    let delta = pi.mul_pow2(1).powi(12) * &q * prod.powi(24);
    let j = g2.powi(3) * r(1728, 1) / &delta;

    Ok(LatticeData {
        tau: tau.clone(),
        q,
        g2,
        g3,
        e1,
        e2,
        e3,
        eta1,
        eta2,
        delta,
        j,
        ln_tol,
        terms,
    })
}

/// `℘(z)` and `℘′(z)` together.
pub fn wp_pair<S: Scalar>(z: &S, ld: &LatticeData<S>) -> Result<(S, S)> {
    let (zr, _, _) = reduce(z, ld.tau.value());
    check_pole(&zr)?;
    let ws = w_sums(&exp_2pi_i(&zr), &ld.q, ld.ln_tol)?;
    Ok((ws.wp, ws.wp_prime))
}

pub fn wp<S: Scalar>(z: &S, ld: &LatticeData<S>) -> Result<S> {
    Ok(wp_pair(z, ld)?.0)
}

pub fn wp_prime<S: Scalar>(z: &S, ld: &LatticeData<S>) -> Result<S> {
    Ok(wp_pair(z, ld)?.1)
}

/// Weierstrass `ζ(z)`, quasi-periodic with `ζ(z+1) = ζ(z)+η1`,
/// `ζ(z+τ) = ζ(z)+η2`.
pub fn zeta<S: Scalar>(z: &S, ld: &LatticeData<S>) -> Result<S> {
    let c = z.ctx();
    let (zr, m1, m2) = reduce(z, ld.tau.value());
    check_pole(&zr)?;
    let ws = w_sums(&exp_2pi_i(&zr), &ld.q, ld.ln_tol)?;
    Ok(ld.eta1.clone() * &zr
        + ws.zeta_part
        + ld.eta1.clone() * S::from_ratio(c, m1, 1)
        + ld.eta2.clone() * S::from_ratio(c, m2, 1))
}

/// `Z_{r,s}(τ)` together with `℘`, `℘′` at `a = r + sτ`.
#[derive(Clone, Debug)]
pub struct HeckeValue<S> {
    pub point: TorsionPoint,
    pub tau: Tau<S>,
    pub a: S,
    /// `e^{2πi a}`
    pub x: S,
    pub z: S,
    pub wp: S,
    pub wp_prime: S,
}

/// Evaluates the Hecke function `ζ(r+sτ) − rη1 − sη2`.
///
/// On the reduced argument `a' = r' + s'τ` the η-terms collapse to `2πi s'`,
/// so no quasi-period enters the sum.
pub fn hecke_z<S: Scalar>(pt: &TorsionPoint, ld: &LatticeData<S>) -> Result<HeckeValue<S>> {
    if pt.is_half_lattice() {
        return Err(pt.invalid());
    }
    let c = ld.tau.ctx();
    let t = ld.tau.value();
    let r = pt.r_as::<S>(c);
    let s = pt.s_as::<S>(c);
    let a = r + s.clone() * t;
    let (ar, _, m2) = reduce(&a, t);
    check_pole(&ar).map_err(|_| pt.invalid())?;
    let s_red = s - S::from_ratio(c, m2, 1);
    let ws = w_sums(&exp_2pi_i(&ar), &ld.q, ld.ln_tol)?;
    let z = two_pi_i::<S>(c) * s_red + ws.zeta_part;
    Ok(HeckeValue {
        point: pt.clone(),
        tau: ld.tau.clone(),
        x: exp_2pi_i(&a),
        a,
        z,
        wp: ws.wp,
        wp_prime: ws.wp_prime,
    })
}

/// `θ3(τ)` and `θ4(τ)` in the nome `e^{πiτ}`; used to fix the holomorphic
/// branch `t^{1/2} = θ4²/θ3²`.
pub fn theta34<S: Scalar>(ld: &LatticeData<S>) -> Result<(S, S)> {
    let c = ld.tau.ctx();
    let nome = (S::pi(c) * S::i(c) * ld.tau.value()).exp();
    let ln_na = nome.ln_norm();
    let mut t3 = S::one(c);
    let mut t4 = S::one(c);
    let mut k = 0usize;
    loop {
        k += 1;
        let p = nome.powi((k * k) as i64).mul_pow2(1);
        t3 = t3 + &p;
        if k % 2 == 1 {
            t4 = t4 - &p;
        } else {
            t4 = t4 + &p;
        }
        let next = ((k + 1) * (k + 1)) as f64;
        if 2f64.ln() + next * ln_na < ld.ln_tol || k >= MAX_TERMS {
            break;
        }
    }
    if k >= MAX_TERMS {
        return Err(Error::SeriesNonconvergence { terms: k });
    }
    Ok((t3, t4))
}

/// Points of exact order `N`, `(k1/N, k2/N)` with `gcd(k1,k2,N) = 1`, in
/// lexicographic order of `(k1, k2)`.
pub fn torsion_points(n: u32) -> Result<Vec<TorsionPoint>> {
    if n < 3 {
        return Err(Error::Domain(format!("torsion points need N >= 3, got {n}")));
    }
    let nn = n as i64;
    let mut out = Vec::new();
    for k1 in 0..nn {
        for k2 in 0..nn {
            if k1.gcd(&k2).gcd(&nn) == 1 {
                let mut p = TorsionPoint::ratio(k1, nn, k2, nn);
                p.exact_order = Some(n);
                out.push(p);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Mp;

    fn ld(z: Complex64) -> LatticeData<Complex64> {
        lattice_data(&Tau::from_c64((), z).unwrap(), None).unwrap()
    }

    fn rel(a: Complex64, b: Complex64) -> f64 {
        (a - b).norm() / b.norm().max(1e-300)
    }

    #[test]
    fn g2_high_up_is_eisenstein_constant() {
        let l = ld(Complex64::new(0.0, 10.0));
        assert!(rel(l.g2, Complex64::new(4.0 * PI.powi(4) / 3.0, 0.0)) < 1e-10);
    }

    #[test]
    fn legendre_and_e_sum() {
        for z in [Complex64::new(0.1, 0.9), Complex64::new(-0.4, 2.2), Complex64::new(0.7, 0.3)] {
            let l = ld(z);
            let leg = z * l.eta1 - l.eta2 - Complex64::new(0.0, 2.0 * PI);
            assert!(leg.norm() < 1e-12);
            let m = l.e1.norm().max(l.e2.norm()).max(l.e3.norm());
            assert!((l.e1 + l.e2 + l.e3).norm() < 1e-10 * m);
        }
    }

    #[test]
    fn discriminant_two_routes() {
        for z in [Complex64::new(0.2, 0.8), Complex64::new(0.5, 1.5)] {
            let l = ld(z);
            let other = l.g2.powi(3) - 27.0 * l.g3 * l.g3;
            assert!(rel(other, l.delta) < 1e-9);
        }
    }

    #[test]
    fn j_at_i_is_1728() {
        let l = ld(Complex64::new(0.0, 1.0));
        assert!(rel(l.j, Complex64::new(1728.0, 0.0)) < 1e-11);
    }

    #[test]
    fn half_period_limits() {
        let l = ld(Complex64::new(0.0, 6.0));
        let p2 = PI * PI;
        assert!((l.e1 - Complex64::new(2.0 * p2 / 3.0, 0.0) - 16.0 * p2 * l.q).norm() < 1e-12);
        assert!((l.e2 + l.e3 - Complex64::new(-2.0 * p2 / 3.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn zeta_quasi_periods() {
        let l = ld(Complex64::new(0.3, 1.1));
        let tau = l.tau.to_c64();
        for z in [Complex64::new(0.21, 0.13), Complex64::new(-0.35, 0.4), Complex64::new(0.1, -0.3)] {
            let z0 = zeta(&z, &l).unwrap();
            let z1 = zeta(&(z + 1.0), &l).unwrap();
            let zt = zeta(&(z + tau), &l).unwrap();
            assert!(rel(z1 - z0, l.eta1) < 1e-10);
            assert!(rel(zt - z0, l.eta2) < 1e-10);
        }
    }

    #[test]
    fn zeta_derivative_is_minus_wp() {
        let l = ld(Complex64::new(-0.2, 0.9));
        let z = Complex64::new(0.31, 0.27);
        let h = 1e-5;
        let d = (zeta(&(z + h), &l).unwrap() - zeta(&(z - h), &l).unwrap()) / (2.0 * h);
        assert!(rel(-d, wp(&z, &l).unwrap()) < 1e-8);
    }

    #[test]
    fn hecke_matches_definition() {
        let l = ld(Complex64::new(0.15, 1.3));
        let tau = l.tau.to_c64();
        for (r, s) in [(0.2, 0.3), (0.7, 0.9), (-0.4, 1.35), (0.25, 0.0)] {
            let pt = TorsionPoint::real(r, s);
            let hv = hecke_z(&pt, &l).unwrap();
            let a = Complex64::new(r, 0.0) + s * tau;
            let want = zeta(&a, &l).unwrap() - r * l.eta1 - s * l.eta2;
            assert!(rel(hv.z, want) < 1e-11, "{r} {s}");
        }
    }

    #[test]
    fn hecke_quarter_point_high_up() {
        let l = ld(Complex64::new(0.0, 8.0));
        let hv = hecke_z(&TorsionPoint::ratio(1, 4, 0, 1), &l).unwrap();
        assert!((hv.z - PI).norm() < 1e-14);
    }

    #[test]
    fn hecke_half_s_is_small() {
        let l = ld(Complex64::new(0.0, 6.0));
        let hv = hecke_z(&TorsionPoint::ratio(1, 3, 1, 2), &l).unwrap();
        // leading term 4π·sin(2π/3)·q^{1/2}
        let lead = 4.0 * PI * (2.0 * PI / 3.0).sin() * l.q.norm().sqrt();
        assert!((hv.z.norm() - lead).abs() < 1e-6 * lead);
    }

    #[test]
    fn rejects_half_lattice_and_low_tau() {
        let l = ld(Complex64::new(0.0, 1.0));
        assert!(matches!(
            hecke_z(&TorsionPoint::ratio(1, 2, 0, 1), &l),
            Err(Error::InvalidPoint { .. })
        ));
        let low = Tau::<Complex64>::from_c64((), Complex64::new(0.0, 0.01)).unwrap();
        assert!(matches!(lattice_data(&low, None), Err(Error::TauBelowFloor { .. })));
        assert!(matches!(wp(&Complex64::new(1.0, 0.0), &l), Err(Error::Pole)));
    }

    #[test]
    fn torsion_counts() {
        assert_eq!(torsion_points(3).unwrap().len(), 8);
        assert_eq!(torsion_points(4).unwrap().len(), 12);
        assert!(torsion_points(2).is_err());
    }

    #[test]
    fn f2_normalization() {
        let t = Tau::<Complex64>::from_c64((), Complex64::new(3.3, 0.2)).unwrap();
        let (u, m) = t.normalize_f2().unwrap();
        let z = u.to_c64();
        assert!((0.0..2.0).contains(&z.re));
        assert!((z - 0.5).norm() >= 0.5 && (z - 1.5).norm() > 0.5);
        assert_eq!(m[0][0] * m[1][1] - m[0][1] * m[1][0], 1);
        assert!((t.act(m).unwrap().to_c64() - z).norm() < 1e-12);
        assert_eq!(m[1][0].rem_euclid(2), 0);
        assert_eq!(m[0][1].rem_euclid(2), 0);
    }

    #[test]
    fn extended_backend_matches_double() {
        let z = Complex64::new(0.3, 0.8);
        let d = ld(z);
        let m = lattice_data(&Tau::<Mp>::from_c64(256, z).unwrap(), None).unwrap();
        assert!(rel(m.g3.to_c64(), d.g3) < 1e-13);
        assert!(rel(m.e2.to_c64(), d.e2) < 1e-13);
        let tau = m.tau.value().clone();
        let leg = tau * &m.eta1 - &m.eta2 - two_pi_i::<Mp>(256);
        assert!(leg.norm() < 1e-70);
        let cubic = {
            let a = Mp::from_c64(256, Complex64::new(0.17, 0.41));
            let (p, dp) = wp_pair(&a, &m).unwrap();
            dp.clone() * &dp - (p.powi(3).mul_pow2(2) - m.g2.clone() * &p - &m.g3)
        };
        assert!(cubic.norm() < 1e-60);
    }
}
