//! The pre-modular forms `Z^{(n)}_{r,s}(τ) = Q_{n−1}(Z_{r,s}(τ))/𝔮_{n−1}(τ)`
//! and the product `M_{n,N}` over the points of exact order `N`.

use num_complex::Complex64;
use num_rational::Rational64;
use rayon::prelude::*;
use serde::Serialize;

use crate::elliptic::{hecke_z, lattice_data, torsion_points, HeckeValue, LatticeData, Tau, TorsionPoint};
use crate::error::{Error, Result};
use crate::recursion::{eval_levels, leading_coeffs};
use crate::scalar::Scalar;

#[derive(Clone, Debug)]
pub struct PremodularValue<S> {
    pub n: usize,
    pub point: TorsionPoint,
    pub tau: Complex64,
    pub value: S,
    /// `n(n+1)/2`
    pub weight: u32,
}

pub fn weight(n: usize) -> u32 {
    (n * (n + 1) / 2) as u32
}

/// `M_{n,N}(τ)` kept as `(ln|M|, arg M)`; the raw product leaves the
/// double range already for small `n` and `N`.
#[derive(Clone, Debug, Serialize)]
pub struct ProductValue {
    pub n: usize,
    #[serde(rename = "N")]
    pub big_n: u32,
    pub tau: (f64, f64),
    pub ln_abs: f64,
    /// In `(−π, π]`.
    pub arg: f64,
    /// `Ψ(N)`
    pub factor_count: usize,
}

impl ProductValue {
    /// The product as a complex number, when it fits in a double.
    pub fn value(&self) -> Option<Complex64> {
        let v = Complex64::from_polar(self.ln_abs.exp(), self.arg);
        (v.norm().is_finite() && v.norm() > 0.0).then_some(v)
    }
}

fn check_point(pt: &TorsionPoint) -> Result<()> {
    if pt.is_half_lattice() {
        Err(pt.invalid())
    } else {
        Ok(())
    }
}

/// `Z^{(n)}` from a Hecke value already at hand.
pub fn z_n_from<S: Scalar>(n: usize, hv: &HeckeValue<S>, ld: &LatticeData<S>) -> Result<S> {
    if n == 0 {
        return Ok(S::one(ld.tau.ctx()));
    }
    let levels = eval_levels(&hv.z, n - 1, hv, ld)?;
    let (lead, _, _) = leading_coeffs(n - 1, hv, ld);
    Ok(levels.q(n as i64 - 1).clone() / &lead)
}

/// `Z^{(n)}_{r,s}(τ)` through the recursion; `Z^{(0)} = 1`.
pub fn z_n<S: Scalar>(n: usize, pt: &TorsionPoint, ld: &LatticeData<S>) -> Result<PremodularValue<S>> {
    check_point(pt)?;
    let hv = hecke_z(pt, ld)?;
    let value = z_n_from(n, &hv, ld)?;
    Ok(PremodularValue { n, point: pt.clone(), tau: ld.tau.to_c64(), value, weight: weight(n) })
}

/// The explicit polynomials in `Z, ℘, ℘′, g2, g3` known for `n ≤ 4`.
pub fn z_n_closed<S: Scalar>(n: usize, pt: &TorsionPoint, ld: &LatticeData<S>) -> Result<PremodularValue<S>> {
    if !(1..=4).contains(&n) {
        return Err(Error::Domain(format!("closed form known only for n in 1..=4, got {n}")));
    }
    check_point(pt)?;
    let hv = hecke_z(pt, ld)?;
    let c = ld.tau.ctx();
    let k = |a: i64, b: i64| S::from_ratio(c, a, b);
    let (z, p, dp, g2, g3) = (&hv.z, &hv.wp, &hv.wp_prime, &ld.g2, &ld.g3);
    let horner = |cs: Vec<S>| cs.into_iter().rev().fold(S::zero(c), |acc, a| acc * z + &a);
    let p2 = p.clone() * p;
    let p3 = p2.clone() * p;
    let dp2 = dp.clone() * dp;
    let value = match n {
        1 => z.clone(),
        2 => horner(vec![-dp.clone(), -(k(3, 1) * p), S::zero(c), S::one(c)]),
        3 => horner(vec![
            -(k(5, 4) * &dp2),
            -(k(12, 1) * p * dp),
            k(27, 4) * g2 - k(45, 1) * &p2,
            -(k(20, 1) * dp),
            -(k(15, 1) * p),
            S::zero(c),
            S::one(c),
        ]),
        _ => horner(vec![
            k(3, 4) * (k(25, 1) * g2 - k(3, 1) * &p2) * &dp2,
            -((k(40, 1) * &p3 - k(163, 1) * g2 * p + k(125, 1) * g3) * dp),
            -(k(9, 4)
                * (k(140, 1) * p2.clone() * &p2 - k(245, 1) * g2 * &p2 + k(190, 1) * g3 * p
                    + k(21, 1) * g2 * g2)),
            k(15, 1) * (k(11, 1) * g2 - k(24, 1) * &p2) * dp,
            -(k(15, 4) * (k(280, 1) * &p3 - k(49, 1) * g2 * p - k(115, 1) * g3)),
            -(k(504, 1) * p * dp),
            k(399, 4) * g2 - k(630, 1) * &p2,
            -(k(120, 1) * dp),
            -(k(45, 1) * p),
            S::zero(c),
            S::one(c),
        ]),
    };
    Ok(PremodularValue { n, point: pt.clone(), tau: ld.tau.to_c64(), value, weight: weight(n) })
}

/// `M_{n,N}(τ) = ∏_{(r,s) ∈ Q(N)} Z^{(n)}_{r,s}(τ)`.
///
/// Factors are evaluated in parallel and multiplied in the fixed order of
/// [`torsion_points`], so the result does not depend on the thread count.
pub fn m_product<S>(n: usize, big_n: u32, ld: &LatticeData<S>) -> Result<ProductValue>
where
    S: Scalar + Send + Sync,
    S::Ctx: Send + Sync,
{
    if big_n < 3 {
        return Err(Error::Domain(format!("M_(n,N) needs N >= 3, got {big_n}")));
    }
    let pts = torsion_points(big_n)?;
    let factors: Vec<Result<(f64, f64)>> = pts
        .par_iter()
        .map(|pt| {
            let z = z_n(n, pt, ld)?.value;
            Ok((z.ln_norm(), z.arg()))
        })
        .collect();
    let mut ln_abs = 0.0;
    let mut arg = 0.0;
    for f in factors {
        let (l, a) = f?;
        ln_abs += l;
        arg += a;
    }
    let tau = ld.tau.to_c64();
    Ok(ProductValue {
        n,
        big_n,
        tau: (tau.re, tau.im),
        ln_abs,
        arg: wrap_angle(arg),
        factor_count: pts.len(),
    })
}

fn wrap_angle(a: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let w = a.rem_euclid(two_pi);
    if w > std::f64::consts::PI {
        w - two_pi
    } else {
        w
    }
}

/// Moves `(r, s)` to the representative with `Re s ∈ [0, ½]`, using
/// `Z_{r+1,s} = Z_{r,s+1} = Z_{r,s}` and
/// `Z^{(n)}_{r,s} = (−1)^{n(n+1)/2} Z^{(n)}_{1−r,1−s}`; returns the sign.
pub fn sign_reduce(pt: &TorsionPoint, n: usize) -> (TorsionPoint, i32) {
    let reflect_sign = if weight(n) % 2 == 0 { 1 } else { -1 };
    if let Some((r, s)) = pt.exact {
        let one = Rational64::from_integer(1);
        let half = Rational64::new(1, 2);
        let s0 = s - s.floor();
        let r0 = r - r.floor();
        if s0 <= half {
            return (TorsionPoint::rational(r0, s0), 1);
        }
        let r1 = one - r0;
        let r1 = r1 - r1.floor();
        return (TorsionPoint::rational(r1, one - s0), reflect_sign);
    }
    let s0 = pt.s - pt.s.re.floor();
    let r0 = pt.r - pt.r.re.floor();
    if s0.re <= 0.5 {
        return (TorsionPoint::new(r0, s0), 1);
    }
    let r1 = Complex64::new(1.0, 0.0) - r0;
    let r1 = r1 - r1.re.floor();
    (TorsionPoint::new(r1, Complex64::new(1.0, 0.0) - s0), reflect_sign)
}

/// Relative defect of the weight law
/// `Z^{(n)}_{ar−bs, ds−cr}(γτ) = (cτ+d)^{n(n+1)/2} Z^{(n)}_{r,s}(τ)` for
/// `γ = [[a, b], [c, d]] ∈ SL(2, ℤ)`.
pub fn modular_check<S: Scalar>(
    n: usize,
    pt: &TorsionPoint,
    ld: &LatticeData<S>,
    m: [[i64; 2]; 2],
) -> Result<f64> {
    let [[a, b], [c, d]] = m;
    if a * d - b * c != 1 {
        return Err(Error::Domain(format!("matrix {m:?} is not in SL(2,Z)")));
    }
    let moved = match pt.exact {
        Some((r, s)) => {
            let (a, b, c, d) = (Rational64::from(a), Rational64::from(b), Rational64::from(c), Rational64::from(d));
            TorsionPoint::rational(a * r - b * s, d * s - c * r)
        }
        None => {
            let f = |x: i64| x as f64;
            TorsionPoint::new(f(a) * pt.r - f(b) * pt.s, f(d) * pt.s - f(c) * pt.r)
        }
    };
    let (moved, sign) = sign_reduce(&moved, n);
    check_point(&moved)?;
    let tau2: Tau<S> = ld.tau.act(m)?;
    let ld2 = lattice_data(&tau2, None)?;
    let lhs = z_n(n, &moved, &ld2)?.value * S::from_ratio(ld.tau.ctx(), sign as i64, 1);
    let ctx = ld.tau.ctx();
    let factor = ld.tau.value().clone() * S::from_ratio(ctx, c, 1) + S::from_ratio(ctx, d, 1);
    let rhs = factor.powi(weight(n) as i64) * z_n(n, pt, ld)?.value;
    let scale = lhs.norm().max(rhs.norm());
    if scale == 0.0 {
        return Ok(0.0);
    }
    Ok((lhs - rhs).norm() / scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Mp;
    use proptest::prelude::*;

    fn ld(tau: Complex64) -> LatticeData<Complex64> {
        lattice_data(&Tau::from_c64((), tau).unwrap(), None).unwrap()
    }

    fn rel(a: Complex64, b: Complex64) -> f64 {
        (a - b).norm() / b.norm()
    }

    #[test]
    fn low_levels_equal_printed_forms() {
        let l = ld(Complex64::new(0.13, 1.4));
        let pt = TorsionPoint::real(0.21, 0.37);
        let hv = hecke_z(&pt, &l).unwrap();
        assert_eq!(z_n(1, &pt, &l).unwrap().value, hv.z);
        for n in 2..=4 {
            let a = z_n(n, &pt, &l).unwrap().value;
            let b = z_n_closed(n, &pt, &l).unwrap().value;
            assert!(rel(a, b) < 1e-9, "n = {n}: {a} vs {b}");
        }
    }

    #[test]
    fn spec_oracle_points() {
        let l = ld(Complex64::new(0.0, 2.0));
        let pt = TorsionPoint::ratio(1, 3, 0, 1);
        assert!(rel(z_n(2, &pt, &l).unwrap().value, z_n_closed(2, &pt, &l).unwrap().value) < 1e-9);
        let l = ld(Complex64::new(1.0, 3.0));
        let pt = TorsionPoint::ratio(1, 5, 1, 5);
        assert!(rel(z_n(4, &pt, &l).unwrap().value, z_n_closed(4, &pt, &l).unwrap().value) < 1e-7);
        assert!(matches!(z_n_closed(5, &pt, &l), Err(Error::Domain(_))));
    }

    #[test]
    fn half_lattice_rejected() {
        let l = ld(Complex64::new(0.0, 1.0));
        assert!(matches!(z_n(2, &TorsionPoint::ratio(1, 2, 0, 1), &l), Err(Error::InvalidPoint { .. })));
    }

    #[test]
    fn sign_reduction() {
        let (p, s) = sign_reduce(&TorsionPoint::ratio(4, 5, 9, 10), 1);
        assert_eq!(p.exact, Some((Rational64::new(1, 5), Rational64::new(1, 10))));
        assert_eq!(s, -1);
        let (p, s) = sign_reduce(&TorsionPoint::ratio(1, 3, 1, 4), 1);
        assert_eq!((p.exact, s), (Some((Rational64::new(1, 3), Rational64::new(1, 4))), 1));
        assert_eq!(sign_reduce(&TorsionPoint::ratio(1, 3, 3, 4), 3).1, 1);
        // the reflection really is a symmetry with that sign
        let l = ld(Complex64::new(0.2, 1.3));
        for n in 1..=4 {
            let pt = TorsionPoint::ratio(2, 7, 5, 7);
            let (q, sign) = sign_reduce(&pt, n);
            let a = z_n(n, &pt, &l).unwrap().value;
            let b = z_n(n, &q, &l).unwrap().value * sign as f64;
            assert!(rel(a, b) < 1e-9, "n = {n}");
        }
    }

    #[test]
    fn weight_law_generators() {
        let l = ld(Complex64::new(0.0, 3.0));
        assert!(modular_check(2, &TorsionPoint::ratio(1, 5, 0, 1), &l, [[1, 1], [0, 1]]).unwrap() < 1e-8);
        let l = ld(Complex64::new(0.0, 2.0));
        assert!(modular_check(1, &TorsionPoint::ratio(1, 4, 0, 1), &l, [[0, -1], [1, 0]]).unwrap() < 1e-8);
        assert_eq!(modular_check(3, &TorsionPoint::ratio(1, 5, 2, 5), &l, [[1, 0], [0, 1]]).unwrap(), 0.0);
    }

    #[test]
    fn product_counts_and_symmetries() {
        let tau = Complex64::new(0.0, 1.0);
        let m = m_product(1, 4, &ld(tau)).unwrap();
        assert_eq!(m.factor_count, 12);
        let m2 = m_product(1, 4, &ld(tau + 1.0)).unwrap();
        assert!((m.ln_abs - m2.ln_abs).abs() < 1e-6 * m.ln_abs.abs().max(1.0));
        let t = Complex64::new(0.23, 1.1);
        let a = m_product(2, 5, &ld(t)).unwrap();
        let b = m_product(2, 5, &ld(-t.conj())).unwrap();
        assert!((a.ln_abs - b.ln_abs).abs() < 1e-9 * a.ln_abs.abs().max(1.0));
        assert!(wrap_angle(a.arg + b.arg).abs() < 1e-7);
    }

    #[test]
    fn extended_agrees_with_double() {
        let tau = Complex64::new(-0.3, 1.7);
        let pt = TorsionPoint::ratio(2, 7, 1, 7);
        let lm = lattice_data(&Tau::<Mp>::from_c64(200, tau).unwrap(), None).unwrap();
        for n in 1..=4 {
            let a = z_n(n, &pt, &ld(tau)).unwrap().value;
            let b = z_n_closed(n, &pt, &lm).unwrap().value.to_c64();
            assert!(rel(a, b) < 1e-10, "n = {n}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn random_words_keep_the_weight_law(
            n in 1usize..4,
            k1 in 1i64..7, k2 in 0i64..7,
            word in proptest::collection::vec(0u8..3, 1..=3),
            re in -0.5f64..0.5, im in 0.9f64..1.8,
        ) {
            let pt = TorsionPoint::ratio(k1, 7, k2, 7);
            let gens = [[[1, 1], [0, 1]], [[0, -1], [1, 0]], [[1, -1], [0, 1]]];
            let mut m = [[1i64, 0], [0, 1]];
            for w in word {
                let g = gens[w as usize];
                m = [
                    [g[0][0] * m[0][0] + g[0][1] * m[1][0], g[0][0] * m[0][1] + g[0][1] * m[1][1]],
                    [g[1][0] * m[0][0] + g[1][1] * m[1][0], g[1][0] * m[0][1] + g[1][1] * m[1][1]],
                ];
            }
            let l = ld(Complex64::new(re, im));
            prop_assert!(modular_check(n, &pt, &l, m).unwrap() < 1e-6);
        }
    }
}
