//! Behaviour as `τ → i∞`: limit polynomials in `s`, vanishing orders at the
//! cusp and leading coefficients.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::counting::ab_coeffs;
use crate::elliptic::{hecke_z, lattice_data, LatticeData, Tau, TorsionPoint};
use crate::error::{Error, Result};
use crate::painleve::{pvi_sample, t_of_tau};
use crate::premodular::{weight, z_n};
use crate::recursion::eval_levels;
use crate::scalar::{bits_for_order, Mp, Scalar};

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// `πi(2s − 1)`
fn base(s: Complex64) -> Complex64 {
    Complex64::new(0.0, PI) * (2.0 * s - 1.0)
}

fn prod<F: Fn(i64) -> Complex64>(lo: i64, hi: i64, f: F) -> Complex64 {
    (lo..=hi).map(f).fold(c(1.0), |a, b| a * b)
}

fn pw(z: Complex64, k: i64) -> Complex64 {
    z.powi(k as i32)
}

/// `Q̌_n(s)`, the limit of `Q_n(Z_{r,s}(τ))`; `Q̌_{−2} = Q̌_{−1} = 1`.
pub fn q_check(n: i64, s: Complex64) -> Complex64 {
    if n < 0 {
        return c(1.0);
    }
    let m = n / 2;
    if n % 2 == 0 {
        pw(base(s), m + 1)
            * prod(0, m - 1, |k| {
                let k_ = k as f64;
                pw((s + k_) * (s + k_ + 0.5) * (s - k_ - 1.0) * (s - k_ - 1.5), m - k)
            })
    } else {
        pw(base(s), m + 1)
            * pw(s, m + 1)
            * pw(s - 1.0, m + 1)
            * prod(0, m - 1, |k| {
                let k_ = k as f64;
                pw((s + k_ + 0.5) * (s + k_ + 1.0) * (s - k_ - 1.5) * (s - k_ - 2.0), m - k)
            })
    }
}

/// `Ǧ_n(s)`: `G_n(Z_{r,s}(τ)) = Ǧ_n(s)·x + o(|x|)`.
pub fn g_check(n: i64, s: Complex64) -> Complex64 {
    let m = n / 2;
    let eight_pi_i = Complex64::new(0.0, 8.0 * PI);
    if n % 2 == 0 {
        eight_pi_i
            * pw(base(s), 3 * m)
            * prod(0, m - 1, |k| {
                let k_ = k as f64;
                pw(s + k_, 3 * (m - k))
                    * pw(s + k_ + 0.5, 3 * (m - k) - 1)
                    * pw(s - k_ - 1.0, 3 * (m - k) - 2)
                    * pw(s - k_ - 1.5, 3 * (m - k - 1))
            })
    } else {
        eight_pi_i
            * pw(base(s), 3 * m + 1)
            * pw(s, 3 * m + 2)
            * pw(s - 1.0, 3 * m)
            * prod(0, m - 1, |k| {
                let k_ = k as f64;
                pw(s + k_ + 0.5, 3 * (m - k))
                    * pw(s + k_ + 1.0, 3 * (m - k) - 1)
                    * pw(s - k_ - 1.5, 3 * (m - k) - 2)
                    * pw(s - k_ - 2.0, 3 * (m - k - 1))
            })
    }
}

/// `Ř_n(s)`: `R_n − Q_{n−2}Q_n = Ř_n(s)·x + o(|x|)`.
pub fn r_check(n: i64, s: Complex64) -> Complex64 {
    let m = n / 2;
    let eight_pi_i = Complex64::new(0.0, 8.0 * PI);
    if n % 2 == 0 {
        eight_pi_i
            * pw(base(s), 2 * m)
            * pw(s, 2 * m + 1)
            * pw(s + 0.5, 2 * m)
            * prod(1, m - 1, |k| {
                let k_ = k as f64;
                pw((s + k_) * (s + k_ + 0.5) * (s - k_) * (s - k_ - 0.5), 2 * (m - k))
            })
    } else {
        eight_pi_i
            * pw(base(s), 2 * m)
            * pw(s, 2 * m + 3)
            * pw(s + 0.5, 2 * m)
            * pw(s + 1.0, 2 * m)
            * pw(s - 1.0, 2 * m)
            * prod(1, m - 1, |k| {
                let k_ = k as f64;
                pw((s + k_ + 0.5) * (s + k_ + 1.0) * (s - k_ - 0.5) * (s - k_ - 1.0), 2 * (m - k))
            })
    }
}

/// `Ž^{(n)}(s) = lim Z^{(n)}_{r,s}(τ)` for `Re s ∈ (0, ½)`, `n ≥ 1`.
pub fn z_check(n: i64, s: Complex64) -> Complex64 {
    assert!(n >= 1);
    let two_pi = 2.0 * PI;
    if n % 2 == 1 {
        let m = (n - 1) / 2;
        c(two_pi).powi((2 * m * (m + 1)) as i32)
            * pw(base(s), m + 1)
            * prod(0, m - 1, |k| {
                let k_ = k as f64;
                pw((s + k_) * (s + k_ + 0.5) * (s - k_ - 1.0) * (s - k_ - 1.5), m - k)
            })
    } else {
        let m = n / 2;
        let sign = if (m * m) % 2 == 0 { 1.0 } else { -1.0 };
        sign * c(two_pi).powi((2 * m * m) as i32)
            * pw(base(s), m)
            * pw(s, m)
            * pw(s - 1.0, m)
            * prod(0, m - 2, |k| {
                let k_ = k as f64;
                pw((s + k_ + 0.5) * (s + k_ + 1.0) * (s - k_ - 1.5) * (s - k_ - 2.0), m - 1 - k)
            })
    }
}

/// The closed forms `Q̌_n, Ǧ_n, Ř_n, Ž^{(n)}` of one level.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LimitPolynomials {
    pub n: usize,
}

pub fn limit_polys(n: usize) -> LimitPolynomials {
    LimitPolynomials { n }
}

impl LimitPolynomials {
    pub fn q_check(&self, s: Complex64) -> Complex64 {
        q_check(self.n as i64, s)
    }

    pub fn g_check(&self, s: Complex64) -> Complex64 {
        g_check(self.n as i64, s)
    }

    pub fn r_check(&self, s: Complex64) -> Complex64 {
        r_check(self.n as i64, s)
    }

    /// `None` at `n = 0`.
    pub fn z_check(&self, s: Complex64) -> Option<Complex64> {
        (self.n >= 1).then(|| z_check(self.n as i64, s))
    }

    /// Relative residuals of the four relations tying level `n` to the
    /// levels below:
    /// `Ř_nQ̌_{n−1} = sǦ_n`,
    /// `Ǧ_nQ̌_{n−3}² = (s+(n−1)/2)² Ǧ_{n−1}Q̌_{n−2}Q̌_{n−1}`,
    /// `Q̌_nQ̌_{n−3} = (s+(n−1)/2)(s−(n+1)/2) Q̌_{n−2}Q̌_{n−1}`,
    /// `Ř_nQ̌_{n−3}² = s(s+(n−1)/2)² Ǧ_{n−1}Q̌_{n−2}`.
    pub fn identity_residuals(&self, s: Complex64) -> [f64; 4] {
        assert!(self.n >= 1);
        let n = self.n as i64;
        let nf = n as f64;
        let q = |k: i64| q_check(k, s);
        let rel = |a: Complex64, b: Complex64| (a - b).norm() / a.norm().max(b.norm());
        let up = s + (nf - 1.0) / 2.0;
        [
            rel(r_check(n, s) * q(n - 1), s * g_check(n, s)),
            rel(g_check(n, s) * q(n - 3) * q(n - 3), up * up * g_check(n - 1, s) * q(n - 2) * q(n - 1)),
            rel(q(n) * q(n - 3), up * (s - (nf + 1.0) / 2.0) * q(n - 2) * q(n - 1)),
            rel(r_check(n, s) * q(n - 3) * q(n - 3), s * up * up * g_check(n - 1, s) * q(n - 2)),
        ]
    }
}

/// `C^{(n)}(s)` in `λ^{(n)} = 1 + C^{(n)}(s) e^{2πir} ((1−t)/16)^{2s} + …`.
pub fn c_coeff(n: usize, s: Complex64) -> Result<Complex64> {
    let m = (n / 2) as i64;
    let (num, den) = if n % 2 == 0 {
        (
            8.0 * s * prod(0, m - 1, |k| (s + k as f64) * (s + k as f64 + 0.5)),
            (2.0 * s - 1.0) * prod(0, m - 1, |k| (s - k as f64 - 1.0) * (s - k as f64 - 1.5)),
        )
    } else {
        (
            8.0 * s * s * prod(0, m - 1, |k| (s + k as f64 + 0.5) * (s + k as f64 + 1.0)),
            (2.0 * s - 1.0) * (s - 1.0) * prod(0, m - 1, |k| (s - k as f64 - 1.5) * (s - k as f64 - 2.0)),
        )
    };
    if den.norm() < 1e-14 * num.norm().max(1.0) {
        return Err(Error::Domain(format!("C^({n})(s) has a pole at s = {s}")));
    }
    Ok(num / den)
}

fn check_strip(pt: &TorsionPoint) -> Result<()> {
    if !(pt.s.re > 0.0 && pt.s.re < 0.5) {
        return Err(Error::Domain(format!("needs Re s in (0, 1/2), got s = {}", pt.s)));
    }
    Ok(())
}

/// `|Z^{(n)}(τ) − Ž^{(n)}(s)| / |Ž^{(n)}(s)|` at every `τ` of the ray.
pub fn limit_gaps<S: Scalar>(n: usize, pt: &TorsionPoint, ctx: S::Ctx, ray: &[Complex64]) -> Result<Vec<f64>> {
    check_strip(pt)?;
    if n == 0 {
        return Err(Error::Domain("the limit polynomial starts at n = 1".into()));
    }
    let want = z_check(n as i64, pt.s);
    if want.norm() == 0.0 {
        return Err(Error::Domain(format!("limit of Z^({n}) vanishes at s = {}", pt.s)));
    }
    ray.iter()
        .map(|&tau| {
            let ld = lattice_data(&Tau::<S>::from_c64(ctx, tau)?, None)?;
            Ok((z_n(n, pt, &ld)?.value.to_c64() - want).norm() / want.norm())
        })
        .collect()
}

/// The gap at the last point of the ray.
pub fn limit_convergence<S: Scalar>(n: usize, pt: &TorsionPoint, ctx: S::Ctx, ray: &[Complex64]) -> Result<f64> {
    limit_gaps::<S>(n, pt, ctx, ray)?
        .last()
        .copied()
        .ok_or_else(|| Error::Domain("empty tau ray".into()))
}

/// `(λ^{(n)} − 1) / (C^{(n)}(s) e^{2πir} ((1−t)/16)^{2s})`, which tends to 1.
///
/// The power is taken on the branch with `((1−t)/16)^{2s} ≈ q^s`.
pub fn c_ratio<S: Scalar>(n: usize, pt: &TorsionPoint, ld: &LatticeData<S>) -> Result<Complex64> {
    check_strip(pt)?;
    let smp = pvi_sample(n, pt, ld)?;
    let t = t_of_tau(ld).to_c64();
    let tau = ld.tau.to_c64();
    let half_q_log = Complex64::new(0.0, PI) * tau;
    let ln_base = half_q_log + ((1.0 - t) / 16.0 / half_q_log.exp()).ln();
    let power = (2.0 * pt.s * ln_base).exp();
    let phase = (Complex64::new(0.0, 2.0 * PI) * pt.r).exp();
    Ok((smp.lambda.to_c64() - 1.0) / (c_coeff(n, pt.s)? * phase * power))
}

/// Fitted vanishing order of a function of `τ` at the cusp.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrderEstimate {
    pub n: usize,
    pub point: TorsionPoint,
    /// Least-squares slope of `ln|f|` against `−2π Im τ`.
    pub slope_order: f64,
    /// `slope_order` rounded to the nearest half-integer.
    pub order: f64,
    /// RMS deviation of `ln|f|` from the fitted line.
    pub fit_residual: f64,
    /// `f(τ_max) q^{−order}`.
    pub leading_coeff: Complex64,
    pub ladder: Vec<f64>,
    pub bits: u32,
}

/// The ladder `Im τ ∈ {6, 8, 10, 12, 14}`.
pub const DEFAULT_LADDER: [f64; 5] = [6.0, 8.0, 10.0, 12.0, 14.0];

/// Largest accepted RMS residual of the order fit.
pub const ORDER_FIT_RESIDUAL: f64 = 0.02;

/// Largest accepted distance of the slope from a half-integer.
pub const ORDER_ROUNDING: f64 = 0.1;

/// `(slope, intercept, rms residual)` of `y ≈ slope·x + intercept`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    let icpt = my - slope * mx;
    let rss: f64 = xs.iter().zip(ys).map(|(x, y)| (y - slope * x - icpt).powi(2)).sum();
    (slope, icpt, (rss / n).sqrt())
}

/// Precision for evaluating level-`n` quantities at `Im τ ≤ im_max`: room
/// for a value of size `|q|^{n(n+1)/2}` next to terms of size one.
pub fn ladder_bits(n: usize, im_max: f64) -> u32 {
    bits_for_order(im_max, weight(n) as f64 + 1.0, 128)
}

/// Fits the order of `f` over `Im τ ∈ ladder` at fixed `Re τ`, in [`Mp`]
/// arithmetic at the given precision.
pub fn fit_order<F>(n: usize, point: &TorsionPoint, re_tau: f64, ladder: &[f64], bits: u32, f: F) -> Result<OrderEstimate>
where
    F: Fn(&LatticeData<Mp>) -> Result<Mp> + Sync,
{
    if ladder.len() < 3 {
        return Err(Error::Domain("order fit needs at least three ladder points".into()));
    }
    let vals: Vec<(Mp, LatticeData<Mp>)> = ladder
        .par_iter()
        .map(|&im| {
            let ld = lattice_data(&Tau::<Mp>::from_c64(bits, Complex64::new(re_tau, im))?, None)?;
            Ok((f(&ld)?, ld))
        })
        .collect::<Result<_>>()?;
    let xs: Vec<f64> = ladder.iter().map(|im| -2.0 * PI * im).collect();
    let ys: Vec<f64> = vals.iter().map(|(v, _)| v.ln_norm()).collect();
    if ys.iter().any(|y| !y.is_finite()) {
        return Err(Error::NumericalBreakdown { level: n, detail: "function vanished on the ladder".into() });
    }
    let (slope, _, fit_residual) = linear_fit(&xs, &ys);
    let order = (2.0 * slope).round() / 2.0;
    let distance = (slope - order).abs();
    if fit_residual >= ORDER_FIT_RESIDUAL || distance > ORDER_ROUNDING {
        return Err(Error::InconclusiveOrder { residual: fit_residual, distance });
    }
    let (top, ld) = vals.last().unwrap();
    // q^{-order} = exp(−2πi·order·τ)
    let expo = Mp::i(bits) * Mp::pi(bits) * Mp::from_f64(bits, -2.0 * order) * ld.tau.value();
    let leading_coeff = (top.clone() * expo.exp()).to_c64();
    Ok(OrderEstimate {
        n,
        point: point.clone(),
        slope_order: slope,
        order,
        fit_residual,
        leading_coeff,
        ladder: ladder.to_vec(),
        bits,
    })
}

/// Vanishing order of `Z^{(n)}_{r,s}` at the cusp along `Re τ = re_tau`.
pub fn vanishing_order(n: usize, pt: &TorsionPoint, re_tau: f64, ladder: &[f64]) -> Result<OrderEstimate> {
    let im_max = ladder.iter().copied().fold(0.0, f64::max);
    let bits = ladder_bits(n, im_max);
    fit_order(n, pt, re_tau, ladder, bits, |ld| Ok(z_n(n, pt, ld)?.value))
}

/// `Σ` of the fitted orders of `Z^{(n)}_{r,s}` over the points of exact
/// order `N`, each rounded to a half-integer.
pub fn total_order(n: usize, big_n: u32, ladder: &[f64]) -> Result<f64> {
    let pts = crate::elliptic::torsion_points(big_n)?;
    let orders: Vec<f64> = pts
        .par_iter()
        .map(|pt| vanishing_order(n, pt, 0.0, ladder).map(|o| o.order))
        .collect::<Result<_>>()?;
    Ok(orders.iter().sum())
}

/// `(−1)^{C_n} 16^{a_n} π^{n(n+1)/2} ∏_{k=1}^{n−1} (2k+1)^{n−k}`, the
/// coefficient of `q^{a_n}` in `Z^{(n)}_{1/4,0}`, with `C_n = ⌊n²/4⌋`.
pub fn quarter_leading_coeff(n: usize) -> f64 {
    assert!(n >= 1);
    let (a, _) = ab_coeffs(n as u64);
    let c_n = n * n / 4;
    let sign = if c_n % 2 == 0 { 1.0 } else { -1.0 };
    let odd: f64 = (1..n).map(|k| ((2 * k + 1) as f64).powi((n - k) as i32)).product();
    sign * 16f64.powi(a as i32) * PI.powi(weight(n) as i32) * odd
}

/// Relative residuals of `R_nQ_{n−1} = G_n/4` and
/// `φ_n = (2n+1)/4 · G_n` at `x = Z_{1/4,0}(τ)`.
pub fn quarter_identities<S: Scalar>(n: usize, ld: &LatticeData<S>) -> Result<(f64, f64)> {
    let pt = TorsionPoint::ratio(1, 4, 0, 1);
    let hv = hecke_z(&pt, ld)?;
    let lv = eval_levels(&hv.z, n, &hv, ld)?;
    let c = ld.tau.ctx();
    let g = lv.g(n).clone();
    let lhs1 = lv.r(n).clone() * lv.q(n as i64 - 1);
    let rhs1 = g.clone() * S::from_ratio(c, 1, 4);
    let rhs2 = g * S::from_ratio(c, 2 * n as i64 + 1, 4);
    let rel = |a: S, b: S| (a.clone() - &b).norm() / a.norm().max(b.norm());
    Ok((rel(lhs1, rhs1), rel(lv.phi(n), rhs2)))
}

/// Order of `G_n(Z_{1/4,0}(τ))` at the cusp.
pub fn quarter_g_order(n: usize, ladder: &[f64]) -> Result<OrderEstimate> {
    let pt = TorsionPoint::ratio(1, 4, 0, 1);
    let im_max = ladder.iter().copied().fold(0.0, f64::max);
    let bits = ladder_bits(n + 1, im_max);
    fit_order(n, &pt, 0.0, ladder, bits, |ld| {
        let hv = hecke_z(&pt, ld)?;
        Ok(eval_levels(&hv.z, n, &hv, ld)?.g(n).clone())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn low_limits() {
        let s = Complex64::new(0.23, 0.07);
        assert!((z_check(1, s) - base(s)).norm() < 1e-14);
        assert!((c_coeff(0, s).unwrap() - 8.0 * s / (2.0 * s - 1.0)).norm() < 1e-14);
        assert!((c_coeff(1, s).unwrap() - 8.0 * s * s / ((2.0 * s - 1.0) * (s - 1.0))).norm() < 1e-14);
        assert!(c_coeff(0, c(0.5)).is_err());
        assert_eq!(limit_polys(0).z_check(s), None);
    }

    #[test]
    fn limits_are_polynomial_identities() {
        for n in 1..=8 {
            for k in 0..50 {
                let s = Complex64::new(0.01 + 0.0097 * k as f64, 0.3 * ((k * 7 % 11) as f64 / 11.0 - 0.5));
                let res = limit_polys(n).identity_residuals(s);
                assert!(res.iter().all(|&r| r < 1e-10), "n = {n}, s = {s}: {res:?}");
            }
        }
    }

    proptest! {
        #[test]
        fn limit_of_z_never_vanishes_in_strip(s in 0.01f64..0.49, im in -1.0f64..1.0, n in 1i64..9) {
            let z = z_check(n, Complex64::new(s, im));
            prop_assert!(z.norm() > 0.0);
            let z = z_check(n, Complex64::new(1.0 - s, im));
            prop_assert!(z.norm() > 0.0);
        }
    }

    #[test]
    fn hecke_limit() {
        let pt = TorsionPoint::ratio(1, 5, 1, 5);
        let gaps = limit_gaps::<Complex64>(1, &pt, (), &[Complex64::new(0.0, 6.0), Complex64::new(0.0, 12.0)]).unwrap();
        assert!(gaps[1] <= gaps[0] && gaps[1] < 1e-5, "{gaps:?}");
        let g2 = limit_convergence::<Complex64>(2, &pt, (), &[Complex64::new(0.0, 12.0)]).unwrap();
        assert!(g2 < 1e-3);
        assert!(limit_convergence::<Complex64>(2, &TorsionPoint::ratio(1, 5, 0, 1), (), &[Complex64::new(0.0, 12.0)]).is_err());
    }

    #[test]
    fn lambda_near_one() {
        let pt = TorsionPoint::real(0.17, 0.2);
        let ld = lattice_data(&Tau::<Complex64>::from_c64((), Complex64::new(0.1, 10.0)).unwrap(), None).unwrap();
        for n in 0..=3 {
            let ratio = c_ratio(n, &pt, &ld).unwrap();
            assert!((ratio - 1.0).norm() < 0.05, "n = {n}: {ratio}");
        }
    }

    #[test]
    fn orders_at_the_cusp() {
        let o = vanishing_order(2, &TorsionPoint::ratio(1, 3, 0, 1), 0.0, &DEFAULT_LADDER).unwrap();
        assert!((o.slope_order - 1.0).abs() < 0.05, "{o:?}");
        let o = vanishing_order(3, &TorsionPoint::ratio(1, 5, 1, 2), 0.0, &DEFAULT_LADDER).unwrap();
        assert!((o.slope_order - 2.0).abs() < 0.05, "{o:?}");
        let o = vanishing_order(4, &TorsionPoint::ratio(1, 4, 0, 1), 0.0, &DEFAULT_LADDER).unwrap();
        assert_eq!(o.order, 3.0);
        let want = quarter_leading_coeff(4);
        assert!((o.leading_coeff - want).norm() < 1e-3 * want.abs(), "{} vs {want}", o.leading_coeff);
    }

    #[test]
    fn quarter_relations() {
        let tau = Complex64::new(0.0, 4.0);
        let ld = lattice_data(&Tau::<Complex64>::from_c64((), tau).unwrap(), None).unwrap();
        let wide = lattice_data(&Tau::<Mp>::from_c64(256, tau).unwrap(), None).unwrap();
        for n in 0..=6 {
            let (a, b) = quarter_identities(n, &wide).unwrap();
            assert!(a < 1e-30 && b < 1e-30, "n = {n}: {a:e} {b:e}");
        }
        let near = lattice_data(&Tau::<Complex64>::from_c64((), Complex64::new(0.2, 1.1)).unwrap(), None).unwrap();
        let (a, b) = quarter_identities(3, &near).unwrap();
        assert!(a < 1e-9 && b < 1e-9, "{a:e} {b:e}");
        let pt = TorsionPoint::ratio(1, 4, 0, 1);
        let hv = hecke_z(&pt, &ld).unwrap();
        let r0 = hv.wp_prime / (hv.wp - ld.e1);
        assert!((r0 + 4.0 * hv.z).norm() < 1e-10 * r0.norm());
        for n in 0..=4 {
            let o = quarter_g_order(n, &DEFAULT_LADDER).unwrap();
            let want = weight(n) as f64 - if n == 0 { 0.0 } else { ab_coeffs(n as u64).0 as f64 };
            assert!((o.slope_order - want).abs() < 0.05, "n = {n}: {o:?}");
        }
    }
}
