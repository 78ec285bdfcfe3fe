//! Dense complex polynomials with a shared power-of-two scale.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// `2^scale · Σ coeffs[k] X^k`, lowest degree first.
///
/// The degree is structural: leading zeros are kept until [`ComplexPoly::trim`]
/// is called, since the recursion knows every degree in advance.
#[derive(Clone, Debug)]
pub struct ComplexPoly<S> {
    coeffs: Vec<S>,
    scale: i32,
}

impl<S: Scalar> ComplexPoly<S> {
    pub fn new(coeffs: Vec<S>) -> Self {
        assert!(!coeffs.is_empty(), "a polynomial needs at least one coefficient");
        let mut p = ComplexPoly { coeffs, scale: 0 };
        p.normalize();
        p
    }

    pub fn constant(c: S) -> Self {
        Self::new(vec![c])
    }

    pub fn one(ctx: S::Ctx) -> Self {
        Self::constant(S::one(ctx))
    }

    /// The monomial `X`.
    pub fn x(ctx: S::Ctx) -> Self {
        Self::new(vec![S::zero(ctx), S::one(ctx)])
    }

    pub fn ctx(&self) -> S::Ctx {
        self.coeffs[0].ctx()
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn scale_exponent(&self) -> i32 {
        self.scale
    }

    pub fn coeff(&self, k: usize) -> S {
        match self.coeffs.get(k) {
            Some(c) => c.mul_pow2(self.scale),
            None => S::zero(self.ctx()),
        }
    }

    pub fn coeffs(&self) -> Vec<S> {
        (0..=self.degree()).map(|k| self.coeff(k)).collect()
    }

    pub fn leading(&self) -> S {
        self.coeff(self.degree())
    }

    fn normalize(&mut self) {
        let top = self.coeffs.iter().filter_map(|c| c.exponent()).max();
        if let Some(e) = top {
            if e != 0 {
                for c in &mut self.coeffs {
                    *c = c.mul_pow2(-e);
                }
                self.scale += e;
            }
        }
    }

    /// Drop leading coefficients below `drop_tol · max|coeff|`.
    pub fn trim(mut self, drop_tol: f64) -> Self {
        let max = self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        while self.coeffs.len() > 1 && self.coeffs.last().unwrap().norm() <= drop_tol * max {
            self.coeffs.pop();
        }
        self
    }

    pub fn eval(&self, x: &S) -> S {
        let mut acc = self.coeffs.last().unwrap().clone();
        for c in self.coeffs.iter().rev().skip(1) {
            acc = acc * x + c;
        }
        acc.mul_pow2(self.scale)
    }

    /// `ln Σ |c_k| ρ^k`: the natural size of an evaluation at `|x| = ρ`.
    pub fn ln_norm_on(&self, rho: f64) -> f64 {
        let lr = rho.ln();
        let terms: Vec<f64> = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| c.ln_norm() + k as f64 * lr)
            .collect();
        let m = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if m == f64::NEG_INFINITY {
            return m;
        }
        m + terms.iter().map(|t| (t - m).exp()).sum::<f64>().ln() + self.scale as f64 * std::f64::consts::LN_2
    }

    pub fn norm_on(&self, rho: f64) -> f64 {
        self.ln_norm_on(rho).exp()
    }

    /// `Σ |c_k| |x|^k`.
    pub fn eval_scale(&self, x: &S) -> f64 {
        self.norm_on(x.norm())
    }

    pub fn scaled(&self, k: &S) -> Self {
        let mut p = ComplexPoly {
            coeffs: self.coeffs.iter().map(|c| c.clone() * k).collect(),
            scale: self.scale,
        };
        p.normalize();
        p
    }

    fn aligned(&self, scale: i32) -> Vec<S> {
        let d = self.scale - scale;
        self.coeffs.iter().map(|c| c.mul_pow2(d)).collect()
    }

    fn combine(&self, other: &Self, sign: bool) -> Self {
        let scale = self.scale.max(other.scale);
        let a = self.aligned(scale);
        let b = other.aligned(scale);
        let n = a.len().max(b.len());
        let z = S::zero(self.ctx());
        let coeffs = (0..n)
            .map(|k| {
                let x = a.get(k).cloned().unwrap_or_else(|| z.clone());
                let y = b.get(k).cloned().unwrap_or_else(|| z.clone());
                if sign {
                    x + y
                } else {
                    x - y
                }
            })
            .collect();
        let mut p = ComplexPoly { coeffs, scale };
        p.normalize();
        p
    }

    /// Long division `self = quot·d + rem` with `deg rem < deg d`.
    pub fn div_rem(&self, d: &Self) -> (Self, Self) {
        let c = self.ctx();
        let dn = d.degree();
        if self.degree() < dn {
            return (Self::constant(S::zero(c)), self.clone());
        }
        let mut r = self.coeffs.clone();
        let lead = d.coeffs[dn].clone();
        let mut qc = vec![S::zero(c); self.degree() - dn + 1];
        for k in (0..qc.len()).rev() {
            let f = r[k + dn].clone() / &lead;
            for (i, dc) in d.coeffs.iter().enumerate() {
                r[k + i] = r[k + i].clone() - f.clone() * dc;
            }
            qc[k] = f;
        }
        r.truncate(dn.max(1));
        let mut quot = ComplexPoly { coeffs: qc, scale: self.scale - d.scale };
        quot.normalize();
        let mut rem = ComplexPoly { coeffs: r, scale: self.scale };
        rem.normalize();
        (quot, rem)
    }

    /// Division that the mathematics guarantees to be exact.
    ///
    /// Long division alone loses the low coefficients of the quotient when
    /// the divisor has large roots, and division from the constant term loses
    /// the high ones when it has small roots. Both are run and the quotient
    /// takes its low part from one and its high part from the other, split
    /// where the componentwise residual `self − quot·d` is smallest.
    ///
    /// Fails with a numerical-breakdown error tagged `level` when the
    /// residual exceeds `tol` relative to [`ComplexPoly::exact_quotient_with_residual`].
    pub fn exact_div(&self, d: &Self, rho: f64, size: f64, tol: f64, level: usize, what: &str) -> Result<Self> {
        let (quot, ratio) = self.exact_quotient_with_residual(d, rho, size);
        if ratio.is_nan() || ratio > tol {
            return Err(Error::NumericalBreakdown {
                level,
                detail: format!("{what}: relative remainder {ratio:.3e} exceeds {tol:.1e}"),
            });
        }
        Ok(quot)
    }

    /// The quotient used by [`ComplexPoly::exact_div`] together with the
    /// relative residual `‖self − quot·d‖_ρ / max(‖quot‖_ρ ‖d‖_ρ, size)`.
    ///
    /// `size` is the norm of the terms `self` was formed from, so that
    /// cancellation in building the dividend is not charged to the division.
    pub fn exact_quotient_with_residual(&self, d: &Self, rho: f64, size: f64) -> (Self, f64) {
        let mut quot = self.exact_quotient(d);
        let mut res = self - &(&quot * d);
        // one step of iterative refinement
        let fixed = &quot + &res.exact_quotient(d);
        let fixed_res = self - &(&fixed * d);
        if fixed_res.ln_norm_on(rho) < res.ln_norm_on(rho) {
            quot = fixed;
            res = fixed_res;
        }
        let den = (quot.ln_norm_on(rho) + d.ln_norm_on(rho)).max(size.ln());
        (quot, (res.ln_norm_on(rho) - den).exp())
    }

    fn exact_quotient(&self, d: &Self) -> Self {
        let c = self.ctx();
        let dn = d.degree();
        if self.degree() < dn {
            return Self::constant(S::zero(c));
        }
        let (top, _) = self.div_rem(d);
        let len = self.degree() - dn + 1;
        let top = top.aligned(self.scale - d.scale);
        let v = match d.coeffs.iter().position(|x| !x.is_zero()) {
            Some(v) if v < dn => v,
            _ => return Self::from_parts(top, self.scale - d.scale),
        };
        // from the constant term, after removing the factor X^v shared by d and self
        let g0 = d.coeffs[v].clone();
        let mut bottom: Vec<S> = Vec::with_capacity(len);
        for k in 0..len {
            let mut acc = self.coeffs[k + v].clone();
            for j in 1..=(dn - v).min(k) {
                acc = acc - bottom[k - j].clone() * &d.coeffs[v + j];
            }
            bottom.push(acc / &g0);
        }
        if bottom.iter().any(|x| !x.norm().is_finite()) {
            return Self::from_parts(top, self.scale - d.scale);
        }

        // residual for split 0 (all from `top`), then swap one coefficient at a time
        let dm: Vec<f64> = d.coeffs.iter().map(|x| x.norm()).collect();
        let qm: Vec<f64> = top.iter().zip(&bottom).map(|(a, b)| a.norm().max(b.norm())).collect();
        let mut weight = vec![0.0f64; len + dn];
        for (i, q) in qm.iter().enumerate() {
            for (j, g) in dm.iter().enumerate() {
                weight[i + j] += q * g;
            }
        }
        let mut res = self.coeffs.clone();
        for (i, q) in top.iter().enumerate() {
            for (j, g) in d.coeffs.iter().enumerate() {
                res[i + j] = res[i + j].clone() - q.clone() * g;
            }
        }
        let score = |res: &[S]| {
            res.iter()
                .zip(&weight)
                .map(|(r, w)| if *w > 0.0 { r.norm() / w } else { r.norm() })
                .fold(0.0f64, f64::max)
        };
        let mut best = (score(&res), 0usize);
        for k in 0..len {
            let delta = top[k].clone() - &bottom[k];
            for (j, g) in d.coeffs.iter().enumerate() {
                res[k + j] = res[k + j].clone() + delta.clone() * g;
            }
            let sc = score(&res);
            if sc < best.0 {
                best = (sc, k + 1);
            }
        }
        let split = best.1;
        let coeffs = bottom.into_iter().take(split).chain(top.into_iter().skip(split)).collect();
        Self::from_parts(coeffs, self.scale - d.scale)
    }

    fn from_parts(coeffs: Vec<S>, scale: i32) -> Self {
        let mut p = ComplexPoly { coeffs, scale };
        p.normalize();
        p
    }

    /// Relative distance `‖self − other‖_ρ / ‖other‖_ρ`.
    pub fn rel_distance(&self, other: &Self, rho: f64) -> f64 {
        ((self - other).ln_norm_on(rho) - other.ln_norm_on(rho)).exp()
    }

    /// Interpolate a polynomial of degree `values.len() − 1` from values at
    /// `circle_points(values.len(), rho, phase)`.
    pub fn interpolate_circle(values: &[S], rho: f64, phase: f64) -> Self {
        let m = values.len();
        let c = values[0].ctx();
        let inv_m = S::from_ratio(c, 1, m as i64);
        let coeffs = (0..m)
            .map(|k| {
                let mut acc = S::zero(c);
                for (j, v) in values.iter().enumerate() {
                    let ang = -2.0 * PI * ((j * k) % m) as f64 / m as f64 - phase * k as f64;
                    acc = acc + v.clone() * unit::<S>(c, ang);
                }
                acc * &inv_m / S::from_f64(c, rho).powi(k as i64)
            })
            .collect();
        Self::new(coeffs)
    }
}

fn unit<S: Scalar>(c: S::Ctx, ang: f64) -> S {
    S::from_c64(c, Complex64::from_polar(1.0, ang))
}

/// `m` points `ρ·e^{i(phase + 2πj/m)}`.
pub fn circle_points<S: Scalar>(ctx: S::Ctx, m: usize, rho: f64, phase: f64) -> Vec<S> {
    (0..m)
        .map(|j| S::from_c64(ctx, Complex64::from_polar(rho, phase + 2.0 * PI * j as f64 / m as f64)))
        .collect()
}

/// Roots from the eigenvalues of the companion matrix (double precision).
pub fn roots<S: Scalar>(p: &ComplexPoly<S>) -> Vec<Complex64> {
    let p = p.clone().trim(1e-14);
    let n = p.degree();
    if n == 0 {
        return Vec::new();
    }
    let c: Vec<Complex64> = p.coeffs.iter().map(|c| c.to_c64()).collect();
    let lead = c[n];
    let mut m = DMatrix::<Complex64>::zeros(n, n);
    for i in 1..n {
        m[(i, i - 1)] = Complex64::new(1.0, 0.0);
    }
    for i in 0..n {
        m[(i, n - 1)] = -c[i] / lead;
    }
    match nalgebra::linalg::Schur::new(m).eigenvalues() {
        Some(ev) => ev.iter().cloned().collect(),
        None => Vec::new(),
    }
}

impl<S: Scalar> Add for &ComplexPoly<S> {
    type Output = ComplexPoly<S>;
    fn add(self, o: Self) -> ComplexPoly<S> {
        self.combine(o, true)
    }
}

impl<S: Scalar> Sub for &ComplexPoly<S> {
    type Output = ComplexPoly<S>;
    fn sub(self, o: Self) -> ComplexPoly<S> {
        self.combine(o, false)
    }
}

impl<S: Scalar> Neg for &ComplexPoly<S> {
    type Output = ComplexPoly<S>;
    fn neg(self) -> ComplexPoly<S> {
        ComplexPoly { coeffs: self.coeffs.iter().map(|c| -c.clone()).collect(), scale: self.scale }
    }
}

impl<S: Scalar> Mul for &ComplexPoly<S> {
    type Output = ComplexPoly<S>;
    fn mul(self, o: Self) -> ComplexPoly<S> {
        let c = self.ctx();
        let mut out = vec![S::zero(c); self.coeffs.len() + o.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in o.coeffs.iter().enumerate() {
                out[i + j] = out[i + j].clone() + a.clone() * b;
            }
        }
        let mut p = ComplexPoly { coeffs: out, scale: self.scale + o.scale };
        p.normalize();
        p
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Mp;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn poly(v: &[(f64, f64)]) -> ComplexPoly<Complex64> {
        ComplexPoly::new(v.iter().map(|&(a, b)| c(a, b)).collect())
    }

    #[test]
    fn product_then_division_round_trips() {
        let a = poly(&[(1.0, 2.0), (-3.0, 0.5), (0.25, 0.0), (2.0, -1.0)]);
        let b = poly(&[(0.5, 0.0), (1.0, 1.0), (-2.0, 0.0)]);
        let ab = &a * &b;
        let q = ab.exact_div(&b, 1.0, 0.0, 1e-12, 0, "test").unwrap();
        assert!(q.rel_distance(&a, 1.0) < 1e-14);
        let (_, r) = (&ab + &ComplexPoly::constant(c(0.0, 1.0))).div_rem(&b);
        assert!((r.coeff(0) - c(0.0, 1.0)).norm() < 1e-13);
        assert!(matches!(
            (&ab + &ComplexPoly::constant(c(1.0, 0.0))).exact_div(&b, 1.0, 0.0, 1e-8, 4, "x"),
            Err(Error::NumericalBreakdown { level: 4, .. })
        ));
    }

    #[test]
    fn scale_survives_large_coefficients() {
        let big = poly(&[(1e200, 0.0), (3e200, 0.0)]);
        let sq = &big * &big;
        assert!(sq.scale_exponent() > 1000);
        let halved = sq.scaled(&c(1e-300, 0.0)).scaled(&c(1e-300, 0.0));
        assert!((halved.coeff(2) - c(9e-200, 0.0)).norm() < 1e-212);
        // Σ|c_k| = 16e400, beyond f64 range
        let want = 16f64.ln() + 400.0 * std::f64::consts::LN_10;
        assert!((sq.ln_norm_on(1.0) - want).abs() < 1e-9);
    }

    #[test]
    fn circle_interpolation_recovers_coefficients() {
        let p = poly(&[(1.0, 0.0), (0.0, -2.0), (3.5, 1.0), (-0.5, 0.0), (0.1, 0.2)]);
        let pts = circle_points::<Complex64>((), 5, 2.5, 0.3);
        let vals: Vec<_> = pts.iter().map(|x| p.eval(x)).collect();
        let back = ComplexPoly::interpolate_circle(&vals, 2.5, 0.3);
        assert!(back.rel_distance(&p, 2.5) < 1e-14);
    }

    #[test]
    fn roots_of_known_cubic() {
        let p = &(&poly(&[(-1.0, 0.0), (1.0, 0.0)]) * &poly(&[(0.0, -2.0), (1.0, 0.0)]))
            * &poly(&[(3.0, 0.0), (1.0, 0.0)]);
        let mut rs = roots(&p);
        rs.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
        assert!((rs[0] - c(-3.0, 0.0)).norm() < 1e-12);
        assert!((rs[1] - c(0.0, 2.0)).norm() < 1e-12);
        assert!((rs[2] - c(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn extended_division() {
        let a: ComplexPoly<Mp> = ComplexPoly::new(
            [(1.0, 2.0), (-3.0, 0.5), (0.25, 0.0)].iter().map(|&(x, y)| Mp::new(300, c(x, y))).collect(),
        );
        let b: ComplexPoly<Mp> =
            ComplexPoly::new([(0.5, 0.0), (1.0, 1.0)].iter().map(|&(x, y)| Mp::new(300, c(x, y))).collect());
        let q = (&a * &b).exact_div(&b, 1.0, 0.0, 1e-80, 0, "mp").unwrap();
        assert!(q.rel_distance(&a, 1.0) < 1e-85);
    }
}
