//! Exact counting formulas for Lamé equations with dihedral monodromy.
//!
//! Everything here is rational arithmetic; the `2/3·ε` correction rules
//! out floating point.

use num_integer::Integer;
use num_rational::Rational64;
use serde::Serialize;

use crate::error::{Error, Result};

/// Euler's `φ(N)`, with `φ(x) = 0` for `x ∉ ℕ`.
pub fn phi(n: Rational64) -> i64 {
    if !n.is_integer() || *n.numer() <= 0 {
        return 0;
    }
    let mut m = n.to_integer();
    let mut out = m;
    let mut p = 2;
    while p * p <= m {
        if m % p == 0 {
            out -= out / p;
            while m % p == 0 {
                m /= p;
            }
        }
        p += 1;
    }
    if m > 1 {
        out -= out / m;
    }
    out
}

/// `Ψ(N) = N² ∏_{p|N} (1 − p⁻²)`, the number of points of exact order `N`.
pub fn psi(n: i64) -> i64 {
    assert!(n >= 1);
    let mut m = n;
    let mut out = n * n;
    let mut p = 2;
    while p * p <= m {
        if m % p == 0 {
            out = out / (p * p) * (p * p - 1);
            while m % p == 0 {
                m /= p;
            }
        }
        p += 1;
    }
    if m > 1 {
        out = out / (m * m) * (m * m - 1);
    }
    out
}

/// `(φ(N), Ψ(N))`.
pub fn totients(n: i64) -> (i64, i64) {
    (phi(Rational64::from_integer(n)), psi(n))
}

/// `φ(N/2)`.
pub fn phi_half(n: i64) -> i64 {
    phi(Rational64::new(n, 2))
}

/// `(a_n, b_n)`: `a_{2m} = a_{2m+1} = m(m+1)/2`, `b_{2m} = b_{2m−1} = m²`.
pub fn ab_coeffs(n: u64) -> (i64, i64) {
    assert!(n >= 1);
    let n = n as i64;
    let m = n / 2;
    let a = m * (m + 1) / 2;
    let k = (n + 1) / 2;
    (a, k * k)
}

/// `ε_n(N) = 1` iff `N = 3` and `n ≡ 1 mod 3`.
pub fn epsilon(n: u64, big_n: i64) -> i64 {
    i64::from(big_n == 3 && n % 3 == 1)
}

/// `v_∞(M_{n,N}) = a_n φ(N) + b_n φ(N/2)`.
pub fn vinf_pred(n: u64, big_n: i64) -> i64 {
    let (a, b) = ab_coeffs(n);
    a * phi(Rational64::from_integer(big_n)) + b * phi_half(big_n)
}

/// `k(n,N) = n(n+1)Ψ(N)/24`, the power of `Δ` matching the weight of `M_{n,N}`.
pub fn delta_power(n: u64, big_n: i64) -> Rational64 {
    let n = n as i64;
    Rational64::new(n * (n + 1) * psi(big_n), 24)
}

/// `½(k(n,N) − v) + (2/3)ε_n(N)` for a given order `v` at the cusp.
pub fn l_from_order(n: u64, big_n: i64, v_inf: i64) -> Rational64 {
    (delta_power(n, big_n) - v_inf) / 2 + Rational64::new(2 * epsilon(n, big_n), 3)
}

fn as_count(x: Rational64, what: &str, n: u64, big_n: i64) -> Result<i64> {
    if x.is_integer() && *x.numer() >= 0 {
        Ok(x.to_integer())
    } else {
        Err(Error::Inconsistency(format!("{what}({n}, {big_n}) = {x} is not a nonnegative integer")))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CountReport {
    pub n: u64,
    #[serde(rename = "N")]
    pub big_n: i64,
    pub phi_n: i64,
    pub phi_half_n: i64,
    pub psi_n: i64,
    pub eps: i64,
    pub a_n: i64,
    pub b_n: i64,
    #[serde(rename = "L")]
    pub l: i64,
    #[serde(rename = "PL")]
    pub pl: i64,
    pub v_inf_pred: i64,
    /// `n(n+1)Ψ(N)/24` as `"p/q"`.
    pub k_nn: String,
    /// Predicted `deg ℓ_{n,N}`, defined when `k_nN` is an integer and `ε = 0`.
    pub ell_degree_pred: Option<i64>,
}

/// The full report with `L_n(N)` from the closed formula.
pub fn count_l(n: u64, big_n: i64) -> Result<CountReport> {
    if n < 1 || big_n < 3 {
        return Err(Error::Domain(format!("count_L needs n >= 1 and N >= 3, got n = {n}, N = {big_n}")));
    }
    let (phi_n, psi_n) = totients(big_n);
    let (a_n, b_n) = ab_coeffs(n);
    let eps = epsilon(n, big_n);
    let v = vinf_pred(n, big_n);
    let l = as_count(l_from_order(n, big_n, v), "L", n, big_n)?;
    let pl = count_pl(n, big_n)?;
    let k = delta_power(n, big_n);
    let ell_degree_pred = (eps == 0 && k.is_integer()).then_some(l);
    Ok(CountReport {
        n,
        big_n,
        phi_n,
        phi_half_n: phi_half(big_n),
        psi_n,
        eps,
        a_n,
        b_n,
        l,
        pl,
        v_inf_pred: v,
        k_nn: k.to_string(),
        ell_degree_pred,
    })
}

/// `L_n(N)` alone.
pub fn l_count(n: u64, big_n: i64) -> Result<i64> {
    count_l(n, big_n).map(|r| r.l)
}

/// `PL_n(N) = n(n+1)/12 (Ψ(N) − 3φ(N)) + (2/3)ε_n(N)`, and `0` for `N ≤ 2`.
pub fn count_pl(n: u64, big_n: i64) -> Result<i64> {
    if n < 1 || big_n < 1 {
        return Err(Error::Domain(format!("count_PL needs n >= 1 and N >= 1, got n = {n}, N = {big_n}")));
    }
    if big_n <= 2 {
        return Ok(0);
    }
    let ni = n as i64;
    let (phi_n, psi_n) = totients(big_n);
    let x = Rational64::new(ni * (ni + 1), 12) * (psi_n - 3 * phi_n) + Rational64::new(2 * epsilon(n, big_n), 3);
    as_count(x, "PL", n, big_n)
}

/// `PL_n(N)` rebuilt from `L`: `L_n(N) + L_n(2N)` for odd `N`, `L_n(2N)` for even.
pub fn pl_from_l(n: u64, big_n: i64) -> Result<i64> {
    let twice = l_count(n, 2 * big_n)?;
    if big_n.is_odd() {
        Ok(l_count(n, big_n)? + twice)
    } else {
        Ok(twice)
    }
}

/// One named identity and whether it held.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IdentityCheck {
    pub name: &'static str,
    pub n: u64,
    #[serde(rename = "N")]
    pub big_n: i64,
    pub lhs: String,
    pub rhs: String,
    pub holds: bool,
}

fn check(name: &'static str, n: u64, big_n: i64, lhs: impl ToString, rhs: impl ToString) -> IdentityCheck {
    let (lhs, rhs) = (lhs.to_string(), rhs.to_string());
    IdentityCheck { name, n, big_n, holds: lhs == rhs, lhs, rhs }
}

/// The parity relation between `PL` and `L`, the `U_n(N) = L_n(N)` chain and
/// the `4 | N` shortcut for `v_∞`, over `1 ≤ n ≤ n_max`, `3 ≤ N ≤ big_n_max`.
pub fn identities(n_max: u64, big_n_max: i64) -> Result<Vec<IdentityCheck>> {
    let mut out = Vec::new();
    for n in 1..=n_max {
        for big_n in 3..=big_n_max {
            let r = count_l(n, big_n)?;
            out.push(check("parity", n, big_n, r.pl, pl_from_l(n, big_n)?));
            let u = l_from_order(n, big_n, r.v_inf_pred);
            out.push(check("u_chain", n, big_n, u, r.l));
            if big_n % 4 == 0 {
                let (a, b) = ab_coeffs(n);
                out.push(check("four_divides", n, big_n, r.v_inf_pred, (2 * a + b) * phi_half(big_n)));
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elliptic::torsion_points;
    use proptest::prelude::*;

    fn brute_phi(n: i64) -> i64 {
        (0..n).filter(|k| k.gcd(&n) == 1).count() as i64
    }

    #[test]
    fn totient_examples() {
        assert_eq!(totients(3), (2, 8));
        assert_eq!(phi(Rational64::new(3, 2)), 0);
        assert_eq!(phi_half(4), 1);
        for n in 1..=50 {
            assert_eq!(phi(Rational64::from_integer(n)), brute_phi(n));
            if n < 3 {
                continue;
            }
            assert_eq!(psi(n) as usize, torsion_points(n as u32).unwrap().len(), "N = {n}");
        }
    }

    #[test]
    fn ab_examples() {
        assert_eq!(ab_coeffs(1), (0, 1));
        assert_eq!(ab_coeffs(2), (1, 1));
        assert_eq!(ab_coeffs(4), (3, 4));
        let mut last = -1;
        for n in 1..=20 {
            let (a, b) = ab_coeffs(n);
            assert!(2 * a + b > last);
            last = 2 * a + b;
        }
    }

    #[test]
    fn count_examples() {
        let r = count_l(1, 3).unwrap();
        assert_eq!((r.l, r.pl, r.v_inf_pred, r.eps), (1, 1, 0, 1));
        assert_eq!(l_count(2, 5).unwrap(), 1);
        assert_eq!(l_count(2, 4).unwrap(), 0);
        assert_eq!(count_pl(3, 2).unwrap(), 0);
        assert_eq!(count_pl(3, 1).unwrap(), 0);
        assert_eq!(vinf_pred(2, 4), 3);
        assert!(count_l(1, 2).is_err());
    }

    #[test]
    fn identity_table() {
        let all = identities(10, 30).unwrap();
        assert!(all.iter().all(|c| c.holds), "{:?}", all.iter().find(|c| !c.holds));
        assert_eq!(all.iter().filter(|c| c.name == "four_divides").count(), 10 * 7);
    }

    proptest! {
        #[test]
        fn odd_levels_drop_the_half_term(n in 1u64..12, k in 1i64..20) {
            let big_n = 2 * k + 1;
            prop_assert_eq!(vinf_pred(n, big_n), ab_coeffs(n).0 * phi(Rational64::from_integer(big_n)));
        }

        #[test]
        fn degree_prediction_when_integral(n in 1u64..10, big_n in 3i64..40) {
            let r = count_l(n, big_n).unwrap();
            if r.eps == 0 && (big_n > 3 || n % 3 != 1) {
                prop_assert!(delta_power(n, big_n).is_integer());
                prop_assert_eq!(r.ell_degree_pred, Some(r.l));
            }
        }
    }
}
