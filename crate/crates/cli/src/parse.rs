//! Argument syntax: exact rationals `p/q` and complex numbers `a+bi`.

use num_complex::Complex64;
use num_rational::Rational64;

pub fn rational(text: &str) -> Result<Rational64, String> {
    let t = text.trim();
    let bad = || format!("'{text}' is not a rational p/q");
    match t.split_once('/') {
        Some((p, q)) => {
            let p: i64 = p.trim().parse().map_err(|_| bad())?;
            let q: i64 = q.trim().parse().map_err(|_| bad())?;
            if q == 0 {
                return Err(format!("'{text}' has a zero denominator"));
            }
            Ok(Rational64::new(p, q))
        }
        None => t.parse::<i64>().map(Rational64::from_integer).map_err(|_| bad()),
    }
}

fn real(text: &str, whole: &str) -> Result<f64, String> {
    match text {
        "" | "+" => Ok(1.0),
        "-" => Ok(-1.0),
        _ => text.parse().map_err(|_| format!("'{whole}' is not a complex number a+bi")),
    }
}

/// `a`, `bi`, `a+bi`, `a-bi`; exponents such as `1e-3+2i` are fine.
pub fn complex(text: &str) -> Result<Complex64, String> {
    let t: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    if t.is_empty() {
        return Err("empty complex number".into());
    }
    let Some(body) = t.strip_suffix('i').or_else(|| t.strip_suffix('j')) else {
        return Ok(Complex64::new(real(&t, text)?, 0.0));
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| matches!(bytes[k], b'+' | b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    match split {
        Some(k) => Ok(Complex64::new(real(&body[..k], text)?, real(&body[k..], text)?)),
        None => Ok(Complex64::new(0.0, real(body, text)?)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rationals() {
        assert_eq!(rational("1/3").unwrap(), Rational64::new(1, 3));
        assert_eq!(rational("-2/4").unwrap(), Rational64::new(-1, 2));
        assert_eq!(rational("0").unwrap(), Rational64::from_integer(0));
        assert!(rational("1/0").is_err());
        assert!(rational("0.3").is_err());
    }

    #[test]
    fn complexes() {
        let c = |a, b| Complex64::new(a, b);
        assert_eq!(complex("0+2i").unwrap(), c(0.0, 2.0));
        assert_eq!(complex("-0.35+1.3i").unwrap(), c(-0.35, 1.3));
        assert_eq!(complex("0.5 - i").unwrap(), c(0.5, -1.0));
        assert_eq!(complex("i").unwrap(), c(0.0, 1.0));
        assert_eq!(complex("3i").unwrap(), c(0.0, 3.0));
        assert_eq!(complex("1e-3+2e1i").unwrap(), c(1e-3, 20.0));
        assert_eq!(complex("2").unwrap(), c(2.0, 0.0));
        assert!(complex("2+").is_err());
        assert!(complex("abc").is_err());
    }
}
