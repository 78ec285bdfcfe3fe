use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use clap::ValueEnum;
use serde::Serialize;

/// Default working precision of the extended backend, in bits.
pub const DEFAULT_BITS: u32 = 192;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "backend", rename_all = "lowercase")]
pub enum Precision {
    Double,
    Extended { bits: u32 },
}

impl FromStr for Precision {
    type Err = String;

    /// `double`, `extended` or `extended:<bits>`.
    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim().to_ascii_lowercase();
        match s.split_once(':') {
            None if s == "double" => Ok(Precision::Double),
            None if s == "extended" => Ok(Precision::Extended { bits: DEFAULT_BITS }),
            Some(("extended", bits)) => match bits.parse::<u32>() {
                Ok(b) if (64..=8192).contains(&b) => Ok(Precision::Extended { bits: b }),
                _ => Err(format!("bits in '{s}' must be an integer in 64..=8192")),
            },
            _ => Err(format!("unknown precision '{s}'; use double, extended or extended:<bits>")),
        }
    }
}

impl fmt::Display for Precision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Precision::Double => write!(f, "double"),
            Precision::Extended { bits } => write!(f, "extended:{bits}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Output {
    Json,
    Csv,
    Text,
}

/// Every named tolerance the suites use, with its default.
pub const TOLERANCES: &[(&str, f64)] = &[
    ("elliptic.legendre", 1e-10),
    ("elliptic.e_sum", 1e-10),
    ("elliptic.cubic", 1e-9),
    ("elliptic.discriminant", 1e-9),
    ("elliptic.j_modular", 1e-8),
    ("eval.closed_form", 1e-7),
    ("recursion.structure", 1e-6),
    ("recursion.pointwise", 1e-6),
    ("premodular.closed_form", 1e-7),
    ("premodular.modular", 1e-6),
    ("painleve.hamiltonian", 1e-4),
    ("painleve.pvi", 1e-3),
    ("painleve.quarter_lambda", 1e-7),
    ("painleve.quarter_product", 1e-8),
    ("painleve.okamoto", 1e-10),
    ("painleve.lift", 1e-6),
    ("asymptotics.limit_gap", 1e-3),
    ("asymptotics.identities", 1e-10),
    ("asymptotics.c_ratio", 0.05),
    ("asymptotics.order", 0.05),
    ("zeros.simple", 1e-4),
    ("zeros.fit_residual", 1e-5),
];

#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub precision: Precision,
    pub tolerances: BTreeMap<String, f64>,
    pub output: Output,
    pub threads: usize,
    pub seed: u64,
}

impl RunConfig {
    /// Defaults overlaid with `name=value` overrides.
    pub fn new(precision: Precision, output: Output, threads: usize, seed: u64, overrides: &[String]) -> Result<Self, String> {
        let mut tolerances: BTreeMap<String, f64> = TOLERANCES.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        for o in overrides {
            let (name, value) = o.split_once('=').ok_or_else(|| format!("tolerance override '{o}' is not name=value"))?;
            let slot = tolerances.get_mut(name.trim()).ok_or_else(|| format!("unknown tolerance '{}'", name.trim()))?;
            match value.trim().parse::<f64>() {
                Ok(v) if v > 0.0 && v.is_finite() => *slot = v,
                _ => return Err(format!("tolerance '{name}' must be a positive number, got '{value}'")),
            }
        }
        Ok(RunConfig { precision, tolerances, output, threads, seed })
    }

    pub fn tol(&self, name: &str) -> f64 {
        self.tolerances[name]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precision_syntax() {
        assert_eq!("double".parse::<Precision>().unwrap(), Precision::Double);
        assert_eq!("Extended".parse::<Precision>().unwrap(), Precision::Extended { bits: DEFAULT_BITS });
        assert_eq!("extended:256".parse::<Precision>().unwrap(), Precision::Extended { bits: 256 });
        assert!("extended:8".parse::<Precision>().is_err());
        assert!("quad".parse::<Precision>().is_err());
    }

    #[test]
    fn overrides() {
        let c = RunConfig::new(Precision::Double, Output::Json, 1, 0, &["painleve.pvi=1e-2".into()]).unwrap();
        assert_eq!(c.tol("painleve.pvi"), 1e-2);
        assert!(RunConfig::new(Precision::Double, Output::Json, 1, 0, &["nope=1".into()]).is_err());
        assert!(RunConfig::new(Precision::Double, Output::Json, 1, 0, &["painleve.pvi=-1".into()]).is_err());
    }
}
