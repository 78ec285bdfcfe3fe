//! `premodular`: evaluate pre-modular forms, count dihedral Lamé equations
//! and run the invariant suites.

mod config;
mod parse;
mod report;
mod suites;

use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use num_rational::Rational64;
use rayon::prelude::*;
use serde_json::{json, Value};

use premodular::counting::{count_l, l_from_order, pl_from_l};
use premodular::elliptic::{lattice_data, Tau, TorsionPoint};
use premodular::painleve::pvi_sample;
use premodular::premodular::{m_product, weight, z_n, z_n_closed};
use premodular::{Error, Mp, Scalar};

use config::{Output, Precision, RunConfig};
use report::{complex, Report, Row};
use suites::{Params, Suite};

const EXIT_FAIL: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser)]
#[command(name = "premodular", version = env!("CARGO_PKG_VERSION"), about)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[arg(long, global = true, value_enum, default_value = "json")]
    output: Output,

    /// double, extended or extended:<bits>.
    #[arg(long, global = true, env = "PREMODULAR_PRECISION", default_value = "double")]
    precision: Precision,

    /// Worker threads; 0 lets the pool decide.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Override a named tolerance, e.g. `--tol painleve.pvi=1e-4`.
    #[arg(long = "tol", global = true, value_name = "NAME=VALUE")]
    tol: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate Z^(n), lambda, mu, wp(p) or M_(n,N) at one tau.
    Eval {
        #[arg(long)]
        n: usize,
        #[arg(long, value_parser = parse::rational, allow_hyphen_values = true)]
        r: Option<Rational64>,
        #[arg(long, value_parser = parse::rational, allow_hyphen_values = true)]
        s: Option<Rational64>,
        /// Complex `a+bi`.
        #[arg(long, value_parser = parse::complex, allow_hyphen_values = true)]
        tau: Complex64,
        #[arg(long, value_enum)]
        what: What,
        /// Torsion order, for `--what M`.
        #[arg(long = "N")]
        big_n: Option<u32>,
    },
    /// L_n(N), PL_n(N) and the quantities behind them.
    Count {
        #[arg(long)]
        n: u64,
        #[arg(long = "N")]
        big_n: i64,
    },
    /// Run an invariant suite; exits 0 iff every check passes.
    Verify {
        #[arg(long, value_enum, default_value = "all")]
        suite: Suite,
        #[arg(long, default_value_t = 4)]
        n_max: usize,
        /// Random samples per check.
        #[arg(long, default_value_t = 8)]
        samples: usize,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum What {
    #[value(name = "Z")]
    Z,
    #[value(name = "lambda")]
    Lambda,
    #[value(name = "mu")]
    Mu,
    #[value(name = "wp_p")]
    WpP,
    #[value(name = "M")]
    M,
}

enum Failure {
    Usage(String),
    Kernel(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Kernel(e)
    }
}

/// Module and short code for a kernel error, with its exit status.
fn classify(e: &Error) -> (&'static str, u8) {
    match e {
        Error::InvalidPoint { .. } => ("elliptic.invalid_point", EXIT_USAGE),
        Error::TauBelowFloor { .. } => ("elliptic.tau_below_floor", EXIT_USAGE),
        Error::Domain(_) => ("domain", EXIT_USAGE),
        Error::LevelCap { .. } => ("recursion.level_cap", EXIT_USAGE),
        Error::SeriesNonconvergence { .. } => ("elliptic.series_nonconvergence", EXIT_NUMERICAL),
        Error::Pole => ("elliptic.pole", EXIT_NUMERICAL),
        Error::SingularConfiguration => ("recursion.singular_configuration", EXIT_NUMERICAL),
        Error::NumericalBreakdown { .. } => ("recursion.numerical_breakdown", EXIT_NUMERICAL),
        Error::SingularTransformation(_) => ("painleve.singular_transformation", EXIT_NUMERICAL),
        Error::PoleProximity { .. } => ("painleve.pole_proximity", EXIT_NUMERICAL),
        Error::NoZeroNearby { .. } => ("painleve.no_zero_nearby", EXIT_NUMERICAL),
        Error::InconclusiveOrder { .. } => ("asymptotics.inconclusive_order", EXIT_NUMERICAL),
        Error::Inconsistency(_) => ("counting.inconsistency", EXIT_FAIL),
        Error::BoundaryTooClose { .. } => ("zeros.boundary_too_close", EXIT_NUMERICAL),
        Error::NonIntegerWinding { .. } => ("zeros.non_integer_winding", EXIT_NUMERICAL),
        Error::NewtonFailure(_) => ("zeros.newton_failure", EXIT_NUMERICAL),
        Error::SuspectedMultipleZero { .. } => ("zeros.suspected_multiple_zero", EXIT_FAIL),
        Error::IllConditioned(_) => ("zeros.ill_conditioned", EXIT_NUMERICAL),
    }
}

fn point(r: Option<Rational64>, s: Option<Rational64>) -> Result<TorsionPoint, Failure> {
    match (r, s) {
        (Some(r), Some(s)) => Ok(TorsionPoint::rational(r, s)),
        _ => Err(Failure::Usage("this quantity needs both --r and --s".into())),
    }
}

fn eval<S: Scalar>(ctx: S::Ctx, cfg: &RunConfig, n: usize, pt: Option<TorsionPoint>, tau: Complex64, what: What, big_n: Option<u32>) -> Result<Vec<Row>, Failure> {
    let ld = lattice_data(&Tau::<S>::from_c64(ctx, tau)?, None)?;
    let trunc = ld.ln_tol.exp();
    let mut rows = vec![Row::info("series", json!({ "terms": ld.terms, "truncation": trunc }))];
    let pt = match what {
        What::M => None,
        _ => Some(pt.ok_or_else(|| Failure::Usage("this quantity needs both --r and --s".into()))?),
    };
    match (what, pt) {
        (What::Z, Some(pt)) => {
            let v = z_n(n, &pt, &ld)?;
            rows.push(
                Row::info(format!("Z^({n})"), complex(v.value.to_c64()))
                    .with_tolerance(trunc)
                    .with_detail(format!("weight {}", weight(n))),
            );
            if (1..=4).contains(&n) {
                let closed = z_n_closed(n, &pt, &ld)?.value.to_c64();
                let gap = (closed - v.value.to_c64()).norm() / closed.norm().max(v.value.norm());
                rows.push(Row::residual(format!("Z^({n}) closed form"), gap, cfg.tol("eval.closed_form")).with_value(complex(closed)));
            }
        }
        (What::M, _) => {
            let big_n = big_n.ok_or_else(|| Failure::Usage("--what M needs --N".into()))?;
            if big_n < 3 {
                return Err(Failure::Usage(format!("--N must be at least 3, got {big_n}")));
            }
            let m = m_product(n, big_n, &ld)?;
            rows.push(Row::info("ln|M|", json!(m.ln_abs)).with_tolerance(trunc));
            rows.push(Row::info("arg M", json!(m.arg)));
            let about = format!("product over {} points, weight {}", m.factor_count, m.factor_count as u32 * weight(n));
            rows.push(match m.value() {
                Some(v) => Row::info(format!("M_({n},{big_n})"), complex(v)).with_detail(about),
                None => Row::info(format!("M_({n},{big_n})"), Value::Null)
                    .with_detail(format!("{about}; outside the double range, use ln|M| and arg M")),
            });
        }
        (_, Some(pt)) => {
            let smp = pvi_sample(n, &pt, &ld)?;
            let (label, v) = match what {
                What::Lambda => ("lambda", smp.lambda.to_c64()),
                What::Mu => ("mu", smp.mu.to_c64()),
                _ => ("wp_p", smp.wp_p.to_c64()),
            };
            rows.push(Row::info("t", complex(smp.t.to_c64())));
            let mut row = Row::info(format!("{label}^({n})"), complex(v)).with_tolerance(trunc);
            if let Some(flag) = smp.pole {
                row = row.with_detail(format!("near a pole of lambda ({flag:?})"));
            }
            rows.push(row);
        }
        (_, None) => unreachable!("checked above"),
    }
    Ok(rows)
}

fn count(n: u64, big_n: i64) -> Result<Vec<Row>, Failure> {
    if n < 1 || big_n < 3 {
        return Err(Failure::Usage(format!("count needs --n >= 1 and --N >= 3, got n = {n}, N = {big_n}")));
    }
    let rep = count_l(n, big_n)?;
    let fields = serde_json::to_value(&rep).expect("report serializes");
    let mut rows: Vec<Row> = match fields {
        Value::Object(m) => m.into_iter().map(|(k, v)| Row::info(k, v)).collect(),
        _ => unreachable!("a struct serializes to an object"),
    };
    let parity = pl_from_l(n, big_n)?;
    let which = if big_n % 2 == 1 { "L(N) + L(2N)" } else { "L(2N)" };
    rows.push(Row::exact(format!("parity PL = {which}"), json!(rep.pl), json!(parity)));
    let chain = l_from_order(n, big_n, rep.v_inf_pred);
    rows.push(Row::exact("u_chain", json!(chain.to_string()), json!(rep.l.to_string())));
    Ok(rows)
}

fn verify(cfg: &RunConfig, suite: Suite, n_max: usize, samples: usize) -> Vec<Row> {
    let params = Params { run: cfg, n_max, samples };
    let chosen: Vec<Suite> = if suite == Suite::All { Suite::EACH.to_vec() } else { vec![suite] };
    let parts: Vec<Vec<Row>> = chosen.par_iter().map(|&s| suites::run(s, &params)).collect();
    parts.into_iter().flatten().collect()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    }
    let threads = rayon::current_num_threads();
    let cfg = match RunConfig::new(cli.precision, cli.output, threads, cli.seed, &cli.tol) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error[usage]: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    let (name, args, outcome) = match cli.command {
        Command::Eval { n, r, s, tau, what, big_n } => {
            let args = json!({
                "n": n,
                "r": r.map(|x| x.to_string()),
                "s": s.map(|x| x.to_string()),
                "tau": complex(tau),
                "what": format!("{what:?}"),
                "N": big_n,
            });
            let pt = point(r, s).ok();
            let out = match cfg.precision {
                Precision::Double => eval::<Complex64>((), &cfg, n, pt, tau, what, big_n),
                Precision::Extended { bits } => eval::<Mp>(bits, &cfg, n, pt, tau, what, big_n),
            };
            ("eval", args, out)
        }
        Command::Count { n, big_n } => ("count", json!({ "n": n, "N": big_n }), count(n, big_n)),
        Command::Verify { suite, n_max, samples } => (
            "verify",
            json!({ "suite": suite.name(), "n_max": n_max, "samples": samples }),
            Ok(verify(&cfg, suite, n_max, samples)),
        ),
    };
    let results = match outcome {
        Ok(rows) => rows,
        Err(Failure::Usage(msg)) => {
            eprintln!("error[usage]: {msg}");
            return ExitCode::from(EXIT_USAGE);
        }
        Err(Failure::Kernel(e)) => {
            let (code, exit) = classify(&e);
            eprintln!("error[{code}]: {e}");
            return ExitCode::from(exit);
        }
    };
    let report = Report {
        command: name.into(),
        version: report::version(),
        config: cfg.clone(),
        args,
        results,
        wall_time_ms: start.elapsed().as_millis() as u64,
    };
    print!("{}", report.render(cfg.output));
    if cfg.output == Output::Json {
        println!();
    }
    if report.failed() {
        ExitCode::from(EXIT_FAIL)
    } else if report.errored() {
        ExitCode::from(EXIT_NUMERICAL)
    } else {
        ExitCode::SUCCESS
    }
}
