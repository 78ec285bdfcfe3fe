//! The invariant suites behind `verify`.
//!
//! Each suite draws its random samples from its own seeded stream, so the
//! report does not depend on which suites run or in what order.

use clap::ValueEnum;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use premodular::asymptotics::{c_ratio, limit_convergence, limit_polys, vanishing_order, DEFAULT_LADDER};
use premodular::counting::{ab_coeffs, count_l, identities};
use premodular::elliptic::{lattice_data, torsion_points, wp_pair, LatticeData, Tau, TorsionPoint};
use premodular::painleve::{
    hamiltonian_residual, kappa0n, lift_step, okamoto_apply, pvi_residual, pvi_sample, sqrt_t, FdOptions, Kappa,
    PviState, ThetaParams,
};
use premodular::premodular::{modular_check, sign_reduce, z_n, z_n_closed};
use premodular::recursion::{build_levels, check_level, eval_levels, RecursionConfig};
use premodular::zeros::{default_tau_samples, ell_degree_fit, find_zeros, Rect};
use premodular::{elliptic::hecke_z, Error, Mp, Result, Scalar};

use crate::config::{Precision, RunConfig};
use crate::report::Row;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Elliptic,
    Recursion,
    Premodular,
    Painleve,
    Asymptotics,
    Counting,
    Zeros,
    All,
}

impl Suite {
    pub const EACH: [Suite; 7] = [
        Suite::Elliptic,
        Suite::Recursion,
        Suite::Premodular,
        Suite::Painleve,
        Suite::Asymptotics,
        Suite::Counting,
        Suite::Zeros,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Elliptic => "elliptic",
            Suite::Recursion => "recursion",
            Suite::Premodular => "premodular",
            Suite::Painleve => "painleve",
            Suite::Asymptotics => "asymptotics",
            Suite::Counting => "counting",
            Suite::Zeros => "zeros",
            Suite::All => "all",
        }
    }
}

pub struct Params<'a> {
    pub run: &'a RunConfig,
    pub n_max: usize,
    pub samples: usize,
}

impl Params<'_> {
    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(self.run.seed);
        r.set_stream(stream);
        r
    }

    fn tol(&self, name: &str) -> f64 {
        self.run.tol(name)
    }
}

pub fn run(suite: Suite, p: &Params) -> Vec<Row> {
    match p.run.precision {
        Precision::Double => run_with::<Complex64>((), suite, p),
        Precision::Extended { bits } => run_with::<Mp>(bits, suite, p),
    }
}

fn run_with<S: Scalar>(ctx: S::Ctx, suite: Suite, p: &Params) -> Vec<Row> {
    match suite {
        Suite::Elliptic => elliptic::<S>(ctx, p),
        Suite::Recursion => recursion::<S>(ctx, p),
        Suite::Premodular => premodular::<S>(ctx, p),
        Suite::Painleve => painleve::<S>(ctx, p),
        Suite::Asymptotics => asymptotics::<S>(ctx, p),
        Suite::Counting => counting(p),
        Suite::Zeros => zeros::<S>(ctx, p),
        Suite::All => unreachable!("expanded by the caller"),
    }
}

/// Largest residual over the samples, or the first error.
fn worst(name: String, tol: f64, items: impl IntoIterator<Item = Result<f64>>) -> Row {
    let mut max: f64 = 0.0;
    let mut count = 0;
    for it in items {
        match it {
            Ok(v) => {
                max = if v.is_nan() { f64::NAN } else { max.max(v) };
                count += 1;
            }
            Err(e) => return Row::error(name, e),
        }
    }
    Row::residual(name, max, tol).with_detail(format!("{count} samples"))
}

fn rel(a: Complex64, b: Complex64) -> f64 {
    let scale = a.norm().max(b.norm());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).norm() / scale
    }
}

fn half_gap(x: f64) -> f64 {
    ((2.0 * x).round() / 2.0 - x).abs()
}

/// Real `(r, s)` with `s ∈ [0, ½)`, at distance at least 0.05 from `½ℤ²`.
fn random_point(rng: &mut ChaCha8Rng) -> TorsionPoint {
    loop {
        let r: f64 = rng.gen_range(0.0..1.0);
        let s: f64 = rng.gen_range(0.0..0.5);
        if half_gap(r).max(half_gap(s)) >= 0.05 {
            return TorsionPoint::real(r, s);
        }
    }
}

fn random_tau(rng: &mut ChaCha8Rng, im: (f64, f64)) -> Complex64 {
    Complex64::new(rng.gen_range(-0.5..0.5), rng.gen_range(im.0..im.1))
}

fn lattice<S: Scalar>(ctx: S::Ctx, tau: Complex64) -> Result<LatticeData<S>> {
    lattice_data(&Tau::<S>::from_c64(ctx, tau)?, None)
}

fn elliptic<S: Scalar>(ctx: S::Ctx, p: &Params) -> Vec<Row> {
    let mut rng = p.rng(1);
    let taus: Vec<Complex64> = (0..p.samples).map(|_| random_tau(&mut rng, (0.8, 2.0))).collect();
    let per_tau = |tau: Complex64| -> Result<[f64; 5]> {
        let t = Tau::<S>::from_c64(ctx, tau)?;
        let ld = lattice_data(&t, None)?;
        let two_pi_i = S::pi(ctx).mul_pow2(1) * S::i(ctx);
        let legendre = (t.value().clone() * &ld.eta1 - &ld.eta2 - two_pi_i.clone()).norm() / two_pi_i.norm();
        let e_max = ld.e1.norm().max(ld.e2.norm()).max(ld.e3.norm());
        let e_sum = (ld.e1.clone() + &ld.e2 + &ld.e3).norm() / e_max;
        let z = S::from_f64(ctx, 0.3) + t.value().clone() * S::from_f64(ctx, 0.2);
        let (w, wp) = wp_pair(&z, &ld)?;
        let four_w3 = (w.clone() * &w * &w).mul_pow2(2);
        let g2w = ld.g2.clone() * &w;
        let lhs = wp.clone() * &wp;
        let cubic_scale = lhs.norm() + four_w3.norm() + g2w.norm() + ld.g3.norm();
        let cubic = (lhs - four_w3 + g2w + &ld.g3).norm() / cubic_scale;
        let g2_cubed = ld.g2.clone() * &ld.g2 * &ld.g2;
        let g3_sq = ld.g3.clone() * &ld.g3 * S::from_ratio(ctx, 27, 1);
        let disc_scale = g2_cubed.norm().max(g3_sq.norm());
        let disc = (g2_cubed - g3_sq - &ld.delta).norm() / disc_scale;
        let ld2 = lattice_data(&t.act([[0, -1], [1, 0]])?, None)?;
        let j_mod = (ld2.j.clone() - &ld.j).norm() / ld.j.norm().max(1.0);
        Ok([legendre, e_sum, cubic, disc, j_mod])
    };
    let vals: Vec<Result<[f64; 5]>> = taus.iter().map(|&t| per_tau(t)).collect();
    let names = ["legendre", "e_sum", "cubic", "discriminant", "j_modular"];
    names
        .iter()
        .enumerate()
        .map(|(k, name)| {
            let key = format!("elliptic.{name}");
            worst(key.clone(), p.tol(&key), vals.iter().map(|v| v.clone().map(|a| a[k])))
        })
        .collect()
}

fn recursion<S: Scalar>(ctx: S::Ctx, p: &Params) -> Vec<Row> {
    let mut rng = p.rng(2);
    let cap = S::level_cap(ctx);
    let top = p.n_max.min(cap);
    let mut rows = Vec::new();
    if top < p.n_max {
        rows.push(Row::info("recursion.level_cap", json!(cap)).with_detail(format!(
            "polynomial build checked up to n = {top}; use a wider extended precision for more"
        )));
    }
    let mut structure = vec![Vec::new(); top + 1];
    let mut pointwise = vec![Vec::new(); top + 1];
    for _ in 0..p.samples {
        let pt = random_point(&mut rng);
        let tau = random_tau(&mut rng, (0.8, 2.0));
        let built = (|| -> Result<_> {
            let ld = lattice::<S>(ctx, tau)?;
            let hv = hecke_z(&pt, &ld)?;
            let levels = build_levels(top, &hv, &ld, &RecursionConfig::default())?;
            let lv = eval_levels(&hv.z, top, &hv, &ld)?;
            Ok((hv, levels, lv))
        })();
        match built {
            Ok((hv, levels, lv)) => {
                for level in levels.iter().skip(1) {
                    let n = level.n;
                    let rep = check_level(level);
                    let s = [rep.lead_q, rep.lead_g, rep.lead_r, rep.div_phi, rep.div_rq, rep.identity, rep.top_minus, rep.top_minus_t]
                        .into_iter()
                        .fold(0.0, f64::max);
                    structure[n].push(Ok(if rep.degrees_ok { s } else { f64::INFINITY }));
                    let from_poly = level.q.eval(&hv.z).to_c64();
                    pointwise[n].push(Ok(rel(from_poly, lv.q(n as i64).to_c64())));
                }
            }
            Err(e) => {
                for slot in structure.iter_mut().skip(1) {
                    slot.push(Err(e.clone()));
                }
            }
        }
    }
    for n in 1..=top {
        rows.push(worst(format!("recursion.structure n={n}"), p.tol("recursion.structure"), structure[n].drain(..)));
        rows.push(worst(format!("recursion.pointwise n={n}"), p.tol("recursion.pointwise"), pointwise[n].drain(..)));
    }
    rows
}

const SL2_SAMPLES: [[[i64; 2]; 2]; 4] = [[[0, -1], [1, 0]], [[1, 1], [0, 1]], [[1, 0], [1, 1]], [[2, 1], [1, 1]]];

fn premodular<S: Scalar>(ctx: S::Ctx, p: &Params) -> Vec<Row> {
    let mut rng = p.rng(3);
    let samples: Vec<(TorsionPoint, Complex64)> =
        (0..p.samples).map(|_| (random_point(&mut rng), random_tau(&mut rng, (0.8, 2.0)))).collect();
    let mut rows = Vec::new();
    for n in 1..=p.n_max.min(4) {
        let items = samples.iter().map(|(pt, tau)| {
            let ld = lattice::<S>(ctx, *tau)?;
            Ok(rel(z_n(n, pt, &ld)?.value.to_c64(), z_n_closed(n, pt, &ld)?.value.to_c64()))
        });
        rows.push(worst(format!("premodular.closed_form n={n}"), p.tol("premodular.closed_form"), items));
    }
    let pts: Vec<TorsionPoint> = torsion_points(5).unwrap_or_default().into_iter().step_by(4).collect();
    for n in 1..=p.n_max {
        let items = samples.iter().zip(pts.iter().cycle()).flat_map(|((_, tau), pt)| {
            SL2_SAMPLES.iter().map(move |m| {
                let ld = lattice::<S>(ctx, *tau)?;
                modular_check(n, pt, &ld, *m)
            })
        });
        rows.push(worst(format!("premodular.modular n={n}"), p.tol("premodular.modular"), items));
    }
    rows
}

fn painleve<S: Scalar>(ctx: S::Ctx, p: &Params) -> Vec<Row> {
    let mut rng = p.rng(4);
    let mut rows = Vec::new();
    for n in 0..=p.n_max {
        let mut ham = Vec::new();
        let mut pvi = Vec::new();
        let mut redrawn = 0;
        while ham.len() < p.samples && redrawn < 10 * p.samples {
            let pt = random_point(&mut rng);
            let tau = random_tau(&mut rng, (0.8, 2.0));
            match hamiltonian_residual::<S>(n, &pt, ctx, tau, FdOptions::default()) {
                Err(Error::PoleProximity { .. }) => redrawn += 1,
                h => {
                    ham.push(h.map(|(a, b)| a.max(b)));
                    pvi.push(pvi_residual::<S>(n, &pt, ctx, tau, 1e-3));
                }
            }
        }
        let note = format!("{} samples, {redrawn} pole-flagged redrawn", ham.len());
        rows.push(worst(format!("painleve.hamiltonian n={n}"), p.tol("painleve.hamiltonian"), ham).with_detail(note.clone()));
        rows.push(worst(format!("painleve.pvi n={n}"), p.tol("painleve.pvi"), pvi).with_detail(note));
    }

    let quarter = TorsionPoint::ratio(1, 4, 0, 1);
    let mut lam = Vec::new();
    let mut prod = Vec::new();
    for tau in [Complex64::new(0.2, 1.1), Complex64::new(0.0, 1.0), Complex64::new(-0.35, 1.3)] {
        let per = (|| -> Result<Vec<(f64, f64)>> {
            let ld = lattice::<S>(ctx, tau)?;
            let rt = sqrt_t(&ld)?.to_c64();
            let mut out = Vec::new();
            for n in 0..=p.n_max {
                let smp = pvi_sample(n, &quarter, &ld)?;
                let (l, m) = (smp.lambda.to_c64(), smp.mu.to_c64());
                let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
                out.push(((l - sign * rt / (2 * n + 1) as f64).norm() / l.norm(), (l * m - 0.25).norm()));
            }
            Ok(out)
        })();
        match per {
            Ok(v) => {
                lam.extend(v.iter().map(|x| Ok(x.0)));
                prod.extend(v.iter().map(|x| Ok(x.1)));
            }
            Err(e) => {
                lam.push(Err(e.clone()));
                prod.push(Err(e));
            }
        }
    }
    rows.push(worst("painleve.quarter_lambda".into(), p.tol("painleve.quarter_lambda"), lam));
    rows.push(worst("painleve.quarter_product".into(), p.tol("painleve.quarter_product"), prod));

    let tol = p.tol("painleve.okamoto");
    let mut inv = Vec::new();
    let mut law = Vec::new();
    for _ in 0..p.samples.max(1) * 10 {
        let mut g = |lo: f64, hi: f64| Complex64::new(rng.gen_range(lo..hi), rng.gen_range(lo..hi));
        let th = [g(-2.0, 2.0), g(-2.0, 2.0), g(-2.0, 2.0), g(-2.0, 2.0)];
        let t4 = Complex64::new(1.0, 0.0) - 2.0 * th[0] - th[1] - th[2] - th[3];
        let st = PviState {
            t: g(-1.0, 1.0),
            lambda: g(-2.0, 2.0),
            mu: g(-2.0, 2.0),
            theta: ThetaParams([th[0], th[1], th[2], th[3], t4]),
        };
        for k in [Kappa::K0, Kappa::K1, Kappa::K2, Kappa::K3, Kappa::K4] {
            inv.push(okamoto_apply(k, &st).and_then(|once| okamoto_apply(k, &once)).map(|back| {
                let d = (0..5).map(|j| (back.theta.0[j] - st.theta.0[j]).norm()).fold(0.0, f64::max);
                d.max(rel(back.lambda, st.lambda)).max(rel(back.mu, st.mu))
            }));
        }
        law.push(okamoto_apply(Kappa::K5, &st).map(|five| {
            let [a, b, c, d, e] = st.theta.0;
            five.theta.0.iter().zip([a - 1.0, b, c, d, e + 2.0]).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
        }));
    }
    rows.push(worst("painleve.okamoto involution".into(), tol, inv));
    rows.push(worst("painleve.okamoto kappa5".into(), tol, law));

    let mut chain = Vec::new();
    let mut lift = Vec::new();
    let tau = Complex64::new(0.11, 1.3);
    for pt in [TorsionPoint::real(0.19, 0.28), TorsionPoint::real(0.7, 0.41), TorsionPoint::ratio(1, 5, 2, 5)] {
        let per = (|| -> Result<Vec<(f64, f64)>> {
            let ld = lattice::<S>(ctx, tau)?;
            let s0 = pvi_sample(0, &pt, &ld)?.state();
            let mut cur = s0;
            let mut out = Vec::new();
            for n in 1..=p.n_max {
                let via = kappa0n(n, &s0)?;
                let want = ThetaParams::level(n);
                let c = (0..5).map(|j| (via.theta.0[j] - want.0[j]).norm()).fold(0.0, f64::max);
                cur = lift_step(&cur)?;
                let smp = pvi_sample(n, &pt, &ld)?.state();
                out.push((c, rel(cur.lambda, smp.lambda).max(rel(cur.mu, smp.mu))));
            }
            Ok(out)
        })();
        match per {
            Ok(v) => {
                chain.extend(v.iter().map(|x| Ok(x.0)));
                lift.extend(v.iter().map(|x| Ok(x.1)));
            }
            Err(e) => {
                chain.push(Err(e.clone()));
                lift.push(Err(e));
            }
        }
    }
    rows.push(worst("painleve.okamoto chain".into(), tol, chain));
    rows.push(worst("painleve.lift".into(), p.tol("painleve.lift"), lift));
    rows
}

fn asymptotics<S: Scalar>(ctx: S::Ctx, p: &Params) -> Vec<Row> {
    let mut rows = Vec::new();
    let ident = (1..=p.n_max.max(1)).flat_map(|n| {
        let polys = limit_polys(n);
        (0..50).map(move |k| {
            let s = Complex64::new(0.005 + 0.0099 * k as f64, 0.2 * (((7 * k) % 13) as f64 / 13.0 - 0.5));
            Ok(polys.identity_residuals(s).into_iter().fold(0.0, f64::max))
        })
    });
    rows.push(worst("asymptotics.identities".into(), p.tol("asymptotics.identities"), ident));

    let pts = [TorsionPoint::ratio(1, 5, 1, 5), TorsionPoint::ratio(1, 3, 1, 4), TorsionPoint::ratio(2, 7, 3, 7), TorsionPoint::ratio(0, 1, 1, 3)];
    for n in 1..=p.n_max.min(4) {
        let gaps = pts.iter().map(|pt| limit_convergence::<S>(n, pt, ctx, &[Complex64::new(0.0, 12.0)]));
        rows.push(worst(format!("asymptotics.limit_gap n={n}"), p.tol("asymptotics.limit_gap"), gaps));
    }

    let ratios = (0..=p.n_max.min(3)).flat_map(|n| {
        [(0.17, 0.2), (0.4, 0.15), (0.05, 0.3)].into_iter().map(move |(r, s)| {
            let ld = lattice::<S>(ctx, Complex64::new(0.1, 10.0))?;
            Ok((c_ratio(n, &TorsionPoint::real(r, s), &ld)? - 1.0).norm())
        })
    });
    rows.push(worst("asymptotics.c_ratio".into(), p.tol("asymptotics.c_ratio"), ratios));

    for n in 1..=p.n_max {
        let (a, b) = ab_coeffs(n as u64);
        let fits = [(1, 3), (1, 4)].into_iter().flat_map(|(rn, rd)| {
            [(0, 1, a as f64), (1, 2, b as f64 / 2.0)].into_iter().map(move |(sn, sd, want)| {
                let o = vanishing_order(n, &TorsionPoint::ratio(rn, rd, sn, sd), 0.0, &DEFAULT_LADDER)?;
                Ok((o.slope_order - want).abs())
            })
        });
        rows.push(worst(format!("asymptotics.order n={n}"), p.tol("asymptotics.order"), fits));
    }
    rows
}

fn counting(p: &Params) -> Vec<Row> {
    let mut rows = Vec::new();
    match identities(p.n_max.max(10) as u64, 30) {
        Ok(all) => {
            for name in ["parity", "u_chain", "four_divides"] {
                let of: Vec<_> = all.iter().filter(|c| c.name == name).collect();
                let bad = of.iter().find(|c| !c.holds);
                let mut row = Row::exact(format!("counting.{name}"), json!(of.len() - of.iter().filter(|c| !c.holds).count()), json!(of.len()));
                if let Some(b) = bad {
                    row = row.with_detail(format!("fails at n = {}, N = {}: {} vs {}", b.n, b.big_n, b.lhs, b.rhs));
                } else {
                    row = row.with_detail(format!("{} cases hold", of.len()));
                }
                rows.push(row);
            }
        }
        Err(e) => rows.push(Row::error("counting.identities", e)),
    }
    for (n, big_n, want) in [(1, 3, 1), (2, 5, 1), (2, 4, 0)] {
        let name = format!("counting.L n={n} N={big_n}");
        rows.push(match count_l(n, big_n) {
            Ok(r) => Row::exact(name, json!(r.l), json!(want)),
            Err(e) => Row::error(name, e),
        });
    }
    rows
}

fn zeros<S: Scalar>(ctx: S::Ctx, p: &Params) -> Vec<Row> {
    let mut rows = Vec::new();
    let rect = Rect::new(0.0, 1.0, 0.5, 2.5).expect("valid rectangle");
    let floor = p.tol("zeros.simple");
    for big_n in 3..=4u32 {
        let mut reps: Vec<TorsionPoint> = Vec::new();
        for pt in torsion_points(big_n).unwrap_or_default() {
            let (rep, _) = sign_reduce(&pt, 1);
            if !reps.iter().any(|q| q.exact == rep.exact) {
                reps.push(rep);
            }
        }
        for n in 1..=p.n_max.min(3) {
            let name = format!("zeros.simple n={n} N={big_n}");
            let mut ratio = f64::INFINITY;
            let mut found = 0;
            let mut failure = None;
            for pt in &reps {
                let f = |tau: Complex64| -> Result<Complex64> { Ok(z_n(n, pt, &lattice::<S>(ctx, tau)?)?.value.to_c64()) };
                match find_zeros(&f, &rect, 4, 4) {
                    Ok(zs) => {
                        for z in zs {
                            ratio = ratio.min(z.derivative_mag / z.scale);
                            found += 1;
                        }
                    }
                    Err(e) => {
                        failure = Some(format!("{pt}: {e}"));
                        break;
                    }
                }
            }
            rows.push(match failure {
                Some(e) => Row::error(name, e),
                None if found == 0 => Row::info(name, json!(null)).with_tolerance(floor).with_detail("no zeros in the scan window"),
                None => Row::above(name, ratio, floor).with_detail(format!("{found} zeros, min |f'|/scale")),
            });
        }
    }
    let taus = default_tau_samples(12);
    for (n, big_n) in [(1usize, 4u32), (1, 5), (2, 4), (2, 5)] {
        if n > p.n_max {
            continue;
        }
        let name = format!("zeros.degree n={n} N={big_n}");
        let fit = ell_degree_fit::<S>(n, big_n, &taus, ctx);
        let want = count_l(n as u64, big_n as i64);
        rows.push(match (fit, want) {
            (Ok(fit), Ok(want)) => {
                let mut row = Row::residual(name, fit.fit_residual, p.tol("zeros.fit_residual")).with_value(json!(fit.degree));
                if fit.degree as i64 != want.l {
                    row.status = crate::report::Status::Fail;
                }
                row.with_detail(format!("L = {}", want.l))
            }
            (Err(e), _) | (_, Err(e)) => Row::error(name, e),
        });
    }
    rows
}
