//! Zeros of holomorphic functions of `τ`: argument-principle counts,
//! Newton refinement with a simplicity check, grid scans, and the `j`-degree
//! fit of `M_{n,N}/Δ^k`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::counting::{count_l, delta_power};
use crate::elliptic::{lattice_data, Tau};
use crate::error::{Error, Result};
use crate::premodular::m_product;
use crate::scalar::Scalar;

/// Lowest `Im τ` a rectangle may reach.
pub const IM_FLOOR: f64 = 0.05;

/// Boundary samples with `|f| < BOUNDARY_FLOOR · max|f|` trigger a nudge.
pub const BOUNDARY_FLOOR: f64 = 1e-8;

/// Step of the central difference that measures `|f′|` at a zero.
pub const DERIVATIVE_STEP: f64 = 1e-5;

/// A zero is simple when `|f′| > SIMPLE_THRESHOLD · scale`.
pub const SIMPLE_THRESHOLD: f64 = 1e-4;

/// Newton stops once `|f| < NEWTON_RESIDUAL · scale`.
pub const NEWTON_RESIDUAL: f64 = 1e-9;

/// Radius of the circle whose samples fix the local scale of `f`.
const SCALE_RADIUS: f64 = 1e-2;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Rect {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl Rect {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Result<Self> {
        if !(re_min < re_max && im_min < im_max) {
            return Err(Error::Domain(format!("empty rectangle [{re_min}, {re_max}] x [{im_min}, {im_max}]")));
        }
        if im_min <= IM_FLOOR {
            return Err(Error::TauBelowFloor { im: im_min, floor: IM_FLOOR });
        }
        Ok(Rect { re_min, re_max, im_min, im_max })
    }

    /// The square of half-width `half` around `c`.
    pub fn around(c: Complex64, half: f64) -> Result<Self> {
        Rect::new(c.re - half, c.re + half, c.im - half, c.im + half)
    }

    pub fn center(&self) -> Complex64 {
        Complex64::new((self.re_min + self.re_max) / 2.0, (self.im_min + self.im_max) / 2.0)
    }

    pub fn contains(&self, z: Complex64) -> bool {
        (self.re_min..=self.re_max).contains(&z.re) && (self.im_min..=self.im_max).contains(&z.im)
    }

    fn grown(&self, d: f64) -> Result<Self> {
        Rect::new(self.re_min - d, self.re_max + d, (self.im_min - d).max(IM_FLOOR * 1.01), self.im_max + d)
    }

    /// `nx × ny` congruent cells, row by row from the bottom left.
    pub fn split(&self, nx: usize, ny: usize) -> Vec<Rect> {
        let dx = (self.re_max - self.re_min) / nx as f64;
        let dy = (self.im_max - self.im_min) / ny as f64;
        let mut out = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                out.push(Rect {
                    re_min: self.re_min + i as f64 * dx,
                    re_max: self.re_min + (i + 1) as f64 * dx,
                    im_min: self.im_min + j as f64 * dy,
                    im_max: self.im_min + (j + 1) as f64 * dy,
                });
            }
        }
        out
    }

    /// Counter-clockwise corners starting at the bottom left.
    fn corners(&self) -> [Complex64; 4] {
        [
            Complex64::new(self.re_min, self.im_min),
            Complex64::new(self.re_max, self.im_min),
            Complex64::new(self.re_max, self.im_max),
            Complex64::new(self.re_min, self.im_max),
        ]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ZeroRecord {
    pub tau0: Complex64,
    /// `|f(τ0)|` over the local value scale.
    pub residual: f64,
    /// `|f′(τ0)|` by central difference.
    pub derivative_mag: f64,
    /// `max |f|` on a small circle around `τ0`, divided by its radius.
    pub scale: f64,
    pub multiplicity_claim: u32,
}

/// Largest phase jump tolerated between consecutive boundary samples.
const MAX_PHASE_STEP: f64 = PI / 4.0;
const MAX_BISECTIONS: u32 = 24;

struct Boundary {
    total_phase: f64,
    min_abs: f64,
    max_abs: f64,
}

fn phase_step(a: Complex64, b: Complex64) -> f64 {
    (b / a).arg()
}

/// Phase change along the segment `[za, zb]`, bisecting where the phase
/// moves too fast.
fn walk<F>(f: &F, za: Complex64, fa: Complex64, zb: Complex64, fb: Complex64, depth: u32, acc: &mut Boundary) -> Result<()>
where
    F: Fn(Complex64) -> Result<Complex64> + Sync,
{
    let d = phase_step(fa, fb);
    if d.abs() <= MAX_PHASE_STEP || depth >= MAX_BISECTIONS {
        acc.total_phase += d;
        return Ok(());
    }
    let zm = (za + zb) / 2.0;
    let fm = f(zm)?;
    acc.min_abs = acc.min_abs.min(fm.norm());
    acc.max_abs = acc.max_abs.max(fm.norm());
    walk(f, za, fa, zm, fm, depth + 1, acc)?;
    walk(f, zm, fm, zb, fb, depth + 1, acc)
}

fn boundary_phase<F>(f: &F, rect: &Rect, samples_per_edge: usize) -> Result<Boundary>
where
    F: Fn(Complex64) -> Result<Complex64> + Sync,
{
    let c = rect.corners();
    let m = samples_per_edge.max(2);
    let zs: Vec<Complex64> = (0..4)
        .flat_map(|e| {
            let (a, b) = (c[e], c[(e + 1) % 4]);
            (0..m).map(move |k| a + (b - a) * (k as f64 / m as f64))
        })
        .collect();
    let fs: Vec<Complex64> = zs.par_iter().map(|z| f(*z)).collect::<Result<_>>()?;
    let mut acc = Boundary {
        total_phase: 0.0,
        min_abs: fs.iter().map(|v| v.norm()).fold(f64::INFINITY, f64::min),
        max_abs: fs.iter().map(|v| v.norm()).fold(0.0, f64::max),
    };
    for i in 0..zs.len() {
        let j = (i + 1) % zs.len();
        walk(f, zs[i], fs[i], zs[j], fs[j], 0, &mut acc)?;
    }
    Ok(acc)
}

/// Number of zeros of `f` inside `rect`, by the argument principle.
///
/// A boundary passing within `10⁻⁸·max|f|` of a zero is pushed outward, at
/// most three times.
pub fn winding_count<F>(f: &F, rect: &Rect, samples_per_edge: usize) -> Result<i64>
where
    F: Fn(Complex64) -> Result<Complex64> + Sync,
{
    let span = (rect.re_max - rect.re_min).min(rect.im_max - rect.im_min);
    let mut cur = *rect;
    for attempt in 0..=3 {
        let b = boundary_phase(f, &cur, samples_per_edge)?;
        if b.min_abs > BOUNDARY_FLOOR * b.max_abs && b.min_abs.is_finite() {
            let w = b.total_phase / (2.0 * PI);
            let k = w.round();
            if (w - k).abs() >= 0.1 {
                return Err(Error::NonIntegerWinding { value: w });
            }
            return Ok(k as i64);
        }
        cur = rect.grown(span * 1e-3 * (attempt + 1) as f64)?;
    }
    Err(Error::BoundaryTooClose { attempts: 3 })
}

fn derivative<F>(f: &F, z: Complex64, h: f64) -> Result<Complex64>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    Ok((f(z + h)? - f(z - h)?) / (2.0 * h))
}

/// `max |f|` on eight points of the circle of radius [`SCALE_RADIUS`].
fn value_scale<F>(f: &F, z: Complex64) -> Result<f64>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    let mut m: f64 = 0.0;
    for k in 0..8 {
        let w = z + Complex64::from_polar(SCALE_RADIUS, k as f64 * PI / 4.0);
        m = m.max(f(w)?.norm());
    }
    Ok(m)
}

/// Newton's method from `seed` with a central-difference derivative, then
/// the simplicity test `|f′(τ0)| > 10⁻⁴·scale`.
pub fn refine_zero<F>(f: &F, seed: Complex64) -> Result<ZeroRecord>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    let mut z = seed;
    let mut converged = false;
    for _ in 0..80 {
        let fz = f(z)?;
        if fz.norm() == 0.0 {
            converged = true;
            break;
        }
        let d = derivative(f, z, DERIVATIVE_STEP * z.norm().max(1.0))?;
        if d.norm() == 0.0 || !d.norm().is_finite() {
            return Err(Error::NewtonFailure(format!("derivative vanished at tau = {z}")));
        }
        let mut step = fz / d;
        if step.norm() > 0.25 {
            step *= 0.25 / step.norm();
        }
        z -= step;
        if z.im <= IM_FLOOR || !z.norm().is_finite() {
            return Err(Error::NewtonFailure(format!("iterate left the half-plane from seed {seed}")));
        }
        if step.norm() < 1e-14 * z.norm().max(1.0) {
            converged = true;
            break;
        }
    }
    let vs = value_scale(f, z)?;
    let residual = f(z)?.norm() / vs;
    if !converged && residual >= NEWTON_RESIDUAL {
        return Err(Error::NewtonFailure(format!("no convergence from seed {seed}; last tau = {z}, residual {residual:e}")));
    }
    if residual >= NEWTON_RESIDUAL {
        return Err(Error::NewtonFailure(format!("residual {residual:e} at tau = {z} above {NEWTON_RESIDUAL:e}")));
    }
    let derivative_mag = derivative(f, z, DERIVATIVE_STEP)?.norm();
    let scale = vs / SCALE_RADIUS;
    if derivative_mag <= SIMPLE_THRESHOLD * scale {
        return Err(Error::SuspectedMultipleZero { tau: z.to_string(), derivative: derivative_mag, scale });
    }
    Ok(ZeroRecord { tau0: z, residual, derivative_mag, scale, multiplicity_claim: 1 })
}

/// All zeros in `rect`: winding counts on an `nx × ny` grid, recursive
/// splitting of cells holding more than one zero, Newton from the centre of
/// each single-zero cell (splitting further if Newton leaves the cell), and
/// a confirming winding count of 1 on a box of half-width `10⁻³` around each
/// result. Ordered by `(Im, Re)`.
pub fn find_zeros<F>(f: &F, rect: &Rect, nx: usize, ny: usize) -> Result<Vec<ZeroRecord>>
where
    F: Fn(Complex64) -> Result<Complex64> + Sync,
{
    let mut out: Vec<ZeroRecord> = Vec::new();
    let mut queue: Vec<(Rect, u32)> = rect.split(nx, ny).into_iter().map(|c| (c, 0)).collect();
    while let Some((cell, depth)) = queue.pop() {
        let k = winding_count(f, &cell, 16)?;
        match k {
            0 => {}
            1 => {
                let pad = 0.05 * (cell.re_max - cell.re_min).max(cell.im_max - cell.im_min);
                let z = match refine_zero(f, cell.center()) {
                    Ok(z) if cell.grown(pad).map(|g| g.contains(z.tau0)).unwrap_or(false) => z,
                    // Newton wandered off or stalled: shrink the cell so the seed gets closer
                    Ok(_) | Err(Error::NewtonFailure(_)) if depth < 10 => {
                        queue.extend(cell.split(2, 2).into_iter().map(|c| (c, depth + 1)));
                        continue;
                    }
                    Ok(z) => return Err(Error::NewtonFailure(format!("Newton left its cell, landing at {}", z.tau0))),
                    Err(e) => return Err(e),
                };
                let confirm = winding_count(f, &Rect::around(z.tau0, 1e-3)?, 8)?;
                if confirm != 1 {
                    return Err(Error::Inconsistency(format!("refined zero {} has winding {confirm}", z.tau0)));
                }
                if !out.iter().any(|o| (o.tau0 - z.tau0).norm() < 1e-7) {
                    out.push(z);
                }
            }
            k if k < 0 => return Err(Error::Inconsistency(format!("negative winding {k} for a holomorphic function"))),
            k if depth >= 12 => {
                return Err(Error::SuspectedMultipleZero { tau: cell.center().to_string(), derivative: 0.0, scale: k as f64 })
            }
            _ => queue.extend(cell.split(2, 2).into_iter().map(|c| (c, depth + 1))),
        }
    }
    out.sort_by(|a, b| (a.tau0.im, a.tau0.re).partial_cmp(&(b.tau0.im, b.tau0.re)).unwrap());
    Ok(out)
}

/// Outcome of fitting `M_{n,N}/Δ^k` as a polynomial in `j`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DegreeFit {
    pub n: usize,
    #[serde(rename = "N")]
    pub big_n: u32,
    /// Fitted `deg ℓ_{n,N}`: half the effective degree in `j`.
    pub degree: usize,
    /// Largest index with `|c_i| > 10⁻⁶ max|c|`.
    pub effective_j_degree: usize,
    /// `‖V c − F‖ / ‖F‖`.
    pub fit_residual: f64,
    /// `|c_i|` relative to the largest.
    pub coeff_profile: Vec<f64>,
    pub samples: usize,
}

/// Relative coefficient size counted as present by [`ell_degree_fit`].
pub const EFFECTIVE_DEGREE_THRESHOLD: f64 = 1e-6;

/// Rings `Im τ = 1, 1.15, 1.3` crossed with `Re τ` evenly spread over
/// `[0.05, 0.95]`; their `j` values lie near three concentric circles.
pub fn default_tau_samples(per_ring: usize) -> Vec<Complex64> {
    let mut out = Vec::new();
    for im in [1.0, 1.15, 1.3] {
        for k in 0..per_ring {
            let re = 0.05 + 0.9 * k as f64 / (per_ring - 1).max(1) as f64;
            out.push(Complex64::new(re, im));
        }
    }
    out
}

/// Fits `F = M_{n,N}/Δ^{k(n,N)}` by a polynomial of degree `2L + 4` in
/// `j` (affinely mapped into the unit disk) and reads off the degree.
pub fn ell_degree_fit<S>(n: usize, big_n: u32, tau_samples: &[Complex64], ctx: S::Ctx) -> Result<DegreeFit>
where
    S: Scalar + Send + Sync,
    S::Ctx: Send + Sync,
{
    let report = count_l(n as u64, big_n as i64)?;
    let k = delta_power(n as u64, big_n as i64);
    if report.eps != 0 || !k.is_integer() {
        return Err(Error::Domain(format!("degree fit needs eps = 0 and integral k, got eps = {}, k = {k}", report.eps)));
    }
    let k = k.to_integer() as f64;
    let ncoef = 2 * report.l as usize + 5;
    let rows: Vec<(Complex64, f64, f64)> = tau_samples
        .par_iter()
        .map(|&tau| {
            let ld = lattice_data(&Tau::<S>::from_c64(ctx, tau)?, None)?;
            let m = m_product(n, big_n, &ld)?;
            let ln_f = m.ln_abs - k * ld.delta.ln_norm();
            let arg_f = m.arg - k * ld.delta.arg();
            Ok((ld.j.to_c64(), ln_f, arg_f))
        })
        .collect::<Result<_>>()?;
    let mut js: Vec<Complex64> = rows.iter().map(|r| r.0).collect();
    js.sort_by(|a, b| (a.re, a.im).partial_cmp(&(b.re, b.im)).unwrap());
    js.dedup_by(|a, b| (*a - *b).norm() < 1e-9 * b.norm().max(1.0));
    if js.len() < 2 * (ncoef - 3) + 1 {
        return Err(Error::IllConditioned(format!(
            "{} distinct j values for {} coefficients; supply at least {}",
            js.len(),
            ncoef,
            2 * (ncoef - 3) + 1
        )));
    }
    let centre = rows.iter().map(|r| r.0).sum::<Complex64>() / rows.len() as f64;
    let radius = rows.iter().map(|r| (r.0 - centre).norm()).fold(0.0, f64::max);
    let ln_max = rows.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max);
    let m = rows.len();
    let v = DMatrix::from_fn(m, ncoef, |i, c| ((rows[i].0 - centre) / radius).powi(c as i32));
    let rhs = DVector::from_fn(m, |i, _| Complex64::from_polar((rows[i].1 - ln_max).exp(), rows[i].2));
    let svd = v.clone().svd(true, true);
    let sv = &svd.singular_values;
    let cond = sv.max() / sv.min();
    if !cond.is_finite() || cond > 1e12 {
        return Err(Error::IllConditioned(format!("Vandermonde condition number {cond:.3e}; spread the samples in j")));
    }
    let coeffs = svd.solve(&rhs, 0.0).map_err(|e| Error::IllConditioned(e.to_string()))?;
    let fit_residual = (&v * &coeffs - &rhs).norm() / rhs.norm();
    let cmax = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let coeff_profile: Vec<f64> = coeffs.iter().map(|c| c.norm() / cmax).collect();
    let effective_j_degree = coeff_profile.iter().rposition(|&c| c > EFFECTIVE_DEGREE_THRESHOLD).unwrap_or(0);
    Ok(DegreeFit {
        n,
        big_n,
        degree: effective_j_degree.div_ceil(2),
        effective_j_degree,
        fit_residual,
        coeff_profile,
        samples: m,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elliptic::TorsionPoint;
    use crate::premodular::z_n;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn z_fn(n: usize, pt: TorsionPoint) -> impl Fn(Complex64) -> Result<Complex64> + Sync {
        move |tau| {
            let ld = lattice_data(&Tau::<Complex64>::from_c64((), tau)?, None)?;
            Ok(z_n(n, &pt, &ld)?.value)
        }
    }

    #[test]
    fn synthetic_counts() {
        let star = c(0.4, 1.3);
        let f = move |z: Complex64| Ok((z - star) * (z * 0.3).exp());
        let rect = Rect::new(0.0, 1.0, 1.0, 2.0).unwrap();
        assert_eq!(winding_count(&f, &rect, 16).unwrap(), 1);
        assert_eq!(winding_count(&f, &rect, 32).unwrap(), 1);
        let g = |z: Complex64| Ok((z - c(0.2, 1.2)) * (z - c(0.7, 1.8)) * (z - c(0.5, 1.5)));
        let lo = Rect::new(0.0, 1.0, 1.0, 1.55).unwrap();
        let hi = Rect::new(0.0, 1.0, 1.55, 2.0).unwrap();
        assert_eq!(winding_count(&g, &rect, 16).unwrap(), 3);
        assert_eq!(winding_count(&g, &lo, 16).unwrap() + winding_count(&g, &hi, 16).unwrap(), 3);
    }

    #[test]
    fn boundary_zero_is_nudged() {
        let f = |z: Complex64| Ok(z - c(1.0, 1.5));
        let rect = Rect::new(0.0, 1.0, 1.0, 2.0).unwrap();
        assert_eq!(winding_count(&f, &rect, 16).unwrap(), 1);
    }

    #[test]
    fn refine_sine() {
        let f = |z: Complex64| Ok((PI * (z - c(0.0, 2.0))).sin());
        let z = refine_zero(&f, c(0.05, 2.03)).unwrap();
        assert!((z.tau0 - c(0.0, 2.0)).norm() < 1e-9);
        assert_eq!(z.multiplicity_claim, 1);
    }

    #[test]
    fn double_zero_is_reported() {
        let f = |z: Complex64| Ok((z - c(0.3, 1.0)).powi(2));
        assert!(matches!(refine_zero(&f, c(0.31, 1.01)), Err(Error::SuspectedMultipleZero { .. }) | Err(Error::NewtonFailure(_))));
    }

    #[test]
    fn no_zeros_high_up() {
        let f = z_fn(1, TorsionPoint::ratio(1, 4, 0, 1));
        assert_eq!(winding_count(&f, &Rect::new(0.1, 0.9, 5.0, 9.0).unwrap(), 16).unwrap(), 0);
    }

    #[test]
    fn hecke_zero_at_third_points() {
        let f = z_fn(1, TorsionPoint::ratio(1, 3, 1, 3));
        let zs = find_zeros(&f, &Rect::new(0.0, 2.0, 0.3, 3.0).unwrap(), 6, 6).unwrap();
        assert!(!zs.is_empty());
        for z in &zs {
            assert!(z.residual < NEWTON_RESIDUAL);
            assert!(z.derivative_mag > SIMPLE_THRESHOLD * z.scale);
            assert_eq!(winding_count(&f, &Rect::around(z.tau0, 1e-3).unwrap(), 8).unwrap(), 1);
        }
    }

    #[test]
    fn degree_fits() {
        let taus = default_tau_samples(12);
        for (n, big_n) in [(2usize, 4u32), (2, 5), (1, 4)] {
            let fit = ell_degree_fit::<Complex64>(n, big_n, &taus, ()).unwrap();
            let want = count_l(n as u64, big_n as i64).unwrap().l as usize;
            assert_eq!(fit.degree, want, "{fit:?}");
            assert_eq!(fit.effective_j_degree, 2 * want, "{fit:?}");
            assert!(fit.fit_residual < 1e-6, "{fit:?}");
        }
    }

    #[test]
    fn degree_fit_refuses_eps_case() {
        assert!(ell_degree_fit::<Complex64>(1, 3, &default_tau_samples(12), ()).is_err());
    }
}
