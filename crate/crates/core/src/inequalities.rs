//! Pointwise inequalities of the Koranyi metric, with explicit margins.
//!
//! Every checker returns `margin = lhs - rhs`, oriented so that a
//! nonnegative margin means the inequality holds, and a `scale` against
//! which floating-point slack is measured.

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::heis::{self, affine_midpoint, distance, nh, symplectic, CVector, HPoint};
use crate::sampling::{
    gaussian_vector, generic_point, near_geodesic_point, near_vertical_point, stream_rng,
};

/// The arguments a checker was evaluated on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Inputs {
    Points(Vec<HPoint>),
    Vectors(Vec<CVector>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginReport {
    pub inputs: Inputs,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub scale: f64,
}

impl MarginReport {
    fn new(inputs: Inputs, lhs: f64, rhs: f64, scale: f64) -> Self {
        MarginReport {
            inputs,
            lhs,
            rhs,
            margin: lhs - rhs,
            scale,
        }
    }

    /// `margin / scale`, or the raw margin when the scale vanishes.
    pub fn relative(&self) -> f64 {
        if self.scale > 0.0 {
            self.margin / self.scale
        } else {
            self.margin
        }
    }
}

/// Result of a checker whose hypotheses can fail.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Gated<T> {
    Applicable(T),
    NotApplicable { reason: String },
}

impl<T> Gated<T> {
    pub fn applicable(self) -> Option<T> {
        match self {
            Gated::Applicable(t) => Some(t),
            Gated::NotApplicable { .. } => None,
        }
    }
}

/// Forks with a larger gap are outside the regime of the fork lemmas.
pub const FORK_DELTA_CAP: f64 = 1e-4;

fn d4(a: &HPoint, b: &HPoint) -> Result<f64> {
    Ok(distance(a, b)?.powi(4))
}

fn nh4(a: &HPoint, b: &HPoint) -> Result<f64> {
    Ok(nh(&heis::difference(a, b)?).powi(4))
}

/// `½(d(u,v)⁴ + d(v,w)⁴) ≥ (d(u,w)/2)⁴ + d((u+w)/2, v)⁴ + 2⁻⁴ NH(u⁻¹w)⁴`.
pub fn check_midpoint(u: &HPoint, v: &HPoint, w: &HPoint) -> Result<MarginReport> {
    let (uv, vw, uw) = (d4(u, v)?, d4(v, w)?, d4(u, w)?);
    let mid = affine_midpoint(u, w)?;
    let lhs = 0.5 * (uv + vw);
    let rhs = uw / 16.0 + d4(&mid, v)? + nh4(u, w)? / 16.0;
    let inputs = Inputs::Points(vec![u.clone(), v.clone(), w.clone()]);
    Ok(MarginReport::new(inputs, lhs, rhs, uv.max(vw).max(uw)))
}

/// `32 (d((u+w)/2, (v+w)/2)⁴ + NH(u⁻¹w)⁴ + NH(v⁻¹w)⁴) ≥ d(u,v)⁴`.
pub fn check_shrink(u: &HPoint, v: &HPoint, w: &HPoint) -> Result<MarginReport> {
    let (uv, uw, vw) = (d4(u, v)?, d4(u, w)?, d4(v, w)?);
    let lhs =
        32.0 * (d4(&affine_midpoint(u, w)?, &affine_midpoint(v, w)?)? + nh4(u, w)? + nh4(v, w)?);
    let inputs = Inputs::Points(vec![u.clone(), v.clone(), w.clone()]);
    Ok(MarginReport::new(inputs, lhs, uv, uv.max(uw).max(vw)))
}

/// `½(2d(x,y)⁴ + d(y,w)⁴ + d(y,z)⁴) ≥ (d(x,w)⁴ + d(x,z)⁴)/2⁴ + d(z,w)⁴/512`.
pub fn check_four_point(x: &HPoint, y: &HPoint, z: &HPoint, w: &HPoint) -> Result<MarginReport> {
    let (xy, yw, yz) = (d4(x, y)?, d4(y, w)?, d4(y, z)?);
    let (xw, xz, zw) = (d4(x, w)?, d4(x, z)?, d4(z, w)?);
    let lhs = 0.5 * (2.0 * xy + yw + yz);
    let rhs = (xw + xz) / 16.0 + zw / 512.0;
    let scale = [xy, yw, yz, xw, xz, zw].into_iter().fold(0.0, f64::max);
    let inputs = Inputs::Points(vec![x.clone(), y.clone(), z.clone(), w.clone()]);
    Ok(MarginReport::new(inputs, lhs, rhs, scale))
}

/// `‖x‖‖y‖|sin θ| ≥ |ω(x,y)|` with `θ` the exterior angle under the real
/// inner product. The left side is the parallelogram area, summed over
/// 2×2 minors of the real coordinates (Lagrange's identity) so that nearly
/// parallel vectors do not lose precision to cancellation.
pub fn check_symplectic_projection(x: &CVector, y: &CVector) -> Result<MarginReport> {
    let omega = symplectic(x, y)?;
    let (nx, ny) = (x.norm_sqr(), y.norm_sqr());
    if nx == 0.0 || ny == 0.0 {
        return Err(Error::ZeroVector);
    }
    let (a, b) = (x.to_interleaved(), y.to_interleaved());
    let mut area2 = 0.0;
    for i in 0..a.len() {
        for j in i + 1..a.len() {
            let m = a[i] * b[j] - a[j] * b[i];
            area2 += m * m;
        }
    }
    let area = area2.sqrt();
    let inputs = Inputs::Vectors(vec![x.clone(), y.clone()]);
    Ok(MarginReport::new(
        inputs,
        area,
        omega.abs(),
        (nx * ny).sqrt(),
    ))
}

/// Distortion excess of `a ↦ 1, b ↦ 2, c ↦ 3` onto the path `P_3` after the
/// best rescaling: `max ratio / min ratio - 1`.
fn p3_gap(a: &HPoint, b: &HPoint, c: &HPoint) -> Result<f64> {
    let ratios = [distance(a, b)?, distance(b, c)?, 0.5 * distance(a, c)?];
    let hi = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(if lo > 0.0 {
        hi / lo - 1.0
    } else {
        f64::INFINITY
    })
}

/// Smallest `δ` such that `{z0, z1, z2}` and `{z0, z1, z2p}` are both
/// `(1+δ)`-bi-Lipschitz to `P_3` with `z0, z1` at positions 1, 2 and the tip
/// at position 3.
pub fn fork_gap(z0: &HPoint, z1: &HPoint, z2: &HPoint, z2p: &HPoint) -> Result<f64> {
    if distance(z0, z1)? == 0.0 {
        return Err(Error::DegenerateFork);
    }
    Ok(p3_gap(z0, z1, z2)?.max(p3_gap(z0, z1, z2p)?))
}

/// Tip collapse for a δ-fork: `2000 δ^{1/2} d(z0,z1) ≥ d(z2,z2p)`, provided
/// `δ < 1e-4` and the tips are not too vertical, `NH(z2⁻¹z2p) < ½ d(z2,z2p)`.
pub fn check_fork_collapse(
    z0: &HPoint,
    z1: &HPoint,
    z2: &HPoint,
    z2p: &HPoint,
) -> Result<Gated<MarginReport>> {
    let delta = fork_gap(z0, z1, z2, z2p)?;
    if !(delta < FORK_DELTA_CAP) {
        return Ok(Gated::NotApplicable {
            reason: format!("fork gap {delta:e} is not below {FORK_DELTA_CAP:e}"),
        });
    }
    let tips = distance(z2, z2p)?;
    let vertical = nh(&heis::difference(z2, z2p)?);
    if tips > 0.0 && vertical >= 0.5 * tips {
        return Ok(Gated::NotApplicable {
            reason: "tips differ mostly in the vertical direction".into(),
        });
    }
    let base = distance(z0, z1)?;
    Ok(Gated::Applicable(MarginReport::new(
        Inputs::Points(vec![z0.clone(), z1.clone(), z2.clone(), z2p.clone()]),
        2000.0 * delta.sqrt() * base,
        tips,
        base,
    )))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmallAngleReport {
    pub delta: f64,
    /// Exterior angle between the horizontal parts.
    pub theta: f64,
    pub eta: f64,
    pub nu: f64,
    /// `400 δ^{1/2} - |θ|`.
    pub angle_margin: f64,
    /// `20 δ^{1/4} - η`.
    pub eta_margin: f64,
    /// `20 δ^{1/4} - ν`.
    pub nu_margin: f64,
}

impl SmallAngleReport {
    pub fn min_margin(&self) -> f64 {
        self.angle_margin.min(self.eta_margin).min(self.nu_margin)
    }
}

/// Straightness of `{z, 0, zp}` when it is nearly isometric to `P_3`.
pub fn check_small_angle(z: &HPoint, zp: &HPoint) -> Result<Gated<SmallAngleReport>> {
    let origin = HPoint::identity(z.dim())?;
    if distance(z, &origin)? == 0.0 {
        return Err(Error::DegenerateFork);
    }
    let delta = p3_gap(z, &origin, zp)?;
    if !(delta < FORK_DELTA_CAP) {
        return Ok(Gated::NotApplicable {
            reason: format!("gap {delta:e} is not below {FORK_DELTA_CAP:e}"),
        });
    }
    let (x, y) = (&z.horizontal, &zp.horizontal);
    let (nx, ny) = (x.norm(), y.norm());
    if nx == 0.0 || ny == 0.0 {
        return Err(Error::ZeroVector);
    }
    let cos = (x.real_dot(y)? / (nx * ny)).clamp(-1.0, 1.0);
    // exterior angle: zero when x and y point in opposite directions
    let theta = std::f64::consts::PI - cos.acos();
    let eta = nh(z) / heis::koranyi_norm(z);
    let nu = nh(zp) / heis::koranyi_norm(zp);
    let root = delta.sqrt();
    Ok(Gated::Applicable(SmallAngleReport {
        delta,
        theta,
        eta,
        nu,
        angle_margin: 400.0 * root - theta.abs(),
        eta_margin: 20.0 * root.sqrt() - eta,
        nu_margin: 20.0 * root.sqrt() - nu,
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollapseSearch {
    pub pair: (usize, usize),
    pub omega: f64,
    pub rounds: usize,
    pub pairs_evaluated: u64,
    /// Exhaustive minimum, when the input is small enough to afford it.
    pub brute_force: Option<((usize, usize), f64)>,
    /// Whether the vector count and norms meet the sizes under which a pair
    /// with `|ω| ≤ ℓ²/4` is guaranteed for large `ℓ`.
    pub hypotheses_hold: bool,
    pub bound: f64,
}

/// Inputs up to this size are also searched exhaustively.
pub const BRUTE_FORCE_LIMIT: usize = 4096;

fn better(a: ((usize, usize), f64), b: ((usize, usize), f64)) -> bool {
    a.1 < b.1 || (a.1 == b.1 && a.0 < b.0)
}

/// Finds a pair with small `|ω(z_i, z_j)|` by repeated symplectic bucketing.
///
/// Each round takes the first remaining vector `v`, compares it with every
/// other remaining vector, and projects the remaining vectors onto the
/// complex line through the part of `v` orthogonal to earlier lines. They are
/// grouped by the argument of that projection into arcs of width
/// `(log2 ℓ)^{-4}`, and the fullest arc carries over to the next round, for
/// at most `50 (log2 ℓ)²` rounds. Pairs in the last group are all compared.
pub fn symplectic_collapse_search(vectors: &[CVector], ell: f64) -> Result<CollapseSearch> {
    let n = vectors.len();
    if n < 2 {
        return Err(Error::TooFewPoints { need: 2, got: n });
    }
    if !(ell > 1.0) {
        return Err(Error::Invalid(format!("ell must exceed 1, got {ell}")));
    }
    let dim = vectors[0].dim();
    if let Some(v) = vectors.iter().find(|v| v.dim() != dim) {
        return Err(Error::DimensionMismatch {
            left: dim,
            right: v.dim(),
        });
    }
    let log = ell.log2();
    let width = log.powi(-4);
    let arcs = (std::f64::consts::TAU / width).ceil().max(1.0) as usize;
    let max_rounds = (50.0 * log * log).ceil().max(1.0) as usize;

    let omega = |i: usize, j: usize| symplectic(&vectors[i], &vectors[j]).expect("same dimension");
    let mut best = ((usize::MAX, usize::MAX), f64::INFINITY);
    let mut evaluated = 0u64;
    let mut consider = |i: usize, j: usize, best: &mut ((usize, usize), f64)| {
        let pair = (i.min(j), i.max(j));
        let cand = (pair, omega(i, j).abs());
        evaluated += 1;
        if better(cand, *best) {
            *best = cand;
        }
    };

    let mut lines: Vec<Vec<Complex64>> = Vec::new();
    let mut remaining: Vec<usize> = (0..n).collect();
    let mut rounds = 0;
    while remaining.len() >= 2 && rounds < max_rounds {
        rounds += 1;
        let v = remaining[0];
        for &u in &remaining[1..] {
            consider(v, u, &mut best);
        }
        // complex Gram-Schmidt against earlier lines
        let mut q: Vec<Complex64> = vectors[v].entries().to_vec();
        for e in &lines {
            let c: Complex64 = e.iter().zip(&q).map(|(a, b)| a.conj() * b).sum();
            for (qi, ei) in q.iter_mut().zip(e) {
                *qi -= c * ei;
            }
        }
        let norm = q.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        let rest = remaining[1..].to_vec();
        if norm <= 1e-12 * vectors[v].norm() {
            remaining = rest;
            continue;
        }
        let e: Vec<Complex64> = q.iter().map(|c| c / norm).collect();
        let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); arcs];
        for u in rest {
            let c: Complex64 = e
                .iter()
                .zip(vectors[u].entries())
                .map(|(a, b)| a.conj() * b)
                .sum();
            let angle = c.arg().rem_euclid(std::f64::consts::TAU);
            let slot = ((angle / width) as usize).min(arcs - 1);
            buckets[slot].push(u);
        }
        lines.push(e);
        remaining = buckets
            .into_iter()
            .reduce(|a, b| if b.len() > a.len() { b } else { a })
            .unwrap_or_default();
    }
    for (a, &i) in remaining.iter().enumerate() {
        for &j in &remaining[a + 1..] {
            consider(i, j, &mut best);
        }
    }
    if best.1.is_infinite() {
        // every round dropped its vector without comparing a pair
        consider(0, 1, &mut best);
    }

    let brute_force = (n <= BRUTE_FORCE_LIMIT).then(|| {
        (1..n)
            .into_par_iter()
            .map(|j| {
                (0..j).map(|i| ((i, j), omega(i, j).abs())).fold(
                    ((usize::MAX, usize::MAX), f64::INFINITY),
                    |a, b| {
                        if better(b, a) {
                            b
                        } else {
                            a
                        }
                    },
                )
            })
            .reduce(
                || ((usize::MAX, usize::MAX), f64::INFINITY),
                |a, b| if better(b, a) { b } else { a },
            )
    });
    let cap = ell * log.sqrt();
    let needed = 2f64.powf(ell / 2.0) / (16.0 * log);
    let hypotheses_hold = n as f64 >= needed && vectors.iter().all(|v| v.norm() <= cap);
    Ok(CollapseSearch {
        pair: best.0,
        omega: best.1,
        rounds,
        pairs_evaluated: evaluated,
        brute_force,
        hypotheses_hold,
        bound: ell * ell / 4.0,
    })
}

/// The four unconditional inequalities covered by [`run_suite`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Checker {
    Midpoint,
    Shrink,
    FourPoint,
    SymplecticProjection,
}

impl Checker {
    pub const ALL: [Checker; 4] = [
        Checker::Midpoint,
        Checker::Shrink,
        Checker::FourPoint,
        Checker::SymplecticProjection,
    ];

    /// Violations are margins below `-tolerance · scale`.
    pub fn tolerance(self) -> f64 {
        match self {
            Checker::SymplecticProjection => 1e-12,
            _ => 1e-9,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Checker::Midpoint => "midpoint",
            Checker::Shrink => "shrink",
            Checker::FourPoint => "four_point",
            Checker::SymplecticProjection => "symplectic_projection",
        }
    }
}

/// Random points in `H_d` from a mix of regimes: generic points, points
/// close to one horizontal line, and nearly vertical points, each regime
/// moved by a random left translation.
fn sample_points<R: Rng + ?Sized>(rng: &mut R, dim: usize, count: usize) -> Vec<HPoint> {
    let regime = rng.random_range(0..3);
    let eps = 10f64.powf(-rng.random_range(0.0..8.0));
    let direction = gaussian_vector(rng, dim);
    let pts: Vec<HPoint> = (0..count)
        .map(|_| match regime {
            0 => generic_point(rng, dim),
            1 => near_geodesic_point(rng, &direction, eps),
            _ => near_vertical_point(rng, dim, eps),
        })
        .collect();
    if regime == 0 {
        return pts;
    }
    let shift = generic_point(rng, dim);
    pts.iter()
        .map(|p| heis::product(&shift, p).expect("same dimension"))
        .collect()
}

fn sample_vectors<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> (CVector, CVector) {
    let x = gaussian_vector(rng, dim);
    let y = match rng.random_range(0..3) {
        0 => gaussian_vector(rng, dim),
        // inside the complex line of x, where equality holds
        1 => {
            let (a, b): (f64, f64) = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
            let scaled = x
                .entries()
                .iter()
                .map(|c| c * Complex64::new(a, b))
                .collect();
            CVector::new(scaled).expect("positive dimension")
        }
        _ => {
            let eps = 10f64.powf(-rng.random_range(0.0..8.0));
            let noise = gaussian_vector(rng, dim).scale(eps);
            let rotated = x.entries().iter().map(|c| c * Complex64::i()).collect();
            CVector::new(rotated)
                .expect("positive dimension")
                .add(&noise)
                .expect("same dimension")
        }
    };
    (x, y)
}

fn evaluate<R: Rng + ?Sized>(checker: Checker, rng: &mut R, dim: usize) -> MarginReport {
    let mut run = || -> Result<MarginReport> {
        match checker {
            Checker::Midpoint => {
                let p = sample_points(rng, dim, 3);
                check_midpoint(&p[0], &p[1], &p[2])
            }
            Checker::Shrink => {
                let p = sample_points(rng, dim, 3);
                check_shrink(&p[0], &p[1], &p[2])
            }
            Checker::FourPoint => {
                let p = sample_points(rng, dim, 4);
                check_four_point(&p[0], &p[1], &p[2], &p[3])
            }
            Checker::SymplecticProjection => {
                let (x, y) = sample_vectors(rng, dim);
                check_symplectic_projection(&x, &y)
            }
        }
    };
    run().expect("samplers produce valid inputs")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub checker: Checker,
    pub dims: Vec<usize>,
    pub samples: u64,
    pub seed: u64,
    pub tolerance: f64,
    pub violations: u64,
    /// Smallest `margin / scale` seen.
    pub worst_relative_margin: f64,
}

const SUITE_BATCH: u64 = 4096;

/// Runs `samples` seeded random instances of `checker`, split evenly across
/// `dims`.
pub fn run_suite(checker: Checker, samples: u64, seed: u64, dims: &[usize]) -> Result<SuiteReport> {
    if dims.is_empty() || dims.contains(&0) {
        return Err(Error::EmptyVector);
    }
    let per_dim = samples / dims.len() as u64;
    let extra = samples % dims.len() as u64;
    let tol = checker.tolerance();
    let mut jobs = Vec::new();
    for (k, &dim) in dims.iter().enumerate() {
        let count = per_dim + u64::from((k as u64) < extra);
        for b in 0..count.div_ceil(SUITE_BATCH) {
            let size = SUITE_BATCH.min(count - b * SUITE_BATCH);
            jobs.push((dim, ((k as u64) << 40) | b, size));
        }
    }
    let salt = checker as u64;
    let results: Vec<(u64, f64)> = jobs
        .into_par_iter()
        .map(|(dim, stream, size)| {
            let mut rng = stream_rng(seed ^ (salt << 56), stream);
            let mut bad = 0;
            let mut worst = f64::INFINITY;
            for _ in 0..size {
                let r = evaluate(checker, &mut rng, dim);
                if r.margin < -tol * r.scale {
                    bad += 1;
                }
                worst = worst.min(r.relative());
            }
            (bad, worst)
        })
        .collect();
    let (violations, worst) = results
        .into_iter()
        .fold((0, f64::INFINITY), |(v, w), (b, x)| (v + b, w.min(x)));
    Ok(SuiteReport {
        checker,
        dims: dims.to_vec(),
        samples,
        seed,
        tolerance: tol,
        violations,
        worst_relative_margin: worst,
    })
}

fn log_uniform<R: Rng + ?Sized>(rng: &mut R, lo_exp: f64, hi_exp: f64) -> f64 {
    10f64.powf(rng.random_range(lo_exp..hi_exp))
}

fn unit_direction<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> CVector {
    let g = gaussian_vector(rng, dim);
    let n = g.norm();
    g.scale(1.0 / n)
}

/// Moves the horizontal part by `eps_h · |a|` and the center by
/// `eps_c · |a|²` in random directions.
fn perturb<R: Rng + ?Sized>(rng: &mut R, a: &CVector, eps_h: f64, eps_c: f64) -> HPoint {
    let r = a.norm();
    let noise = unit_direction(rng, a.dim()).scale(eps_h * r);
    let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    HPoint::new(a.add(&noise).expect("same dimension"), sign * eps_c * r * r)
}

/// A δ-fork obtained by perturbing the tips of the horizontal geodesic
/// `-a, 0, a`, then moved by a random left translation.
pub fn synthetic_fork<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> [HPoint; 4] {
    let a = unit_direction(rng, dim).scale(rng.random_range(0.5..2.0));
    let tip = |rng: &mut R| {
        let eps_h = log_uniform(rng, -8.0, -1.0);
        let eps_c = log_uniform(rng, -16.0, -2.0);
        perturb(rng, &a, eps_h, eps_c)
    };
    let z2 = tip(rng);
    let z2p = if rng.random_bool(0.5) {
        tip(rng)
    } else {
        // a short, nearly horizontal step away from the first tip
        let len = a.norm() * log_uniform(rng, -8.0, -1.0);
        let step = unit_direction(rng, dim).scale(len);
        let lift = rng.random_range(-0.2..0.2) * len * len;
        heis::product(&z2, &HPoint::new(step, lift)).expect("same dimension")
    };
    let shift = generic_point(rng, dim);
    let base = [
        HPoint::new(a.neg(), 0.0),
        HPoint::identity(dim).expect("positive dimension"),
        z2,
        z2p,
    ];
    base.map(|z| heis::product(&shift, &z).expect("same dimension"))
}

/// Endpoints `z, zp` of a perturbed horizontal geodesic through the
/// identity.
pub fn synthetic_angle<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> [HPoint; 2] {
    let a = unit_direction(rng, dim).scale(rng.random_range(0.5..2.0));
    let end = |rng: &mut R, a: &CVector| {
        let eps_h = log_uniform(rng, -8.0, -1.0);
        let eps_c = log_uniform(rng, -16.0, -2.0);
        perturb(rng, a, eps_h, eps_c)
    };
    let z = end(rng, &a);
    let zp = end(rng, &a.neg());
    [z, zp]
}

/// Fork gaps outside this range are not counted by [`run_fork_trials`].
pub const FORK_TRIAL_RANGE: (f64, f64) = (1e-8, 1e-4);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForkTrialReport {
    pub trials: u64,
    pub seed: u64,
    pub dims: Vec<usize>,
    /// Collapse checks whose gap lies in range and whose hypotheses hold.
    pub collapse_applicable: u64,
    pub collapse_failures: u64,
    pub worst_collapse_margin: f64,
    pub angle_applicable: u64,
    pub angle_failures: u64,
    pub worst_angle_margin: f64,
}

fn in_trial_range(delta: f64) -> bool {
    (FORK_TRIAL_RANGE.0..=FORK_TRIAL_RANGE.1).contains(&delta)
}

/// Runs `trials` seeded fork families through both fork checkers. Trial `i`
/// uses dimension `dims[i % dims.len()]` and its own random stream.
pub fn run_fork_trials(trials: u64, seed: u64, dims: &[usize]) -> Result<ForkTrialReport> {
    if dims.is_empty() || dims.contains(&0) {
        return Err(Error::EmptyVector);
    }
    struct Tally {
        collapse: (u64, u64, f64),
        angle: (u64, u64, f64),
    }
    let tallies: Vec<Tally> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let dim = dims[(i % dims.len() as u64) as usize];
            let mut rng = stream_rng(seed, i);
            let [z0, z1, z2, z2p] = synthetic_fork(&mut rng, dim);
            let mut t = Tally {
                collapse: (0, 0, f64::INFINITY),
                angle: (0, 0, f64::INFINITY),
            };
            let delta = fork_gap(&z0, &z1, &z2, &z2p).expect("distinct base points");
            if in_trial_range(delta) {
                if let Some(r) = check_fork_collapse(&z0, &z1, &z2, &z2p)
                    .expect("valid fork")
                    .applicable()
                {
                    t.collapse = (1, u64::from(r.margin < 0.0), r.margin / r.scale);
                }
            }
            let [z, zp] = synthetic_angle(&mut rng, dim);
            if let Some(r) = check_small_angle(&z, &zp)
                .expect("valid triple")
                .applicable()
            {
                if in_trial_range(r.delta) {
                    let m = r.min_margin();
                    t.angle = (1, u64::from(m < 0.0), m);
                }
            }
            t
        })
        .collect();
    let mut report = ForkTrialReport {
        trials,
        seed,
        dims: dims.to_vec(),
        collapse_applicable: 0,
        collapse_failures: 0,
        worst_collapse_margin: f64::INFINITY,
        angle_applicable: 0,
        angle_failures: 0,
        worst_angle_margin: f64::INFINITY,
    };
    for t in tallies {
        report.collapse_applicable += t.collapse.0;
        report.collapse_failures += t.collapse.1;
        report.worst_collapse_margin = report.worst_collapse_margin.min(t.collapse.2);
        report.angle_applicable += t.angle.0;
        report.angle_failures += t.angle.1;
        report.worst_angle_margin = report.worst_angle_margin.min(t.angle.2);
    }
    Ok(report)
}

/// A seeded random input for [`symplectic_collapse_search`]: `ell` in
/// `4..=32`, between 2 and `max_n` vectors in dimension 1, 2, 4 or 8, with
/// norms spread up to 1.5 times the norm bound `ell (log2 ell)^{1/2}`.
pub fn collapse_instance(seed: u64, index: u64, max_n: usize) -> (Vec<CVector>, f64) {
    let mut rng = stream_rng(seed, index);
    let ell = f64::from(rng.random_range(4u32..=32));
    let n = rng.random_range(2..=max_n.max(2));
    let dim = [1, 2, 4, 8][rng.random_range(0..4)];
    let cap = ell * ell.log2().sqrt() * [0.5, 1.0, 1.5][rng.random_range(0..3)];
    let vectors = (0..n)
        .map(|_| unit_direction(&mut rng, dim).scale(cap * rng.random::<f64>().sqrt()))
        .collect();
    (vectors, ell)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn real(x: f64, y: f64) -> HPoint {
        HPoint::from_real(&[x], &[y], 0.0).unwrap()
    }

    #[test]
    fn midpoint_examples() {
        let o = HPoint::identity(1).unwrap();
        assert_eq!(check_midpoint(&o, &o, &o).unwrap().margin, 0.0);
        let v = HPoint::from_real(&[0.3], &[-1.2], 0.7).unwrap();
        assert_abs_diff_eq!(
            check_midpoint(&o, &v, &o).unwrap().margin,
            0.0,
            epsilon = 1e-12
        );
        let r = check_midpoint(&real(-1.0, 0.0), &o, &real(1.0, 0.0)).unwrap();
        assert_abs_diff_eq!(r.margin, 0.0, epsilon = 1e-12);
        let bad = HPoint::identity(2).unwrap();
        assert!(matches!(
            check_midpoint(&o, &bad, &o),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn shrink_examples() {
        let o = HPoint::identity(1).unwrap();
        let r = check_shrink(&real(1.0, 0.0), &real(-1.0, 0.0), &o).unwrap();
        assert_abs_diff_eq!(r.margin, 16.0, epsilon = 1e-12);
        let u = HPoint::from_real(&[0.5], &[0.1], 2.0).unwrap();
        assert!(check_shrink(&u, &u, &o).unwrap().margin >= 0.0);
    }

    #[test]
    fn four_point_examples() {
        let o = HPoint::identity(2).unwrap();
        assert_eq!(check_four_point(&o, &o, &o, &o).unwrap().margin, 0.0);
        let z = HPoint::from_real(&[1.0, 0.5], &[0.0, -0.3], 0.4).unwrap();
        let r = check_four_point(&o, &o, &z, &z).unwrap();
        let d4 = distance(&o, &z).unwrap().powi(4);
        assert_abs_diff_eq!(r.margin, 7.0 / 8.0 * d4, epsilon = 1e-12);
    }

    #[test]
    fn projection_examples() {
        let x = CVector::new(vec![Complex64::new(1.0, 0.0)]).unwrap();
        let y = CVector::new(vec![Complex64::new(0.0, 1.0)]).unwrap();
        assert_abs_diff_eq!(check_symplectic_projection(&x, &x).unwrap().margin, 0.0);
        let r = check_symplectic_projection(&x, &y).unwrap();
        assert_abs_diff_eq!(r.lhs, 1.0);
        assert_abs_diff_eq!(r.margin, 0.0);
        let zero = CVector::zeros(1).unwrap();
        assert_eq!(
            check_symplectic_projection(&x, &zero),
            Err(Error::ZeroVector)
        );
    }

    #[test]
    fn fork_gap_examples() {
        let (a, o, b) = (
            real(-1.0, 0.0),
            HPoint::identity(1).unwrap(),
            real(1.0, 0.0),
        );
        assert_abs_diff_eq!(fork_gap(&a, &o, &b, &b).unwrap(), 0.0, epsilon = 1e-12);
        let mut last = f64::INFINITY;
        for eps in [1e-1, 1e-2, 1e-3, 1e-4] {
            let tip = real(1.0, eps);
            let d = fork_gap(&a, &o, &b, &tip).unwrap();
            assert!(d > 0.0 && d < last);
            assert_eq!(d, fork_gap(&a, &o, &tip, &b).unwrap());
            last = d;
        }
        assert_eq!(fork_gap(&o, &o, &a, &b), Err(Error::DegenerateFork));
    }

    #[test]
    fn fork_collapse_examples() {
        let (a, o, b) = (
            real(-1.0, 0.0),
            HPoint::identity(1).unwrap(),
            real(1.0, 0.0),
        );
        let same = check_fork_collapse(&a, &o, &b, &b)
            .unwrap()
            .applicable()
            .unwrap();
        assert!(same.margin >= 0.0);
        let up = HPoint::from_real(&[1.0], &[0.0], 1e-6).unwrap();
        let down = HPoint::from_real(&[1.0], &[0.0], -1e-6).unwrap();
        assert!(check_fork_collapse(&a, &o, &up, &down)
            .unwrap()
            .applicable()
            .is_none());
        let far = real(1.0, 0.5);
        assert!(check_fork_collapse(&a, &o, &b, &far)
            .unwrap()
            .applicable()
            .is_none());
    }

    #[test]
    fn small_angle_examples() {
        let r = check_small_angle(&real(1.0, 0.0), &real(-1.0, 0.0))
            .unwrap()
            .applicable()
            .unwrap();
        assert_abs_diff_eq!(r.delta, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r.theta, 0.0, epsilon = 1e-7);
        assert_eq!((r.eta, r.nu), (0.0, 0.0));
        assert!(r.min_margin() >= -1e-7);

        let lifted = HPoint::from_real(&[1.0], &[0.0], 1e-6).unwrap();
        let r = check_small_angle(&lifted, &real(-1.0, 0.0))
            .unwrap()
            .applicable()
            .unwrap();
        assert!(r.min_margin() >= 0.0);
        assert!(check_small_angle(&real(1.0, 0.0), &real(0.0, 1.0))
            .unwrap()
            .applicable()
            .is_none());
    }

    #[test]
    fn collapse_search_examples() {
        let e = |k: usize| {
            let mut v = vec![Complex64::new(0.0, 0.0); 3];
            v[k] = Complex64::new(1.0, 0.0);
            CVector::new(v).unwrap()
        };
        let r = symplectic_collapse_search(&[e(0), e(1), e(2)], 8.0).unwrap();
        assert_eq!(r.omega, 0.0);

        let one = CVector::new(vec![Complex64::new(1.0, 0.0)]).unwrap();
        let i = CVector::new(vec![Complex64::new(0.0, 1.0)]).unwrap();
        let r = symplectic_collapse_search(&[one.clone(), i], 8.0).unwrap();
        assert_eq!(r.pair, (0, 1));
        assert_abs_diff_eq!(r.omega, 1.0);
        assert_eq!(r.brute_force, Some(((0, 1), 1.0)));

        assert!(symplectic_collapse_search(&[one], 8.0).is_err());
    }

    #[test]
    fn suites_are_reproducible() {
        let a = run_suite(Checker::Midpoint, 3000, 5, &[1, 2]).unwrap();
        let b = run_suite(Checker::Midpoint, 3000, 5, &[1, 2]).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.violations, 0);
        assert!(run_suite(Checker::Shrink, 10, 1, &[]).is_err());
    }
}
