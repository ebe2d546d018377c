//! Markov `p`-convexity functional.
//!
//! For a chain `{Z_t}` and the re-forked chains `Z̃_t(s)` (equal to `Z_t` up
//! to time `s`, independent afterwards), the two sides are
//!
//! ```text
//! lhs = Σ_{k≥0} Σ_{t∈ℤ} E[d(f(Z_t), f(Z̃_t(t-2^k)))^p] / 2^{kp}
//! rhs = Σ_{t∈ℤ} E[d(f(Z_t), f(Z_{t-1}))^p]
//! ```
//!
//! A [`ChainSpec`] is a time-homogeneous kernel run on `[t_start, t_end]`,
//! frozen at its initial state before and at its final state after. With
//! `H = t_end - t_start`, only finitely many `k` behave differently: once
//! `2^k ≥ H` the inner sum is `C + S_H + (2^k - 1 - H) R_H` for constants
//! computed from the chain, and the remaining geometric series is summed in
//! closed form. When `R_H > 0` it diverges at `p = 1`.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distortion::FiniteMetric;
use crate::error::{Error, Result};
use crate::laakso::LaaksoGraph;
use crate::sampling::stream_rng;

/// Sparse distribution or kernel row: `(state, probability)`, sorted by state.
pub type Row = Vec<(u32, f64)>;

const ROW_TOLERANCE: f64 = 1e-12;

/// Trajectories simulated per random stream.
const MC_BATCH: u64 = 1024;

#[derive(Debug, Clone, PartialEq)]
pub struct ChainSpec {
    pub tag: String,
    rows: Vec<Row>,
    initial: Row,
    pub t_start: i64,
    pub t_end: i64,
    laakso_level: Option<u32>,
}

fn normalize_row(mut row: Row, states: usize, index: usize) -> Result<Row> {
    row.retain(|&(_, w)| w != 0.0);
    row.sort_by_key(|&(s, _)| s);
    let mut merged: Row = Vec::with_capacity(row.len());
    for (s, w) in row {
        if s as usize >= states || !(w > 0.0) {
            return Err(Error::BadTransition {
                state: index,
                sum: w,
            });
        }
        match merged.last_mut() {
            Some(last) if last.0 == s => last.1 += w,
            _ => merged.push((s, w)),
        }
    }
    let sum: f64 = merged.iter().map(|&(_, w)| w).sum();
    if (sum - 1.0).abs() > ROW_TOLERANCE {
        return Err(Error::BadTransition { state: index, sum });
    }
    Ok(merged)
}

impl ChainSpec {
    /// Chain on states `0..rows.len()` with kernel `rows` and initial law
    /// `initial`, evolving on `[t_start, t_end]`.
    pub fn new(
        tag: impl Into<String>,
        rows: Vec<Row>,
        initial: Row,
        t_start: i64,
        t_end: i64,
    ) -> Result<Self> {
        if t_end < t_start {
            return Err(Error::EmptyHorizon);
        }
        let states = rows.len();
        let rows = rows
            .into_iter()
            .enumerate()
            .map(|(i, r)| normalize_row(r, states, i))
            .collect::<Result<Vec<_>>>()?;
        let initial = normalize_row(initial, states, usize::MAX)?;
        Ok(ChainSpec {
            tag: tag.into(),
            rows,
            initial,
            t_start,
            t_end,
            laakso_level: None,
        })
    }

    /// The walk from the source to the sink of `G_m`: `Z_t` is the source for
    /// `t ≤ 0`, moves to a uniformly chosen higher neighbour at each step, and
    /// sits at the sink from `t = 6^m` on.
    pub fn laakso(g: &LaaksoGraph) -> Result<Self> {
        if g.level() == 0 {
            return Err(Error::NoForks);
        }
        let rows = (0..g.num_vertices() as u32)
            .map(|v| {
                let out: Vec<u32> = g.out_neighbors(v).collect();
                if out.is_empty() {
                    vec![(v, 1.0)]
                } else {
                    let w = 1.0 / out.len() as f64;
                    out.into_iter().map(|u| (u, w)).collect()
                }
            })
            .collect();
        let mut spec = ChainSpec::new(
            format!("laakso-walk-G{}", g.level()),
            rows,
            vec![(g.source(), 1.0)],
            0,
            g.diameter() as i64,
        )?;
        spec.laakso_level = Some(g.level());
        Ok(spec)
    }

    pub fn num_states(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, state: u32) -> &[(u32, f64)] {
        &self.rows[state as usize]
    }

    pub fn initial(&self) -> &[(u32, f64)] {
        &self.initial
    }

    /// `t_end - t_start`.
    pub fn horizon(&self) -> u64 {
        (self.t_end - self.t_start) as u64
    }

    pub fn laakso_level(&self) -> Option<u32> {
        self.laakso_level
    }

    /// Laws of `Z_t` for `t = t_start..=t_end`.
    pub fn marginals(&self) -> Vec<Row> {
        let mut out = Vec::with_capacity(self.horizon() as usize + 1);
        out.push(self.initial.clone());
        let mut scratch = Scratch::new(self.num_states());
        for _ in 0..self.horizon() {
            let next = step_distribution(self, out.last().unwrap(), &mut scratch);
            out.push(next);
        }
        out
    }

    /// Law of `Z_t` at any integer time.
    pub fn distribution_at(&self, t: i64) -> Row {
        let clamped = t.clamp(self.t_start, self.t_end);
        let mut dist = self.initial.clone();
        let mut scratch = Scratch::new(self.num_states());
        for _ in self.t_start..clamped {
            dist = step_distribution(self, &dist, &mut scratch);
        }
        dist
    }

    fn sample_row<R: Rng + ?Sized>(row: &[(u32, f64)], rng: &mut R) -> u32 {
        if row.len() == 1 {
            return row[0].0;
        }
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for &(s, w) in row {
            acc += w;
            if u < acc {
                return s;
            }
        }
        row.last().unwrap().0
    }

    fn step<R: Rng + ?Sized>(&self, state: u32, rng: &mut R) -> u32 {
        Self::sample_row(&self.rows[state as usize], rng)
    }

    /// `Z_{t_start}, …, Z_{t_end}`.
    pub fn sample_trajectory<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<u32> {
        let mut path = Vec::with_capacity(self.horizon() as usize + 1);
        let mut z = Self::sample_row(&self.initial, rng);
        path.push(z);
        for _ in 0..self.horizon() {
            z = self.step(z, rng);
            path.push(z);
        }
        path
    }

    /// A trajectory equal to `trajectory` up to time `s` and resampled
    /// independently afterwards. Forking at or after `t_end` changes nothing.
    pub fn fork_chain<R: Rng + ?Sized>(
        &self,
        trajectory: &[u32],
        s: i64,
        rng: &mut R,
    ) -> Result<Vec<u32>> {
        if trajectory.len() as u64 != self.horizon() + 1 {
            return Err(Error::Invalid(format!(
                "trajectory has {} states, horizon needs {}",
                trajectory.len(),
                self.horizon() + 1
            )));
        }
        if s < self.t_start {
            return Err(Error::TimeOutOfHorizon {
                time: s,
                start: self.t_start,
                end: self.t_end,
            });
        }
        let keep = ((s - self.t_start) as usize).min(trajectory.len() - 1);
        let mut out = trajectory[..=keep].to_vec();
        let mut z = out[keep];
        while out.len() < trajectory.len() {
            z = self.step(z, rng);
            out.push(z);
        }
        Ok(out)
    }
}

/// Dense accumulator reused across sparse products.
struct Scratch {
    weights: Vec<f64>,
    touched: Vec<u32>,
}

impl Scratch {
    fn new(n: usize) -> Self {
        Scratch {
            weights: vec![0.0; n],
            touched: Vec::new(),
        }
    }

    fn add(&mut self, s: u32, w: f64) {
        if self.weights[s as usize] == 0.0 {
            self.touched.push(s);
        }
        self.weights[s as usize] += w;
    }

    fn drain(&mut self) -> Row {
        self.touched.sort_unstable();
        let row = self
            .touched
            .iter()
            .map(|&s| (s, std::mem::take(&mut self.weights[s as usize])))
            .filter(|&(_, w)| w > 0.0)
            .collect();
        self.touched.clear();
        row
    }
}

fn step_distribution(spec: &ChainSpec, dist: &[(u32, f64)], scratch: &mut Scratch) -> Row {
    for &(x, w) in dist {
        for &(y, p) in spec.row(x) {
            scratch.add(y, w * p);
        }
    }
    scratch.drain()
}

fn compose(first: &[(u32, f64)], rows: &[Row], scratch: &mut Scratch) -> Row {
    for &(y, w) in first {
        for &(z, p) in &rows[y as usize] {
            scratch.add(z, w * p);
        }
    }
    scratch.drain()
}

/// `Σ_{y,y'} w_y w_{y'} d(y, y')^p` for two independent draws from `row`.
fn pair_moment<F: FiniteMetric + ?Sized>(f: &F, row: &[(u32, f64)], p: f64) -> f64 {
    let mut total = 0.0;
    for (a, &(y, wy)) in row.iter().enumerate() {
        for &(z, wz) in &row[..a] {
            total += wy * wz * f.dist(y as usize, z as usize).powf(p);
        }
    }
    2.0 * total
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum MarkovMode {
    Exact,
    MonteCarlo { samples: u64, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkovEstimate {
    pub p: f64,
    pub mode: MarkovMode,
    pub lhs: f64,
    pub rhs: f64,
    /// `(lhs / rhs)^{1/p}`, zero when both sides vanish.
    pub ratio_pi: f64,
    /// Standard error of `lhs` in Monte Carlo mode.
    pub stderr: Option<f64>,
    /// Weighted contribution of each `k < K`, where `2^K` first reaches the
    /// horizon length.
    pub k_terms: Vec<f64>,
    /// Closed-form contribution of all `k ≥ K`.
    pub tail: f64,
}

fn check_exponent(p: f64) -> Result<()> {
    if p >= 1.0 && p.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidExponent(p))
    }
}

/// Smallest `K` with `2^K ≥ h`.
fn cutoff(h: u64) -> u32 {
    let mut k = 0;
    while (1u64 << k) < h {
        k += 1;
    }
    k
}

/// `Σ_{k≥K} 2^{-kp} (C + S_H + (2^k - 1 - H) R_H)`.
fn tail_sum(c: f64, s_h: f64, r_h: f64, h: u64, k: u32, p: f64) -> f64 {
    let base =
        (c + s_h - (1.0 + h as f64) * r_h) * 2f64.powf(-(k as f64) * p) / (1.0 - 2f64.powf(-p));
    if r_h == 0.0 {
        return base;
    }
    if p <= 1.0 {
        return f64::INFINITY;
    }
    base + r_h * 2f64.powf(k as f64 * (1.0 - p)) / (1.0 - 2f64.powf(1.0 - p))
}

fn ratio(lhs: f64, rhs: f64, p: f64) -> f64 {
    if lhs == 0.0 {
        0.0
    } else {
        (lhs / rhs).powf(1.0 / p)
    }
}

/// Both sides of the Markov convexity inequality for the image of `spec`
/// under `f`, where state `i` maps to point `i` of `f`.
pub fn functional<F: FiniteMetric + ?Sized>(
    spec: &ChainSpec,
    f: &F,
    p: f64,
    mode: MarkovMode,
) -> Result<MarkovEstimate> {
    check_exponent(p)?;
    if f.len() < spec.num_states() {
        return Err(Error::MisalignedImages {
            images: f.len(),
            source_len: spec.num_states(),
        });
    }
    match mode {
        MarkovMode::Exact => Ok(ExactEngine::new(spec, f, p).estimate()),
        MarkovMode::MonteCarlo { samples, seed } => monte_carlo(spec, f, p, samples, seed),
    }
}

struct ExactEngine<'a, F: ?Sized> {
    spec: &'a ChainSpec,
    f: &'a F,
    p: f64,
    marginals: Vec<Row>,
}

impl<'a, F: FiniteMetric + ?Sized> ExactEngine<'a, F> {
    fn new(spec: &'a ChainSpec, f: &'a F, p: f64) -> Self {
        ExactEngine {
            spec,
            f,
            p,
            marginals: spec.marginals(),
        }
    }

    fn h(&self) -> usize {
        self.spec.horizon() as usize
    }

    /// `clamped[i] = Σ_x μ_i(x) Q_{H-i}(x)`: fork at `t_start + i`, run both
    /// copies to the end.
    fn clamped(&self) -> Vec<f64> {
        let h = self.h();
        // end_rows[i][a] = law at t_end started from the a-th state of μ_i
        let mut next: Vec<Row> = self.marginals[h]
            .iter()
            .map(|&(x, _)| vec![(x, 1.0)])
            .collect();
        let mut out = vec![0.0; h + 1];
        let mut scratch = Scratch::new(self.spec.num_states());
        for i in (0..h).rev() {
            let later = &self.marginals[i + 1];
            let rows: Vec<Row> = self.marginals[i]
                .iter()
                .map(|&(x, _)| {
                    for &(z, pz) in self.spec.row(x) {
                        let idx = later.binary_search_by_key(&z, |e| e.0).expect("reachable");
                        for &(y, w) in &next[idx] {
                            scratch.add(y, pz * w);
                        }
                    }
                    scratch.drain()
                })
                .collect();
            out[i] = self.marginals[i]
                .par_iter()
                .zip(&rows)
                .map(|(&(_, mu), row)| mu * pair_moment(self.f, row, self.p))
                .collect::<Vec<_>>()
                .iter()
                .sum();
            next = rows;
        }
        out
    }

    /// `R(j) = Σ_x μ_start(x) Q_j(x)` for `j = 0..=H`.
    fn start_terms(&self) -> Vec<f64> {
        let h = self.h();
        let mut out = vec![0.0; h + 1];
        let mut scratch = Scratch::new(self.spec.num_states());
        for &(x, mu) in self.spec.initial() {
            let mut row = vec![(x, 1.0)];
            for slot in out.iter_mut().skip(1) {
                row = step_distribution(self.spec, &row, &mut scratch);
                *slot += mu * pair_moment(self.f, &row, self.p);
            }
        }
        out
    }

    /// `Σ_{i=0}^{H-τ} Σ_x μ_i(x) Q_τ(x)` for every `τ = 2^k < 2^K`.
    fn unclamped(&self, k_max: u32) -> Vec<f64> {
        let n = self.spec.num_states();
        let h = self.h();
        let mut power: Vec<Row> = self.spec.rows.clone();
        let mut out = Vec::with_capacity(k_max as usize);
        for k in 0..k_max {
            let tau = 1usize << k;
            if k > 0 {
                power = (0..n)
                    .into_par_iter()
                    .map_init(
                        || Scratch::new(n),
                        |scratch, x| compose(&power[x], &power, scratch),
                    )
                    .collect();
            }
            let value = if tau > h {
                0.0
            } else {
                self.marginals[..=h - tau]
                    .par_iter()
                    .map(|dist| {
                        dist.iter()
                            .map(|&(x, mu)| mu * pair_moment(self.f, &power[x as usize], self.p))
                            .sum::<f64>()
                    })
                    .collect::<Vec<_>>()
                    .iter()
                    .sum()
            };
            out.push(value);
        }
        out
    }

    fn rhs(&self) -> f64 {
        self.marginals[..self.h()]
            .iter()
            .map(|dist| {
                dist.iter()
                    .map(|&(x, mu)| {
                        self.spec
                            .row(x)
                            .iter()
                            .map(|&(y, w)| w * self.f.dist(x as usize, y as usize).powf(self.p))
                            .sum::<f64>()
                            * mu
                    })
                    .sum::<f64>()
            })
            .sum()
    }

    /// Unweighted `Σ_t` for each `k < K`, plus the tail.
    fn terms(&self) -> (Vec<f64>, f64) {
        let h = self.h();
        let k_max = cutoff(h as u64);
        let clamped = self.clamped();
        let start = self.start_terms();
        let inner = self.unclamped(k_max);
        let (c, s_h, r_h) = (
            clamped[..h].iter().sum::<f64>(),
            start[1..].iter().sum::<f64>(),
            start[h],
        );
        let terms = (0..k_max)
            .map(|k| {
                let tau = 1usize << k;
                let cut: f64 = clamped[h.saturating_sub(tau - 1)..h].iter().sum();
                let cut = if tau > h { c } else { cut };
                let early: f64 = (1..tau).map(|j| start[j.min(h)]).sum();
                inner[k as usize] + cut + early
            })
            .collect();
        (terms, tail_sum(c, s_h, r_h, h as u64, k_max, self.p))
    }

    fn estimate(&self) -> MarkovEstimate {
        let (raw, tail) = self.terms();
        let k_terms: Vec<f64> = raw
            .iter()
            .enumerate()
            .map(|(k, v)| v * 2f64.powf(-(k as f64) * self.p))
            .collect();
        let lhs = k_terms.iter().sum::<f64>() + tail;
        let rhs = self.rhs();
        MarkovEstimate {
            p: self.p,
            mode: MarkovMode::Exact,
            lhs,
            rhs,
            ratio_pi: ratio(lhs, rhs, self.p),
            stderr: None,
            k_terms,
            tail,
        }
    }
}

/// Per-trajectory statistics whose expectations give both sides.
struct SampleTerms {
    k_terms: Vec<f64>,
    tail: f64,
    rhs: f64,
}

fn sample_terms<F: FiniteMetric + ?Sized, R: Rng + ?Sized>(
    spec: &ChainSpec,
    f: &F,
    p: f64,
    rng: &mut R,
) -> SampleTerms {
    let h = spec.horizon() as usize;
    let k_max = cutoff(h as u64);
    let d = |a: u32, b: u32| f.dist(a as usize, b as usize).powf(p);
    let z = spec.sample_trajectory(rng);
    let rhs = z.windows(2).map(|w| d(w[0], w[1])).sum();

    let mut end = vec![0.0; h + 1];
    let mut start = vec![0.0; h + 1];
    let mut at_tau = vec![0.0; k_max as usize];
    for i in 0..h {
        let mut w = z[i];
        let mut next_k = 0u32;
        for u in i + 1..=h {
            w = spec.step(w, rng);
            if i == 0 {
                start[u] = d(z[u], w);
            }
            while next_k < k_max && i + (1usize << next_k) < u {
                next_k += 1;
            }
            if next_k < k_max && i + (1usize << next_k) == u {
                at_tau[next_k as usize] += d(z[u], w);
                next_k += 1;
            }
        }
        end[i] = d(z[h], w);
    }
    let c: f64 = end[..h].iter().sum();
    let s_h: f64 = start[1..].iter().sum();
    let k_terms = (0..k_max)
        .map(|k| {
            let tau = 1usize << k;
            let cut: f64 = if tau > h {
                c
            } else {
                end[h + 1 - tau..h].iter().sum()
            };
            let early: f64 = (1..tau).map(|j| start[j.min(h)]).sum();
            (at_tau[k as usize] + cut + early) * 2f64.powf(-(k as f64) * p)
        })
        .collect();
    SampleTerms {
        k_terms,
        tail: tail_sum(c, s_h, start[h], h as u64, k_max, p),
        rhs,
    }
}

fn monte_carlo<F: FiniteMetric + ?Sized>(
    spec: &ChainSpec,
    f: &F,
    p: f64,
    samples: u64,
    seed: u64,
) -> Result<MarkovEstimate> {
    if samples < 2 {
        return Err(Error::Invalid(
            "Monte Carlo needs at least 2 samples".into(),
        ));
    }
    let k_max = cutoff(spec.horizon()) as usize;
    // (Σ lhs, Σ lhs², Σ rhs, Σ k-terms, Σ tail) per batch, in batch order
    let batches: Vec<(f64, f64, f64, Vec<f64>, f64)> = (0..samples.div_ceil(MC_BATCH))
        .into_par_iter()
        .map(|b| {
            let mut rng = stream_rng(seed, b);
            let count = MC_BATCH.min(samples - b * MC_BATCH);
            let mut acc = (0.0, 0.0, 0.0, vec![0.0; k_max], 0.0);
            for _ in 0..count {
                let s = sample_terms(spec, f, p, &mut rng);
                let lhs = s.k_terms.iter().sum::<f64>() + s.tail;
                acc.0 += lhs;
                acc.1 += lhs * lhs;
                acc.2 += s.rhs;
                for (a, v) in acc.3.iter_mut().zip(&s.k_terms) {
                    *a += v;
                }
                acc.4 += s.tail;
            }
            acc
        })
        .collect();
    let n = samples as f64;
    let (mut sum, mut sum_sq, mut rhs, mut k_terms, mut tail) =
        (0.0, 0.0, 0.0, vec![0.0; k_max], 0.0);
    for b in batches {
        sum += b.0;
        sum_sq += b.1;
        rhs += b.2;
        for (a, v) in k_terms.iter_mut().zip(&b.3) {
            *a += v;
        }
        tail += b.4;
    }
    let lhs = sum / n;
    let var = ((sum_sq / n - lhs * lhs) * n / (n - 1.0)).max(0.0);
    let rhs = rhs / n;
    Ok(MarkovEstimate {
        p,
        mode: MarkovMode::MonteCarlo { samples, seed },
        lhs,
        rhs,
        ratio_pi: ratio(lhs, rhs, p),
        stderr: Some((var / n).sqrt()),
        k_terms: k_terms.into_iter().map(|v| v / n).collect(),
        tail: tail / n,
    })
}

/// Times `T_k` at which a walk forked `2^k` steps earlier has passed a fork
/// of a copy of `G_h`, `h = ⌈k log 2 / log 6⌉`, on its own.
pub fn drift_windows(m: u32, k: u32) -> Vec<i64> {
    let h = (k as f64 * 2f64.ln() / 6f64.ln()).ceil() as i64;
    let m = m as i64;
    if h < 1 || m - h - 1 < 0 {
        return Vec::new();
    }
    let p6 = |e: i64| 6i64.pow(e as u32);
    let last = p6(m) - 1;
    let mut times = Vec::new();
    for i in 1..p6(m - h - 1) {
        let lo = p6(h + 1) * i + p6(h) + p6(h - 1);
        let hi = (p6(h + 1) * i + p6(h) + 2 * p6(h - 1)).min(last);
        times.extend(lo..=hi);
    }
    times
}

/// `Σ_{t ∈ T_k} E[d(f(Z_t), f(Z̃_t(t - 2^k)))^p] / 2^{kp}` for the walk on
/// `G_m`, computed exactly, together with the unrestricted `k`-th term.
pub fn restricted_drift_sum<F: FiniteMetric + ?Sized>(
    spec: &ChainSpec,
    f: &F,
    p: f64,
    k: u32,
) -> Result<DriftSum> {
    check_exponent(p)?;
    let m = spec.laakso_level().ok_or(Error::NotLaaksoChain)?;
    if k == 0 {
        return Err(Error::Invalid("restricted sums start at k = 1".into()));
    }
    let engine = ExactEngine::new(spec, f, p);
    let weight = 2f64.powf(-(k as f64) * p);
    let windows = drift_windows(m, k);
    let tau = 1i64 << k.min(62);
    let restricted = if windows.is_empty() {
        0.0
    } else {
        // windows end before t_end and start after 2^k, so no clamping
        let n = spec.num_states();
        let mut power = spec.rows.clone();
        for _ in 0..k {
            power = (0..n)
                .into_par_iter()
                .map_init(|| Scratch::new(n), |s, x| compose(&power[x], &power, s))
                .collect();
        }
        windows
            .iter()
            .map(|&t| {
                engine.marginals[(t - tau - spec.t_start) as usize]
                    .iter()
                    .map(|&(x, mu)| mu * pair_moment(f, &power[x as usize], p))
                    .sum::<f64>()
            })
            .sum::<f64>()
            * weight
    };
    let (raw, _) = engine.terms();
    let unrestricted = match raw.get(k as usize) {
        Some(v) => v * weight,
        None => {
            // 2^k ≥ H: the closed form of the k-th term
            let h = engine.h();
            let clamped = engine.clamped();
            let start = engine.start_terms();
            let c: f64 = clamped[..h].iter().sum();
            let s_h: f64 = start[1..].iter().sum();
            (c + s_h + (2f64.powi(k as i32) - 1.0 - h as f64) * start[h]) * weight
        }
    };
    Ok(DriftSum {
        k,
        windows: windows.len(),
        restricted,
        unrestricted,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftSum {
    pub k: u32,
    /// `|T_k|`.
    pub windows: usize,
    pub restricted: f64,
    pub unrestricted: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laakso::local;
    use approx::assert_relative_eq;

    fn g1() -> LaaksoGraph {
        LaaksoGraph::build(1).unwrap()
    }

    #[test]
    fn walk_marginals() {
        let g = g1();
        let chain = ChainSpec::laakso(&g).unwrap();
        assert_eq!((chain.t_start, chain.t_end), (0, 6));
        let fork = g.fork_points().unwrap()[0];
        assert_eq!(chain.distribution_at(1), vec![(fork, 1.0)]);
        let apexes = [local::TOP1, local::BOT1].map(|l| 2 + l as u32 - 1);
        assert_eq!(
            chain.distribution_at(2),
            vec![(apexes[0], 0.5), (apexes[1], 0.5)]
        );
        assert_eq!(chain.distribution_at(6), vec![(g.sink(), 1.0)]);
        assert_eq!(chain.distribution_at(100), vec![(g.sink(), 1.0)]);
        assert_eq!(chain.distribution_at(-5), vec![(g.source(), 1.0)]);
        assert!(ChainSpec::laakso(&LaaksoGraph::build(0).unwrap()).is_err());
    }

    #[test]
    fn chain_validation() {
        assert_eq!(
            ChainSpec::new("bad", vec![vec![(0, 0.5)]], vec![(0, 1.0)], 0, 1).unwrap_err(),
            Error::BadTransition { state: 0, sum: 0.5 }
        );
        assert_eq!(
            ChainSpec::new("rev", vec![vec![(0, 1.0)]], vec![(0, 1.0)], 3, 1).unwrap_err(),
            Error::EmptyHorizon
        );
        assert!(ChainSpec::new("oob", vec![vec![(4, 1.0)]], vec![(0, 1.0)], 0, 1).is_err());
    }

    #[test]
    fn forks() {
        let g = g1();
        let chain = ChainSpec::laakso(&g).unwrap();
        let mut rng = stream_rng(3, 0);
        let z = chain.sample_trajectory(&mut rng);
        assert_eq!(z.len(), 7);
        assert_eq!(chain.fork_chain(&z, 6, &mut rng).unwrap(), z);
        assert_eq!(chain.fork_chain(&z, 60, &mut rng).unwrap(), z);
        assert!(chain.fork_chain(&z, -1, &mut rng).is_err());
        let other = chain.fork_chain(&z, 0, &mut rng).unwrap();
        assert_eq!(other[0], z[0]);

        let trials = 20_000;
        let differ = (0..trials)
            .filter(|_| {
                let z = chain.sample_trajectory(&mut rng);
                chain.fork_chain(&z, 1, &mut rng).unwrap()[2] != z[2]
            })
            .count();
        assert!((differ as f64 / trials as f64 - 0.5).abs() < 0.02);
    }

    #[test]
    fn constant_chain_is_zero() {
        let chain = ChainSpec::new("const", vec![vec![(0, 1.0)]], vec![(0, 1.0)], 0, 10).unwrap();
        let g = g1();
        let e = functional(&chain, &g, 2.0, MarkovMode::Exact).unwrap();
        assert_eq!((e.lhs, e.rhs, e.ratio_pi), (0.0, 0.0, 0.0));
    }

    #[test]
    fn edge_increment_sum() {
        for m in 1..=2 {
            let g = LaaksoGraph::build(m).unwrap();
            let chain = ChainSpec::laakso(&g).unwrap();
            for p in [1.0, 2.0, 4.0] {
                let e = functional(&chain, &g, p, MarkovMode::Exact).unwrap();
                assert_relative_eq!(e.rhs, 6f64.powi(m as i32), epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn exponent_validation() {
        let g = g1();
        let chain = ChainSpec::laakso(&g).unwrap();
        assert_eq!(
            functional(&chain, &g, 0.5, MarkovMode::Exact).unwrap_err(),
            Error::InvalidExponent(0.5)
        );
    }

    #[test]
    fn tail_matches_direct_sum() {
        let (c, s, r, h, p) = (1.5, 2.0, 0.25, 5u64, 2.5);
        let k0 = cutoff(h);
        let direct: f64 = (k0..200)
            .map(|k| {
                (c + s + (2f64.powi(k as i32) - 1.0 - h as f64) * r) * 2f64.powf(-(k as f64) * p)
            })
            .sum();
        assert_relative_eq!(tail_sum(c, s, r, h, k0, p), direct, max_relative = 1e-12);
        assert_eq!(tail_sum(c, s, r, h, k0, 1.0), f64::INFINITY);
    }

    #[test]
    fn windows() {
        assert!(drift_windows(2, 1).is_empty());
        assert!(drift_windows(1, 1).is_empty());
        // m = 3, k = 1: h = 1, i = 1..5, windows [36i + 7, 36i + 8]
        assert_eq!(
            drift_windows(3, 1),
            vec![43, 44, 79, 80, 115, 116, 151, 152, 187, 188]
        );
        for (m, k) in [(3, 2), (4, 3), (4, 5)] {
            let h = (k as f64 * 2f64.ln() / 6f64.ln()).ceil() as u32;
            let expected = (6usize.pow(h - 1) + 1) * (6usize.pow(m - h - 1) - 1);
            assert_eq!(drift_windows(m, k).len(), expected);
        }
    }

    #[test]
    fn restricted_requires_laakso_chain() {
        let chain = ChainSpec::new("const", vec![vec![(0, 1.0)]], vec![(0, 1.0)], 0, 3).unwrap();
        let g = g1();
        assert_eq!(
            restricted_drift_sum(&chain, &g, 4.0, 1).unwrap_err(),
            Error::NotLaaksoChain
        );
        let chain = ChainSpec::laakso(&LaaksoGraph::build(2).unwrap()).unwrap();
        let g2 = LaaksoGraph::build(2).unwrap();
        let big = restricted_drift_sum(&chain, &g2, 4.0, 7).unwrap();
        assert_eq!((big.windows, big.restricted), (0, 0.0));
    }
}
