//! Bi-Lipschitz distortion of maps between finite metric spaces.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embedder::EmbeddedMap;
use crate::error::{Error, Result};
use crate::heis::{self, HPoint, H1};
use crate::laakso::LaaksoGraph;
use crate::sampling::stream_rng;

/// Exact mode refuses inputs with more unordered pairs than this.
pub const EXACT_PAIR_CAP: u64 = 100_000_000;

/// Pairs drawn per random stream in sampled mode.
const SAMPLE_BATCH: u64 = 1 << 14;

/// A finite metric space with points `0..len()`.
pub trait FiniteMetric: Sync {
    fn len(&self) -> usize;
    fn dist(&self, i: usize, j: usize) -> f64;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl FiniteMetric for LaaksoGraph {
    fn len(&self) -> usize {
        self.num_vertices()
    }

    fn dist(&self, i: usize, j: usize) -> f64 {
        self.distance_unchecked(i as u32, j as u32) as f64
    }
}

impl FiniteMetric for EmbeddedMap<'_> {
    fn len(&self) -> usize {
        self.graph().num_vertices()
    }

    fn dist(&self, i: usize, j: usize) -> f64 {
        self.distance(i as u32, j as u32)
    }
}

impl FiniteMetric for [H1] {
    fn len(&self) -> usize {
        <[H1]>::len(self)
    }

    fn dist(&self, i: usize, j: usize) -> f64 {
        self[i].distance(self[j])
    }
}

/// Points of a common `H_d`. Mixed dimensions panic on use.
impl FiniteMetric for [HPoint] {
    fn len(&self) -> usize {
        <[HPoint]>::len(self)
    }

    fn dist(&self, i: usize, j: usize) -> f64 {
        heis::distance(&self[i], &self[j]).expect("points share a dimension")
    }
}

/// Dense symmetric distance table.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl DistanceMatrix {
    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut entries = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..i {
                let d = f(i, j);
                entries[i * n + j] = d;
                entries[j * n + i] = d;
            }
        }
        DistanceMatrix { n, entries }
    }
}

impl FiniteMetric for DistanceMatrix {
    fn len(&self) -> usize {
        self.n
    }

    fn dist(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Mode {
    Exact,
    Sampled { samples: u64, seed: u64 },
}

/// Extremal ratios of target over source distance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistortionReport {
    pub mode: Mode,
    pub pairs: u64,
    pub min_ratio: f64,
    pub max_ratio: f64,
    /// `max_ratio / min_ratio`; infinite when two points share an image.
    pub distortion: f64,
    pub infinite: bool,
    pub min_pair: (usize, usize),
    pub max_pair: (usize, usize),
}

/// Running extremes with ties broken toward the smaller pair.
#[derive(Debug, Clone, Copy)]
struct Extremes {
    pairs: u64,
    min: (f64, (usize, usize)),
    max: (f64, (usize, usize)),
}

impl Extremes {
    const EMPTY: Extremes = Extremes {
        pairs: 0,
        min: (f64::INFINITY, (usize::MAX, usize::MAX)),
        max: (f64::NEG_INFINITY, (usize::MAX, usize::MAX)),
    };

    fn push(&mut self, ratio: f64, pair: (usize, usize)) {
        self.pairs += 1;
        if ratio < self.min.0 || (ratio == self.min.0 && pair < self.min.1) {
            self.min = (ratio, pair);
        }
        if ratio > self.max.0 || (ratio == self.max.0 && pair < self.max.1) {
            self.max = (ratio, pair);
        }
    }

    fn merge(mut self, other: Extremes) -> Extremes {
        self.pairs += other.pairs;
        let (a, b) = (self.min, other.min);
        if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) {
            self.min = b;
        }
        let (a, b) = (self.max, other.max);
        if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
            self.max = b;
        }
        self
    }
}

fn ratio<S, T>(source: &S, target: &T, i: usize, j: usize) -> Result<f64>
where
    S: FiniteMetric + ?Sized,
    T: FiniteMetric + ?Sized,
{
    let d = source.dist(i, j);
    if d <= 0.0 {
        return Err(Error::CoincidentSources(i.min(j), i.max(j)));
    }
    Ok(target.dist(i, j) / d)
}

/// Distortion of the map sending point `i` of `source` to point `i` of
/// `target`.
pub fn measure<S, T>(source: &S, target: &T, mode: Mode) -> Result<DistortionReport>
where
    S: FiniteMetric + ?Sized,
    T: FiniteMetric + ?Sized,
{
    let n = source.len();
    if n < 2 {
        return Err(Error::TooFewPoints { need: 2, got: n });
    }
    if target.len() != n {
        return Err(Error::MisalignedImages {
            images: target.len(),
            source_len: n,
        });
    }
    let ext = match mode {
        Mode::Exact => {
            let pairs = n as u64 * (n as u64 - 1) / 2;
            if pairs > EXACT_PAIR_CAP {
                return Err(Error::ExactCapExceeded {
                    pairs,
                    cap: EXACT_PAIR_CAP,
                });
            }
            (1..n)
                .into_par_iter()
                .map(|i| {
                    let mut e = Extremes::EMPTY;
                    for j in 0..i {
                        e.push(ratio(source, target, j, i)?, (j, i));
                    }
                    Ok(e)
                })
                .try_reduce(|| Extremes::EMPTY, |a, b| Ok(a.merge(b)))?
        }
        Mode::Sampled { samples, seed } => {
            let batches = samples.div_ceil(SAMPLE_BATCH);
            (0..batches)
                .into_par_iter()
                .map(|b| {
                    let mut rng = stream_rng(seed, b);
                    let count = SAMPLE_BATCH.min(samples - b * SAMPLE_BATCH);
                    let mut e = Extremes::EMPTY;
                    for _ in 0..count {
                        let i = rng.random_range(0..n);
                        let mut j = rng.random_range(0..n - 1);
                        if j >= i {
                            j += 1;
                        }
                        let pair = (i.min(j), i.max(j));
                        e.push(ratio(source, target, pair.0, pair.1)?, pair);
                    }
                    Ok(e)
                })
                .try_reduce(|| Extremes::EMPTY, |a, b| Ok(a.merge(b)))?
        }
    };
    if ext.pairs == 0 {
        return Err(Error::Invalid("no pairs examined".into()));
    }
    let infinite = ext.min.0 <= 0.0;
    Ok(DistortionReport {
        mode,
        pairs: ext.pairs,
        min_ratio: ext.min.0,
        max_ratio: ext.max.0,
        distortion: if infinite {
            f64::INFINITY
        } else {
            ext.max.0 / ext.min.0
        },
        infinite,
        min_pair: ext.min.1,
        max_pair: ext.max.1,
    })
}

/// `(M + n)^{1/4} · (log2(M + n))^{1/2}`, the growth rate of the best
/// distortion of `G_n` into the Heisenberg group, up to a constant.
pub fn growth_curve(n: u32, m: f64) -> f64 {
    let x = m + n as f64;
    x.powf(0.25) * x.log2().sqrt()
}

/// Smallest compression ratio over pairs in different top-level copies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestrictedRatio {
    pub value: f64,
    pub pair: (u32, u32),
    pub pairs: u64,
}

/// `min d(f(x), f(y)) / d(x, y)` over pairs `x, y` that no single copy of
/// `G_{n-1}` contains.
pub fn restricted_lower_ratio(map: &EmbeddedMap<'_>, mode: Mode) -> Result<RestrictedRatio> {
    let g = map.graph();
    if g.level() == 0 {
        return Err(Error::NoForks);
    }
    let n = g.num_vertices();
    let eligible = |i: usize, j: usize| g.in_different_top_copies(i as u32, j as u32);
    let ext = match mode {
        Mode::Exact => {
            let pairs = n as u64 * (n as u64 - 1) / 2;
            if pairs > EXACT_PAIR_CAP {
                return Err(Error::ExactCapExceeded {
                    pairs,
                    cap: EXACT_PAIR_CAP,
                });
            }
            (1..n)
                .into_par_iter()
                .map(|i| {
                    let mut e = Extremes::EMPTY;
                    for j in (0..i).filter(|&j| eligible(j, i)) {
                        e.push(map.dist(j, i) / g.dist(j, i), (j, i));
                    }
                    e
                })
                .reduce(|| Extremes::EMPTY, Extremes::merge)
        }
        Mode::Sampled { samples, seed } => {
            let batches = samples.div_ceil(SAMPLE_BATCH);
            (0..batches)
                .into_par_iter()
                .map(|b| {
                    let mut rng = stream_rng(seed, b);
                    let count = SAMPLE_BATCH.min(samples - b * SAMPLE_BATCH);
                    let mut e = Extremes::EMPTY;
                    let mut drawn = 0;
                    while drawn < count {
                        let (i, j) = (rng.random_range(0..n), rng.random_range(0..n));
                        if i == j || !eligible(i, j) {
                            continue;
                        }
                        drawn += 1;
                        let pair = (i.min(j), i.max(j));
                        e.push(map.dist(i, j) / g.dist(i, j), pair);
                    }
                    e
                })
                .reduce(|| Extremes::EMPTY, Extremes::merge)
        }
    };
    Ok(RestrictedRatio {
        value: ext.min.0,
        pair: (ext.min.1 .0 as u32, ext.min.1 .1 as u32),
        pairs: ext.pairs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedder::{embed, AngleSchedule, DEFAULT_M};
    use approx::assert_relative_eq;

    #[test]
    fn identity_has_distortion_one() {
        let g = LaaksoGraph::build(1).unwrap();
        let r = measure(&g, &g, Mode::Exact).unwrap();
        assert_eq!((r.distortion, r.pairs), (1.0, 45));
        assert!(!r.infinite);
    }

    #[test]
    fn collapsed_images_are_infinite() {
        let g = LaaksoGraph::build(1).unwrap();
        let images = vec![H1::IDENTITY; 10];
        let r = measure(&g, images.as_slice(), Mode::Exact).unwrap();
        assert!(r.infinite);
        assert_eq!(r.distortion, f64::INFINITY);
    }

    #[test]
    fn input_errors() {
        let g = LaaksoGraph::build(1).unwrap();
        let short = vec![H1::IDENTITY; 3];
        assert_eq!(
            measure(&g, short.as_slice(), Mode::Exact).unwrap_err(),
            Error::MisalignedImages {
                images: 3,
                source_len: 10
            }
        );
        let one = vec![H1::IDENTITY];
        assert!(measure(one.as_slice(), one.as_slice(), Mode::Exact).is_err());
        let dup = vec![H1::IDENTITY, H1::new(1.0, 0.0, 0.0), H1::IDENTITY];
        assert_eq!(
            measure(dup.as_slice(), dup.as_slice(), Mode::Exact).unwrap_err(),
            Error::CoincidentSources(0, 2)
        );
    }

    #[test]
    fn exact_cap() {
        let g = LaaksoGraph::build(5).unwrap();
        assert!(matches!(
            measure(&g, &g, Mode::Exact),
            Err(Error::ExactCapExceeded { .. })
        ));
    }

    #[test]
    fn level_two_embedding_is_reproducible() {
        let g = LaaksoGraph::build(2).unwrap();
        let s = AngleSchedule::from_formula(DEFAULT_M, 2).unwrap();
        let f = embed(&g, &s).unwrap();
        let a = measure(&g, &f, Mode::Exact).unwrap();
        let b = measure(&g, &f, Mode::Exact).unwrap();
        assert_eq!(a, b);
        assert!(a.distortion.is_finite() && a.distortion > 1.0);
    }

    #[test]
    fn curve_examples() {
        assert_relative_eq!(growth_curve(1, 15.0), 4.0, epsilon = 1e-12);
        assert!((1..10).all(|n| growth_curve(n + 1, DEFAULT_M) > growth_curve(n, DEFAULT_M)));
    }

    #[test]
    fn restricted_ratio_on_level_one() {
        let g = LaaksoGraph::build(1).unwrap();
        let s = AngleSchedule::from_formula(DEFAULT_M, 1).unwrap();
        let f = embed(&g, &s).unwrap();
        let r = restricted_lower_ratio(&f, Mode::Exact).unwrap();
        assert!(r.value > 0.0 && r.value <= 1.0);
        assert!(g.in_different_top_copies(r.pair.0, r.pair.1));
    }
}
