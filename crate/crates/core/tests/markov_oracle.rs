use std::collections::HashMap;

use heislab::distortion::{DistanceMatrix, FiniteMetric};
use heislab::embedder::{embed, AngleSchedule, DEFAULT_M};
use heislab::laakso::LaaksoGraph;
use heislab::markov::{functional, restricted_drift_sum, ChainSpec, MarkovMode};

/// Every trajectory on `[t_start, t_end]` with its probability.
fn enumerate(spec: &ChainSpec) -> Vec<(Vec<u32>, f64)> {
    let mut paths: Vec<(Vec<u32>, f64)> =
        spec.initial().iter().map(|&(x, w)| (vec![x], w)).collect();
    for _ in 0..spec.horizon() {
        paths = paths
            .into_iter()
            .flat_map(|(path, w)| {
                let last = *path.last().unwrap();
                spec.row(last)
                    .iter()
                    .map(move |&(y, p)| {
                        let mut next = path.clone();
                        next.push(y);
                        (next, w * p)
                    })
                    .collect::<Vec<_>>()
            })
            .collect();
    }
    paths
}

/// `E[d(f(Z_t), f(Z̃_t(s)))^p]` straight from the definition, for the
/// trajectory indices `fork` and `at` of the frozen-outside-horizon chain.
fn coupled_moment<F: FiniteMetric + ?Sized>(
    paths: &[(Vec<u32>, f64)],
    f: &F,
    p: f64,
    fork: usize,
    at: usize,
) -> f64 {
    if at <= fork {
        return 0.0;
    }
    let mut total = 0.0;
    for (a, wa) in paths {
        // law of the prefix up to the fork, then independent continuation
        let prefix = &a[..=fork];
        let group: f64 = paths
            .iter()
            .filter(|(b, _)| &b[..=fork] == prefix)
            .map(|(_, w)| w)
            .sum();
        for (b, wb) in paths.iter().filter(|(b, _)| &b[..=fork] == prefix) {
            total += wa * wb / group * f.dist(a[at] as usize, b[at] as usize).powf(p);
        }
    }
    total
}

/// Unweighted `Σ_t` for one `k`, over every `t` where the term can be nonzero.
fn oracle_k_sum<F: FiniteMetric + ?Sized>(
    spec: &ChainSpec,
    paths: &[(Vec<u32>, f64)],
    f: &F,
    p: f64,
    k: u32,
) -> f64 {
    let tau = 1i64 << k;
    let h = spec.horizon() as i64;
    let mut cache = HashMap::new();
    (spec.t_start + 1..spec.t_end + tau)
        .map(|t| {
            let fork = (t - tau - spec.t_start).clamp(0, h) as usize;
            let at = (t - spec.t_start).clamp(0, h) as usize;
            *cache
                .entry((fork, at))
                .or_insert_with(|| coupled_moment(paths, f, p, fork, at))
        })
        .sum()
}

fn small_chain() -> (ChainSpec, DistanceMatrix) {
    let rows = vec![
        vec![(0, 0.2), (1, 0.5), (2, 0.3)],
        vec![(1, 0.6), (2, 0.4)],
        vec![(0, 0.7), (2, 0.3)],
    ];
    let spec = ChainSpec::new("three-state", rows, vec![(0, 0.5), (2, 0.5)], 2, 7).unwrap();
    let pts: [(f64, f64); 3] = [(0.0, 0.0), (1.0, 0.3), (-0.4, 2.0)];
    let d = DistanceMatrix::from_fn(3, |i, j| {
        let (a, b) = (pts[i], pts[j]);
        (a.0 - b.0).hypot(a.1 - b.1)
    });
    (spec, d)
}

#[test]
fn generic_chain_matches_enumeration() {
    let (spec, d) = small_chain();
    let paths = enumerate(&spec);
    assert!((paths.iter().map(|(_, w)| w).sum::<f64>() - 1.0).abs() < 1e-12);
    for p in [1.5, 2.0, 4.0] {
        let e = functional(&spec, &d, p, MarkovMode::Exact).unwrap();
        // K = 3 for a horizon of 5
        assert_eq!(e.k_terms.len(), 3);
        for (k, &v) in e.k_terms.iter().enumerate() {
            let want = oracle_k_sum(&spec, &paths, &d, p, k as u32) * 2f64.powf(-(k as f64) * p);
            assert!(
                (v - want).abs() <= 1e-12 * want.max(1.0),
                "p={p} k={k}: {v} vs {want}"
            );
        }
        let tail: f64 = (3..=24)
            .map(|k| oracle_k_sum(&spec, &paths, &d, p, k) * 2f64.powf(-(k as f64) * p))
            .sum();
        // the oracle truncates at k = 24; the remainder decays like 2^{k(1-p)}
        let slack = 2f64.powf(25.0 * (1.0 - p)) * 100.0;
        assert!(
            (e.tail - tail).abs() <= 1e-9 * tail + slack,
            "p={p}: {} vs {tail}",
            e.tail
        );
    }
    assert_eq!(
        functional(&spec, &d, 1.0, MarkovMode::Exact).unwrap().lhs,
        f64::INFINITY
    );
}

#[test]
fn laakso_walk_matches_enumeration() {
    for m in 1..=2u32 {
        let g = LaaksoGraph::build(m).unwrap();
        let s = AngleSchedule::from_formula(DEFAULT_M, m).unwrap();
        let f = embed(&g, &s).unwrap();
        let spec = ChainSpec::laakso(&g).unwrap();
        let paths = enumerate(&spec);
        assert_eq!(paths.len() as u128, g.geodesic_count().unwrap());
        let p = 4.0;
        let e = functional(&spec, &f, p, MarkovMode::Exact).unwrap();
        let k_cap = if m == 1 { 10 } else { 7 };
        let mut total = 0.0;
        for k in 0..=k_cap {
            let v = oracle_k_sum(&spec, &paths, &f, p, k) * 2f64.powf(-(k as f64) * p);
            total += v;
            if let Some(&got) = e.k_terms.get(k as usize) {
                assert!(
                    (got - v).abs() <= 1e-10 * v.max(1.0),
                    "m={m} k={k}: {got} vs {v}"
                );
            }
            if k >= 1 {
                let unrestricted = restricted_drift_sum(&spec, &f, p, k).unwrap().unrestricted;
                assert!(
                    (unrestricted - v).abs() <= 1e-10 * v.max(1.0),
                    "m={m} k={k}"
                );
            }
        }
        assert!(
            (e.lhs - total).abs() <= 1e-6 * total,
            "m={m}: {} vs {total}",
            e.lhs
        );
    }
}

#[test]
fn restricted_sums_are_dominated() {
    for m in 2..=3u32 {
        let g = LaaksoGraph::build(m).unwrap();
        let spec = ChainSpec::laakso(&g).unwrap();
        for k in 1..=m + 2 {
            let r = restricted_drift_sum(&spec, &g, 4.0, k).unwrap();
            assert!(
                r.restricted <= r.unrestricted * (1.0 + 1e-12),
                "m={m} k={k}: {r:?}"
            );
        }
    }
}

#[test]
fn monte_carlo_matches_exact() {
    let (spec, d) = small_chain();
    for p in [2.0, 4.0] {
        let exact = functional(&spec, &d, p, MarkovMode::Exact).unwrap();
        let mc = functional(
            &spec,
            &d,
            p,
            MarkovMode::MonteCarlo {
                samples: 50_000,
                seed: 17,
            },
        )
        .unwrap();
        let se = mc.stderr.unwrap();
        assert!(
            (mc.lhs - exact.lhs).abs() <= 4.0 * se,
            "p={p}: {} ± {se} vs {}",
            mc.lhs,
            exact.lhs
        );
        let again = functional(
            &spec,
            &d,
            p,
            MarkovMode::MonteCarlo {
                samples: 50_000,
                seed: 17,
            },
        )
        .unwrap();
        assert_eq!(mc, again);
    }
}
