use heislab::laakso::{vertex_count, LaaksoGraph, PairClass};
use proptest::prelude::*;

#[test]
fn hierarchical_distance_matches_bfs() {
    for n in 0..=3 {
        let g = LaaksoGraph::build(n).unwrap();
        for u in 0..g.num_vertices() as u32 {
            let bfs = g.bfs_distances(u).unwrap();
            for v in 0..g.num_vertices() as u32 {
                assert_eq!(
                    g.distance(u, v).unwrap(),
                    bfs[v as usize] as u64,
                    "n={n} u={u} v={v}"
                );
            }
        }
    }
}

#[test]
fn counts_follow_recurrence() {
    for n in 0..=4 {
        let g = LaaksoGraph::build(n).unwrap();
        assert_eq!(g.num_vertices() as u64, vertex_count(n));
        assert_eq!(g.num_edges() as u64, 10u64.pow(n));
        let ecc = g.bfs_distances(g.source()).unwrap();
        assert_eq!(*ecc.iter().max().unwrap() as u64, g.diameter());
        assert_eq!(ecc[g.sink() as usize] as u64, 6u64.pow(n));
        for v in 0..g.num_vertices() as u32 {
            assert_eq!(ecc[v as usize], g.height(v));
        }
    }
}

#[test]
fn series_pairs_lie_on_a_common_geodesic() {
    // oracle: u, v are in series iff d(s,u) + d(u,v) + d(v,t) = d(s,t) for some order
    let g = LaaksoGraph::build(2).unwrap();
    let from_s = g.bfs_distances(g.source()).unwrap();
    let from_t = g.bfs_distances(g.sink()).unwrap();
    let total = g.diameter() as u32;
    for u in 0..g.num_vertices() as u32 {
        let du = g.bfs_distances(u).unwrap();
        for v in 0..g.num_vertices() as u32 {
            let (a, b) = if from_s[u as usize] <= from_s[v as usize] {
                (u, v)
            } else {
                (v, u)
            };
            let on_geodesic = from_s[a as usize] + du[v as usize] + from_t[b as usize] == total;
            let expected = if on_geodesic {
                PairClass::Series
            } else {
                PairClass::Parallel
            };
            assert_eq!(g.classify_pair(u, v).unwrap(), expected);
        }
    }
}

#[test]
fn developed_paths_are_geodesics_with_few_scales() {
    let g = LaaksoGraph::build(3).unwrap();
    let nv = g.num_vertices() as u32;
    for x in (0..nv).step_by(7) {
        for y in (0..nv).step_by(11) {
            let path = g.developed_path(x, y).unwrap();
            assert_eq!(path.length(), g.distance(x, y).unwrap());
            for w in path.points.windows(2) {
                assert!(g.distance(w[0], w[1]).unwrap() > 0);
            }
            assert!(path.scales.windows(2).all(|w| w[0] >= w[1]));
            // each scale is used at most 5 times (base-6 digits)
            for k in 0..=3 {
                assert!(path.scales.iter().filter(|&&s| s == k).count() <= 5);
            }
        }
    }
}

proptest! {
    #[test]
    fn distance_is_a_metric_on_g4(a in 0u32..8890, b in 0u32..8890, c in 0u32..8890) {
        let g = graph4();
        let d = |x, y| g.distance(x, y).unwrap();
        prop_assert_eq!(d(a, b), d(b, a));
        prop_assert!(d(a, c) <= d(a, b) + d(b, c));
        prop_assert!(d(a, b) >= (g.height(a) as i64 - g.height(b) as i64).unsigned_abs());
        prop_assert_eq!(d(a, a), 0);
    }

    #[test]
    fn distance_matches_bfs_on_g4(a in 0u32..8890, b in 0u32..8890) {
        let g = graph4();
        let bfs = g.bfs_distances(a).unwrap();
        prop_assert_eq!(g.distance(a, b).unwrap(), bfs[b as usize] as u64);
    }
}

fn graph4() -> &'static LaaksoGraph {
    static G: std::sync::OnceLock<LaaksoGraph> = std::sync::OnceLock::new();
    G.get_or_init(|| LaaksoGraph::build(4).unwrap())
}
