use heislab::embedder::{embed, scale_constant, AngleSchedule, DEFAULT_M};
use heislab::laakso::{LaaksoGraph, PairClass};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn schedule(n: u32) -> AngleSchedule {
    AngleSchedule::from_formula(DEFAULT_M, n).unwrap()
}

/// Independent oracle for `L_{ℓ,m}`: `6 / (2 + 4cosθ) = 1 / (1 - (4/3) sin²(θ/2))`,
/// accumulated as a sum of logarithms.
fn scale_oracle(thetas: &[f64]) -> f64 {
    thetas
        .iter()
        .map(|t| -(1.0 - 4.0 / 3.0 * (t / 2.0).sin().powi(2)).ln())
        .sum::<f64>()
        .exp()
}

#[test]
fn scale_constant_matches_log_oracle() {
    let s = AngleSchedule::from_formula(DEFAULT_M, 30).unwrap();
    for (ell, m) in [(1, 4), (2, 4), (4, 4), (1, 30), (7, 19)] {
        let got = scale_constant(&s, ell, m).unwrap().value;
        let want = scale_oracle(&s.thetas[ell - 1..m]);
        assert!(
            (got - want).abs() <= 1e-13 * want,
            "{ell}..{m}: {got} vs {want}"
        );
    }
    let limit = scale_constant(&s, 1, 30).unwrap().limit;
    assert!(limit <= 2.0 && limit > 1.0, "limit {limit}");
}

#[test]
fn edges_are_horizontal_unit_segments() {
    for n in 0..=4 {
        let g = LaaksoGraph::build(n).unwrap();
        let f = embed(&g, &schedule(n)).unwrap();
        for &(u, v) in g.edges() {
            let step = f.increment(u, v);
            assert!(
                (step.norm() - 1.0).abs() <= 1e-12,
                "n={n} edge ({u},{v}) length {}",
                step.norm()
            );
            assert!(step.nh() <= 1e-12, "n={n} edge ({u},{v}) NH {}", step.nh());
        }
    }
}

#[test]
fn copy_terminals_match_scale_constant() {
    for n in 1..=4 {
        let g = LaaksoGraph::build(n).unwrap();
        let s = schedule(n);
        let f = embed(&g, &s).unwrap();
        for k in 1..=n {
            let l = scale_constant(&s, (n - k + 1) as usize, n as usize)
                .unwrap()
                .value;
            let want = 6f64.powi(k as i32) / l;
            for &(a, b) in g.level_edges(n - k) {
                let got = f.distance(a, b);
                assert!(
                    (got - want).abs() <= 1e-9 * want,
                    "n={n} k={k}: {got} vs {want}"
                );
            }
        }
    }
}

fn random_geodesic(g: &LaaksoGraph, rng: &mut ChaCha8Rng) -> Vec<u32> {
    let mut path = vec![g.source()];
    let mut v = g.source();
    while v != g.sink() {
        let out: Vec<u32> = g.out_neighbors(v).collect();
        v = out[rng.random_range(0..out.len())];
        path.push(v);
    }
    path
}

#[test]
fn geodesics_enclose_zero_area() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for n in 1..=4 {
        let g = LaaksoGraph::build(n).unwrap();
        let f = embed(&g, &schedule(n)).unwrap();
        let tol = 1e-9 * 6f64.powi(2 * n as i32);
        for _ in 0..1000 {
            let path = random_geodesic(&g, &mut rng);
            assert_eq!(path.len() as u64, g.diameter() + 1);
            let area = f.path_area(&path).unwrap();
            assert!(area.abs() <= tol, "n={n}: area {area}");
        }
    }
}

#[test]
fn lift_is_path_independent() {
    // every edge, not only the spanning tree, satisfies the lift equation
    let g = LaaksoGraph::build(4).unwrap();
    let f = embed(&g, &schedule(4)).unwrap();
    for &(u, v) in g.edges() {
        let (p, q) = (f.planar(u), f.planar(v));
        let swept = 0.5 * (p[0] * q[1] - p[1] * q[0]);
        assert!((f.vertical(v) - f.vertical(u) - swept).abs() <= 1e-9);
    }
}

#[test]
fn embedding_is_one_lipschitz() {
    for n in 0..=3 {
        let g = LaaksoGraph::build(n).unwrap();
        let f = embed(&g, &schedule(n)).unwrap();
        for u in 0..g.num_vertices() as u32 {
            let bfs = g.bfs_distances(u).unwrap();
            for v in 0..g.num_vertices() as u32 {
                assert!(f.distance(u, v) <= bfs[v as usize] as f64 * (1.0 + 1e-12) + 1e-12);
            }
        }
    }
    let g = LaaksoGraph::build(4).unwrap();
    let f = embed(&g, &schedule(4)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..200_000 {
        let u = rng.random_range(0..g.num_vertices() as u32);
        let v = rng.random_range(0..g.num_vertices() as u32);
        let d = g.distance(u, v).unwrap() as f64;
        assert!(f.distance(u, v) <= d * (1.0 + 1e-12) + 1e-12);
    }
}

/// Andrew's monotone chain.
fn convex_hull(mut pts: Vec<[f64; 2]>) -> Vec<[f64; 2]> {
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup();
    let cross = |o: [f64; 2], a: [f64; 2], b: [f64; 2]| {
        (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
    };
    let mut hull: Vec<[f64; 2]> = Vec::new();
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &[f64; 2]>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for &p in iter {
            while hull.len() >= start + 2
                && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0
            {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

#[test]
fn images_stay_in_hull_of_first_level() {
    for n in 1..=4 {
        let g = LaaksoGraph::build(n).unwrap();
        let f = embed(&g, &schedule(n)).unwrap();
        // the first ten ids are the vertices of the top-level copy of G_1
        let hull = convex_hull((0..10).map(|v| f.planar(v)).collect());
        let scale = g.diameter() as f64;
        for v in 0..g.num_vertices() as u32 {
            let p = f.planar(v);
            for i in 0..hull.len() {
                let (a, b) = (hull[i], hull[(i + 1) % hull.len()]);
                let cross = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]);
                assert!(
                    cross >= -1e-12 * scale * scale,
                    "n={n} vertex {v} outside hull"
                );
            }
        }
    }
}

#[test]
fn fork_collapse_bound() {
    for n in 1..=3 {
        let g = LaaksoGraph::build(n).unwrap();
        let s = schedule(n);
        let f = embed(&g, &s).unwrap();
        let theta1 = s.theta(1);
        let nv = g.num_vertices() as u32;
        for z in g.fork_points().unwrap() {
            let dz = g.bfs_distances(z).unwrap();
            for x in 0..nv {
                for y in x + 1..nv {
                    if dz[x as usize] != dz[y as usize]
                        || !g.in_different_top_copies(x, y)
                        || g.classify_pair(x, y).unwrap() != PairClass::Parallel
                    {
                        continue;
                    }
                    let (p, q) = (f.planar(x), f.planar(y));
                    let gap = (p[0] - q[0]).hypot(p[1] - q[1]);
                    let bound = 12.0 * theta1 * dz[x as usize] as f64;
                    assert!(
                        gap <= bound + 1e-12,
                        "n={n} z={z} x={x} y={y}: {gap} > {bound}"
                    );
                }
            }
        }
    }
}

#[test]
fn developed_path_angles_are_bounded() {
    // x ranges over the top-level copy of G_1, whose vertices have ids 0..10
    let g = LaaksoGraph::build(3).unwrap();
    let s = schedule(3);
    let f = embed(&g, &s).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut checked = 0;
    while checked < 1000 {
        let x = rng.random_range(0..10);
        let y = rng.random_range(0..g.num_vertices() as u32);
        if x == y {
            continue;
        }
        let path = g.developed_path(x, y).unwrap();
        // a hop at scale a joins the terminals of an edge of G_{n-a}, which
        // is tilted by at most one angle per level of nesting
        for i in 0..path.scales.len() {
            let depth = (3 - path.scales[i]) as usize;
            let bound: f64 = s.thetas[..depth].iter().sum();
            let angle = f.segment_angle(path.points[i], path.points[i + 1]).unwrap();
            assert!(
                angle <= bound + 1e-12,
                "x={x} y={y} i={i}: {angle} > {bound}"
            );
        }
        checked += 1;
    }
}
