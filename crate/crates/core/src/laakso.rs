//! Laakso graphs `G_n` and their hierarchical copy structure.
//!
//! `G_0` is a single edge. `G_n` replaces every edge of `G_{n-1}` by a copy of
//! the template `G_1`:
//!
//! ```text
//!            top1 ── m_top ── top2
//!           /                     \
//!  s ──── a                         b ──── t
//!           \                     /
//!            bot1 ── m_bot ── bot2
//! ```
//!
//! i.e. a jutting edge, a cycle of length 8 made of two branches of length 4,
//! and a second jutting edge: 10 vertices, 10 edges, diameter 6. The two
//! degree-3 vertices `a`, `b` are the fork points.
//!
//! Edges are stored per refinement level. The edge with index `i` in `G_n`
//! has the base-10 expansion `d_1 d_2 … d_n`, where `d_1` picks the top-level
//! copy of `G_{n-1}` and `d_n` the edge inside the smallest copy of `G_1`.
//! Copies of `G_k` are exactly the blocks of `10^k` consecutive edge indices.
//!
//! Vertex ids are contiguous: `0` is the source, `1` the sink, and the 8
//! internal vertices of the `i`-th edge of `G_{j-1}` get ids
//! `|V_{j-1}| + 8 i + (local - 1)`.

use std::collections::VecDeque;

use crate::error::{Error, Result};

pub type VertexId = u32;

/// Largest level `build_graph` accepts by default (`10^6` edges).
pub const DEFAULT_LEVEL_CAP: u32 = 6;

/// Number of internal vertices in the `G_1` template.
const INTERNAL: u32 = 8;

/// Template-local vertex indices.
pub mod local {
    pub const SOURCE: u8 = 0;
    pub const FORK_A: u8 = 1;
    pub const TOP1: u8 = 2;
    pub const MID_TOP: u8 = 3;
    pub const TOP2: u8 = 4;
    pub const BOT1: u8 = 5;
    pub const MID_BOT: u8 = 6;
    pub const BOT2: u8 = 7;
    pub const FORK_B: u8 = 8;
    pub const SINK: u8 = 9;
}

/// Edges of the `G_1` template, oriented source to sink, in index order.
pub const TEMPLATE_EDGES: [(u8, u8); 10] = {
    use local::*;
    [
        (SOURCE, FORK_A),
        (FORK_A, TOP1),
        (TOP1, MID_TOP),
        (MID_TOP, TOP2),
        (TOP2, FORK_B),
        (FORK_A, BOT1),
        (BOT1, MID_BOT),
        (MID_BOT, BOT2),
        (BOT2, FORK_B),
        (FORK_B, SINK),
    ]
};

/// `d(s, v)` for each template vertex.
pub const TEMPLATE_HEIGHTS: [u32; 10] = [0, 1, 2, 3, 4, 2, 3, 4, 5, 6];

/// All-pairs distances inside the template.
const TEMPLATE_DIST: [[u32; 10]; 10] = template_distances();

const fn template_distances() -> [[u32; 10]; 10] {
    let mut d = [[u32::MAX / 4; 10]; 10];
    let mut i = 0;
    while i < 10 {
        d[i][i] = 0;
        i += 1;
    }
    let mut e = 0;
    while e < 10 {
        let (a, b) = TEMPLATE_EDGES[e];
        d[a as usize][b as usize] = 1;
        d[b as usize][a as usize] = 1;
        e += 1;
    }
    let mut k = 0;
    while k < 10 {
        let mut i = 0;
        while i < 10 {
            let mut j = 0;
            while j < 10 {
                if d[i][k] + d[k][j] < d[i][j] {
                    d[i][j] = d[i][k] + d[k][j];
                }
                j += 1;
            }
            i += 1;
        }
        k += 1;
    }
    d
}

/// Where a vertex sits in the substitution hierarchy.
///
/// Terminals of `G_n` have `level == 0`, an empty `copy` and `local` equal to
/// [`local::SOURCE`] or [`local::SINK`]. A vertex created while refining
/// `G_{j-1}` into `G_j` has `level == j`, `copy` holding the `j - 1` digits of
/// the refined edge, and `local` in `1..=8`.
///
/// The derived ordering agrees with the ordering of flat ids.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VertexAddress {
    pub level: u32,
    pub copy: Vec<u8>,
    pub local: u8,
}

/// Series/parallel relation of two vertices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairClass {
    /// Some source-sink geodesic passes through both.
    Series,
    Parallel,
}

/// An unscaled copy of `G_k` inside `G_n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnscaledCopy {
    /// Index of the copy among the `10^{n-k}` copies (its digit prefix).
    pub index: u32,
    pub source: VertexId,
    pub sink: VertexId,
    /// Sorted vertex ids.
    pub vertices: Vec<VertexId>,
}

/// Greedy base-6 decomposition of a geodesic into terminal-to-terminal hops.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DevelopedPath {
    pub points: Vec<VertexId>,
    /// `scales[i] = log_6 d(points[i], points[i + 1])`.
    pub scales: Vec<u32>,
    /// Number of distinct scales.
    pub lambda: usize,
}

impl DevelopedPath {
    pub fn length(&self) -> u64 {
        self.scales.iter().map(|&a| 6u64.pow(a)).sum()
    }
}

#[derive(Debug, Clone)]
pub struct LaaksoGraph {
    level: u32,
    /// `levels[j]` = edges of `G_j`, oriented by height, in index order.
    levels: Vec<Vec<(VertexId, VertexId)>>,
    heights: Vec<u32>,
    offsets: Vec<u32>,
    neighbors: Vec<VertexId>,
    /// Smallest index of an edge of `G_n` incident to the vertex.
    home_edge: Vec<u32>,
    /// Bit `c` set when the vertex lies in top-level copy `c`.
    top_copies: Vec<u16>,
    pow6: Vec<u64>,
    pow10: Vec<u64>,
}

impl LaaksoGraph {
    /// Builds `G_n` with the default level cap.
    pub fn build(level: u32) -> Result<Self> {
        Self::build_with_cap(level, DEFAULT_LEVEL_CAP)
    }

    pub fn build_with_cap(level: u32, cap: u32) -> Result<Self> {
        if level > cap {
            return Err(Error::LevelTooLarge { level, cap });
        }
        let pow6: Vec<u64> = (0..=level).map(|k| 6u64.pow(k)).collect();
        let pow10: Vec<u64> = (0..=level).map(|k| 10u64.pow(k)).collect();

        let mut levels = vec![vec![(0u32, 1u32)]];
        let mut heights = vec![0u32, pow6[level as usize] as u32];
        for j in 1..=level {
            let prev = &levels[j as usize - 1];
            let base = heights.len() as u32;
            let unit = pow6[(level - j) as usize] as u32;
            let mut next = Vec::with_capacity(prev.len() * 10);
            heights.resize(heights.len() + prev.len() * INTERNAL as usize, 0);
            for (i, &(u, v)) in prev.iter().enumerate() {
                let id = |loc: u8| -> VertexId {
                    match loc {
                        local::SOURCE => u,
                        local::SINK => v,
                        l => base + INTERNAL * i as u32 + (l as u32 - 1),
                    }
                };
                for l in 1..=INTERNAL as u8 {
                    heights[id(l) as usize] =
                        heights[u as usize] + TEMPLATE_HEIGHTS[l as usize] * unit;
                }
                next.extend(TEMPLATE_EDGES.iter().map(|&(a, b)| (id(a), id(b))));
            }
            levels.push(next);
        }

        let nv = heights.len();
        let edges = &levels[level as usize];
        let mut degree = vec![0u32; nv];
        for &(u, v) in edges {
            degree[u as usize] += 1;
            degree[v as usize] += 1;
        }
        let mut offsets = Vec::with_capacity(nv + 1);
        offsets.push(0u32);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut fill = offsets.clone();
        let mut neighbors = vec![0u32; 2 * edges.len()];
        let mut home_edge = vec![u32::MAX; nv];
        let mut top_copies = vec![0u16; nv];
        let top_block = pow10[level as usize] / 10;
        for (idx, &(u, v)) in edges.iter().enumerate() {
            for (a, b) in [(u, v), (v, u)] {
                neighbors[fill[a as usize] as usize] = b;
                fill[a as usize] += 1;
                if home_edge[a as usize] == u32::MAX {
                    home_edge[a as usize] = idx as u32;
                }
                if level > 0 {
                    top_copies[a as usize] |= 1 << (idx as u64 / top_block);
                }
            }
        }

        Ok(LaaksoGraph {
            level,
            levels,
            heights,
            offsets,
            neighbors,
            home_edge,
            top_copies,
            pow6,
            pow10,
        })
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn num_vertices(&self) -> usize {
        self.heights.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges().len()
    }

    /// Edges of `G_n`, each oriented from lower to higher height.
    pub fn edges(&self) -> &[(VertexId, VertexId)] {
        &self.levels[self.level as usize]
    }

    /// Edges of the coarser graph `G_j` (`j <= n`), in final vertex ids.
    /// Edge `i` of `G_j` is the terminal pair of the `i`-th copy of `G_{n-j}`.
    pub fn level_edges(&self, j: u32) -> &[(VertexId, VertexId)] {
        &self.levels[j as usize]
    }

    pub fn source(&self) -> VertexId {
        0
    }

    pub fn sink(&self) -> VertexId {
        1
    }

    /// `6^n`.
    pub fn diameter(&self) -> u64 {
        self.pow6[self.level as usize]
    }

    pub fn contains(&self, v: VertexId) -> bool {
        (v as usize) < self.heights.len()
    }

    fn check(&self, v: VertexId) -> Result<()> {
        if self.contains(v) {
            Ok(())
        } else {
            Err(Error::InvalidVertex(v))
        }
    }

    /// `d(s, v)`; the partial order is the order by height along geodesics.
    pub fn height(&self, v: VertexId) -> u32 {
        self.heights[v as usize]
    }

    pub fn heights(&self) -> &[u32] {
        &self.heights
    }

    pub fn neighbors(&self, v: VertexId) -> &[VertexId] {
        let (a, b) = (self.offsets[v as usize], self.offsets[v as usize + 1]);
        &self.neighbors[a as usize..b as usize]
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.neighbors(v).len()
    }

    /// Neighbours one step closer to the sink.
    pub fn out_neighbors(&self, v: VertexId) -> impl Iterator<Item = VertexId> + '_ {
        let h = self.height(v);
        self.neighbors(v)
            .iter()
            .copied()
            .filter(move |&w| self.height(w) > h)
    }

    /// Bitmask of the top-level copies of `G_{n-1}` containing `v`.
    pub fn top_copy_mask(&self, v: VertexId) -> u16 {
        self.top_copies[v as usize]
    }

    /// Whether no single copy of `G_{n-1}` contains both vertices.
    pub fn in_different_top_copies(&self, u: VertexId, v: VertexId) -> bool {
        self.top_copies[u as usize] & self.top_copies[v as usize] == 0
    }

    pub fn address(&self, v: VertexId) -> Result<VertexAddress> {
        self.check(v)?;
        if v < 2 {
            return Ok(VertexAddress {
                level: 0,
                copy: Vec::new(),
                local: if v == 0 { local::SOURCE } else { local::SINK },
            });
        }
        let mut base = 2u64;
        for j in 1..=self.level {
            let count = INTERNAL as u64 * self.pow10[j as usize - 1];
            if (v as u64) < base + count {
                let offset = v as u64 - base;
                let edge = offset / INTERNAL as u64;
                let copy = digits(edge, j as usize - 1);
                return Ok(VertexAddress {
                    level: j,
                    copy,
                    local: (offset % INTERNAL as u64) as u8 + 1,
                });
            }
            base += count;
        }
        unreachable!("vertex id checked above")
    }

    pub fn vertex(&self, address: &VertexAddress) -> Result<VertexId> {
        let bad = || Error::Invalid(format!("no vertex at address {address:?}"));
        if address.level == 0 {
            return match (address.copy.is_empty(), address.local) {
                (true, local::SOURCE) => Ok(0),
                (true, local::SINK) => Ok(1),
                _ => Err(bad()),
            };
        }
        if address.level > self.level
            || address.copy.len() != address.level as usize - 1
            || !(1..=INTERNAL as u8).contains(&address.local)
            || address.copy.iter().any(|&d| d > 9)
        {
            return Err(bad());
        }
        let mut base = 2u64;
        for j in 1..address.level {
            base += INTERNAL as u64 * self.pow10[j as usize - 1];
        }
        let edge = address
            .copy
            .iter()
            .fold(0u64, |acc, &d| acc * 10 + d as u64);
        Ok((base + INTERNAL as u64 * edge + address.local as u64 - 1) as VertexId)
    }

    /// Exact path distance, by descending the copy hierarchy (`O(n)`).
    pub fn distance(&self, u: VertexId, v: VertexId) -> Result<u64> {
        self.check(u)?;
        self.check(v)?;
        Ok(self.distance_unchecked(u, v))
    }

    pub(crate) fn distance_unchecked(&self, u: VertexId, v: VertexId) -> u64 {
        if u == v {
            return 0;
        }
        let hu = self.heights[u as usize] as i64;
        let hv = self.heights[v as usize] as i64;
        let (eu, ev) = (
            self.home_edge[u as usize] as u64,
            self.home_edge[v as usize] as u64,
        );
        if eu == ev {
            return (hu - hv).unsigned_abs();
        }
        let n = self.level as usize;
        // longest common digit prefix r < n
        let mut r = 0;
        while r < n && eu / self.pow10[n - r - 1] == ev / self.pow10[n - r - 1] {
            r += 1;
        }
        debug_assert!(r < n);
        let block = self.pow10[n - r - 1];
        let (pa, pb) = (eu / block, ev / block);
        let (ta, tb) = (
            TEMPLATE_EDGES[(pa % 10) as usize],
            TEMPLATE_EDGES[(pb % 10) as usize],
        );
        let sub = &self.levels[r + 1];
        let span = self.pow6[n - r - 1] as i64;
        let alpha = hu - self.heights[sub[pa as usize].0 as usize] as i64;
        let beta = hv - self.heights[sub[pb as usize].0 as usize] as i64;
        let mut best = i64::MAX;
        for (x, dx) in [(ta.0, alpha), (ta.1, span - alpha)] {
            for (y, dy) in [(tb.0, beta), (tb.1, span - beta)] {
                let mid = TEMPLATE_DIST[x as usize][y as usize] as i64 * span;
                best = best.min(dx + mid + dy);
            }
        }
        best as u64
    }

    /// Breadth-first distances from `src` to every vertex.
    pub fn bfs_distances(&self, src: VertexId) -> Result<Vec<u32>> {
        self.check(src)?;
        let mut dist = vec![u32::MAX; self.num_vertices()];
        let mut queue = VecDeque::new();
        dist[src as usize] = 0;
        queue.push_back(src);
        while let Some(x) = queue.pop_front() {
            let dx = dist[x as usize];
            for &y in self.neighbors(x) {
                if dist[y as usize] == u32::MAX {
                    dist[y as usize] = dx + 1;
                    queue.push_back(y);
                }
            }
        }
        Ok(dist)
    }

    pub fn classify_pair(&self, u: VertexId, v: VertexId) -> Result<PairClass> {
        let d = self.distance(u, v)?;
        let gap = (self.height(u) as i64 - self.height(v) as i64).unsigned_abs();
        Ok(if d == gap {
            PairClass::Series
        } else {
            PairClass::Parallel
        })
    }

    /// The two fork points of the top-level copy of `G_1`.
    pub fn fork_points(&self) -> Result<[VertexId; 2]> {
        if self.level == 0 {
            return Err(Error::NoForks);
        }
        Ok([2, 2 + INTERNAL - 1])
    }

    /// Fork points of every unscaled copy of `G_k`, `1 <= k <= n`, listed per
    /// copy in copy order.
    pub fn fork_points_of_copies(&self, k: u32) -> Result<Vec<[VertexId; 2]>> {
        if self.level == 0 || k == 0 {
            return Err(Error::NoForks);
        }
        if k > self.level {
            return Err(Error::CopyLevelOutOfRange { k, n: self.level });
        }
        let j = self.level - k + 1;
        let mut base = 2u32;
        for i in 1..j {
            base += INTERNAL * self.pow10[i as usize - 1] as u32;
        }
        let count = self.pow10[j as usize - 1] as u32;
        Ok((0..count)
            .map(|i| {
                let b = base + INTERNAL * i;
                [b + local::FORK_A as u32 - 1, b + local::FORK_B as u32 - 1]
            })
            .collect())
    }

    /// All `10^{n-k}` unscaled copies of `G_k`.
    pub fn enumerate_copies(&self, k: u32) -> Result<Vec<UnscaledCopy>> {
        if k > self.level {
            return Err(Error::CopyLevelOutOfRange { k, n: self.level });
        }
        let r = (self.level - k) as usize;
        let block = self.pow10[k as usize] as usize;
        let edges = self.edges();
        Ok(self.levels[r]
            .iter()
            .enumerate()
            .map(|(p, &(source, sink))| {
                let mut vertices: Vec<VertexId> = edges[p * block..(p + 1) * block]
                    .iter()
                    .flat_map(|&(a, b)| [a, b])
                    .collect();
                vertices.sort_unstable();
                vertices.dedup();
                UnscaledCopy {
                    index: p as u32,
                    source,
                    sink,
                    vertices,
                }
            })
            .collect())
    }

    /// Greedy developed path from `x` to `y`. Ties between admissible next
    /// points go to the smallest [`VertexAddress`].
    pub fn developed_path(&self, x: VertexId, y: VertexId) -> Result<DevelopedPath> {
        self.check(x)?;
        self.check(y)?;
        let mut points = vec![x];
        let mut scales = Vec::new();
        let mut p = x;
        let mut frontier = Vec::new();
        let mut next = Vec::new();
        while p != y {
            let remaining = self.distance_unchecked(p, y);
            let k = floor_log6(remaining);
            let hop = self.pow6[k as usize];
            // walk geodesic layers toward y for `hop` steps
            frontier.clear();
            frontier.push((p, remaining));
            for _ in 0..hop {
                next.clear();
                for &(w, dw) in &frontier {
                    for &z in self.neighbors(w) {
                        let dz = self.distance_unchecked(z, y);
                        if dz + 1 == dw {
                            next.push((z, dz));
                        }
                    }
                }
                next.sort_unstable();
                next.dedup();
                std::mem::swap(&mut frontier, &mut next);
            }
            // flat id order coincides with address order
            let chosen = frontier
                .iter()
                .map(|&(w, _)| w)
                .min()
                .expect("a geodesic toward y always exists");
            points.push(chosen);
            scales.push(k);
            p = chosen;
        }
        let mut distinct = scales.clone();
        distinct.dedup();
        Ok(DevelopedPath {
            points,
            scales,
            lambda: distinct.len(),
        })
    }

    /// Number of source-sink geodesics, `None` on overflow.
    pub fn geodesic_count(&self) -> Option<u128> {
        let mut order: Vec<VertexId> = (0..self.num_vertices() as u32).collect();
        order.sort_by_key(|&v| self.height(v));
        let mut ways = vec![0u128; self.num_vertices()];
        ways[0] = 1;
        for &v in &order {
            let hv = self.height(v);
            let mut total = if v == 0 { 1u128 } else { 0 };
            for &w in self.neighbors(v) {
                if self.height(w) < hv {
                    total = total.checked_add(ways[w as usize])?;
                }
            }
            ways[v as usize] = total;
        }
        Some(ways[1])
    }

    /// Writes the edge list as CSV with header `u_id,v_id`.
    pub fn write_edge_csv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "u_id,v_id")?;
        for &(u, v) in self.edges() {
            writeln!(out, "{u},{v}")?;
        }
        Ok(())
    }
}

fn digits(mut value: u64, len: usize) -> Vec<u8> {
    let mut out = vec![0u8; len];
    for slot in out.iter_mut().rev() {
        *slot = (value % 10) as u8;
        value /= 10;
    }
    out
}

fn floor_log6(mut d: u64) -> u32 {
    let mut k = 0;
    while d >= 6 {
        d /= 6;
        k += 1;
    }
    k
}

/// `|V(G_n)|` from the recurrence `|V_n| = |V_{n-1}| + 8 · 10^{n-1}`.
pub fn vertex_count(level: u32) -> u64 {
    (1..=level).fold(2, |acc, j| acc + INTERNAL as u64 * 10u64.pow(j - 1))
}
