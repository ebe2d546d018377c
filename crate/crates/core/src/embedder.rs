//! The double-diamond embedding of `G_n` into the first Heisenberg group.
//!
//! Every copy of `G_1` is drawn as a figure eight in the plane: jutting
//! segments on the axis and two rhombi whose sides make angle `θ` with it.
//! The upper branch climbs then descends, the lower one does the opposite,
//! so both branches sweep zero signed area against the chord. Each level of
//! refinement uses its own angle `θ_j`, the coarsest copy the largest.
//!
//! The vertical coordinate is the swept area along any monotone path from
//! the source, which makes every edge a horizontal unit segment.
//!
//! Coordinates are kept in double-double precision. At level 4 the images
//! reach size `10^3` and the centers `10^5`, so plain `f64` would leave edge
//! increments with a center of order `10^-12` and a non-horizontality
//! `NH = |center|^{1/2}` near `10^-6`.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use twofloat::TwoFloat;

use crate::error::{Error, Result};
use crate::heis::H1;
use crate::laakso::{local, LaaksoGraph, VertexId, TEMPLATE_EDGES};

/// Angles at or above this bound are refused.
pub const HARD_ANGLE_CAP: f64 = FRAC_PI_2;

/// Bound on `θ_1` below which the embedding is in its intended small-angle
/// regime. Informational only: coarser schedules still embed.
pub const SMALLNESS_CAP: f64 = 0.05;

pub const DEFAULT_M: f64 = 17.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleSchedule {
    /// Offset `M` when built from the formula, `None` for explicit angles.
    pub offset: Option<f64>,
    pub thetas: Vec<f64>,
}

impl AngleSchedule {
    /// `θ_j = 1 / (sqrt(M + j) · log2(M + j))` for `j = 1..=n`.
    pub fn from_formula(m: f64, n: u32) -> Result<Self> {
        if !(m >= 2.0) {
            return Err(Error::OffsetTooSmall(m));
        }
        let thetas = (1..=n)
            .map(|j| {
                let x = m + j as f64;
                1.0 / (x.sqrt() * x.log2())
            })
            .collect();
        Ok(AngleSchedule {
            offset: Some(m),
            thetas,
        })
    }

    /// Explicit angles, nonincreasing, each in `[0, π/2)`.
    pub fn from_thetas(thetas: Vec<f64>) -> Result<Self> {
        if let Some(&bad) = thetas
            .iter()
            .find(|t| !(**t >= 0.0 && **t < HARD_ANGLE_CAP))
        {
            return Err(Error::AngleOutOfRange(bad));
        }
        if thetas.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::ScheduleNotDecreasing);
        }
        Ok(AngleSchedule {
            offset: None,
            thetas,
        })
    }

    pub fn len(&self) -> usize {
        self.thetas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thetas.is_empty()
    }

    /// `θ_j`, 1-based.
    pub fn theta(&self, j: usize) -> f64 {
        self.thetas[j - 1]
    }

    pub fn within_smallness_cap(&self) -> bool {
        self.thetas.first().is_none_or(|&t| t < SMALLNESS_CAP)
    }

    /// `L_{ℓ,m}`; see [`scale_constant`].
    pub fn scale_constant(&self, ell: usize, m: usize) -> Result<ScaleConstant> {
        scale_constant(self, ell, m)
    }
}

/// `L_{ℓ,m}` together with the full-schedule value `L_{1,len}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleConstant {
    pub value: f64,
    pub limit: f64,
}

/// Span of one refined copy relative to its edge length.
pub fn span_factor(theta: f64) -> f64 {
    2.0 + 4.0 * theta.cos()
}

/// `L_{ℓ,m} = Π_{j=ℓ}^{m} 6 / (2 + 4 cos θ_j)`, so that a copy of `G_k`
/// refined with `θ_{n-k+1}, …, θ_n` has terminals `6^k / L_{n-k+1,n}` apart.
pub fn scale_constant(schedule: &AngleSchedule, ell: usize, m: usize) -> Result<ScaleConstant> {
    let len = schedule.len();
    if ell < 1 || ell > m || m > len {
        return Err(Error::IndexOrder { ell, m, len });
    }
    let product = |range: std::ops::RangeInclusive<usize>| -> f64 {
        range
            .map(|j| 6.0 / span_factor(schedule.theta(j)))
            .product()
    };
    Ok(ScaleConstant {
        value: product(ell..=m),
        limit: product(1..=len),
    })
}

/// Shoelace signed area of a polyline, optionally closed by the chord from
/// its last point back to its first.
pub fn signed_area(points: &[[f64; 2]], closed_by_chord: bool) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::TooFewPoints {
            need: 2,
            got: points.len(),
        });
    }
    let cross = |p: [f64; 2], q: [f64; 2]| p[0] * q[1] - p[1] * q[0];
    let mut twice: f64 = points.windows(2).map(|w| cross(w[0], w[1])).sum();
    if closed_by_chord {
        twice += cross(points[points.len() - 1], points[0]);
    }
    Ok(0.5 * twice)
}

type Planar = [TwoFloat; 2];

fn dd(x: f64) -> TwoFloat {
    TwoFloat::from(x)
}

/// Vertical increment for a horizontal segment from `p` to `q`.
fn lift_increment(p: Planar, q: Planar) -> TwoFloat {
    (p[0] * q[1] - p[1] * q[0]) * 0.5
}

/// Position of a template vertex inside a copy of `G_1` with terminals `a`,
/// `b`, drawn at angle `theta`.
fn template_position(a: Planar, b: Planar, theta: f64, loc: u8) -> Planar {
    let axis = [b[0] - a[0], b[1] - a[1]];
    // the figure eight closes for any (c, s), so rounding θ's sine and
    // cosine only perturbs the angle, never the zero-area property
    let (c, s) = (theta.cos(), theta.sin());
    let e = dd(1.0) / (dd(c) * 4.0 + 2.0);
    let along = |k: f64| e * (dd(c) * k + 1.0);
    // coordinates along (axis, normal), in units of the full span
    let (u, v) = match loc {
        local::SOURCE => (dd(0.0), dd(0.0)),
        local::FORK_A => (e, dd(0.0)),
        local::TOP1 => (along(1.0), e * s),
        local::MID_TOP | local::MID_BOT => (along(2.0), dd(0.0)),
        local::TOP2 => (along(3.0), -(e * s)),
        local::BOT1 => (along(1.0), -(e * s)),
        local::BOT2 => (along(3.0), e * s),
        local::FORK_B => (along(4.0), dd(0.0)),
        _ => (dd(1.0), dd(0.0)),
    };
    [
        a[0] + u * axis[0] - v * axis[1],
        a[1] + u * axis[1] + v * axis[0],
    ]
}

#[derive(Debug, Clone)]
pub struct EmbeddedMap<'g> {
    graph: &'g LaaksoGraph,
    schedule: AngleSchedule,
    planar: Vec<Planar>,
    vertical: Vec<TwoFloat>,
}

/// Lays out `G_n` with the first `n` angles of `schedule`.
pub fn embed<'g>(graph: &'g LaaksoGraph, schedule: &AngleSchedule) -> Result<EmbeddedMap<'g>> {
    let n = graph.level();
    if schedule.len() < n as usize {
        return Err(Error::ScheduleTooShort {
            needed: n,
            got: schedule.len(),
        });
    }
    let span = schedule.thetas[..n as usize]
        .iter()
        .fold(dd(1.0), |acc, &t| acc * (dd(t.cos()) * 4.0 + 2.0));
    let zero = [dd(0.0), dd(0.0)];
    let mut planar = vec![zero; graph.num_vertices()];
    planar[graph.sink() as usize] = [span, dd(0.0)];
    for j in 1..=n {
        let theta = schedule.theta(j as usize);
        let coarse = graph.level_edges(j - 1);
        let fine = graph.level_edges(j);
        for (i, &(a, b)) in coarse.iter().enumerate() {
            let (pa, pb) = (planar[a as usize], planar[b as usize]);
            // the 10 fine edges of this copy list its internal vertices
            for (k, &(from, to)) in TEMPLATE_EDGES.iter().enumerate() {
                let (u, v) = fine[10 * i + k];
                for (loc, id) in [(from, u), (to, v)] {
                    if loc != local::SOURCE && loc != local::SINK {
                        planar[id as usize] = template_position(pa, pb, theta, loc);
                    }
                }
            }
        }
    }

    let mut order: Vec<VertexId> = (0..graph.num_vertices() as u32).collect();
    order.sort_by_key(|&v| graph.height(v));
    let mut vertical = vec![dd(0.0); graph.num_vertices()];
    for &v in order.iter().skip(1) {
        let parent = graph
            .neighbors(v)
            .iter()
            .copied()
            .find(|&w| graph.height(w) < graph.height(v))
            .expect("every non-source vertex has a lower neighbour");
        vertical[v as usize] =
            vertical[parent as usize] + lift_increment(planar[parent as usize], planar[v as usize]);
    }

    Ok(EmbeddedMap {
        graph,
        schedule: schedule.clone(),
        planar,
        vertical,
    })
}

impl<'g> EmbeddedMap<'g> {
    pub fn graph(&self) -> &'g LaaksoGraph {
        self.graph
    }

    pub fn schedule(&self) -> &AngleSchedule {
        &self.schedule
    }

    pub fn planar(&self, v: VertexId) -> [f64; 2] {
        let [x, y] = self.planar[v as usize];
        [x.into(), y.into()]
    }

    pub fn vertical(&self, v: VertexId) -> f64 {
        self.vertical[v as usize].into()
    }

    /// `f(v)`, rounded to `f64`.
    pub fn point(&self, v: VertexId) -> H1 {
        let [x, y] = self.planar(v);
        H1 {
            z: Complex64::new(x, y),
            t: self.vertical(v),
        }
    }

    pub fn points(&self) -> Vec<H1> {
        (0..self.planar.len() as u32)
            .map(|v| self.point(v))
            .collect()
    }

    /// `f(u)⁻¹ f(v)`, evaluated before rounding.
    pub fn increment(&self, u: VertexId, v: VertexId) -> H1 {
        let (p, q) = (self.planar[u as usize], self.planar[v as usize]);
        let t = self.vertical[v as usize] - self.vertical[u as usize] - lift_increment(p, q);
        H1 {
            z: Complex64::new((q[0] - p[0]).into(), (q[1] - p[1]).into()),
            t: t.into(),
        }
    }

    /// Koranyi distance between the images of two vertices.
    pub fn distance(&self, u: VertexId, v: VertexId) -> f64 {
        self.increment(u, v).norm()
    }

    /// Angle in `[0, π/2]` between the segment `f̃(u) f̃(v)` and the axis
    /// through the images of the source and sink.
    pub fn segment_angle(&self, u: VertexId, v: VertexId) -> Result<f64> {
        for w in [u, v] {
            if !self.graph.contains(w) {
                return Err(Error::InvalidVertex(w));
            }
        }
        let step = self.increment(u, v).z;
        if step.re == 0.0 && step.im == 0.0 {
            return Err(Error::CoincidentPlanarImages);
        }
        Ok(step.im.abs().atan2(step.re.abs()))
    }

    /// Signed area enclosed by the images of a vertex path and its chord.
    pub fn path_area(&self, path: &[VertexId]) -> Result<f64> {
        if path.len() < 2 {
            return Err(Error::TooFewPoints {
                need: 2,
                got: path.len(),
            });
        }
        let closed = path.iter().chain(std::iter::once(&path[0]));
        let pts: Vec<Planar> = closed.map(|&v| self.planar[v as usize]).collect();
        let twice = pts.windows(2).fold(dd(0.0), |acc, w| {
            acc + w[0][0] * w[1][1] - w[0][1] * w[1][0]
        });
        Ok((twice * 0.5).into())
    }

    /// CSV with header `vertex_id,planar_x,planar_y,vertical`.
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "vertex_id,planar_x,planar_y,vertical")?;
        for v in 0..self.planar.len() as u32 {
            let [x, y] = self.planar(v);
            writeln!(out, "{v},{x:e},{y:e},{:e}", self.vertical(v))?;
        }
        Ok(())
    }
}
