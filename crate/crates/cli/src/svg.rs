//! Minimal standalone SVG line charts.

use std::fmt::Write;

use anyhow::{bail, Result};

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Default)]
pub struct PlotOptions {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 55.0;
const COLORS: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
];

struct Axis {
    log: bool,
    lo: f64,
    hi: f64,
}

impl Axis {
    fn new(values: impl Iterator<Item = f64>, log: bool) -> Result<Axis> {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for v in values {
            if !v.is_finite() {
                bail!("cannot plot non-finite value {v}");
            }
            if log && v <= 0.0 {
                bail!("log axis needs positive values, got {v}");
            }
            let v = if log { v.log10() } else { v };
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if lo == hi {
            let pad = if lo == 0.0 { 1.0 } else { 0.1 * lo.abs() };
            lo -= pad;
            hi += pad;
        } else {
            let pad = 0.05 * (hi - lo);
            lo -= pad;
            hi += pad;
        }
        Ok(Axis { log, lo, hi })
    }

    /// Position in `[0, 1]` along the axis.
    fn unit(&self, v: f64) -> f64 {
        let v = if self.log { v.log10() } else { v };
        (v - self.lo) / (self.hi - self.lo)
    }

    fn ticks(&self) -> Vec<(f64, String)> {
        if self.log && self.hi - self.lo >= 1.0 {
            let (a, b) = (self.lo.ceil() as i32, self.hi.floor() as i32);
            return (a..=b)
                .map(|e| {
                    (
                        (e as f64 - self.lo) / (self.hi - self.lo),
                        format_tick(10f64.powi(e)),
                    )
                })
                .collect();
        }
        let (lo, hi) = if self.log {
            (10f64.powf(self.lo), 10f64.powf(self.hi))
        } else {
            (self.lo, self.hi)
        };
        let step = nice_step((hi - lo) / 5.0);
        let mut t = (lo / step).ceil() * step;
        let mut out = Vec::new();
        while t <= hi + 1e-9 * step {
            let clean = if t.abs() < 1e-9 * step { 0.0 } else { t };
            out.push((self.unit(clean), format_tick(clean)));
            t += step;
        }
        out
    }
}

fn nice_step(raw: f64) -> f64 {
    let mag = 10f64.powf(raw.log10().floor());
    let f = raw / mag;
    let nice = if f < 1.5 {
        1.0
    } else if f < 3.0 {
        2.0
    } else if f < 7.0 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

fn format_tick(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e5 || v.abs() < 1e-3) {
        format!("{v:.0e}")
    } else {
        let s = format!("{v:.4}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

pub fn render(series: &[Series], opts: &PlotOptions) -> Result<String> {
    if series.is_empty() || series.iter().all(|s| s.points.is_empty()) {
        bail!("nothing to plot: no series with points");
    }
    let pts = || series.iter().flat_map(|s| s.points.iter());
    let xa = Axis::new(pts().map(|p| p.0), opts.log_x)?;
    let ya = Axis::new(pts().map(|p| p.1), opts.log_y)?;
    let (pw, ph) = (WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM);
    let sx = |v: f64| LEFT + xa.unit(v) * pw;
    let sy = |v: f64| TOP + (1.0 - ya.unit(v)) * ph;

    let mut svg = String::new();
    let w = &mut svg;
    writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    )?;
    writeln!(w, r#"<rect width="100%" height="100%" fill="white"/>"#)?;
    writeln!(
        w,
        r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        LEFT + pw / 2.0,
        escape(&opts.title)
    )?;
    writeln!(
        w,
        r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    )?;
    for (u, label) in xa.ticks() {
        let x = LEFT + u * pw;
        let y = TOP + ph;
        writeln!(
            w,
            r##"<line x1="{x:.2}" y1="{TOP}" x2="{x:.2}" y2="{y}" stroke="#e0e0e0"/>"##
        )?;
        writeln!(
            w,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{label}</text>"#,
            y + 16.0
        )?;
    }
    for (u, label) in ya.ticks() {
        let y = TOP + (1.0 - u) * ph;
        let x = LEFT + pw;
        writeln!(
            w,
            r##"<line x1="{LEFT}" y1="{y:.2}" x2="{x}" y2="{y:.2}" stroke="#e0e0e0"/>"##
        )?;
        writeln!(
            w,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{label}</text>"#,
            LEFT - 6.0,
            y + 4.0
        )?;
    }
    writeln!(
        w,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 14.0,
        escape(&opts.x_label)
    )?;
    writeln!(
        w,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        escape(&opts.y_label)
    )?;
    for (i, s) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        if s.points.len() > 1 {
            let path: Vec<String> = s
                .points
                .iter()
                .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
                .collect();
            writeln!(
                w,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
                path.join(" ")
            )?;
        }
        for &(x, y) in &s.points {
            writeln!(
                w,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3.5" fill="{color}"/>"#,
                sx(x),
                sy(y)
            )?;
        }
        let ly = TOP + 14.0 + 20.0 * i as f64;
        let lx = WIDTH - RIGHT + 12.0;
        writeln!(
            w,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/>"#,
            lx + 18.0
        )?;
        writeln!(
            w,
            r#"<text x="{:.2}" y="{:.2}">{}</text>"#,
            lx + 24.0,
            ly + 4.0,
            escape(&s.label)
        )?;
    }
    writeln!(w, "</svg>")?;
    Ok(svg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_point_gives_one_marker() {
        let s = Series {
            label: "a".into(),
            points: vec![(1.0, 2.0)],
        };
        let svg = render(&[s], &PlotOptions::default()).unwrap();
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<circle").count(), 1);
        assert!(!svg.contains("<polyline"));
    }

    #[test]
    fn empty_input_is_rejected() {
        assert!(render(&[], &PlotOptions::default()).is_err());
        let empty = Series {
            label: "x".into(),
            points: vec![],
        };
        assert!(render(&[empty], &PlotOptions::default()).is_err());
    }

    #[test]
    fn log_axis_rejects_nonpositive() {
        let s = Series {
            label: "a".into(),
            points: vec![(1.0, 0.0), (2.0, 1.0)],
        };
        let opts = PlotOptions {
            log_y: true,
            ..Default::default()
        };
        assert!(render(&[s], &opts).is_err());
    }

    #[test]
    fn labels_are_escaped_and_ticks_span_decades() {
        let s = Series {
            label: "a<b".into(),
            points: vec![(1.0, 1.0), (1000.0, 10.0)],
        };
        let opts = PlotOptions {
            log_x: true,
            ..Default::default()
        };
        let svg = render(&[s], &opts).unwrap();
        assert!(svg.contains("a&lt;b"));
        for t in [">1<", ">10<", ">100<", ">1000<"] {
            assert!(svg.contains(t), "missing tick {t}");
        }
    }
}
