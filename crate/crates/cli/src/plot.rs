//! Plot series as CSV and as small standalone SVG charts.

use std::fmt::Write;

use lmkit_core::diagnostics::{PlotData, PlotKind, PlotSeries};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 60.0;

fn csv_header(label: &str) -> String {
    if label.contains([',', '"', ' ']) {
        format!("\"{}\"", label.replace('"', "\"\""))
    } else {
        label.to_string()
    }
}

/// `x,y` pairs, or `edge,count` with the closing edge carrying a count of 0.
pub fn series_csv(series: &PlotSeries) -> String {
    let mut out = String::new();
    match &series.data {
        PlotData::Points(points) => {
            let _ = writeln!(out, "{},{}", csv_header(&series.x_label), csv_header(&series.y_label));
            for (x, y) in points {
                let _ = writeln!(out, "{x},{y}");
            }
        }
        PlotData::Bins { edges, counts } => {
            out.push_str("edge,count\n");
            for (i, e) in edges.iter().enumerate() {
                let _ = writeln!(out, "{e},{}", counts.get(i).copied().unwrap_or(0));
            }
        }
    }
    out
}

struct Scale {
    lo: f64,
    hi: f64,
    from: f64,
    to: f64,
}

impl Scale {
    fn new(values: impl Iterator<Item = f64>, from: f64, to: f64) -> Self {
        let (mut lo, mut hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        if !lo.is_finite() || !hi.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        if hi - lo < 1e-12 * lo.abs().max(1.0) {
            lo -= 0.5;
            hi += 0.5;
        }
        let pad = 0.04 * (hi - lo);
        Self { lo: lo - pad, hi: hi + pad, from, to }
    }

    fn at(&self, v: f64) -> f64 {
        self.from + (v - self.lo) / (self.hi - self.lo) * (self.to - self.from)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn tick(v: f64) -> String {
    format!("{:.3}", v).trim_end_matches('0').trim_end_matches('.').to_string()
}

/// A 640×480 SVG with axes, end-point tick labels and axis titles.
pub fn series_svg(series: &PlotSeries, title: &str) -> String {
    let (xs, ys): (Vec<f64>, Vec<f64>) = match &series.data {
        PlotData::Points(p) => p.iter().copied().unzip(),
        PlotData::Bins { edges, counts } => (edges.clone(), counts.iter().map(|&c| c as f64).chain([0.0]).collect()),
    };
    let sx = Scale::new(xs.iter().copied(), MARGIN, WIDTH - MARGIN / 2.0);
    let sy = Scale::new(ys.iter().copied(), HEIGHT - MARGIN, MARGIN / 2.0);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, WIDTH / 2.0, escape(title));
    let (x0, x1, y0, y1) = (MARGIN, WIDTH - MARGIN / 2.0, HEIGHT - MARGIN, MARGIN / 2.0);
    let _ = writeln!(s, r#"<path d="M{x0},{y1} L{x0},{y0} L{x1},{y0}" fill="none" stroke="black"/>"#);
    for (v, anchor) in [(sx.lo, "start"), (sx.hi, "end")] {
        let _ = writeln!(s, r#"<text x="{:.1}" y="{}" font-size="10" text-anchor="{anchor}">{}</text>"#, sx.at(v), y0 + 14.0, tick(v));
    }
    for v in [sy.lo, sy.hi] {
        let _ = writeln!(s, r#"<text x="{}" y="{:.1}" font-size="10" text-anchor="end">{}</text>"#, x0 - 4.0, sy.at(v) + 3.0, tick(v));
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle" font-size="12">{}</text>"#, (x0 + x1) / 2.0, HEIGHT - 20.0, escape(&series.x_label));
    let _ = writeln!(
        s,
        r#"<text x="18" y="{0}" text-anchor="middle" font-size="12" transform="rotate(-90 18 {0})">{1}</text>"#,
        (y0 + y1) / 2.0,
        escape(&series.y_label)
    );
    match &series.data {
        PlotData::Points(points) => {
            if series.kind == PlotKind::Scatter {
                let _ = writeln!(s, r#"<line x1="{x0}" y1="{0:.1}" x2="{x1}" y2="{0:.1}" stroke="grey" stroke-dasharray="4"/>"#, sy.at(0.0).clamp(y1, y0));
            }
            if series.kind == PlotKind::Qq && points.len() >= 2 {
                // line through the quartiles, as a visual reference
                let (a, b) = (points[points.len() / 4], points[3 * points.len() / 4]);
                if b.0 > a.0 {
                    let slope = (b.1 - a.1) / (b.0 - a.0);
                    let y = |x: f64| a.1 + slope * (x - a.0);
                    let _ = writeln!(
                        s,
                        r#"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="grey"/>"#,
                        sx.at(sx.lo), sy.at(y(sx.lo)), sx.at(sx.hi), sy.at(y(sx.hi))
                    );
                }
            }
            for (x, y) in points {
                let _ = writeln!(s, r#"<circle cx="{:.1}" cy="{:.1}" r="3" fill="none" stroke="black"/>"#, sx.at(*x), sy.at(*y));
            }
        }
        PlotData::Bins { edges, counts } => {
            for (i, c) in counts.iter().enumerate() {
                let (l, r) = (sx.at(edges[i]), sx.at(edges[i + 1]));
                let top = sy.at(*c as f64);
                let _ = writeln!(
                    s,
                    r#"<rect x="{l:.1}" y="{top:.1}" width="{:.1}" height="{:.1}" fill="lightgrey" stroke="black"/>"#,
                    r - l,
                    sy.at(0.0) - top
                );
            }
        }
    }
    s.push_str("</svg>\n");
    s
}
