//! Minimal deterministic SVG charts.
//!
//! Output depends only on the input numbers, so identical data gives
//! byte-identical files.

use std::fmt::Write;

use crate::fem::SliceGrid;
use crate::learn::BoxStats;

const W: f64 = 640.0;
const H: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 55.0;

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// Heat-map ramp, cold to hot, interpolated linearly in sRGB.
pub const RAMP: [(u8, u8, u8); 9] = [
    (0x31, 0x36, 0x95),
    (0x45, 0x75, 0xb4),
    (0x74, 0xad, 0xd1),
    (0xab, 0xd9, 0xe9),
    (0xfe, 0xe0, 0x90),
    (0xfd, 0xae, 0x61),
    (0xf4, 0x6d, 0x43),
    (0xd7, 0x30, 0x27),
    (0xa5, 0x00, 0x26),
];

/// Colour for `t ∈ [0, 1]` on [`RAMP`]; values outside are clamped.
pub fn ramp_color(t: f64) -> String {
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.0 };
    let s = t * (RAMP.len() - 1) as f64;
    let i = (s.floor() as usize).min(RAMP.len() - 2);
    let f = s - i as f64;
    let mix = |a: u8, b: u8| (a as f64 + f * (b as f64 - a as f64)).round() as u8;
    let (a, b) = (RAMP[i], RAMP[i + 1]);
    format!("#{:02x}{:02x}{:02x}", mix(a.0, b.0), mix(a.1, b.1), mix(a.2, b.2))
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Round numbers for axis ticks covering `[lo, hi]`.
fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = (hi - lo).abs().max(1e-12);
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].into_iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
    let mut t = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while t <= hi + 1e-9 * span {
        out.push(if t.abs() < 1e-12 * step { 0.0 } else { t });
        t += step;
    }
    out
}

fn label(v: f64) -> String {
    let s = format!("{v:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if hi > lo {
        let pad = 0.05 * (hi - lo);
        (lo - pad, hi + pad)
    } else {
        (lo - 0.5, hi + 0.5)
    }
}

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x.0) / (self.x.1 - self.x.0) * (W - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        H - BOTTOM - (y - self.y.0) / (self.y.1 - self.y.0) * (H - TOP - BOTTOM)
    }
}

fn header(svg: &mut String, title: &str) {
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        W / 2.0,
        escape(title)
    );
}

fn axes(svg: &mut String, f: &Frame, x_label: &str, y_label: &str, x_ticks: bool) {
    let (x0, x1, y0, y1) = (LEFT, W - RIGHT, TOP, H - BOTTOM);
    let _ = writeln!(
        svg,
        r#"<rect x="{x0}" y="{y0}" width="{:.1}" height="{:.1}" fill="none" stroke="black"/>"#,
        x1 - x0,
        y1 - y0
    );
    if x_ticks {
        for t in ticks(f.x.0, f.x.1) {
            let x = f.px(t);
            let _ = writeln!(svg, r#"<line x1="{x:.2}" y1="{y1}" x2="{x:.2}" y2="{:.1}" stroke="black"/>"#, y1 + 5.0);
            let _ = writeln!(svg, r#"<text x="{x:.2}" y="{:.1}" text-anchor="middle">{}</text>"#, y1 + 18.0, label(t));
        }
    }
    for t in ticks(f.y.0, f.y.1) {
        let y = f.py(t);
        let _ = writeln!(svg, r#"<line x1="{:.1}" y1="{y:.2}" x2="{x0}" y2="{y:.2}" stroke="black"/>"#, x0 - 5.0);
        let _ = writeln!(svg, r#"<text x="{:.1}" y="{:.2}" text-anchor="end">{}</text>"#, x0 - 8.0, y + 4.0, label(t));
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        (x0 + x1) / 2.0,
        H - 12.0,
        escape(x_label)
    );
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        escape(y_label)
    );
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

/// Polyline chart with one line per series and a legend.
pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let pts = series.iter().flat_map(|s| s.points.iter());
    let (mut xl, mut xh, mut yl, mut yh) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in pts {
        xl = xl.min(x);
        xh = xh.max(x);
        yl = yl.min(y);
        yh = yh.max(y);
    }
    if !xl.is_finite() {
        (xl, xh, yl, yh) = (0.0, 1.0, 0.0, 1.0);
    }
    let f = Frame {
        x: if xh > xl { (xl, xh) } else { padded(xl, xh) },
        y: padded(yl, yh),
    };
    let mut svg = String::new();
    header(&mut svg, title);
    axes(&mut svg, &f, x_label, y_label, true);
    for (k, s) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let path: Vec<String> = s.points.iter().map(|&(x, y)| format!("{:.2},{:.2}", f.px(x), f.py(y))).collect();
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            path.join(" ")
        );
        let ly = TOP + 16.0 + 16.0 * k as f64;
        let lx = W - RIGHT - 150.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"/>"#,
            lx + 20.0
        );
        let _ = writeln!(svg, r#"<text x="{:.1}" y="{:.1}">{}</text>"#, lx + 26.0, ly + 4.0, escape(&s.name));
    }
    svg.push_str("</svg>\n");
    svg
}

/// Box-and-whisker chart; whiskers span min to max.
pub fn box_chart(title: &str, y_label: &str, boxes: &[(String, BoxStats)]) -> String {
    let yl = boxes.iter().map(|b| b.1.min).fold(f64::INFINITY, f64::min);
    let yh = boxes.iter().map(|b| b.1.max).fold(f64::NEG_INFINITY, f64::max);
    let (yl, yh) = if yl.is_finite() { (yl, yh) } else { (0.0, 1.0) };
    let f = Frame {
        x: (0.0, boxes.len().max(1) as f64),
        y: padded(yl, yh),
    };
    let mut svg = String::new();
    header(&mut svg, title);
    axes(&mut svg, &f, "", y_label, false);
    for (k, (name, b)) in boxes.iter().enumerate() {
        let c = f.px(k as f64 + 0.5);
        let half = 0.3 * (f.px(1.0) - f.px(0.0));
        let (ymin, yq1, ymed, yq3, ymax) = (f.py(b.min), f.py(b.q1), f.py(b.median), f.py(b.q3), f.py(b.max));
        let _ = writeln!(svg, r#"<line x1="{c:.2}" y1="{ymax:.2}" x2="{c:.2}" y2="{yq3:.2}" stroke="black"/>"#);
        let _ = writeln!(svg, r#"<line x1="{c:.2}" y1="{yq1:.2}" x2="{c:.2}" y2="{ymin:.2}" stroke="black"/>"#);
        for y in [ymin, ymax] {
            let _ = writeln!(
                svg,
                r#"<line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="black"/>"#,
                c - half / 2.0,
                c + half / 2.0
            );
        }
        let _ = writeln!(
            svg,
            r##"<rect x="{:.2}" y="{yq3:.2}" width="{:.2}" height="{:.2}" fill="#9ecae1" stroke="black"/>"##,
            c - half,
            2.0 * half,
            (yq1 - yq3).max(0.0)
        );
        let _ = writeln!(
            svg,
            r##"<line x1="{:.2}" y1="{ymed:.2}" x2="{:.2}" y2="{ymed:.2}" stroke="#d62728" stroke-width="2"/>"##,
            c - half,
            c + half
        );
        let _ = writeln!(
            svg,
            r#"<text x="{c:.2}" y="{:.1}" text-anchor="middle">{}</text>"#,
            H - BOTTOM + 18.0,
            escape(name)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// Filled-cell heat map of a slice with a colour bar.
pub fn heatmap(title: &str, grid: &SliceGrid) -> String {
    let finite = grid.values.iter().copied().filter(|v| v.is_finite());
    let (lo, hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(v), h.max(v)));
    let (lo, hi) = if lo.is_finite() { (lo, hi) } else { (0.0, 1.0) };
    let scale = |v: f64| if hi > lo { (v - lo) / (hi - lo) } else { 0.5 };
    let (nu, nv) = (grid.u.len(), grid.v.len());
    let f = Frame {
        x: (grid.u[0], grid.u[nu - 1]),
        y: (grid.v[0], grid.v[nv - 1]),
    };
    let (ua, va) = grid.plane.axis.in_plane();
    let mut svg = String::new();
    header(&mut svg, title);
    let edge = |c: &[f64], i: usize| -> (f64, f64) {
        let a = if i == 0 { c[0] } else { 0.5 * (c[i - 1] + c[i]) };
        let b = if i + 1 == c.len() { c[i] } else { 0.5 * (c[i] + c[i + 1]) };
        (a, b)
    };
    for j in 0..nv {
        let (v0, v1) = edge(&grid.v, j);
        for i in 0..nu {
            let (u0, u1) = edge(&grid.u, i);
            let t = grid.at(i, j);
            if !t.is_finite() {
                continue;
            }
            let _ = writeln!(
                svg,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                f.px(u0),
                f.py(v1),
                f.px(u1) - f.px(u0) + 0.3,
                f.py(v0) - f.py(v1) + 0.3,
                ramp_color(scale(t))
            );
        }
    }
    axes(&mut svg, &f, &format!("{ua} (mm)"), &format!("{va} (mm)"), true);
    let bar_x = W - RIGHT + 2.0;
    for k in 0..50 {
        let t = k as f64 / 49.0;
        let y = H - BOTTOM - t * (H - TOP - BOTTOM);
        let _ = writeln!(
            svg,
            r#"<rect x="{bar_x:.1}" y="{:.2}" width="10" height="{:.2}" fill="{}"/>"#,
            y - (H - TOP - BOTTOM) / 50.0,
            (H - TOP - BOTTOM) / 50.0 + 0.3,
            ramp_color(t)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{:.3} to {:.3} °C</text>"#,
        W - RIGHT,
        TOP - 6.0,
        lo,
        hi
    );
    svg.push_str("</svg>\n");
    svg
}
