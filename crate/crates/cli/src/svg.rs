//! Self-contained SVG figures: a log₁₀ heatmap of a field, optionally overlaid
//! with contour polylines and a fitted ellipse.
//!
//! The color ramp is viridis sampled at five stops and interpolated linearly in
//! RGB; `log₁₀ L` is mapped onto it between the field's finite minimum (dark)
//! and maximum (yellow), both printed on the legend.

use std::fmt::Write;

use uvscatter::ellipse::sample_ellipse;
use uvscatter::{Contour, EllipseFit, FieldGrid};

const RAMP: [(f64, f64, f64); 5] = [
    (68.0, 1.0, 84.0),
    (59.0, 82.0, 139.0),
    (33.0, 145.0, 140.0),
    (94.0, 201.0, 98.0),
    (253.0, 231.0, 37.0),
];

/// Quantization of the ramp; neighbouring cells with equal color are merged.
const SHADES: usize = 64;

const PLOT_W: f64 = 520.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 55.0;

pub fn ramp(t: f64) -> String {
    let t = t.clamp(0.0, 1.0) * (RAMP.len() - 1) as f64;
    let k = (t.floor() as usize).min(RAMP.len() - 2);
    let u = t - k as f64;
    let (a, b) = (RAMP[k], RAMP[k + 1]);
    let mix = |p: f64, q: f64| (p + (q - p) * u).round() as u8;
    format!(
        "#{:02x}{:02x}{:02x}",
        mix(a.0, b.0),
        mix(a.1, b.1),
        mix(a.2, b.2)
    )
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Maps ground coordinates (m) to SVG pixels with equal scale on both axes.
struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    scale: f64,
}

impl Frame {
    fn new(field: &FieldGrid) -> Self {
        let half_dx = (field.x_axis[1] - field.x_axis[0]) / 2.0;
        let half_dy = (field.y_axis[1] - field.y_axis[0]) / 2.0;
        let x0 = field.x_axis[0] - half_dx;
        let x1 = field.x_axis[field.nx() - 1] + half_dx;
        let y0 = field.y_axis[0] - half_dy;
        let y1 = field.y_axis[field.ny() - 1] + half_dy;
        Self {
            x0,
            x1,
            y0,
            y1,
            scale: PLOT_W / (x1 - x0),
        }
    }

    fn height(&self) -> f64 {
        (self.y1 - self.y0) * self.scale
    }

    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x0) * self.scale
    }

    fn py(&self, y: f64) -> f64 {
        TOP + (self.y1 - y) * self.scale
    }
}

fn nice_ticks(lo: f64, hi: f64) -> Vec<f64> {
    let raw = (hi - lo) / 8.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let mut t = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while t <= hi + 1e-9 * step {
        out.push(if t.abs() < 1e-9 * step { 0.0 } else { t });
        t += step;
    }
    out
}

fn open(out: &mut String, frame: &Frame, title: &str, desc: &str) {
    let w = LEFT + PLOT_W + RIGHT;
    let h = TOP + frame.height() + BOTTOM;
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.0} {h:.0}" font-family="sans-serif" font-size="12">"#
    )
    .unwrap();
    writeln!(out, "<title>{}</title>", escape(title)).unwrap();
    writeln!(out, "<desc>{}</desc>", escape(desc)).unwrap();
    writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    writeln!(
        out,
        r#"<text x="{:.1}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        LEFT + PLOT_W / 2.0,
        escape(title)
    )
    .unwrap();
}

fn cells(out: &mut String, frame: &Frame, field: &FieldGrid, lmin: f64, lmax: f64) {
    let span = (lmax - lmin).max(f64::MIN_POSITIVE);
    let shade = |g: f64| -> Option<usize> {
        if !(g > 0.0) {
            return None;
        }
        let t = (g.log10() - lmin) / span;
        Some(((t * SHADES as f64) as usize).min(SHADES - 1))
    };
    let dx = field.x_axis[1] - field.x_axis[0];
    let dy = field.y_axis[1] - field.y_axis[0];
    writeln!(out, r#"<g shape-rendering="crispEdges">"#).unwrap();
    for i in 0..field.ny() {
        let y_top = frame.py(field.y_axis[i] + dy / 2.0);
        let mut j = 0;
        while j < field.nx() {
            let Some(s) = shade(field.at(i, j)) else {
                j += 1;
                continue;
            };
            let start = j;
            while j + 1 < field.nx() && shade(field.at(i, j + 1)) == Some(s) {
                j += 1;
            }
            let x_left = frame.px(field.x_axis[start] - dx / 2.0);
            let x_right = frame.px(field.x_axis[j] + dx / 2.0);
            writeln!(
                out,
                r#"<rect x="{x_left:.2}" y="{y_top:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                x_right - x_left,
                dy * frame.scale,
                ramp((s as f64 + 0.5) / SHADES as f64)
            )
            .unwrap();
            j += 1;
        }
    }
    writeln!(out, "</g>").unwrap();
}

fn axes(out: &mut String, frame: &Frame) {
    let (left, right) = (frame.px(frame.x0), frame.px(frame.x1));
    let (top, bottom) = (frame.py(frame.y1), frame.py(frame.y0));
    writeln!(
        out,
        r#"<rect x="{left:.2}" y="{top:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
        right - left,
        bottom - top
    )
    .unwrap();
    for x in nice_ticks(frame.x0, frame.x1) {
        let p = frame.px(x);
        writeln!(
            out,
            r#"<line x1="{p:.2}" y1="{bottom:.2}" x2="{p:.2}" y2="{:.2}" stroke="black"/>"#,
            bottom + 5.0
        )
        .unwrap();
        writeln!(
            out,
            r#"<text x="{p:.2}" y="{:.2}" text-anchor="middle">{x}</text>"#,
            bottom + 18.0
        )
        .unwrap();
    }
    for y in nice_ticks(frame.y0, frame.y1) {
        let p = frame.py(y);
        writeln!(
            out,
            r#"<line x1="{:.2}" y1="{p:.2}" x2="{left:.2}" y2="{p:.2}" stroke="black"/>"#,
            left - 5.0
        )
        .unwrap();
        writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{y}</text>"#,
            left - 8.0,
            p + 4.0
        )
        .unwrap();
    }
    writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">x (m)</text>"#,
        (left + right) / 2.0,
        bottom + 40.0
    )
    .unwrap();
    writeln!(
        out,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">y (m)</text>"#,
        (top + bottom) / 2.0,
        (top + bottom) / 2.0
    )
    .unwrap();
}

fn legend(out: &mut String, frame: &Frame, lmin: f64, lmax: f64) {
    let x = LEFT + PLOT_W + 25.0;
    let (top, bottom) = (TOP, TOP + frame.height().min(300.0));
    writeln!(
        out,
        r#"<defs><linearGradient id="ramp" x1="0" y1="1" x2="0" y2="0">"#
    )
    .unwrap();
    for (k, _) in RAMP.iter().enumerate() {
        let t = k as f64 / (RAMP.len() - 1) as f64;
        writeln!(out, r#"<stop offset="{t}" stop-color="{}"/>"#, ramp(t)).unwrap();
    }
    writeln!(out, "</linearGradient></defs>").unwrap();
    writeln!(
        out,
        r#"<rect x="{x:.2}" y="{top:.2}" width="18" height="{:.2}" fill="url(#ramp)" stroke="black"/>"#,
        bottom - top
    )
    .unwrap();
    writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}">max {:.2e}</text>"#,
        x + 22.0,
        top + 10.0,
        10f64.powf(lmax)
    )
    .unwrap();
    writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}">min {:.2e}</text>"#,
        x + 22.0,
        bottom,
        10f64.powf(lmin)
    )
    .unwrap();
    writeln!(
        out,
        r#"<text x="{x:.2}" y="{:.2}">log10 L</text>"#,
        bottom + 18.0
    )
    .unwrap();
}

fn path(frame: &Frame, pts: &[(f64, f64)], closed: bool) -> String {
    let mut d = String::new();
    for (k, (x, y)) in pts.iter().enumerate() {
        write!(
            d,
            "{}{:.2},{:.2} ",
            if k == 0 { 'M' } else { 'L' },
            frame.px(*x),
            frame.py(*y)
        )
        .unwrap();
    }
    if closed {
        d.push('Z');
    }
    d
}

fn log_range(field: &FieldGrid) -> (f64, f64) {
    let (lo, hi) = field
        .gains
        .iter()
        .filter(|g| g.is_finite() && **g > 0.0)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &g| {
            (l.min(g), h.max(g))
        });
    (lo.log10(), hi.log10())
}

fn render(
    field: &FieldGrid,
    title: &str,
    desc: &str,
    overlay: impl FnOnce(&mut String, &Frame),
) -> String {
    let frame = Frame::new(field);
    let (lmin, lmax) = log_range(field);
    let mut out = String::new();
    open(&mut out, &frame, title, desc);
    cells(&mut out, &frame, field, lmin, lmax);
    overlay(&mut out, &frame);
    axes(&mut out, &frame);
    legend(&mut out, &frame, lmin, lmax);
    out.push_str("</svg>\n");
    out
}

pub fn heatmap(field: &FieldGrid, title: &str, desc: &str) -> String {
    render(field, title, desc, |_, _| {})
}

/// Heatmap with contour polylines in white and the fitted ellipse dashed in red.
pub fn contour_overlay(
    field: &FieldGrid,
    contour: &Contour,
    fit: Option<&EllipseFit>,
    title: &str,
    desc: &str,
) -> String {
    render(field, title, desc, |out, frame| {
        for line in &contour.polylines {
            writeln!(
                out,
                r#"<path d="{}" fill="none" stroke="white" stroke-width="1.5"/>"#,
                path(frame, &line.points, line.closed)
            )
            .unwrap();
        }
        if let Some(fit) = fit {
            writeln!(
                out,
                r#"<path d="{}" fill="none" stroke="red" stroke-width="1.2" stroke-dasharray="6 4"/>"#,
                path(frame, &sample_ellipse(fit, 180), true)
            )
            .unwrap();
            let c = (fit.b * fit.b - fit.a * fit.a).max(0.0).sqrt();
            for fy in [fit.y0 - c, fit.y0 + c] {
                writeln!(
                    out,
                    r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="red"/>"#,
                    frame.px(0.0),
                    frame.py(fy)
                )
                .unwrap();
            }
        }
    })
}
