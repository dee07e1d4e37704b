use std::fmt::Write;

use super::{Frame, Layout, Point};

const SCALE: f64 = 200.0;
const MARGIN: f64 = 20.0;

/// Class colors in palette order. The first three follow the usual
/// red/green/blue assignment for three-class data.
const COLORS: [&str; 10] = [
    "#d62728", "#2ca02c", "#1f77b4", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

pub fn class_color(index: usize) -> &'static str {
    COLORS[index % COLORS.len()]
}

/// Maps layout coordinates onto the SVG canvas (y grows downward there).
struct Canvas {
    min_x: f64,
    max_y: f64,
    width: f64,
    height: f64,
}

impl Canvas {
    fn for_layout(layout: &Layout) -> Canvas {
        let (min_x, max_x, min_y, max_y) = match &layout.frame {
            Frame::Parallel { axes } => {
                let last = axes.len().saturating_sub(1) as f64;
                (0.0, last.max(1.0), 0.0, 1.0)
            }
            Frame::ShiftedPaired { origins, size } => {
                let right = origins.last().map(|o| o[0] + size).unwrap_or(*size);
                (0.0, right, 0.0, *size)
            }
            Frame::Circular { radius, .. } => (-radius, *radius, -radius, *radius),
        };
        Canvas {
            min_x,
            max_y,
            width: (max_x - min_x) * SCALE + 2.0 * MARGIN,
            height: (max_y - min_y) * SCALE + 2.0 * MARGIN,
        }
    }

    fn map(&self, p: Point) -> (f64, f64) {
        (
            MARGIN + (p[0] - self.min_x) * SCALE,
            MARGIN + (self.max_y - p[1]) * SCALE,
        )
    }
}

/// Renders the frame and one `<path>` per glyph, colored by class.
pub fn render_svg(layout: &Layout) -> String {
    let canvas = Canvas::for_layout(layout);
    let mut out = String::new();
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.2} {h:.2}">"#,
        w = canvas.width,
        h = canvas.height
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);

    let _ = writeln!(out, r#"<g class="frame" stroke="black" stroke-width="1" fill="none">"#);
    match &layout.frame {
        Frame::Parallel { axes } => {
            for [a, b] in axes {
                line(&mut out, &canvas, *a, *b);
            }
        }
        Frame::ShiftedPaired { origins, size } => {
            for o in origins {
                let (x, y) = canvas.map([o[0], o[1] + size]);
                let _ = writeln!(
                    out,
                    r#"<rect x="{x:.3}" y="{y:.3}" width="{s:.3}" height="{s:.3}"/>"#,
                    s = size * SCALE
                );
            }
        }
        Frame::Circular { radius, boundaries } => {
            let (cx, cy) = canvas.map([0.0, 0.0]);
            let _ = writeln!(
                out,
                r#"<circle cx="{cx:.3}" cy="{cy:.3}" r="{r:.3}"/>"#,
                r = radius * SCALE
            );
            for &angle in boundaries {
                let edge = [radius * angle.sin(), radius * angle.cos()];
                line(&mut out, &canvas, [0.0, 0.0], edge);
            }
        }
    }
    let _ = writeln!(out, "</g>");

    let _ = writeln!(out, r#"<g class="cases" fill="none" stroke-width="1">"#);
    for g in &layout.glyphs {
        let color_index = layout
            .classes
            .iter()
            .position(|c| c == &g.label)
            .unwrap_or(layout.classes.len());
        let mut d = String::new();
        for (i, v) in g.vertices.iter().enumerate() {
            let (x, y) = canvas.map(*v);
            if i == 0 {
                let _ = write!(d, "M{x:.3},{y:.3}");
            } else if layout.kind.is_circular() && i - 1 < g.controls.len() {
                let (cx, cy) = canvas.map(g.controls[i - 1]);
                let _ = write!(d, " Q{cx:.3},{cy:.3} {x:.3},{y:.3}");
            } else {
                let _ = write!(d, " L{x:.3},{y:.3}");
            }
        }
        let _ = writeln!(
            out,
            r#"<path data-case="{}" class="glyph" stroke="{}" d="{}"><title>{}</title></path>"#,
            g.case_id,
            class_color(color_index),
            d,
            escape(&g.label)
        );
    }
    let _ = writeln!(out, "</g>");

    let _ = writeln!(out, "</svg>");
    out
}

fn line(out: &mut String, canvas: &Canvas, a: Point, b: Point) {
    let (x1, y1) = canvas.map(a);
    let (x2, y2) = canvas.map(b);
    let _ = writeln!(out, r#"<line x1="{x1:.3}" y1="{y1:.3}" x2="{x2:.3}" y2="{y2:.3}"/>"#);
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
