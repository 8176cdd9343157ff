use std::fmt::Write;

use super::{Canvas, FrameScene};
use crate::simplex::CartesianPoint;

const MARGIN: f64 = 0.1;
const DOT_RADIUS: f64 = 5.0;
const LABEL_OFFSET: f64 = 16.0;

/// Maps scene coordinates to pixels, y pointing down.
pub(super) struct Viewport {
    scale: f64,
    min_x: f64,
    max_y: f64,
    offset_x: f64,
    offset_y: f64,
}

impl Viewport {
    /// Fixed bounds per vertex count so every frame of a run lines up.
    pub(super) fn for_scene(n: usize, canvas: Canvas) -> Self {
        let (min_x, max_x, min_y, max_y) =
            if n == 3 { (0.0, 2.0 / 3f64.sqrt(), 0.0, 1.0) } else { (-1.0, 1.0, -1.0, 1.0) };
        let (w, h) = (canvas.width as f64, canvas.height as f64);
        let scale = ((w * (1.0 - 2.0 * MARGIN)) / (max_x - min_x)).min((h * (1.0 - 2.0 * MARGIN)) / (max_y - min_y));
        Self {
            scale,
            min_x,
            max_y,
            offset_x: (w - scale * (max_x - min_x)) / 2.0,
            offset_y: (h - scale * (max_y - min_y)) / 2.0,
        }
    }

    pub(super) fn px(&self, p: &CartesianPoint) -> (f64, f64) {
        (self.offset_x + (p.x() - self.min_x) * self.scale, self.offset_y + (self.max_y - p.y()) * self.scale)
    }
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            _ => out.push(c),
        }
    }
    out
}

/// Fixed 3-decimal formatting without a negative zero.
fn num(v: f64) -> String {
    let s = format!("{v:.3}");
    if s == "-0.000" {
        "0.000".into()
    } else {
        s
    }
}

/// Serializes a scene. Element order is fixed: frame, gridlines, dots,
/// labels, odometer; identical scenes give identical bytes.
pub fn frame_to_svg(scene: &FrameScene) -> Vec<u8> {
    let canvas = scene.canvas;
    let vp = Viewport::for_scene(scene.n(), canvas);
    let mut s = String::new();
    let (w, h) = (canvas.width, canvas.height);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="14">"#
    );
    let _ = writeln!(s, r##"<rect class="background" x="0" y="0" width="{w}" height="{h}" fill="#ffffff"/>"##);

    s.push_str("<g class=\"frame\">\n");
    let verts: Vec<(f64, f64)> = scene.screen_vertices.iter().map(|v| vp.px(v)).collect();
    if scene.n() == 3 {
        let points: Vec<String> = verts.iter().map(|(x, y)| format!("{},{}", num(*x), num(*y))).collect();
        let _ = writeln!(
            s,
            r##"<polygon class="outline" points="{}" fill="none" stroke="#333333" stroke-width="1.5"/>"##,
            points.join(" ")
        );
    } else {
        for (i, j) in scene.embedding.edges() {
            let ((x1, y1), (x2, y2)) = (verts[i], verts[j]);
            let _ = writeln!(
                s,
                r##"<line class="edge" x1="{}" y1="{}" x2="{}" y2="{}" stroke="#333333" stroke-width="1.5"/>"##,
                num(x1),
                num(y1),
                num(x2),
                num(y2)
            );
        }
    }
    s.push_str("</g>\n");

    s.push_str("<g class=\"gridlines\">\n");
    for g in &scene.gridlines {
        let ((x1, y1), (x2, y2)) = (vp.px(&g.from), vp.px(&g.to));
        let _ = writeln!(
            s,
            r##"<line class="gridline" data-axis="{}" data-level="{}" x1="{}" y1="{}" x2="{}" y2="{}" stroke="#cccccc" stroke-width="0.5"/>"##,
            g.axis,
            num(g.level),
            num(x1),
            num(y1),
            num(x2),
            num(y2)
        );
    }
    s.push_str("</g>\n");

    let axis_names: Vec<&str> = scene.labels.iter().map(|l| l.text.as_str()).collect();
    s.push_str("<g class=\"dots\">\n");
    for d in &scene.dots {
        let (x, y) = vp.px(&d.screen);
        let shares: Vec<String> = d
            .coords
            .coords()
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let name = axis_names.get(i).copied().unwrap_or("?");
                format!("{} {:.1}%", escape(name), p * 100.0)
            })
            .collect();
        let _ = writeln!(
            s,
            r#"<circle class="dot" data-session="{sid}" cx="{}" cy="{}" r="{}" fill="{}" fill-opacity="0.85"><title>{sid} | {}</title></circle>"#,
            num(x),
            num(y),
            num(DOT_RADIUS),
            d.color,
            shares.join(" | "),
            sid = escape(&d.session_id),
        );
    }
    s.push_str("</g>\n");

    s.push_str("<g class=\"labels\">\n");
    let (cx, cy) = if verts.is_empty() {
        (w as f64 / 2.0, h as f64 / 2.0)
    } else {
        let k = verts.len() as f64;
        (verts.iter().map(|v| v.0).sum::<f64>() / k, verts.iter().map(|v| v.1).sum::<f64>() / k)
    };
    for label in &scene.labels {
        let (x, y) = vp.px(&label.anchor);
        let (dx, dy) = (x - cx, y - cy);
        let len = dx.hypot(dy);
        let (ux, uy) = if len > 1e-9 { (dx / len, dy / len) } else { (0.0, -1.0) };
        let _ = writeln!(
            s,
            r#"<text class="label" x="{}" y="{}" text-anchor="middle" dominant-baseline="middle">{}</text>"#,
            num(x + ux * LABEL_OFFSET),
            num(y + uy * LABEL_OFFSET),
            escape(&label.text)
        );
    }
    s.push_str("</g>\n");

    let _ = writeln!(
        s,
        r#"<text class="odometer" x="{}" y="{}" text-anchor="middle" font-size="18">{}</text>"#,
        num(w as f64 / 2.0),
        num(h as f64 * (1.0 - MARGIN / 3.0)),
        escape(&scene.odometer)
    );
    s.push_str("</svg>\n");
    s.into_bytes()
}
