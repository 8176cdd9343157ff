use std::fmt::Write;

use super::{RenderError, Result, PALETTE};
use crate::owi::{builtin_spec, DatasetSeries, BUILTIN_SPECS};

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 450.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 50.0;
const MAX_X_TICKS: usize = 10;

/// Raw metrics plotted under `name`: the metric itself, or the sources of a
/// built-in composite of that name.
pub fn resolve_metric(d: &DatasetSeries, name: &str) -> Result<Vec<String>> {
    if d.has_metric(name) {
        return Ok(vec![name.to_string()]);
    }
    for spec_name in BUILTIN_SPECS {
        let spec = builtin_spec(spec_name)?;
        if let Some(c) = spec.composite(name) {
            if let Some(missing) = c.sources.iter().find(|s| !d.has_metric(s)) {
                return Err(RenderError::MissingMetric(missing.clone()));
            }
            return Ok(c.sources.clone());
        }
    }
    Err(RenderError::MissingMetric(name.to_string()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SnapShares {
    pub snap_id: u64,
    /// One share per requested metric, relative to the snap's total of all metrics.
    pub shares: Vec<f64>,
}

/// Per-snap shares of each named metric; a snap with zero total gets zeros.
pub fn metric_shares(d: &DatasetSeries, metrics: &[&str]) -> Result<Vec<SnapShares>> {
    let resolved: Vec<Vec<String>> = metrics.iter().map(|m| resolve_metric(d, m)).collect::<Result<_>>()?;
    Ok(d.snaps()
        .iter()
        .map(|g| {
            let total: f64 = g.sessions.iter().map(|s| s.metrics.total()).sum();
            let shares = resolved
                .iter()
                .map(|sources| {
                    let sum: f64 =
                        g.sessions.iter().flat_map(|s| sources.iter().map(|m| s.metrics.get(m).unwrap_or(0.0))).sum();
                    if total > 0.0 {
                        sum / total
                    } else {
                        0.0
                    }
                })
                .collect();
            SnapShares { snap_id: g.snap_id, shares }
        })
        .collect())
}

fn num(v: f64) -> String {
    let s = format!("{v:.3}");
    if s == "-0.000" {
        "0.000".into()
    } else {
        s
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

struct Plot {
    slots: usize,
}

impl Plot {
    fn slot_width(&self) -> f64 {
        (WIDTH - LEFT - RIGHT) / self.slots.max(1) as f64
    }

    fn center_x(&self, i: usize) -> f64 {
        LEFT + (i as f64 + 0.5) * self.slot_width()
    }

    fn y(share: f64) -> f64 {
        HEIGHT - BOTTOM - share * (HEIGHT - TOP - BOTTOM)
    }
}

fn header(s: &mut String, kind: &str) {
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" class="{kind}" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r##"<rect class="background" x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>"##);
}

fn axes(s: &mut String, plot: &Plot, rows: &[SnapShares]) {
    s.push_str("<g class=\"axes\">\n");
    let (x0, x1) = (num(LEFT), num(WIDTH - RIGHT));
    for pct in [0u32, 25, 50, 75, 100] {
        let y = num(Plot::y(pct as f64 / 100.0));
        let _ = writeln!(s, r##"<line class="tick" x1="{x0}" y1="{y}" x2="{x1}" y2="{y}" stroke="#e0e0e0"/>"##);
        let _ = writeln!(
            s,
            r#"<text class="tick-label" x="{}" y="{y}" text-anchor="end" dominant-baseline="middle">{pct}%</text>"#,
            num(LEFT - 6.0)
        );
    }
    let stride = rows.len().div_ceil(MAX_X_TICKS).max(1);
    for (i, row) in rows.iter().enumerate().filter(|(i, _)| i % stride == 0) {
        let _ = writeln!(
            s,
            r#"<text class="tick-label" x="{}" y="{}" text-anchor="middle">{}</text>"#,
            num(plot.center_x(i)),
            num(HEIGHT - BOTTOM + 16.0),
            row.snap_id
        );
    }
    let _ = writeln!(
        s,
        r#"<text class="axis-title" x="{}" y="{}" text-anchor="middle">snap_id</text>"#,
        num(LEFT + (WIDTH - LEFT - RIGHT) / 2.0),
        num(HEIGHT - 12.0)
    );
    s.push_str("</g>\n");
}

fn legend(s: &mut String, metrics: &[&str]) {
    s.push_str("<g class=\"legend\">\n");
    for (i, m) in metrics.iter().enumerate() {
        let y = TOP + 20.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<rect class="legend-swatch" x="{}" y="{}" width="12" height="12" fill="{}"/>"#,
            num(WIDTH - RIGHT + 16.0),
            num(y),
            PALETTE[i % PALETTE.len()]
        );
        let _ = writeln!(
            s,
            r#"<text class="legend-label" x="{}" y="{}" dominant-baseline="middle">{}</text>"#,
            num(WIDTH - RIGHT + 34.0),
            num(y + 6.0),
            escape(m)
        );
    }
    s.push_str("</g>\n");
}

/// Stacked bars over snap_id, first metric at the bottom. Each band's
/// height is that metric's share of the snap total.
pub fn stacked_chart(d: &DatasetSeries, metrics: &[&str]) -> Result<Vec<u8>> {
    let rows = metric_shares(d, metrics)?;
    let plot = Plot { slots: rows.len() };
    let mut s = String::new();
    header(&mut s, "stacked-chart");
    axes(&mut s, &plot, &rows);
    s.push_str("<g class=\"bands\">\n");
    let w = plot.slot_width();
    for (i, row) in rows.iter().enumerate() {
        let mut base = 0.0;
        for (k, share) in row.shares.iter().enumerate() {
            let (top, bottom) = (Plot::y(base + share), Plot::y(base));
            let _ = writeln!(
                s,
                r#"<rect class="band" data-metric="{}" data-snap="{}" data-share="{}" x="{}" y="{}" width="{}" height="{}" fill="{}"/>"#,
                escape(metrics[k]),
                row.snap_id,
                format_args!("{share:.6}"),
                num(LEFT + i as f64 * w),
                num(top),
                num(w),
                num(bottom - top),
                PALETTE[k % PALETTE.len()]
            );
            base += share;
        }
    }
    s.push_str("</g>\n");
    legend(&mut s, metrics);
    s.push_str("</svg>\n");
    Ok(s.into_bytes())
}

/// One polyline per metric over snap_id.
pub fn timeseries_chart(d: &DatasetSeries, metrics: &[&str]) -> Result<Vec<u8>> {
    let rows = metric_shares(d, metrics)?;
    let plot = Plot { slots: rows.len() };
    let mut s = String::new();
    header(&mut s, "timeseries-chart");
    axes(&mut s, &plot, &rows);
    s.push_str("<g class=\"series\">\n");
    for (k, m) in metrics.iter().enumerate() {
        let points: Vec<String> = rows
            .iter()
            .enumerate()
            .map(|(i, row)| format!("{},{}", num(plot.center_x(i)), num(Plot::y(row.shares[k]))))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline class="series" data-metric="{}" points="{}" fill="none" stroke="{}" stroke-width="2"/>"#,
            escape(m),
            points.join(" "),
            PALETTE[k % PALETTE.len()]
        );
    }
    s.push_str("</g>\n");
    legend(&mut s, metrics);
    s.push_str("</svg>\n");
    Ok(s.into_bytes())
}
