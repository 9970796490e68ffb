//! Minimal SVG line charts and heatmaps for quick inspection.

use std::fmt::Write as _;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 60.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"];

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Round numbers spanning `[lo, hi]`, about five of them.
pub fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    if !(hi > lo) {
        return vec![lo];
    }
    let raw = (hi - lo) / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|f| f * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn bounds(series: &[Series]) -> (f64, f64, f64, f64) {
    let mut b = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for (x, y) in series.iter().flat_map(|s| s.points.iter()) {
        b = (b.0.min(*x), b.1.max(*x), b.2.min(*y), b.3.max(*y));
    }
    if !b.0.is_finite() {
        return (0.0, 1.0, 0.0, 1.0);
    }
    let pad = |lo: f64, hi: f64| {
        if hi - lo > 1e-300 {
            (lo, hi)
        } else {
            let d = lo.abs().max(1.0) * 0.5;
            (lo - d, hi + d)
        }
    };
    let (x0, x1) = pad(b.0, b.1);
    let (y0, y1) = pad(b.2, b.3);
    (x0, x1, y0, y1)
}

fn header(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">"
    );
    let _ = writeln!(out, "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>");
    let _ = writeln!(
        out,
        "<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">{}</text>",
        WIDTH / 2.0,
        escape(title)
    );
}

fn axes(out: &mut String, (x0, x1, y0, y1): (f64, f64, f64, f64), x_label: &str, y_label: &str) {
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let sy = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);
    let _ = writeln!(
        out,
        "<rect x=\"{MARGIN}\" y=\"{MARGIN}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>",
        WIDTH - 2.0 * MARGIN,
        HEIGHT - 2.0 * MARGIN
    );
    for t in ticks(x0, x1) {
        let x = sx(t);
        let _ = writeln!(
            out,
            "<line x1=\"{x:.2}\" y1=\"{b}\" x2=\"{x:.2}\" y2=\"{b2}\" stroke=\"black\"/><text x=\"{x:.2}\" y=\"{ty}\" text-anchor=\"middle\" font-size=\"11\">{t:.4}</text>",
            b = HEIGHT - MARGIN,
            b2 = HEIGHT - MARGIN + 5.0,
            ty = HEIGHT - MARGIN + 18.0,
        );
    }
    for t in ticks(y0, y1) {
        let y = sy(t);
        let _ = writeln!(
            out,
            "<line x1=\"{l}\" y1=\"{y:.2}\" x2=\"{l2}\" y2=\"{y:.2}\" stroke=\"black\"/><text x=\"{tx}\" y=\"{yt:.2}\" text-anchor=\"end\" font-size=\"11\">{t:.4}</text>",
            l = MARGIN - 5.0,
            l2 = MARGIN,
            tx = MARGIN - 8.0,
            yt = y + 4.0,
        );
    }
    let _ = writeln!(
        out,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"13\">{}</text>",
        WIDTH / 2.0,
        HEIGHT - 15.0,
        escape(x_label)
    );
    let _ = writeln!(
        out,
        "<text x=\"15\" y=\"{}\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 15 {})\">{}</text>",
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(y_label)
    );
}

pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let b = bounds(series);
    let (x0, x1, y0, y1) = b;
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let sy = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);
    let mut out = String::new();
    header(&mut out, title);
    axes(&mut out, b, x_label, y_label);
    for (k, s) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let pts: Vec<String> = s.points.iter().map(|(x, y)| format!("{:.2},{:.2}", sx(*x), sy(*y))).collect();
        let _ = writeln!(
            out,
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>",
            pts.join(" ")
        );
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" font-size=\"11\" fill=\"{color}\">{}</text>",
            WIDTH - MARGIN + 5.0,
            MARGIN + 14.0 * (k as f64 + 1.0),
            escape(&s.label)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Heatmap of a row-major `n x n` array over `[-extent, extent]^2`,
/// block-averaged down to at most `max_cells` per side.
pub fn heatmap(title: &str, values: &[f64], n: usize, extent: f64, max_cells: usize) -> String {
    assert_eq!(values.len(), n * n, "heatmap expects a square array");
    let block = n.div_ceil(max_cells.max(1)).max(1);
    let cells = n.div_ceil(block);
    let mut coarse = vec![0.0; cells * cells];
    for iy in 0..n {
        for ix in 0..n {
            coarse[(iy / block) * cells + ix / block] += values[iy * n + ix];
        }
    }
    let vmax = coarse.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let b = (-extent, extent, -extent, extent);
    let mut out = String::new();
    header(&mut out, title);
    let cw = (WIDTH - 2.0 * MARGIN) / cells as f64;
    let ch = (HEIGHT - 2.0 * MARGIN) / cells as f64;
    for cy in 0..cells {
        for cx in 0..cells {
            let v = if vmax > 0.0 { coarse[cy * cells + cx] / vmax } else { 0.0 };
            let shade = (255.0 * (1.0 - v.abs())).round() as u8;
            let color = if v >= 0.0 {
                format!("#{shade:02x}{shade:02x}ff")
            } else {
                format!("#ff{shade:02x}{shade:02x}")
            };
            let _ = writeln!(
                out,
                "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{color}\"/>",
                MARGIN + cx as f64 * cw,
                HEIGHT - MARGIN - (cy as f64 + 1.0) * ch,
                cw + 0.05,
                ch + 0.05
            );
        }
    }
    axes(&mut out, b, "x", "y");
    out.push_str("</svg>\n");
    out
}
