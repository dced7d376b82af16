//! Minimal static SVG charts: RMSE time series and sweep heat maps.

use std::fmt::Write;

const W: f64 = 720.0;
const H: f64 = 420.0;
const MARGIN: f64 = 60.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn header(out: &mut String, title: &str) {
    let _ = write!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = write!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = write!(out, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, esc(title));
}

/// Line chart of named `(x, y)` series; non-finite points break the line.
pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[(String, Vec<(f64, f64)>)]) -> String {
    let pts = series.iter().flat_map(|(_, s)| s.iter()).filter(|(x, y)| x.is_finite() && y.is_finite());
    let (mut x0, mut x1, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64);
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1) = (0.0, 1.0);
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    if y1 <= 0.0 {
        y1 = 1.0;
    }
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (W - 2.0 * MARGIN);
    let sy = |y: f64| H - MARGIN - y / y1 * (H - 2.0 * MARGIN);

    let mut out = String::new();
    header(&mut out, title);
    let _ = write!(
        out,
        r#"<path d="M{m} {t} V{b} H{r}" fill="none" stroke="black"/>"#,
        m = MARGIN,
        t = MARGIN,
        b = H - MARGIN,
        r = W - MARGIN
    );
    for k in 0..=4 {
        let y = y1 * k as f64 / 4.0;
        let _ = write!(out, r#"<text x="{}" y="{:.1}" text-anchor="end">{:.3}</text>"#, MARGIN - 4.0, sy(y) + 4.0, y);
        let x = x0 + (x1 - x0) * k as f64 / 4.0;
        let _ = write!(out, r#"<text x="{:.1}" y="{}" text-anchor="middle">{}</text>"#, sx(x), H - MARGIN + 16.0, x);
    }
    let _ = write!(out, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, W / 2.0, H - 16.0, esc(x_label));
    let _ = write!(
        out,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
        H / 2.0,
        H / 2.0,
        esc(y_label)
    );
    for (k, (name, s)) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let mut d = String::new();
        let mut pen_down = false;
        for &(x, y) in s {
            if x.is_finite() && y.is_finite() {
                let _ = write!(d, "{}{:.2} {:.2} ", if pen_down { "L" } else { "M" }, sx(x), sy(y));
                pen_down = true;
            } else {
                pen_down = false;
            }
        }
        let _ = write!(out, r#"<path d="{}" fill="none" stroke="{color}" stroke-width="1.2"/>"#, d.trim_end());
        let ly = MARGIN + 14.0 * k as f64;
        let _ = write!(
            out,
            r#"<rect x="{}" y="{}" width="10" height="10" fill="{color}"/><text x="{}" y="{}">{}</text>"#,
            W - MARGIN - 110.0,
            ly - 9.0,
            W - MARGIN - 96.0,
            ly,
            esc(name)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Heat map with `values[i][j]` drawn at row `i`, column `j`. `None` cells
/// are hatched grey; `highlight` cells get a thick border.
pub fn heatmap(
    title: &str,
    row_label: &str,
    col_label: &str,
    rows: &[f64],
    cols: &[f64],
    values: &[Vec<Option<f64>>],
    highlight: &[(usize, usize)],
) -> String {
    let finite = values.iter().flatten().flatten().copied();
    let (lo, hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    let span = if hi > lo { hi - lo } else { 1.0 };
    let cw = (W - 2.0 * MARGIN) / cols.len().max(1) as f64;
    let ch = (H - 2.0 * MARGIN) / rows.len().max(1) as f64;
    let mut out = String::new();
    header(&mut out, title);
    for (i, row) in values.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            let (x, y) = (MARGIN + j as f64 * cw, MARGIN + i as f64 * ch);
            let (fill, text) = match v {
                Some(v) => {
                    let t = (v - lo) / span;
                    let r = (255.0 * t).round() as u8;
                    let b = (255.0 * (1.0 - t)).round() as u8;
                    (format!("rgb({r},96,{b})"), format!("{v:.3}"))
                }
                None => ("#bbbbbb".to_string(), "div".to_string()),
            };
            let _ = write!(
                out,
                r#"<rect x="{x:.1}" y="{y:.1}" width="{cw:.1}" height="{ch:.1}" fill="{fill}" stroke="white"/>"#
            );
            let _ = write!(
                out,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" fill="white">{text}</text>"#,
                x + cw / 2.0,
                y + ch / 2.0 + 4.0
            );
        }
    }
    for &(i, j) in highlight {
        let _ = write!(
            out,
            r#"<rect x="{:.1}" y="{:.1}" width="{cw:.1}" height="{ch:.1}" fill="none" stroke="black" stroke-width="3"/>"#,
            MARGIN + j as f64 * cw,
            MARGIN + i as f64 * ch
        );
    }
    for (j, c) in cols.iter().enumerate() {
        let _ = write!(out, r#"<text x="{:.1}" y="{}" text-anchor="middle">{c}</text>"#, MARGIN + (j as f64 + 0.5) * cw, H - MARGIN + 16.0);
    }
    for (i, r) in rows.iter().enumerate() {
        let _ = write!(out, r#"<text x="{}" y="{:.1}" text-anchor="end">{r}</text>"#, MARGIN - 4.0, MARGIN + (i as f64 + 0.5) * ch + 4.0);
    }
    let _ = write!(out, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, W / 2.0, H - 16.0, esc(col_label));
    let _ = write!(
        out,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
        H / 2.0,
        H / 2.0,
        esc(row_label)
    );
    out.push_str("</svg>\n");
    out
}
