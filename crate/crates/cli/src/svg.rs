//! Minimal static SVG charts. Coordinates are printed with fixed precision so
//! identical inputs give identical files.

use std::fmt::Write;

const W: f64 = 720.0;
const H: f64 = 320.0;
const PAD_L: f64 = 60.0;
const PAD_R: f64 = 20.0;
const PAD_T: f64 = 36.0;
const PAD_B: f64 = 40.0;

pub const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn open(w: f64, h: f64, title: &str) -> String {
    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.0} {h:.0}" font-family="sans-serif" font-size="11">"#
    )
    .unwrap();
    writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    writeln!(s, r#"<text x="{:.1}" y="20" text-anchor="middle" font-size="14">{}</text>"#, w / 2.0, escape(title)).unwrap();
    s
}

fn finite_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (-1.0, 1.0);
    }
    if hi - lo < 1e-12 {
        return (lo - 1.0, hi + 1.0);
    }
    let m = 0.05 * (hi - lo);
    (lo - m, hi + m)
}

fn y_axis(s: &mut String, lo: f64, hi: f64, map: impl Fn(f64) -> f64) {
    writeln!(
        s,
        r#"<line x1="{PAD_L}" y1="{PAD_T}" x2="{PAD_L}" y2="{:.1}" stroke="black"/>"#,
        H - PAD_B
    )
    .unwrap();
    for k in 0..=4 {
        let v = lo + (hi - lo) * k as f64 / 4.0;
        let y = map(v);
        writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{:.3}</text>"#, PAD_L - 4.0, y + 4.0, v).unwrap();
        writeln!(
            s,
            r##"<line x1="{PAD_L}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#dddddd"/>"##,
            W - PAD_R
        )
        .unwrap();
    }
}

fn legend(s: &mut String, labels: &[&str]) {
    for (i, l) in labels.iter().enumerate() {
        let x = PAD_L + 10.0 + 140.0 * i as f64;
        writeln!(
            s,
            r#"<rect x="{x:.1}" y="{:.1}" width="12" height="4" fill="{}"/><text x="{:.1}" y="{:.1}">{}</text>"#,
            H - 14.0,
            PALETTE[i % PALETTE.len()],
            x + 16.0,
            H - 9.0,
            escape(l)
        )
        .unwrap();
    }
}

/// Overlaid line series sharing an x axis of sample indices.
pub fn line_plot(title: &str, series: &[(&str, &[f64])]) -> String {
    let mut s = open(W, H, title);
    let n = series.iter().map(|(_, v)| v.len()).max().unwrap_or(0).max(2);
    let (lo, hi) = finite_range(series.iter().flat_map(|(_, v)| v.iter().copied()));
    let sx = |i: usize| PAD_L + (W - PAD_L - PAD_R) * i as f64 / (n - 1) as f64;
    let sy = |v: f64| PAD_T + (H - PAD_T - PAD_B) * (hi - v) / (hi - lo);
    y_axis(&mut s, lo, hi, sy);
    for (k, (_, values)) in series.iter().enumerate() {
        let mut d = String::new();
        for (i, v) in values.iter().enumerate() {
            write!(d, "{}{:.1},{:.1}", if i == 0 { "M" } else { " L" }, sx(i), sy(*v)).unwrap();
        }
        writeln!(
            s,
            r#"<path d="{d}" fill="none" stroke="{}" stroke-width="1.2"/>"#,
            PALETTE[k % PALETTE.len()]
        )
        .unwrap();
    }
    writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">sample</text>"#, W - PAD_R, H - PAD_B + 14.0).unwrap();
    let labels: Vec<&str> = series.iter().map(|(l, _)| *l).collect();
    legend(&mut s, &labels);
    s.push_str("</svg>\n");
    s
}

/// One violin per item: a density outline over `grid` plus a marker at `observed`.
pub struct Violin<'a> {
    pub label: &'a str,
    pub grid: &'a [f64],
    pub density: &'a [f64],
    pub observed: f64,
}

pub fn violins(title: &str, items: &[Violin]) -> String {
    let mut s = open(W, H, title);
    let (lo, hi) = finite_range(items.iter().flat_map(|v| v.grid.iter().copied().chain([v.observed])));
    let sy = |v: f64| PAD_T + (H - PAD_T - PAD_B) * (hi - v) / (hi - lo);
    y_axis(&mut s, lo, hi, sy);
    let slot = (W - PAD_L - PAD_R) / items.len().max(1) as f64;
    for (k, v) in items.iter().enumerate() {
        let cx = PAD_L + slot * (k as f64 + 0.5);
        let peak = v.density.iter().copied().fold(0.0f64, f64::max).max(1e-300);
        let half = 0.4 * slot;
        let mut d = String::new();
        for (i, (g, p)) in v.grid.iter().zip(v.density).enumerate() {
            write!(d, "{}{:.1},{:.1}", if i == 0 { "M" } else { " L" }, cx + half * p / peak, sy(*g)).unwrap();
        }
        for (g, p) in v.grid.iter().zip(v.density).rev() {
            write!(d, " L{:.1},{:.1}", cx - half * p / peak, sy(*g)).unwrap();
        }
        if !d.is_empty() {
            d.push_str(" Z");
        }
        writeln!(s, r##"<path d="{d}" fill="#c6dbef" stroke="#1f77b4"/>"##).unwrap();
        writeln!(
            s,
            r##"<line x1="{:.1}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#d62728" stroke-width="2"/>"##,
            cx - half,
            cx + half,
            y = sy(v.observed)
        )
        .unwrap();
        writeln!(s, r#"<text x="{cx:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, H - PAD_B + 14.0, escape(v.label)).unwrap();
    }
    s.push_str("</svg>\n");
    s
}

/// Per-subject values of several methods, joined across methods.
pub fn paired(title: &str, methods: &[&str], values: &[Vec<f64>]) -> String {
    let mut s = open(W, H, title);
    let (lo, hi) = finite_range(values.iter().flatten().copied());
    let sy = |v: f64| PAD_T + (H - PAD_T - PAD_B) * (hi - v) / (hi - lo);
    y_axis(&mut s, lo, hi, sy);
    let slot = (W - PAD_L - PAD_R) / methods.len().max(1) as f64;
    let x = |m: usize| PAD_L + slot * (m as f64 + 0.5);
    for row in values {
        let mut d = String::new();
        for (m, v) in row.iter().enumerate() {
            write!(d, "{}{:.1},{:.1}", if m == 0 { "M" } else { " L" }, x(m), sy(*v)).unwrap();
        }
        writeln!(s, r##"<path d="{d}" fill="none" stroke="#aaaaaa"/>"##).unwrap();
        for (m, v) in row.iter().enumerate() {
            writeln!(
                s,
                r#"<circle cx="{:.1}" cy="{:.1}" r="3" fill="{}"/>"#,
                x(m),
                sy(*v),
                PALETTE[m % PALETTE.len()]
            )
            .unwrap();
        }
    }
    for (m, name) in methods.iter().enumerate() {
        writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, x(m), H - PAD_B + 14.0, escape(name)).unwrap();
    }
    s.push_str("</svg>\n");
    s
}

fn diverging(v: f64, scale: f64) -> String {
    let u = (v / scale).clamp(-1.0, 1.0);
    let (r, g, b) = if u >= 0.0 {
        (255.0, 255.0 * (1.0 - u), 255.0 * (1.0 - u))
    } else {
        (255.0 * (1.0 + u), 255.0 * (1.0 + u), 255.0)
    };
    format!("#{:02x}{:02x}{:02x}", r.round() as u8, g.round() as u8, b.round() as u8)
}

/// Heatmap with rows drawn top to bottom; `None` cells are grey. Cells with
/// `|value| > threshold` get a black outline.
pub fn heatmap(title: &str, row_labels: &[String], col_labels: &[String], cells: &[Vec<Option<f64>>], threshold: f64) -> String {
    let rows = row_labels.len().max(1);
    let cols = col_labels.len().max(1);
    let cell = (16.0f64).max(480.0 / cols as f64).min(40.0);
    let w = PAD_L + cell * cols as f64 + PAD_R + 40.0;
    let h = PAD_T + cell * rows as f64 + PAD_B + 20.0;
    let mut s = open(w, h, title);
    let scale = cells.iter().flatten().flatten().fold(0.0f64, |a, v| a.max(v.abs())).max(1e-12);
    for (i, row) in cells.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            let x = PAD_L + cell * j as f64;
            let y = PAD_T + cell * i as f64;
            let fill = v.map_or_else(|| "#bbbbbb".to_string(), |v| diverging(v, scale));
            let stroke = match v {
                Some(v) if v.abs() > threshold => r#" stroke="black" stroke-width="1.5""#,
                _ => "",
            };
            writeln!(s, r#"<rect x="{x:.1}" y="{y:.1}" width="{cell:.1}" height="{cell:.1}" fill="{fill}"{stroke}/>"#).unwrap();
        }
    }
    for (i, l) in row_labels.iter().enumerate() {
        writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            PAD_L - 4.0,
            PAD_T + cell * (i as f64 + 0.5) + 4.0,
            escape(l)
        )
        .unwrap();
    }
    for (j, l) in col_labels.iter().enumerate() {
        writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            PAD_L + cell * (j as f64 + 0.5),
            PAD_T + cell * rows as f64 + 14.0,
            escape(l)
        )
        .unwrap();
    }
    writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}">color scale: |t| up to {:.2}</text>"#,
        PAD_L,
        h - 8.0,
        scale
    )
    .unwrap();
    s.push_str("</svg>\n");
    s
}
