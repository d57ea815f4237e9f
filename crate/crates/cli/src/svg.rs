//! Minimal hand-written SVG plots.

use std::fmt::Write;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn open(w: f64, h: f64, title: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="18" text-anchor="middle" font-size="14">{}</text>"#,
        w / 2.0,
        escape(title)
    );
    s
}

fn nice_max(v: f64) -> f64 {
    if !(v > 0.0) {
        return 1.0;
    }
    let mag = 10f64.powf(v.log10().floor());
    for step in [1.0, 2.0, 2.5, 5.0, 10.0] {
        if step * mag >= v {
            return step * mag;
        }
    }
    10.0 * mag
}

/// Vertical bars, one per label, with group colors.
pub fn bar_chart(title: &str, labels: &[String], values: &[f64], groups: &[usize], y_label: &str) -> String {
    let (left, right, top, bottom) = (60.0, 20.0, 30.0, 90.0);
    let bar = 22.0;
    let width = left + right + bar * labels.len().max(1) as f64;
    let height = 360.0;
    let plot_h = height - top - bottom;
    let ymax = nice_max(values.iter().copied().fold(0.0, f64::max));
    let mut s = open(width, height, title);
    for tick in 0..=4 {
        let v = ymax * tick as f64 / 4.0;
        let y = top + plot_h * (1.0 - tick as f64 / 4.0);
        let _ = writeln!(
            s,
            r##"<line x1="{left}" x2="{}" y1="{y:.2}" y2="{y:.2}" stroke="#ddd"/><text x="{}" y="{:.2}" text-anchor="end">{}</text>"##,
            width - right,
            left - 4.0,
            y + 4.0,
            format_tick(v)
        );
    }
    for (i, (label, v)) in labels.iter().zip(values).enumerate() {
        let h = plot_h * (v / ymax).clamp(0.0, 1.0);
        let x = left + bar * i as f64;
        let color = PALETTE[groups.get(i).copied().unwrap_or(0) % PALETTE.len()];
        let _ = writeln!(
            s,
            r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{h:.2}" fill="{color}"><title>{}: {v}</title></rect>"#,
            x + 2.0,
            top + plot_h - h,
            bar - 4.0,
            escape(label)
        );
        let (lx, ly) = (x + bar / 2.0, top + plot_h + 8.0);
        let _ = writeln!(
            s,
            r#"<text x="{lx:.2}" y="{ly:.2}" transform="rotate(60 {lx:.2} {ly:.2})">{}</text>"#,
            escape(label)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="14" y="{:.2}" transform="rotate(-90 14 {:.2})" text-anchor="middle">{}</text>"#,
        top + plot_h / 2.0,
        top + plot_h / 2.0,
        escape(y_label)
    );
    s.push_str("</svg>\n");
    s
}

fn format_tick(v: f64) -> String {
    let s = format!("{v:.4}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

/// One polyline per series over a shared x range.
pub fn line_chart(title: &str, series: &[(String, Vec<(f64, f64)>)], x_label: &str, y_label: &str) -> String {
    let (width, height) = (640.0, 400.0);
    let (left, right, top, bottom) = (60.0, 150.0, 30.0, 50.0);
    let (pw, ph) = (width - left - right, height - top - bottom);
    let points = series.iter().flat_map(|(_, p)| p.iter());
    let (mut x0, mut x1, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64);
    for &(x, y) in points {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y1 = y1.max(y);
    }
    if !(x1 > x0) {
        x0 = 0.0;
        x1 = 1.0;
    }
    let ymax = nice_max(y1);
    let px = |x: f64| left + pw * (x - x0) / (x1 - x0);
    let py = |y: f64| top + ph * (1.0 - (y / ymax).clamp(0.0, 1.0));
    let mut s = open(width, height, title);
    for tick in 0..=4 {
        let v = ymax * tick as f64 / 4.0;
        let _ = writeln!(
            s,
            r##"<line x1="{left}" x2="{}" y1="{y:.2}" y2="{y:.2}" stroke="#ddd"/><text x="{}" y="{:.2}" text-anchor="end">{}</text>"##,
            left + pw,
            left - 4.0,
            py(v) + 4.0,
            format_tick(v),
            y = py(v)
        );
        let xv = x0 + (x1 - x0) * tick as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            px(xv),
            top + ph + 16.0,
            format_tick(xv)
        );
    }
    for (k, (name, pts)) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let path: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            path.join(" ")
        );
        let ly = top + 14.0 * k as f64 + 6.0;
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" x2="{:.2}" y1="{ly:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/><text x="{:.2}" y="{:.2}">{}</text>"#,
            left + pw + 10.0,
            left + pw + 30.0,
            left + pw + 34.0,
            ly + 4.0,
            escape(name)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        left + pw / 2.0,
        height - 12.0,
        escape(x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="14" y="{:.2}" transform="rotate(-90 14 {:.2})" text-anchor="middle">{}</text>"#,
        top + ph / 2.0,
        top + ph / 2.0,
        escape(y_label)
    );
    s.push_str("</svg>\n");
    s
}

/// Square cells shaded from white (0) to dark blue (1), values printed.
pub fn heatmap(title: &str, rows: &[String], cols: &[String], values: &[Vec<f64>]) -> String {
    let cell = 48.0;
    let (left, top) = (70.0, 40.0);
    let width = left + cell * cols.len() as f64 + 20.0;
    let height = top + cell * rows.len() as f64 + 40.0;
    let mut s = open(width, height, title);
    for (i, row) in values.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            let t = if v.is_finite() { v.clamp(0.0, 1.0) } else { 0.0 };
            let shade = |lo: f64, hi: f64| (hi + (lo - hi) * t).round() as u8;
            let fill = format!("#{:02x}{:02x}{:02x}", shade(8.0, 255.0), shade(48.0, 255.0), shade(107.0, 255.0));
            let ink = if t > 0.5 { "white" } else { "black" };
            let (x, y) = (left + cell * j as f64, top + cell * i as f64);
            let _ = writeln!(
                s,
                r#"<rect x="{x:.2}" y="{y:.2}" width="{cell}" height="{cell}" fill="{fill}" stroke="white"/><text x="{:.2}" y="{:.2}" text-anchor="middle" fill="{ink}">{:.3}</text>"#,
                x + cell / 2.0,
                y + cell / 2.0 + 4.0,
                v
            );
        }
    }
    for (i, r) in rows.iter().enumerate() {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            left - 6.0,
            top + cell * i as f64 + cell / 2.0 + 4.0,
            escape(r)
        );
    }
    for (j, c) in cols.iter().enumerate() {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            left + cell * j as f64 + cell / 2.0,
            top + cell * rows.len() as f64 + 16.0,
            escape(c)
        );
    }
    s.push_str("</svg>\n");
    s
}
