//! Minimal SVG line charts for sweep results.

use std::fmt::Write;

use crate::sweep::SweepResult;

const WIDTH: f64 = 480.0;
const HEIGHT: f64 = 320.0;
const MARGIN: f64 = 48.0;
const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

fn bounds(series: &[Series], pick: impl Fn(&(f64, f64)) -> f64) -> (f64, f64) {
    let (lo, hi) = series
        .iter()
        .flat_map(|s| s.points.iter().map(&pick))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi - lo < 1e-12 * hi.abs().max(1.0) {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

/// One chart panel as an SVG `<g>` translated by `dx`.
fn panel(out: &mut String, dx: f64, title: &str, x_label: &str, series: &[Series]) {
    let (x0, x1) = bounds(series, |p| p.0);
    let (y0, y1) = bounds(series, |p| p.1);
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let sy = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);
    let _ = writeln!(out, r#"<g transform="translate({dx},0)">"#);
    let _ = writeln!(
        out,
        r##"<rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="#888"/>"##,
        WIDTH - 2.0 * MARGIN,
        HEIGHT - 2.0 * MARGIN
    );
    let _ = writeln!(out, r#"<text x="{}" y="24" text-anchor="middle">{title}</text>"#, WIDTH / 2.0);
    let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle">{x_label}</text>"#, WIDTH / 2.0, HEIGHT - 8.0);
    for (v, x) in [(x0, sx(x0)), (x1, sx(x1))] {
        let _ = writeln!(out, r#"<text x="{x}" y="{}" font-size="10" text-anchor="middle">{v:.3}</text>"#, HEIGHT - MARGIN + 14.0);
    }
    for (v, y) in [(y0, sy(y0)), (y1, sy(y1))] {
        let _ = writeln!(out, r#"<text x="{}" y="{y}" font-size="10" text-anchor="end">{v:.3e}</text>"#, MARGIN - 4.0);
    }
    for (i, s) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let pts: Vec<String> = s.points.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        let _ = writeln!(out, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, pts.join(" "));
        for &(x, y) in &s.points {
            let _ = writeln!(out, r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{color}"/>"#, sx(x), sy(y));
        }
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" font-size="11" fill="{color}">{}</text>"#,
            MARGIN + 6.0,
            MARGIN + 14.0 * (i + 1) as f64,
            s.label
        );
    }
    out.push_str("</g>\n");
}

/// Gap and `eta` against the swept parameter, side by side.
pub fn sweep_chart(result: &SweepResult) -> String {
    let gap = Series {
        label: "gap".into(),
        points: result
            .points
            .iter()
            .filter_map(|p| p.rows.iter().find_map(|r| r.gap).map(|g| (p.value, g)))
            .collect(),
    };
    let mut etas: Vec<Series> = Vec::new();
    for p in &result.points {
        for r in &p.rows {
            let name = r.estimator.name();
            let idx = match etas.iter().position(|s| s.label == name) {
                Some(i) => i,
                None => {
                    etas.push(Series { label: name.into(), points: Vec::new() });
                    etas.len() - 1
                }
            };
            if let Some(eta) = r.eta {
                etas[idx].points.push((p.value, eta));
            }
        }
    }
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{HEIGHT}" font-family="sans-serif" font-size="13">"#,
        2.0 * WIDTH
    );
    panel(&mut out, 0.0, "spectral gap", &result.parameter, &[gap]);
    panel(&mut out, WIDTH, "eta", &result.parameter, &etas);
    out.push_str("</svg>\n");
    out
}
