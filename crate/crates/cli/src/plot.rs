//! Minimal self-contained SVG line plots, deterministic for fixed input.

use std::fmt::Write as _;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum PlotError {
    #[error("column `{0}` not found in CSV header")]
    MissingColumn(String),
    #[error("CSV has no data rows")]
    NoRows,
    #[error("log-scale plot requires positive values in column `{0}`")]
    NonPositiveLog(String),
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 54.0;
const COLORS: [&str; 6] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"];

#[derive(Clone, Debug)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

/// Render named series as an SVG line plot, optionally with a log y axis.
pub fn render_lines(series: &[Series], title: &str, logy: bool) -> Result<String, PlotError> {
    if series.iter().all(|s| s.points.is_empty()) {
        return Err(PlotError::NoRows);
    }
    let ymap = |y: f64| -> f64 {
        if logy {
            y.log10()
        } else {
            y
        }
    };
    if logy {
        for s in series {
            if s.points.iter().any(|&(_, y)| y <= 0.0) {
                return Err(PlotError::NonPositiveLog(s.name.clone()));
            }
        }
    }
    let mut xmin = f64::INFINITY;
    let mut xmax = f64::NEG_INFINITY;
    let mut ymin = f64::INFINITY;
    let mut ymax = f64::NEG_INFINITY;
    for s in series {
        for &(x, y) in &s.points {
            xmin = xmin.min(x);
            xmax = xmax.max(x);
            ymin = ymin.min(ymap(y));
            ymax = ymax.max(ymap(y));
        }
    }
    // degenerate spans (single point, constant series) get a unit window
    if xmax - xmin < 1e-300 {
        xmin -= 0.5;
        xmax += 0.5;
    }
    if ymax - ymin < 1e-300 {
        ymin -= 0.5;
        ymax += 0.5;
    }
    let sx = (WIDTH - 2.0 * MARGIN) / (xmax - xmin);
    let sy = (HEIGHT - 2.0 * MARGIN) / (ymax - ymin);
    let px = |x: f64| MARGIN + (x - xmin) * sx;
    let py = |y: f64| HEIGHT - MARGIN - (ymap(y) - ymin) * sy;

    let mut svg = String::new();
    writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    )
    .unwrap();
    writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#).unwrap();
    writeln!(
        svg,
        r#"<text x="{:.1}" y="24" font-family="sans-serif" font-size="15" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    )
    .unwrap();
    // axes
    writeln!(
        svg,
        r#"<line x1="{m}" y1="{b}" x2="{r}" y2="{b}" stroke="black"/><line x1="{m}" y1="{t}" x2="{m}" y2="{b}" stroke="black"/>"#,
        m = MARGIN,
        b = HEIGHT - MARGIN,
        r = WIDTH - MARGIN,
        t = MARGIN
    )
    .unwrap();
    // axis labels at the extremes
    for (value, x, y, anchor) in [
        (xmin, MARGIN, HEIGHT - MARGIN + 18.0, "middle"),
        (xmax, WIDTH - MARGIN, HEIGHT - MARGIN + 18.0, "middle"),
    ] {
        writeln!(
            svg,
            r#"<text x="{x:.1}" y="{y:.1}" font-family="sans-serif" font-size="11" text-anchor="{anchor}">{value:.4}</text>"#
        )
        .unwrap();
    }
    for (value, y) in [(ymin, HEIGHT - MARGIN), (ymax, MARGIN)] {
        let label = if logy { format!("1e{value:.2}") } else { format!("{value:.4}") };
        writeln!(
            svg,
            r#"<text x="{x:.1}" y="{y:.1}" font-family="sans-serif" font-size="11" text-anchor="end">{label}</text>"#,
            x = MARGIN - 6.0,
            y = y + 4.0
        )
        .unwrap();
    }
    for (i, s) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        if s.points.len() == 1 {
            let (x, y) = s.points[0];
            writeln!(
                svg,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#,
                px(x),
                py(y)
            )
            .unwrap();
        } else {
            let path: Vec<String> = s
                .points
                .iter()
                .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
                .collect();
            writeln!(
                svg,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
                path.join(" ")
            )
            .unwrap();
        }
        writeln!(
            svg,
            r#"<text x="{x:.1}" y="{y:.1}" font-family="sans-serif" font-size="12" fill="{color}">{}</text>"#,
            escape(&s.name),
            x = WIDTH - MARGIN + 4.0 - 110.0,
            y = MARGIN + 16.0 * (i as f64 + 1.0)
        )
        .unwrap();
    }
    writeln!(svg, "</svg>").unwrap();
    Ok(svg)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Parse a CSV produced by this crate and extract the named columns as
/// series over `x_col`.
pub fn series_from_csv(text: &str, x_col: &str, y_cols: &[String]) -> Result<Vec<Series>, PlotError> {
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().ok_or(PlotError::NoRows)?.split(',').collect();
    let xi = header
        .iter()
        .position(|h| *h == x_col)
        .ok_or_else(|| PlotError::MissingColumn(x_col.to_string()))?;
    let yis: Vec<usize> = y_cols
        .iter()
        .map(|c| {
            header
                .iter()
                .position(|h| h == c)
                .ok_or_else(|| PlotError::MissingColumn(c.clone()))
        })
        .collect::<Result<_, _>>()?;
    let mut series: Vec<Series> = y_cols
        .iter()
        .map(|c| Series { name: c.clone(), points: Vec::new() })
        .collect();
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let x: f64 = match fields.get(xi).and_then(|f| f.parse().ok()) {
            Some(v) => v,
            None => continue,
        };
        for (s, &yi) in series.iter_mut().zip(&yis) {
            if let Some(y) = fields.get(yi).and_then(|f| f.parse::<f64>().ok()) {
                s.points.push((x, y));
            }
        }
    }
    if series.iter().all(|s| s.points.is_empty()) {
        return Err(PlotError::NoRows);
    }
    Ok(series)
}
