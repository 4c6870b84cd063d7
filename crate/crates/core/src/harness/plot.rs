//! SVG line plots and heat maps.

use std::path::Path;

use plotters::prelude::*;

use crate::error::{Error, Result};

/// One named polyline.
#[derive(Clone, Debug)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

impl Series {
    pub fn new(label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Self { label: label.into(), points }
    }
}

#[derive(Clone, Debug, Default)]
pub struct PlotStyle {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    /// Plot `log₁₀` of the coordinate instead of the value.
    pub log_x: bool,
    pub log_y: bool,
    /// Dotted vertical markers at these (untransformed) abscissae.
    pub vlines: Vec<f64>,
    pub markers: bool,
}

const PALETTE: [RGBColor; 6] = [
    RGBColor(31, 119, 180),
    RGBColor(214, 39, 40),
    RGBColor(44, 160, 44),
    RGBColor(148, 103, 189),
    RGBColor(255, 127, 14),
    RGBColor(23, 190, 207),
];

// five viridis stops, interpolated linearly
fn colormap(t: f64) -> RGBColor {
    const STOPS: [(f64, f64, f64); 5] =
        [(68.0, 1.0, 84.0), (59.0, 82.0, 139.0), (33.0, 145.0, 140.0), (94.0, 201.0, 98.0), (253.0, 231.0, 37.0)];
    let x = t.clamp(0.0, 1.0) * 4.0;
    let i = (x.floor() as usize).min(3);
    let f = x - i as f64;
    let (a, b) = (STOPS[i], STOPS[i + 1]);
    let mix = |u: f64, v: f64| (u + f * (v - u)).round() as u8;
    RGBColor(mix(a.0, b.0), mix(a.1, b.1), mix(a.2, b.2))
}

fn plot_err(e: impl std::fmt::Display) -> Error {
    Error::Format(format!("plot: {e}"))
}

fn transform(v: f64, log: bool) -> Option<f64> {
    let t = if log { v.log10() } else { v };
    t.is_finite().then_some(t)
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if hi > lo {
        let pad = 0.04 * (hi - lo);
        (lo - pad, hi + pad)
    } else {
        (lo - 0.5, hi + 0.5)
    }
}

/// Renders the series to an SVG string.
pub fn render_plot(series: &[Series], style: &PlotStyle) -> Result<String> {
    let data: Vec<(String, Vec<(f64, f64)>)> = series
        .iter()
        .map(|s| {
            let pts = s
                .points
                .iter()
                .filter_map(|&(x, y)| Some((transform(x, style.log_x)?, transform(y, style.log_y)?)))
                .collect();
            (s.label.clone(), pts)
        })
        .collect();
    if data.iter().all(|(_, p)| p.is_empty()) {
        return Err(Error::InvalidArgument("nothing to plot: all series are empty".into()));
    }
    let all = data.iter().flat_map(|(_, p)| p.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    let (x0, x1) = padded(x0, x1);
    let (y0, y1) = padded(y0, y1);
    let axis = |label: &str, log: bool| if log { format!("log10 {label}") } else { label.to_string() };

    let mut out = String::new();
    {
        let root = SVGBackend::with_string(&mut out, (720, 480)).into_drawing_area();
        root.fill(&WHITE).map_err(plot_err)?;
        let mut chart = ChartBuilder::on(&root)
            .caption(&style.title, ("sans-serif", 20))
            .margin(12)
            .x_label_area_size(40)
            .y_label_area_size(60)
            .build_cartesian_2d(x0..x1, y0..y1)
            .map_err(plot_err)?;
        chart
            .configure_mesh()
            .x_desc(axis(&style.x_label, style.log_x))
            .y_desc(axis(&style.y_label, style.log_y))
            .draw()
            .map_err(plot_err)?;
        for (i, (label, pts)) in data.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            chart
                .draw_series(LineSeries::new(pts.iter().copied(), color.stroke_width(2)))
                .map_err(plot_err)?
                .label(label.as_str())
                .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 16, y)], color));
            if style.markers {
                chart
                    .draw_series(pts.iter().map(|&p| Circle::new(p, 3, color.filled())))
                    .map_err(plot_err)?;
            }
        }
        for &v in &style.vlines {
            if let Some(x) = transform(v, style.log_x) {
                // dotted: short segments along the full height
                let n = 40;
                let segs = (0..n).step_by(2).map(|s| {
                    let a = y0 + (y1 - y0) * s as f64 / n as f64;
                    let b = y0 + (y1 - y0) * (s + 1) as f64 / n as f64;
                    PathElement::new(vec![(x, a), (x, b)], BLACK)
                });
                chart.draw_series(segs).map_err(plot_err)?;
            }
        }
        if data.iter().any(|(l, _)| !l.is_empty()) {
            chart
                .configure_series_labels()
                .background_style(WHITE.mix(0.8))
                .border_style(BLACK)
                .draw()
                .map_err(plot_err)?;
        }
        root.present().map_err(plot_err)?;
    }
    Ok(out)
}

pub fn emit_plot(path: impl AsRef<Path>, series: &[Series], style: &PlotStyle) -> Result<()> {
    let svg = render_plot(series, style)?;
    std::fs::write(path, svg)?;
    Ok(())
}

/// Heat map of a nonnegative `nx × ny` array (row-major in `y`), block-averaged down to at most
/// `max_cells` per side.
pub fn render_heatmap(
    values: &[f64],
    nx: usize,
    ny: usize,
    extent: (f64, f64, f64, f64),
    title: &str,
    max_cells: usize,
) -> Result<String> {
    if values.is_empty() || values.len() != nx * ny {
        return Err(Error::InvalidArgument("heat map needs nx·ny values".into()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("heat map values must be finite".into()));
    }
    let bx = nx.div_ceil(max_cells.max(1));
    let by = ny.div_ceil(max_cells.max(1));
    let (cx, cy) = (nx / bx, ny / by);
    let mut cells = vec![0.0; cx * cy];
    for j in 0..cy * by {
        for i in 0..cx * bx {
            cells[(j / by) * cx + i / bx] += values[j * nx + i] / (bx * by) as f64;
        }
    }
    let hi = cells.iter().copied().fold(0.0, f64::max);
    let (x0, x1, y0, y1) = extent;
    let (dx, dy) = ((x1 - x0) / cx as f64, (y1 - y0) / cy as f64);
    let mut out = String::new();
    {
        let root = SVGBackend::with_string(&mut out, (560, 520)).into_drawing_area();
        root.fill(&WHITE).map_err(plot_err)?;
        let mut chart = ChartBuilder::on(&root)
            .caption(title, ("sans-serif", 20))
            .margin(12)
            .x_label_area_size(36)
            .y_label_area_size(48)
            .build_cartesian_2d(x0..x1, y0..y1)
            .map_err(plot_err)?;
        chart.configure_mesh().disable_mesh().x_desc("x").y_desc("y").draw().map_err(plot_err)?;
        let rects = (0..cy).flat_map(|j| {
            let cells = &cells;
            (0..cx).map(move |i| {
                let t = if hi > 0.0 { cells[j * cx + i] / hi } else { 0.0 };
                let color = colormap(t);
                let (xa, ya) = (x0 + i as f64 * dx, y0 + j as f64 * dy);
                Rectangle::new([(xa, ya), (xa + dx, ya + dy)], color.filled())
            })
        });
        chart.draw_series(rects).map_err(plot_err)?;
        root.present().map_err(plot_err)?;
    }
    Ok(out)
}

/// Minimal well-formedness reader for the SVG this module writes: checks that elements nest
/// properly under a single `<svg>` root and returns the number of elements.
pub fn check_svg(src: &str) -> Result<usize> {
    let bad = |m: String| Err(Error::Format(format!("svg: {m}")));
    let mut stack: Vec<&str> = Vec::new();
    let mut count = 0;
    let mut root_seen = false;
    let mut rest = src;
    while let Some(open) = rest.find('<') {
        if stack.is_empty() && root_seen && !rest[..open].trim().is_empty() {
            return bad("text after the root element".into());
        }
        rest = &rest[open..];
        if let Some(body) = rest.strip_prefix("<!--") {
            let Some(end) = body.find("-->") else { return bad("unterminated comment".into()) };
            rest = &body[end + 3..];
            continue;
        }
        if rest.starts_with("<?") || rest.starts_with("<!") {
            let Some(end) = rest.find('>') else { return bad("unterminated declaration".into()) };
            rest = &rest[end + 1..];
            continue;
        }
        // scan to the closing '>' outside quoted attribute values
        let mut quote = None;
        let mut end = None;
        for (i, ch) in rest.char_indices().skip(1) {
            match (quote, ch) {
                (None, '"' | '\'') => quote = Some(ch),
                (Some(q), c) if c == q => quote = None,
                (None, '>') => {
                    end = Some(i);
                    break;
                }
                (None, '<') => return bad("'<' inside a tag".into()),
                _ => {}
            }
        }
        let Some(end) = end else { return bad("unterminated tag".into()) };
        let tag = &rest[1..end];
        rest = &rest[end + 1..];
        if let Some(name) = tag.strip_prefix('/') {
            match stack.pop() {
                Some(open) if open == name.trim() => {}
                other => return bad(format!("</{}> closes {:?}", name.trim(), other)),
            }
            continue;
        }
        let name = tag.split(|c: char| c.is_whitespace() || c == '/').next().unwrap_or("");
        if name.is_empty() {
            return bad("empty tag name".into());
        }
        if stack.is_empty() {
            if root_seen || name != "svg" {
                return bad(format!("unexpected top-level element <{name}>"));
            }
            root_seen = true;
        }
        count += 1;
        if !tag.ends_with('/') {
            stack.push(name);
        }
    }
    if !root_seen || !stack.is_empty() {
        return bad("missing or unclosed root element".into());
    }
    Ok(count)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_data_is_rejected() {
        assert!(render_plot(&[], &PlotStyle::default()).is_err());
        assert!(render_plot(&[Series::new("a", vec![])], &PlotStyle::default()).is_err());
        assert!(render_heatmap(&[], 0, 0, (0.0, 1.0, 0.0, 1.0), "t", 8).is_err());
    }

    #[test]
    fn line_plot_is_svg_and_deterministic() {
        let s = [Series::new("c·ε", vec![(0.5, 0.05), (0.25, 0.025), (0.125, 0.0125)])];
        let style = PlotStyle { log_x: true, log_y: true, vlines: vec![0.3], markers: true, ..Default::default() };
        let a = render_plot(&s, &style).unwrap();
        assert!(check_svg(&a).unwrap() > 10);
        assert_eq!(a, render_plot(&s, &style).unwrap());
    }

    #[test]
    fn svg_reader_rejects_broken_markup() {
        assert_eq!(check_svg(r#"<?xml version="1.0"?><svg a="x>y"><g><rect/></g></svg>"#).unwrap(), 3);
        assert!(check_svg("<svg><g></svg>").is_err());
        assert!(check_svg("<svg></svg><svg></svg>").is_err());
        assert!(check_svg("<g></g>").is_err());
        assert!(check_svg("<svg><rect").is_err());
    }

    #[test]
    fn heatmap_is_svg() {
        let v: Vec<f64> = (0..64).map(|i| i as f64).collect();
        let svg = render_heatmap(&v, 8, 8, (-1.0, 1.0, -1.0, 1.0), "|psi2|", 4).unwrap();
        assert!(check_svg(&svg).unwrap() >= 16);
    }
}
