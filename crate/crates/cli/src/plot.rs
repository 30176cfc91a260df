//! Static SVG figures rendered from the rows that go into the CSVs.

use std::path::Path;

use anyhow::{anyhow, Result};
use plotters::prelude::*;

pub enum Style {
    Line,
    Dashed,
    /// Points with symmetric vertical error bars.
    ErrorBars(Vec<f64>),
}

pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
    pub style: Style,
}

impl Series {
    pub fn new(name: impl Into<String>, points: Vec<(f64, f64)>, style: Style) -> Self {
        Self {
            name: name.into(),
            points,
            style,
        }
    }
}

pub struct Figure<'a> {
    pub title: &'a str,
    pub x_label: &'a str,
    pub y_label: &'a str,
    /// Plot `log10(y)` instead of `y`; non-positive values are dropped.
    pub log_y: bool,
}

fn bounds(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if lo > hi {
        return None;
    }
    let pad = if hi > lo { 0.05 * (hi - lo) } else { 0.5 * lo.abs().max(1e-3) };
    Some((lo - pad, hi + pad))
}

/// `(x, y, error bar)` after the y transform.
type Mapped = (f64, f64, Option<(f64, f64)>);

pub fn render(path: &Path, fig: &Figure<'_>, series: &[Series]) -> Result<()> {
    let ty = |y: f64| if fig.log_y { if y > 0.0 { y.log10() } else { f64::NAN } } else { y };
    let mapped: Vec<Vec<Mapped>> = series
        .iter()
        .map(|s| {
            s.points
                .iter()
                .enumerate()
                .map(|(i, &(x, y))| {
                    let bar = match &s.style {
                        Style::ErrorBars(err) => Some((ty(y - err[i]), ty(y + err[i]))),
                        _ => None,
                    };
                    (x, ty(y), bar)
                })
                .filter(|p| p.1.is_finite())
                .collect()
        })
        .collect();
    let xs = bounds(mapped.iter().flatten().map(|p| p.0)).ok_or_else(|| anyhow!("nothing to plot"))?;
    let ys = bounds(
        mapped
            .iter()
            .flatten()
            .flat_map(|p| [Some(p.1), p.2.map(|b| b.0), p.2.map(|b| b.1)])
            .flatten(),
    )
    .ok_or_else(|| anyhow!("nothing to plot"))?;

    let root = SVGBackend::new(path, (800, 560)).into_drawing_area();
    root.fill(&WHITE)?;
    let mut chart = ChartBuilder::on(&root)
        .caption(fig.title, ("sans-serif", 22))
        .margin(16)
        .x_label_area_size(44)
        .y_label_area_size(64)
        .build_cartesian_2d(xs.0..xs.1, ys.0..ys.1)?;
    let y_desc = if fig.log_y { format!("log10 {}", fig.y_label) } else { fig.y_label.to_string() };
    chart.configure_mesh().x_desc(fig.x_label).y_desc(y_desc).draw()?;

    for (k, (s, pts)) in series.iter().zip(&mapped).enumerate() {
        let color = Palette99::pick(k).to_rgba();
        let xy = pts.iter().map(|p| (p.0, p.1));
        let anno = match s.style {
            Style::Line => chart.draw_series(LineSeries::new(xy, color.stroke_width(2)))?,
            Style::Dashed => chart.draw_series(DashedLineSeries::new(xy, 6, 4, color.stroke_width(1)))?,
            Style::ErrorBars(_) => {
                chart.draw_series(pts.iter().filter_map(|p| {
                    let (lo, hi) = p.2?;
                    (lo.is_finite() && hi.is_finite()).then(|| ErrorBar::new_vertical(p.0, lo, p.1, hi, color, 6))
                }))?;
                chart.draw_series(xy.map(|p| Circle::new(p, 3, color.filled())))?
            }
        };
        anno.label(s.name.clone())
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 18, y)], color.stroke_width(2)));
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.85))
        .border_style(BLACK)
        .position(SeriesLabelPosition::LowerRight)
        .draw()?;
    root.present()?;
    Ok(())
}
