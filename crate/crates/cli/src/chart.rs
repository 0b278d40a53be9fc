//! Self-contained SVG line charts: one file per metric, mean lines with
//! 95% error bars per method.

use std::io;
use std::path::Path;

use crate::csvout::{fmt_float, AggregateRow};

/// Which aggregate metric a chart plots.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChartMetric {
    AvgDistortion,
    SpectrumUtilization,
    CollisionRate,
}

impl ChartMetric {
    pub const ALL: [ChartMetric; 3] = [
        ChartMetric::AvgDistortion,
        ChartMetric::SpectrumUtilization,
        ChartMetric::CollisionRate,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            ChartMetric::AvgDistortion => "average distortion",
            ChartMetric::SpectrumUtilization => "spectrum utilization",
            ChartMetric::CollisionRate => "collision rate",
        }
    }

    pub fn file_stem(&self) -> &'static str {
        match self {
            ChartMetric::AvgDistortion => "avg_distortion",
            ChartMetric::SpectrumUtilization => "spectrum_utilization",
            ChartMetric::CollisionRate => "collision_rate",
        }
    }

    fn pick(&self, row: &AggregateRow) -> (f64, f64) {
        match self {
            ChartMetric::AvgDistortion => row.avg_distortion,
            ChartMetric::SpectrumUtilization => row.spectrum_utilization,
            ChartMetric::CollisionRate => row.collision_rate,
        }
    }
}

const WIDTH: f64 = 860.0;
const HEIGHT: f64 = 540.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 660.0;
const TOP: f64 = 50.0;
const BOTTOM: f64 = 480.0;

const PALETTE: [&str; 7] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf",
];

fn lin(v: f64, lo: f64, hi: f64, out_lo: f64, out_hi: f64) -> f64 {
    if hi <= lo {
        return 0.5 * (out_lo + out_hi);
    }
    out_lo + (v - lo) / (hi - lo) * (out_hi - out_lo)
}

/// Render the chart for one metric of one experiment's aggregates.
pub fn render_chart(rows: &[AggregateRow], metric: ChartMetric, title: &str) -> String {
    let mut methods: Vec<&'static str> = Vec::new();
    for r in rows {
        if !methods.contains(&r.method) {
            methods.push(r.method);
        }
    }

    let mut xs: Vec<f64> = Vec::new();
    let mut y_lo = f64::INFINITY;
    let mut y_hi = f64::NEG_INFINITY;
    for r in rows {
        if !xs.contains(&r.sweep_value) {
            xs.push(r.sweep_value);
        }
        let (m, hw) = metric.pick(r);
        if m.is_finite() {
            y_lo = y_lo.min(m - hw.max(0.0));
            y_hi = y_hi.max(m + hw.max(0.0));
        }
    }
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let (mut x_lo, mut x_hi) = match (xs.first(), xs.last()) {
        (Some(&a), Some(&b)) => (a, b),
        _ => (0.0, 1.0),
    };
    if x_hi <= x_lo {
        x_lo -= 0.5;
        x_hi += 0.5;
    }
    if !y_lo.is_finite() || !y_hi.is_finite() {
        y_lo = 0.0;
        y_hi = 1.0;
    }
    if y_hi <= y_lo {
        y_hi = y_lo + 1.0;
    }
    let pad = 0.06 * (y_hi - y_lo);
    let (y_lo, y_hi) = (y_lo - pad, y_hi + pad);

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"26\" font-family=\"sans-serif\" font-size=\"17\" text-anchor=\"middle\">{}</text>\n",
        (LEFT + RIGHT) / 2.0,
        xml_escape(title)
    ));

    // axes
    svg.push_str(&format!(
        "<line x1=\"{LEFT}\" y1=\"{BOTTOM}\" x2=\"{RIGHT}\" y2=\"{BOTTOM}\" stroke=\"black\"/>\n"
    ));
    svg.push_str(&format!(
        "<line x1=\"{LEFT}\" y1=\"{TOP}\" x2=\"{LEFT}\" y2=\"{BOTTOM}\" stroke=\"black\"/>\n"
    ));
    for i in 0..=5 {
        let f = i as f64 / 5.0;
        let xv = x_lo + f * (x_hi - x_lo);
        let x = lin(xv, x_lo, x_hi, LEFT, RIGHT);
        svg.push_str(&format!(
            "<line x1=\"{x}\" y1=\"{BOTTOM}\" x2=\"{x}\" y2=\"{}\" stroke=\"black\"/>\n",
            BOTTOM + 5.0
        ));
        svg.push_str(&format!(
            "<text x=\"{x}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">{}</text>\n",
            BOTTOM + 20.0,
            fmt_float((xv * 1e6).round() / 1e6)
        ));
        let yv = y_lo + f * (y_hi - y_lo);
        let y = lin(yv, y_lo, y_hi, BOTTOM, TOP);
        svg.push_str(&format!(
            "<line x1=\"{}\" y1=\"{y}\" x2=\"{LEFT}\" y2=\"{y}\" stroke=\"black\"/>\n",
            LEFT - 5.0
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"end\">{}</text>\n",
            LEFT - 9.0,
            y + 4.0,
            fmt_float((yv * 1e6).round() / 1e6)
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">{}</text>\n",
        (LEFT + RIGHT) / 2.0,
        BOTTOM + 42.0,
        xml_escape(&rows.first().map(|r| r.sweep_param.clone()).unwrap_or_default())
    ));
    svg.push_str(&format!(
        "<text x=\"20\" y=\"{}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 20 {})\">{}</text>\n",
        (TOP + BOTTOM) / 2.0,
        (TOP + BOTTOM) / 2.0,
        metric.label()
    ));

    for (mi, method) in methods.iter().enumerate() {
        let color = PALETTE[mi % PALETTE.len()];
        let mut pts: Vec<(f64, f64, f64)> = rows
            .iter()
            .filter(|r| r.method == *method)
            .map(|r| {
                let (m, hw) = metric.pick(r);
                (r.sweep_value, m, hw.max(0.0))
            })
            .filter(|(_, m, _)| m.is_finite())
            .collect();
        pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

        let mut path = String::new();
        for (i, (xv, m, _)) in pts.iter().enumerate() {
            let x = lin(*xv, x_lo, x_hi, LEFT, RIGHT);
            let y = lin(*m, y_lo, y_hi, BOTTOM, TOP);
            path.push_str(if i == 0 { "M" } else { " L" });
            path.push_str(&format!("{x:.2} {y:.2}"));
        }
        if !path.is_empty() {
            svg.push_str(&format!(
                "<path d=\"{path}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.8\"/>\n"
            ));
        }
        for (xv, m, hw) in &pts {
            let x = lin(*xv, x_lo, x_hi, LEFT, RIGHT);
            let y = lin(*m, y_lo, y_hi, BOTTOM, TOP);
            let y1 = lin(m + hw, y_lo, y_hi, BOTTOM, TOP);
            let y2 = lin(m - hw, y_lo, y_hi, BOTTOM, TOP);
            svg.push_str(&format!(
                "<line x1=\"{x:.2}\" y1=\"{y1:.2}\" x2=\"{x:.2}\" y2=\"{y2:.2}\" stroke=\"{color}\"/>\n"
            ));
            for ye in [y1, y2] {
                svg.push_str(&format!(
                    "<line x1=\"{:.2}\" y1=\"{ye:.2}\" x2=\"{:.2}\" y2=\"{ye:.2}\" stroke=\"{color}\"/>\n",
                    x - 3.5,
                    x + 3.5
                ));
            }
            svg.push_str(&format!(
                "<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"2.6\" fill=\"{color}\"/>\n"
            ));
        }

        // legend
        let ly = TOP + 18.0 * mi as f64;
        svg.push_str(&format!(
            "<line x1=\"{}\" y1=\"{ly}\" x2=\"{}\" y2=\"{ly}\" stroke=\"{color}\" stroke-width=\"2\"/>\n",
            RIGHT + 16.0,
            RIGHT + 44.0
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"13\">{}</text>\n",
            RIGHT + 50.0,
            ly + 4.0,
            method
        ));
    }

    svg.push_str("</svg>\n");
    svg
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Write one chart file per metric; returns the written paths.
pub fn emit_charts(
    rows: &[AggregateRow],
    dir: impl AsRef<Path>,
    experiment: &str,
) -> io::Result<Vec<std::path::PathBuf>> {
    let dir = dir.as_ref();
    let mut written = Vec::new();
    for metric in ChartMetric::ALL {
        let title = format!("{experiment}: {}", metric.label());
        let svg = render_chart(rows, metric, &title);
        let path = dir.join(format!("{experiment}_{}.svg", metric.file_stem()));
        std::fs::write(&path, svg)?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(method: &'static str, x: f64, m: f64, hw: f64) -> AggregateRow {
        AggregateRow {
            experiment: "fig4".into(),
            sweep_param: "p_stay".into(),
            sweep_value: x,
            method,
            seeds: 50,
            avg_distortion: (m, hw),
            spectrum_utilization: (0.9, 0.01),
            collision_rate: (0.06, 0.005),
        }
    }

    #[test]
    fn renders_series_and_legend() {
        let rows = vec![
            row("oracle", 0.5, 73.0, 0.2),
            row("oracle", 0.9, 72.8, 0.1),
            row("belief-map", 0.5, 74.0, 0.3),
            row("belief-map", 0.9, 73.0, 0.2),
        ];
        let svg = render_chart(
            &rows,
            ChartMetric::AvgDistortion,
            "fig4: average distortion",
        );
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("oracle"));
        assert!(svg.contains("belief-map"));
        assert!(svg.matches("<path").count() == 2);
    }

    #[test]
    fn zero_height_error_bars_are_fine() {
        let rows = vec![row("oracle", 0.5, 73.0, 0.0), row("oracle", 0.9, 73.0, 0.0)];
        let svg = render_chart(&rows, ChartMetric::AvgDistortion, "t");
        // the error bar degenerates to a zero-length line at the mean
        assert!(svg.contains("<line"));
        assert!(svg.contains("</svg>"));
    }

    #[test]
    fn nan_only_series_still_renders_axes() {
        let rows = vec![row("oracle", 0.5, f64::NAN, f64::NAN)];
        let svg = render_chart(&rows, ChartMetric::AvgDistortion, "t");
        assert!(svg.contains("</svg>"));
    }
}
