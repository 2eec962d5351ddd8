//! Deterministic SVG rendering of experiment CSV output.
//!
//! The CSV schema is the contract; plots are a convenience layer over it.
//! Rendering is plain string assembly with fixed-precision coordinates, so a
//! given CSV always produces byte-identical SVG.

use std::path::{Path, PathBuf};

use crate::experiment::{read_csv, ExperimentError, ResultRow};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 30.0;
const MARGIN_B: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    /// Empirical CDF of `axis_value` with an optional vertical threshold
    /// marker.
    Cdf,
    /// Across-scene mean of a y column versus `axis_value`, with a one
    /// standard deviation band.
    Line,
}

#[derive(Debug, Clone)]
pub struct PlotSpec {
    pub kind: PlotKind,
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    /// Vertical marker position (CDF plots draw it as a dashed line, e.g. at
    /// the covertness threshold `2 eps^2`).
    pub threshold: Option<f64>,
    /// Which row field supplies y values for line plots.
    pub y_column: YColumn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum YColumn {
    MiBits,
    RateBits,
    Kl01,
    Kl10,
    Xi,
    WorstKl,
}

impl YColumn {
    fn get(&self, row: &ResultRow) -> Option<f64> {
        match self {
            YColumn::MiBits => row.mi_bits,
            YColumn::RateBits => row.rate_bits,
            YColumn::Kl01 => row.kl01,
            YColumn::Kl10 => row.kl10,
            YColumn::Xi => row.xi,
            YColumn::WorstKl => row.worst_kl,
        }
    }
}

impl PlotSpec {
    pub fn cdf(title: &str, x_label: &str, threshold: Option<f64>) -> Self {
        PlotSpec {
            kind: PlotKind::Cdf,
            title: title.to_string(),
            x_label: x_label.to_string(),
            y_label: "empirical CDF".to_string(),
            threshold,
            y_column: YColumn::Kl01,
        }
    }

    pub fn line(title: &str, x_label: &str, y_label: &str, y_column: YColumn) -> Self {
        PlotSpec {
            kind: PlotKind::Line,
            title: title.to_string(),
            x_label: x_label.to_string(),
            y_label: y_label.to_string(),
            threshold: None,
            y_column,
        }
    }
}

fn fmt(v: f64) -> String {
    format!("{v:.2}")
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else if v.abs() >= 0.01 && v.abs() < 10_000.0 {
        let s = format!("{v:.4}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{v:.3e}")
    }
}

struct Axes {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
}

impl Axes {
    fn new(xs: &[f64], ys: &[f64]) -> Self {
        let span = |v: &[f64]| {
            let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            if lo == hi {
                (lo - 0.5, hi + 0.5)
            } else {
                let pad = 0.05 * (hi - lo);
                (lo - pad, hi + pad)
            }
        };
        let (x_min, x_max) = span(xs);
        let (y_min, y_max) = span(ys);
        Axes { x_min, x_max, y_min, y_max }
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN_L + (x - self.x_min) / (self.x_max - self.x_min) * (WIDTH - MARGIN_L - MARGIN_R)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - MARGIN_B
            - (y - self.y_min) / (self.y_max - self.y_min) * (HEIGHT - MARGIN_T - MARGIN_B)
    }
}

fn svg_open(out: &mut String) {
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n\
         <rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n"
    ));
}

fn svg_frame(out: &mut String, ax: &Axes, spec: &PlotSpec) {
    let x0 = MARGIN_L;
    let x1 = WIDTH - MARGIN_R;
    let y0 = HEIGHT - MARGIN_B;
    let y1 = MARGIN_T;
    out.push_str(&format!(
        "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n",
        fmt(x0),
        fmt(y1),
        fmt(x1 - x0),
        fmt(y0 - y1)
    ));
    for i in 0..=4 {
        let t = i as f64 / 4.0;
        let xv = ax.x_min + t * (ax.x_max - ax.x_min);
        let yv = ax.y_min + t * (ax.y_max - ax.y_min);
        let px = ax.px(xv);
        let py = ax.py(yv);
        out.push_str(&format!(
            "<line x1=\"{p}\" y1=\"{}\" x2=\"{p}\" y2=\"{}\" stroke=\"black\"/>\n",
            fmt(y0),
            fmt(y0 + 5.0),
            p = fmt(px)
        ));
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"11\" text-anchor=\"middle\">{}</text>\n",
            fmt(px),
            fmt(y0 + 18.0),
            fmt_tick(xv)
        ));
        out.push_str(&format!(
            "<line x1=\"{}\" y1=\"{p}\" x2=\"{}\" y2=\"{p}\" stroke=\"black\"/>\n",
            fmt(x0 - 5.0),
            fmt(x0),
            p = fmt(py)
        ));
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"11\" text-anchor=\"end\">{}</text>\n",
            fmt(x0 - 8.0),
            fmt(py + 4.0),
            fmt_tick(yv)
        ));
    }
    out.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-size=\"13\" text-anchor=\"middle\">{}</text>\n",
        fmt((x0 + x1) / 2.0),
        fmt(HEIGHT - 10.0),
        xml_escape(&spec.x_label)
    ));
    out.push_str(&format!(
        "<text x=\"16\" y=\"{}\" font-size=\"13\" text-anchor=\"middle\" \
         transform=\"rotate(-90 16 {y})\">{}</text>\n",
        fmt((y0 + y1) / 2.0),
        xml_escape(&spec.y_label),
        y = fmt((y0 + y1) / 2.0)
    ));
    out.push_str(&format!(
        "<text x=\"{}\" y=\"20\" font-size=\"14\" text-anchor=\"middle\">{}</text>\n",
        fmt((x0 + x1) / 2.0),
        xml_escape(&spec.title)
    ));
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn polyline(out: &mut String, pts: &[(f64, f64)], stroke: &str, dash: Option<&str>) {
    let coords: Vec<String> = pts.iter().map(|&(x, y)| format!("{},{}", fmt(x), fmt(y))).collect();
    let dash = dash.map(|d| format!(" stroke-dasharray=\"{d}\"")).unwrap_or_default();
    out.push_str(&format!(
        "<polyline points=\"{}\" fill=\"none\" stroke=\"{stroke}\" stroke-width=\"1.5\"{dash}/>\n",
        coords.join(" ")
    ));
}

/// Renders the empirical CDF of `axis_value` over all rows.
pub fn render_cdf(rows: &[ResultRow], spec: &PlotSpec) -> Result<String, ExperimentError> {
    let mut xs: Vec<f64> = rows
        .iter()
        .filter(|r| r.feasible_flag && r.axis_value.is_finite())
        .map(|r| r.axis_value)
        .collect();
    if xs.is_empty() {
        return Err(ExperimentError::NoData("no finite feasible samples".into()));
    }
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut x_span = xs.clone();
    if let Some(t) = spec.threshold {
        x_span.push(t);
    }
    let ax = Axes::new(&x_span, &[0.0, 1.0]);
    let mut out = String::new();
    svg_open(&mut out);
    svg_frame(&mut out, &ax, spec);
    // Step function: right-continuous jumps at each sample.
    let mut pts = vec![(ax.px(ax.x_min), ax.py(0.0))];
    for (i, &x) in xs.iter().enumerate() {
        let y_before = i as f64 / n;
        let y_after = (i + 1) as f64 / n;
        pts.push((ax.px(x), ax.py(y_before)));
        pts.push((ax.px(x), ax.py(y_after)));
    }
    pts.push((ax.px(ax.x_max), ax.py(1.0)));
    polyline(&mut out, &pts, "steelblue", None);
    if let Some(t) = spec.threshold {
        let px = ax.px(t);
        polyline(
            &mut out,
            &[(px, ax.py(0.0)), (px, ax.py(1.0))],
            "crimson",
            Some("6 4"),
        );
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"11\" fill=\"crimson\">threshold</text>\n",
            fmt(px + 4.0),
            fmt(MARGIN_T + 14.0)
        ));
    }
    out.push_str("</svg>\n");
    Ok(out)
}

/// Renders the across-scene mean of the chosen column versus `axis_value`
/// with a one standard deviation band.
pub fn render_line(rows: &[ResultRow], spec: &PlotSpec) -> Result<String, ExperimentError> {
    let mut by_x: Vec<(f64, Vec<f64>)> = Vec::new();
    for r in rows {
        if !r.feasible_flag || !r.axis_value.is_finite() {
            continue;
        }
        let Some(y) = spec.y_column.get(r) else { continue };
        match by_x.iter_mut().find(|(x, _)| *x == r.axis_value) {
            Some((_, v)) => v.push(y),
            None => by_x.push((r.axis_value, vec![y])),
        }
    }
    if by_x.is_empty() {
        return Err(ExperimentError::NoData("no finite feasible samples".into()));
    }
    by_x.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut means = Vec::new();
    let mut los = Vec::new();
    let mut his = Vec::new();
    for (x, v) in &by_x {
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        let std = if v.len() > 1 {
            (v.iter().map(|y| (y - mean) * (y - mean)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
        } else {
            0.0
        };
        means.push((*x, mean));
        los.push((*x, mean - std));
        his.push((*x, mean + std));
    }
    let xs: Vec<f64> = means.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = los.iter().chain(his.iter()).map(|p| p.1).collect();
    let ax = Axes::new(&xs, &ys);
    let mut out = String::new();
    svg_open(&mut out);
    svg_frame(&mut out, &ax, spec);
    // Error band as a closed polygon: upper edge forward, lower edge back.
    let mut band: Vec<String> = his
        .iter()
        .map(|&(x, y)| format!("{},{}", fmt(ax.px(x)), fmt(ax.py(y))))
        .collect();
    band.extend(
        los.iter()
            .rev()
            .map(|&(x, y)| format!("{},{}", fmt(ax.px(x)), fmt(ax.py(y)))),
    );
    out.push_str(&format!(
        "<polygon points=\"{}\" fill=\"steelblue\" fill-opacity=\"0.2\" stroke=\"none\"/>\n",
        band.join(" ")
    ));
    let pts: Vec<(f64, f64)> = means.iter().map(|&(x, y)| (ax.px(x), ax.py(y))).collect();
    polyline(&mut out, &pts, "steelblue", None);
    for &(x, y) in &pts {
        out.push_str(&format!(
            "<circle cx=\"{}\" cy=\"{}\" r=\"3\" fill=\"steelblue\"/>\n",
            fmt(x),
            fmt(y)
        ));
    }
    out.push_str("</svg>\n");
    Ok(out)
}

/// Reads a result CSV and writes one SVG per requested spec next to `out`.
/// Returns the written paths in order.
pub fn render_plots(
    csv_path: &str,
    specs: &[PlotSpec],
    out_stem: &Path,
) -> Result<Vec<PathBuf>, ExperimentError> {
    let rows = read_csv(csv_path)?;
    let mut written = Vec::new();
    for (i, spec) in specs.iter().enumerate() {
        let svg = match spec.kind {
            PlotKind::Cdf => render_cdf(&rows, spec)?,
            PlotKind::Line => render_line(&rows, spec)?,
        };
        let path = if specs.len() == 1 {
            out_stem.with_extension("svg")
        } else {
            let stem = out_stem
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "plot".to_string());
            out_stem.with_file_name(format!("{stem}_{i}.svg"))
        };
        std::fs::write(&path, svg)?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_rows() -> Vec<ResultRow> {
        let mut rows = Vec::new();
        for scene in 0..4u64 {
            for (i, x) in [1.0, 2.0, 3.0].iter().enumerate() {
                rows.push(ResultRow {
                    scene_id: scene,
                    axis_value: *x,
                    mi_bits: Some(1.0 + *x + 0.1 * scene as f64),
                    rate_bits: Some(0.5 * *x),
                    kl01: Some(0.001 * *x),
                    kl10: Some(0.0009 * *x),
                    p_fa: Some(0.3),
                    p_md: Some(0.6),
                    xi: Some(0.9),
                    worst_kl: Some(0.004),
                    feasible_flag: i != 1 || scene != 3,
                    wall_time_ms: 0,
                });
            }
        }
        rows
    }

    #[test]
    fn cdf_is_deterministic_and_marks_threshold() {
        let rows = sample_rows();
        let spec = PlotSpec::cdf("kl cdf", "achieved KL", Some(0.005));
        let a = render_cdf(&rows, &spec).unwrap();
        let b = render_cdf(&rows, &spec).unwrap();
        assert_eq!(a, b);
        assert!(a.contains("threshold"));
        assert!(a.contains("stroke-dasharray"));
        assert!(a.starts_with("<svg"));
        assert!(a.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn line_plot_renders_band_and_markers() {
        let rows = sample_rows();
        let spec = PlotSpec::line("mi sweep", "power", "mi bits", YColumn::MiBits);
        let svg = render_line(&rows, &spec).unwrap();
        assert!(svg.contains("<polygon"));
        assert!(svg.matches("<circle").count() == 3);
    }

    #[test]
    fn empty_input_is_an_explicit_error() {
        let spec = PlotSpec::cdf("x", "y", None);
        assert!(matches!(
            render_cdf(&[], &spec),
            Err(ExperimentError::NoData(_))
        ));
        let infeasible: Vec<ResultRow> = sample_rows()
            .into_iter()
            .map(|mut r| {
                r.feasible_flag = false;
                r
            })
            .collect();
        assert!(matches!(
            render_line(&infeasible, &spec),
            Err(ExperimentError::NoData(_))
        ));
    }

    #[test]
    fn render_plots_roundtrips_through_csv() {
        let rows = sample_rows();
        let dir = std::env::temp_dir();
        let csv_path = dir.join("covertbeam_plot_test.csv");
        let mut buf = Vec::new();
        crate::experiment::write_csv(&rows, &mut buf).unwrap();
        std::fs::write(&csv_path, buf).unwrap();
        let specs = vec![
            PlotSpec::cdf("cdf", "axis", Some(0.005)),
            PlotSpec::line("line", "axis", "mi", YColumn::MiBits),
        ];
        let out = dir.join("covertbeam_plot_test.svg");
        let written = render_plots(csv_path.to_str().unwrap(), &specs, &out).unwrap();
        assert_eq!(written.len(), 2);
        for p in &written {
            let text = std::fs::read_to_string(p).unwrap();
            assert!(text.starts_with("<svg"));
        }
    }
}
