//! `report.json`, the per-step CSVs and the two SVG figures.
//!
//! Nothing here depends on wall-clock time or the output directory, so the
//! same trace and config give byte-identical files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::analysis::{Analysis, AnalysisReport};
use crate::error::{Error, Result};

pub const REPORT_FILE: &str = "report.json";
pub const XI_CSV: &str = "xi_trace.csv";
pub const PCA_CSV: &str = "pca.csv";
pub const PCA_SVG: &str = "pca.svg";
pub const XI_SVG: &str = "xi_trace.svg";

/// Longest polyline drawn in a figure; longer series are strided.
const MAX_POLYLINE: usize = 4000;
const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 40.0;

pub fn report_json(report: &AnalysisReport) -> Result<String> {
    let mut s = serde_json::to_string_pretty(report)?;
    s.push('\n');
    Ok(s)
}

pub fn write_report(report: &AnalysisReport, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, report_json(report)?).map_err(|e| Error::io(path, e))
}

pub fn read_report(path: impl AsRef<Path>) -> Result<AnalysisReport> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// Writes the report, CSVs and figures into `out_dir` (created if missing).
/// Returns the paths written.
pub fn emit_report(analysis: &Analysis, out_dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = out_dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = vec![(REPORT_FILE, report_json(&analysis.report)?)];

    files.push((XI_CSV, xi_csv(&analysis.tension.values)));
    let bound = analysis.report.config.bound;
    files.push((XI_SVG, xi_svg(&analysis.tension.values, bound.sqrt())));

    if let Some(points) = &analysis.pca_points {
        files.push((PCA_CSV, pca_csv(points)));
        files.push((PCA_SVG, pca_svg(points, &analysis.centroid_points)));
    }

    let mut written = Vec::with_capacity(files.len());
    for (name, body) in files {
        let path = dir.join(name);
        fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}

/// Shortest round-trip decimal, same as the JSON files.
pub(crate) fn fmt_f64(x: f64) -> String {
    match serde_json::Number::from_f64(x) {
        Some(n) => n.to_string(),
        None if x.is_nan() => "NaN".into(),
        None if x > 0.0 => "inf".into(),
        None => "-inf".into(),
    }
}

fn xi_csv(values: &[f64]) -> String {
    let mut s = String::from("step,xi\n");
    for (k, x) in values.iter().enumerate() {
        let _ = writeln!(s, "{k},{}", fmt_f64(*x));
    }
    s
}

fn pca_csv(points: &[(usize, f64, f64)]) -> String {
    let mut s = String::from("step,pc1,pc2\n");
    for (k, a, b) in points {
        let _ = writeln!(s, "{k},{},{}", fmt_f64(*a), fmt_f64(*b));
    }
    s
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn fit(xs: impl Iterator<Item = f64> + Clone, ys: impl Iterator<Item = f64> + Clone) -> Frame {
        let (x0, x1) = range(xs);
        let (y0, y1) = range(ys);
        Frame { x0, x1, y0, y1 }
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - MARGIN - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - 2.0 * MARGIN)
    }
}

fn range(it: impl Iterator<Item = f64>) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in it.filter(|v| v.is_finite()) {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        return (lo - 0.5, hi + 0.5);
    }
    (lo, hi)
}

fn stride(len: usize) -> usize {
    len.div_ceil(MAX_POLYLINE).max(1)
}

fn svg_open(title: &str, xlabel: &str, ylabel: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        WIDTH - 2.0 * MARGIN,
        HEIGHT - 2.0 * MARGIN
    );
    let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{title}</text>"#, WIDTH / 2.0);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle" font-size="12">{xlabel}</text>"#,
        WIDTH / 2.0,
        HEIGHT - 12.0
    );
    let _ = writeln!(
        s,
        r#"<text x="14" y="{}" text-anchor="middle" font-size="12" transform="rotate(-90 14 {})">{ylabel}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0
    );
    s
}

fn polyline(s: &mut String, pts: impl Iterator<Item = (f64, f64)>, color: &str) {
    s.push_str(r#"<polyline fill="none" stroke=""#);
    s.push_str(color);
    s.push_str(r#"" stroke-width="0.6" points=""#);
    for (i, (x, y)) in pts.enumerate() {
        if i > 0 {
            s.push(' ');
        }
        let _ = write!(s, "{x:.2},{y:.2}");
    }
    s.push_str("\"/>\n");
}

fn xi_svg(values: &[f64], bound_line: f64) -> String {
    let n = values.len();
    let xs = (0..n).map(|k| k as f64);
    let ys = values.iter().copied().chain(std::iter::once(bound_line));
    let frame = Frame::fit(xs, ys);
    let mut s = svg_open("tension", "step", "xi");
    let step = stride(n);
    polyline(
        &mut s,
        values
            .iter()
            .enumerate()
            .step_by(step)
            .map(|(k, x)| (frame.px(k as f64), frame.py(*x))),
        "steelblue",
    );
    if bound_line.is_finite() {
        let y = frame.py(bound_line);
        let _ = writeln!(
            s,
            r#"<line x1="{MARGIN}" y1="{y:.2}" x2="{}" y2="{y:.2}" stroke="firebrick" stroke-dasharray="4 3"/>"#,
            WIDTH - MARGIN
        );
    }
    s.push_str("</svg>\n");
    s
}

fn pca_svg(points: &[(usize, f64, f64)], centroids: &[(f64, f64)]) -> String {
    let frame = Frame::fit(
        points.iter().map(|p| p.1).chain(centroids.iter().map(|c| c.0)),
        points.iter().map(|p| p.2).chain(centroids.iter().map(|c| c.1)),
    );
    let mut s = svg_open("trajectory (PC1, PC2)", "PC1", "PC2");
    polyline(
        &mut s,
        points
            .iter()
            .step_by(stride(points.len()))
            .map(|p| (frame.px(p.1), frame.py(p.2))),
        "steelblue",
    );
    for (a, b) in centroids {
        let _ = writeln!(
            s,
            r#"<circle cx="{:.2}" cy="{:.2}" r="4" fill="firebrick"/>"#,
            frame.px(*a),
            frame.py(*b)
        );
    }
    s.push_str("</svg>\n");
    s
}
