//! Headless plot emission: one file per metric per height ratio, drawing the
//! metric against K. SVG files are self-contained; gnuplot scripts read the
//! CSV written alongside them.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use attocell_core::sweep::{csv_columns, SweepResult, SweepSpec};

use crate::config::PlotFormat;

pub const METRICS: [&str; 3] = ["p_e", "r_reported", "goodput"];

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 160.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const COLORS: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
];

struct Series {
    label: String,
    points: Vec<(f64, f64)>,
}

/// Path of the plot for `metric` at `ratio`, next to `csv`.
pub fn plot_path(csv: &Path, metric: &str, ratio: f64, format: PlotFormat) -> PathBuf {
    let stem = csv.file_stem().and_then(|s| s.to_str()).unwrap_or("sweep");
    let ext = match format {
        PlotFormat::Svg => "svg",
        PlotFormat::GnuplotScript => "gp",
    };
    csv.with_file_name(format!("{stem}_{metric}_ha{ratio}.{ext}"))
}

/// Renders every plot; returns `(path, contents)` pairs.
pub fn render_all(
    csv: &Path,
    spec: &SweepSpec,
    result: &SweepResult,
    format: PlotFormat,
) -> Vec<(PathBuf, String)> {
    let mut out = Vec::new();
    for &ratio in &spec.ha_ratios {
        for metric in METRICS {
            let body = match format {
                PlotFormat::Svg => svg(metric, ratio, &series(spec, result, ratio, metric)),
                PlotFormat::GnuplotScript => gnuplot(csv, spec, metric, ratio),
            };
            out.push((plot_path(csv, metric, ratio, format), body));
        }
    }
    out
}

fn pick(metric: &str, m: &attocell_core::LinkMetrics) -> f64 {
    match metric {
        "p_e" => m.p_e,
        "r_reported" => m.r_reported,
        _ => m.goodput,
    }
}

fn series(spec: &SweepSpec, result: &SweepResult, ratio: f64, metric: &str) -> Vec<Series> {
    let mut out: Vec<(usize, &'static str, Series)> = Vec::new();
    for row in result.rows.iter().filter(|r| r.h_over_a == ratio) {
        let Ok(m) = &row.metrics else { continue };
        let tag = row.method.tag();
        let idx = match out
            .iter()
            .position(|(p, t, _)| *p == row.position_index && *t == tag)
        {
            Some(i) => i,
            None => {
                let pos = spec.positions[row.position_index];
                out.push((
                    row.position_index,
                    tag,
                    Series {
                        label: format!("z=({}, {}) {tag}", pos.x, pos.y),
                        points: Vec::new(),
                    },
                ));
                out.len() - 1
            }
        };
        out[idx].2.points.push((f64::from(row.k), pick(metric, m)));
    }
    out.into_iter().map(|(_, _, s)| s).collect()
}

fn nice_range(lo: f64, hi: f64) -> (f64, f64) {
    if !(lo.is_finite() && hi.is_finite()) {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-300 {
        let pad = if lo == 0.0 { 1.0 } else { lo.abs() * 0.1 };
        return (lo - pad, hi + pad);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn svg(metric: &str, ratio: f64, series: &[Series]) -> String {
    let all = series.iter().flat_map(|s| s.points.iter());
    let (mut xmin, mut xmax, mut ymin, mut ymax) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for &(x, y) in all {
        xmin = xmin.min(x);
        xmax = xmax.max(x);
        ymin = ymin.min(y);
        ymax = ymax.max(y);
    }
    let (xmin, xmax) = nice_range(xmin, xmax);
    let (ymin, ymax) = nice_range(ymin, ymax);
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - xmin) / (xmax - xmin) * pw;
    let sy = |y: f64| TOP + (ymax - y) / (ymax - ymin) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{metric} vs K, h/a = {ratio}</text>"#,
        LEFT + pw / 2.0
    );
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    for i in 0..=5 {
        let y = ymin + (ymax - ymin) * f64::from(i) / 5.0;
        let py = sy(y);
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{py:.2}" x2="{LEFT}" y2="{py:.2}" stroke="black"/><text x="{}" y="{:.2}" text-anchor="end">{y:.4e}</text>"#,
            LEFT - 5.0,
            LEFT - 8.0,
            py + 4.0
        );
    }
    let first = xmin.ceil() as i64;
    let last = xmax.floor() as i64;
    let stride = ((last - first) / 15 + 1).max(1);
    for k in (first..=last).step_by(stride as usize) {
        let px = sx(k as f64);
        let _ = writeln!(
            s,
            r#"<line x1="{px:.2}" y1="{}" x2="{px:.2}" y2="{}" stroke="black"/><text x="{px:.2}" y="{}" text-anchor="middle">{k}</text>"#,
            TOP + ph,
            TOP + ph + 5.0,
            TOP + ph + 20.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">K</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 10.0
    );
    for (i, ser) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let pts: Vec<String> = ser
            .points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            pts.join(" ")
        );
        for &(x, y) in &ser.points {
            let _ = writeln!(
                s,
                r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{color}"/>"#,
                sx(x),
                sy(y)
            );
        }
        let ly = TOP + 14.0 + 16.0 * i as f64;
        let lx = WIDTH - RIGHT + 10.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
            lx + 16.0,
            lx + 20.0,
            ly + 4.0,
            escape(&ser.label)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn gnuplot(csv: &Path, spec: &SweepSpec, metric: &str, ratio: f64) -> String {
    let cols = csv_columns(spec.mc.is_some());
    let col = |name: &str| cols.iter().position(|c| *c == name).unwrap() + 1;
    let (c_ratio, c_k, c_zx, c_zy, c_method, c_metric) = (
        col("h_over_a"),
        col("K"),
        col("z_x"),
        col("z_y"),
        col("method"),
        col(metric),
    );
    let data = csv
        .file_name()
        .and_then(|s| s.to_str())
        .unwrap_or("sweep.csv");
    let out = plot_path(csv, metric, ratio, PlotFormat::Svg);
    let out = out
        .file_name()
        .and_then(|s| s.to_str())
        .unwrap_or("plot.svg");
    let methods: Vec<&str> = match spec.method {
        attocell_core::SweepMethod::ExactSum => vec!["exact-sum"],
        attocell_core::SweepMethod::ClosedForm => vec!["closed-form"],
        attocell_core::SweepMethod::Both => vec!["closed-form", "exact-sum"],
    };

    let mut s = String::new();
    let _ = writeln!(
        s,
        "# {metric} vs K at h/a = {ratio}; run from the directory holding {data}"
    );
    let _ = writeln!(s, "set datafile separator ','");
    let _ = writeln!(s, "set terminal svg size 640,400");
    let _ = writeln!(s, "set output '{out}'");
    let _ = writeln!(s, "set title '{metric} vs K, h/a = {ratio}'");
    let _ = writeln!(s, "set xlabel 'K'");
    let _ = writeln!(s, "set ylabel '{metric}'");
    let _ = writeln!(s, "set key outside right");
    let mut clauses = Vec::new();
    for pos in &spec.positions {
        for m in &methods {
            clauses.push(format!(
                "'{data}' every ::1 using {c_k}:((abs(${c_ratio}-{ratio})<1e-9 && abs(${c_zx}-({x}))<1e-9 && abs(${c_zy}-({y}))<1e-9 && strcol({c_method}) eq '{m}') ? ${c_metric} : 1/0) with linespoints title 'z=({x}, {y}) {m}'",
                x = pos.x,
                y = pos.y,
            ));
        }
    }
    let _ = writeln!(s, "plot {}", clauses.join(", \\\n     "));
    s
}
