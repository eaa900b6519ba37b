use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::run::{RegretTrace, SummaryRow, TraceSummary};
use crate::error::{Error, Result};

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn non_empty<T>(items: &[T], what: &str) -> Result<()> {
    if items.is_empty() {
        Err(Error::EmptyResults(format!("no {what} to write")))
    } else {
        Ok(())
    }
}

/// Header: `K,L,p_u,p_v,delta_u,delta_v,policy,n,reps,regret_mean,regret_std`.
/// Floats are written in shortest round-trip form.
pub fn write_summary_csv(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    non_empty(rows, "summary rows")?;
    let mut out = csv::Writer::from_writer(create(path)?);
    for row in rows {
        out.serialize(row)?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn read_summary_csv(path: &Path) -> Result<Vec<SummaryRow>> {
    let mut reader = csv::Reader::from_path(path)?;
    reader
        .deserialize()
        .map(|r| r.map_err(Error::from))
        .collect()
}

pub fn write_summary_json(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    non_empty(rows, "summary rows")?;
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, rows)?;
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn write_traces_json(path: &Path, traces: &[RegretTrace]) -> Result<()> {
    non_empty(traces, "traces")?;
    let mut out = create(path)?;
    serde_json::to_writer(&mut out, traces)?;
    out.flush().map_err(|e| Error::io(path, e))
}

/// Header: `step,mean_regret,std_regret`.
pub fn write_trace_csv(path: &Path, summary: &TraceSummary) -> Result<()> {
    non_empty(&summary.steps, "checkpoints")?;
    let mut out = csv::Writer::from_writer(create(path)?);
    out.write_record(["step", "mean_regret", "std_regret"])?;
    for ((step, mean), std) in summary.steps.iter().zip(&summary.mean).zip(&summary.std) {
        out.write_record([step.to_string(), mean.to_string(), std.to_string()])?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

/// Static regret-versus-step chart, one polyline per trace summary.
pub fn write_trace_svg(path: &Path, title: &str, curves: &[TraceSummary]) -> Result<()> {
    non_empty(curves, "curves")?;
    let (w, h, pad) = (640.0, 400.0, 50.0);
    let max_x = curves
        .iter()
        .flat_map(|c| c.steps.last().copied())
        .max()
        .unwrap_or(1)
        .max(1) as f64;
    let max_y = curves
        .iter()
        .flat_map(|c| c.mean.iter().copied())
        .filter(|y| y.is_finite())
        .fold(0.0, f64::max)
        .max(1e-12);
    let sx = |x: f64| pad + (w - 2.0 * pad) * x / max_x;
    let sy = |y: f64| h - pad - (h - 2.0 * pad) * y / max_y;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="25" text-anchor="middle" font-family="sans-serif" font-size="14">{}</text>"#,
        w / 2.0,
        escape(title)
    );
    let _ = writeln!(
        svg,
        r#"<path d="M{pad} {pad} V{} H{}" fill="none" stroke="black"/>"#,
        h - pad,
        w - pad
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="end" font-family="sans-serif" font-size="11">{max_x}</text>"#,
        w - pad,
        h - pad + 15.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="end" font-family="sans-serif" font-size="11">{max_y:.0}</text>"#,
        pad - 4.0,
        pad + 4.0
    );
    for (idx, curve) in curves.iter().enumerate() {
        let color = PALETTE[idx % PALETTE.len()];
        let points: Vec<String> = curve
            .steps
            .iter()
            .zip(&curve.mean)
            .map(|(&x, &y)| format!("{:.2},{:.2}", sx(x as f64), sy(y)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"><title>{}</title></polyline>"#,
            points.join(" "),
            escape(&curve.policy)
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11" fill="{color}">{}</text>"#,
            pad + 10.0,
            pad + 15.0 * (idx as f64 + 1.0),
            escape(&curve.policy)
        );
    }
    svg.push_str("</svg>\n");
    let mut out = create(path)?;
    out.write_all(svg.as_bytes())
        .map_err(|e| Error::io(path, e))?;
    out.flush().map_err(|e| Error::io(path, e))
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}
