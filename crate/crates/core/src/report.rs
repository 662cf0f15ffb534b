//! Report files: JSON summary, per-driver CSV and two SVG figures per rule.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::model::AggregateReport;
use crate::pipeline::ensure_dir;

pub fn report_json(report: &AggregateReport) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(report).expect("report serializes");
    out.push(b'\n');
    out
}

/// Columns: `rule,scenario_id,vehicle_id,rc_mean,frame_count`.
pub fn driver_scores_csv(report: &AggregateReport) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for s in &report.driver_scores {
        w.serialize(s).expect("in-memory csv write");
    }
    w.into_inner().expect("in-memory csv flush")
}

const W: f64 = 640.0;
const H: f64 = 400.0;
const LEFT: f64 = 64.0;
const RIGHT: f64 = 16.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 56.0;

fn svg_open(title: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        W / 2.0,
        escape(title)
    );
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn axes(s: &mut String, x_label: &str, y_label: &str) {
    let (x0, y0, x1) = (LEFT, H - BOTTOM, W - RIGHT);
    let _ = writeln!(s, r#"<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>"#);
    let _ = writeln!(s, r#"<line x1="{x0}" y1="{TOP}" x2="{x0}" y2="{y0}" stroke="black"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        (x0 + x1) / 2.0,
        H - 12.0,
        escape(x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
        (TOP + y0) / 2.0,
        (TOP + y0) / 2.0,
        escape(y_label)
    );
}

/// Driver-score histogram with a log-scaled count axis. A bar of height one
/// decade means a single driver; empty bins draw nothing.
pub fn histogram_svg(report: &AggregateReport) -> String {
    let h = &report.histogram;
    let max = h.counts.iter().copied().max().unwrap_or(0).max(1);
    let decades = (max as f64).log10().ceil().max(1.0) as u32;
    let plot_h = H - BOTTOM - TOP;
    let plot_w = W - LEFT - RIGHT;
    // log10(count) + 1 units tall, so count 1 is visible
    let unit = plot_h / (decades as f64 + 1.0);
    let y0 = H - BOTTOM;

    let mut s = svg_open(&format!(
        "Rule conformity ({}), {} drivers",
        report.rule, report.driver_count
    ));
    axes(&mut s, "rule conformity", "drivers (log scale)");
    for d in 0..=decades {
        let y = y0 - unit * (d as f64 + 1.0);
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="black"/><text x="{}" y="{:.2}" text-anchor="end">{}</text>"#,
            LEFT - 4.0,
            LEFT - 6.0,
            y + 4.0,
            10u64.pow(d)
        );
    }
    let bw = plot_w / h.bin_count as f64;
    for (i, &c) in h.counts.iter().enumerate() {
        if c == 0 {
            continue;
        }
        let bh = unit * ((c as f64).log10() + 1.0);
        let _ = writeln!(
            s,
            r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="#4878a8" stroke="white"><title>[{:.2}, {:.2}{}: {c}</title></rect>"##,
            LEFT + bw * i as f64,
            y0 - bh,
            bw,
            bh,
            h.bin_edges[i],
            h.bin_edges[i + 1],
            if i + 1 == h.bin_count { "]" } else { ")" },
        );
    }
    for t in 0..=4 {
        let v = t as f64 / 4.0;
        let x = LEFT + plot_w * v;
        let _ = writeln!(
            s,
            r#"<text x="{x:.2}" y="{}" text-anchor="middle">{v:.2}</text>"#,
            y0 + 16.0
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Shares of drivers per quarter interval, plus the share at exactly 1.0.
pub fn relative_svg(report: &AggregateReport) -> String {
    let r = &report.relative_bins;
    let labels = ["[0, .25)", "[.25, .5)", "[.5, .75)", "[.75, 1]", "= 1"];
    let values = [r.quarters[0], r.quarters[1], r.quarters[2], r.quarters[3], r.strict_share];
    let plot_h = H - BOTTOM - TOP;
    let plot_w = W - LEFT - RIGHT;
    let y0 = H - BOTTOM;
    let slot = plot_w / values.len() as f64;

    let mut s = svg_open(&format!("Relative rule conformity ({})", report.rule));
    axes(&mut s, "rule conformity", "share of drivers");
    for t in 0..=4 {
        let v = t as f64 / 4.0;
        let y = y0 - plot_h * v;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.2}" text-anchor="end">{:.0}%</text>"#,
            LEFT - 6.0,
            y + 4.0,
            v * 100.0
        );
    }
    for (i, (&v, label)) in values.iter().zip(labels).enumerate() {
        let x = LEFT + slot * i as f64 + slot * 0.15;
        let bh = plot_h * v;
        let fill = if i == 4 { "#a85848" } else { "#4878a8" };
        let _ = writeln!(
            s,
            r#"<rect x="{x:.2}" y="{:.2}" width="{:.2}" height="{bh:.2}" fill="{fill}"/>"#,
            y0 - bh,
            slot * 0.7
        );
        let cx = x + slot * 0.35;
        let _ = writeln!(
            s,
            r#"<text x="{cx:.2}" y="{:.2}" text-anchor="middle">{:.1}%</text><text x="{cx:.2}" y="{}" text-anchor="middle">{label}</text>"#,
            y0 - bh - 4.0,
            v * 100.0,
            y0 + 16.0
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Write all four files for every report; returns the paths written.
pub fn write_outputs(
    dir: &Path,
    reports: &[AggregateReport],
) -> Result<Vec<PathBuf>, (PathBuf, std::io::Error)> {
    ensure_dir(dir)?;
    let mut written = Vec::new();
    for r in reports {
        let rule = r.rule.short_name();
        let files: [(String, Vec<u8>); 4] = [
            (format!("report_{rule}.json"), report_json(r)),
            (format!("driver_scores_{rule}.csv"), driver_scores_csv(r)),
            (format!("histogram_{rule}.svg"), histogram_svg(r).into_bytes()),
            (format!("relative_{rule}.svg"), relative_svg(r).into_bytes()),
        ];
        for (name, bytes) in files {
            let path = dir.join(name);
            fs::write(&path, bytes).map_err(|e| (path.clone(), e))?;
            written.push(path);
        }
    }
    Ok(written)
}
