use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde_json::json;

use super::{ExperimentConfig, ExperimentOutput};
use crate::error::Result;

/// Files written for one run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifacts {
    pub csv: PathBuf,
    pub manifest: PathBuf,
    pub svg: Option<PathBuf>,
}

/// Writes `<id>.csv`, `<id>.manifest.json` and, with `plot`, `<id>.svg`
/// into `dir`.
pub fn write_artifacts(
    cfg: &ExperimentConfig,
    out: &ExperimentOutput,
    dir: &Path,
    plot: bool,
    elapsed: Duration,
) -> Result<Artifacts> {
    fs::create_dir_all(dir)?;
    let id = cfg.experiment.id();
    let csv = dir.join(format!("{id}.csv"));
    out.write_csv(fs::File::create(&csv)?)?;
    let svg = if plot {
        let path = dir.join(format!("{id}.svg"));
        fs::write(&path, render_svg(out))?;
        Some(path)
    } else {
        None
    };
    let manifest = dir.join(format!("{id}.manifest.json"));
    let body = json!({
        "experiment": id,
        "config_hash": cfg.hash(),
        "package": { "name": env!("CARGO_PKG_NAME"), "version": env!("CARGO_PKG_VERSION") },
        "threads": rayon::current_num_threads(),
        "timings": { "total_seconds": elapsed.as_secs_f64() },
        "rows": out.rows.len(),
        "csv": csv.file_name().and_then(|s| s.to_str()),
        "svg": svg.as_ref().and_then(|p| p.file_name()).and_then(|s| s.to_str()),
        "notes": out.notes,
        "config": cfg,
    });
    fs::write(&manifest, serde_json::to_string_pretty(&body)? + "\n")?;
    Ok(Artifacts { csv, manifest, svg })
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 56.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// Static line plot of the `ratio_*` metrics (all metrics when none exist)
/// against `α`, one line per metric and depth. With a single `α` the
/// x axis is the depth instead.
pub fn render_svg(out: &ExperimentOutput) -> String {
    let has_ratio = out.rows.iter().any(|r| r.metric.starts_with("ratio"));
    let rows: Vec<_> = out
        .rows
        .iter()
        .filter(|r| r.value.is_finite() && (!has_ratio || r.metric.starts_with("ratio")))
        .collect();
    let mut alphas: Vec<f64> = rows.iter().map(|r| r.alpha).filter(|a| a.is_finite()).collect();
    alphas.sort_by(f64::total_cmp);
    alphas.dedup();
    let by_alpha = alphas.len() > 1;

    let mut series: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
    for r in &rows {
        let (name, x) = if by_alpha {
            (format!("{} L={}", r.metric, r.level), r.alpha)
        } else {
            (r.metric.clone(), f64::from(r.level))
        };
        if !x.is_finite() {
            continue;
        }
        match series.iter_mut().find(|s| s.0 == name) {
            Some(s) => s.1.push((x, r.value)),
            None => series.push((name, vec![(x, r.value)])),
        }
    }
    for s in &mut series {
        s.1.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    let pts = series.iter().flat_map(|s| s.1.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 - x0 <= 0.0 {
        x1 = x0 + 1.0;
    }
    if y1 - y0 <= 0.0 {
        y1 = y0 + 1.0;
    }
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let sy = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="11">"#);
    let _ = writeln!(s, r#"<text x="{MARGIN}" y="20" font-size="14">{}</text>"#, out.kind.id());
    let _ = writeln!(
        s,
        r#"<path d="M{m} {t} L{m} {b} L{r} {b}" fill="none" stroke="black"/>"#,
        m = MARGIN,
        t = MARGIN,
        b = HEIGHT - MARGIN,
        r = WIDTH - MARGIN
    );
    let xlabel = if by_alpha { "alpha" } else { "L" };
    let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}">{xlabel}</text>"#, WIDTH / 2.0, HEIGHT - 16.0);
    for (v, y) in [(y0, sy(y0)), (y1, sy(y1))] {
        let _ = writeln!(s, r#"<text x="4" y="{y:.1}">{v:.3}</text>"#);
    }
    for (v, x) in [(x0, sx(x0)), (x1, sx(x1))] {
        let _ = writeln!(s, r#"<text x="{x:.1}" y="{:.1}">{v:.3}</text>"#, HEIGHT - MARGIN + 14.0);
    }
    for (i, (name, pts)) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let path: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{color}"/>"#, path.join(" "));
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" fill="{color}">{name}</text>"#,
            WIDTH - MARGIN - 120.0,
            MARGIN + 14.0 * i as f64
        );
    }
    s.push_str("</svg>\n");
    s
}
