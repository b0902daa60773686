//! Files written by the command-line tool: atomic writes, CSV tables and
//! log-log SVG plots.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use crate::error::Result;
use crate::verify::Sweep;

/// Writes through a temporary file in the same directory and renames it
/// into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|d| !d.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

/// Shortest decimal that parses back to the same float.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{x:?}")
    }
}

/// RFC 4180 table with a header row.
pub fn csv_bytes(header: &[String], rows: &[Vec<f64>]) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r.iter().map(|&x| format_float(x)))?;
    }
    Ok(w.into_inner()
        .map_err(|e| std::io::Error::other(e.to_string()))?)
}

pub fn sweep_csv(s: &Sweep) -> Result<Vec<u8>> {
    csv_bytes(&s.columns, &s.rows)
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 440.0;
const MARGIN: f64 = 64.0;

fn log_range(v: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    let (lo, hi) = v.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| {
        (a.min(x), b.max(x))
    });
    if !lo.is_finite() {
        return None;
    }
    let (lo, hi) = (lo.log10().floor(), hi.log10().ceil());
    Some(if hi > lo {
        (lo, hi)
    } else {
        (lo - 1.0, hi + 1.0)
    })
}

/// Log-log plot of a sweep's `plot` columns with error bars and the fitted
/// line. `None` when the sweep has no plot or no positive data.
pub fn sweep_svg(s: &Sweep, title: &str) -> Option<String> {
    let plot = s.plot.as_ref()?;
    let xs = s.column(&plot.x)?;
    let ys = s.column(&plot.y)?;
    let errs = plot.err.as_ref().and_then(|e| s.column(e));
    let pts: Vec<(f64, f64, f64)> = xs
        .iter()
        .zip(&ys)
        .enumerate()
        .filter(|(_, (x, y))| **x > 0.0 && **y > 0.0)
        .map(|(i, (&x, &y))| (x, y, errs.as_ref().map_or(0.0, |e| e[i].max(0.0))))
        .collect();
    if pts.is_empty() {
        return None;
    }
    let (x0, x1) = log_range(pts.iter().map(|p| p.0))?;
    let (y0, y1) = log_range(
        pts.iter()
            .flat_map(|p| [p.1, (p.1 - p.2).max(p.1 * 0.5), p.1 + p.2]),
    )?;
    let px = |x: f64| MARGIN + (x.log10() - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let py = |y: f64| HEIGHT - MARGIN - (y.log10() - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);

    let mut o = String::new();
    let _ = writeln!(
        o,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(o, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        o,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    let (l, r, t, b) = (MARGIN, WIDTH - MARGIN, MARGIN, HEIGHT - MARGIN);
    let _ = writeln!(
        o,
        r#"<rect x="{l}" y="{t}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        r - l,
        b - t
    );
    for e in (x0 as i32)..=(x1 as i32) {
        let x = px(10f64.powi(e));
        let _ = writeln!(
            o,
            r##"<line x1="{x:.2}" y1="{t}" x2="{x:.2}" y2="{b}" stroke="#ddd"/>"##
        );
        let _ = writeln!(
            o,
            r#"<text x="{x:.2}" y="{}" text-anchor="middle">1e{e}</text>"#,
            b + 16.0
        );
    }
    for e in (y0 as i32)..=(y1 as i32) {
        let y = py(10f64.powi(e));
        let _ = writeln!(
            o,
            r##"<line x1="{l}" y1="{y:.2}" x2="{r}" y2="{y:.2}" stroke="#ddd"/>"##
        );
        let _ = writeln!(
            o,
            r#"<text x="{}" y="{:.2}" text-anchor="end">1e{e}</text>"#,
            l - 6.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        o,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        HEIGHT - 20.0,
        escape(&plot.x)
    );
    let _ = writeln!(
        o,
        r#"<text x="18" y="{}" text-anchor="middle" transform="rotate(-90 18 {})">{}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(&plot.y)
    );

    if let Some(fit) = &plot.fit {
        let (a, c) = (pts[0].0, pts[pts.len() - 1].0);
        let _ = writeln!(
            o,
            r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#c33" stroke-dasharray="6 4"/>"##,
            px(a),
            py(fit.predict(a)),
            px(c),
            py(fit.predict(c))
        );
        let _ = writeln!(
            o,
            r##"<text x="{}" y="{}" text-anchor="end" fill="#c33">slope {:.4}</text>"##,
            r - 6.0,
            t + 16.0,
            fit.slope
        );
    }
    let line: Vec<String> = pts
        .iter()
        .map(|p| format!("{:.2},{:.2}", px(p.0), py(p.1)))
        .collect();
    let _ = writeln!(
        o,
        r##"<polyline points="{}" fill="none" stroke="#236"/>"##,
        line.join(" ")
    );
    for &(x, y, e) in &pts {
        if e > 0.0 {
            let lo = (y - e).max(10f64.powf(y0));
            let _ = writeln!(
                o,
                r##"<line x1="{0:.2}" y1="{1:.2}" x2="{0:.2}" y2="{2:.2}" stroke="#236"/>"##,
                px(x),
                py(lo),
                py(y + e)
            );
        }
        let _ = writeln!(
            o,
            r##"<circle cx="{:.2}" cy="{:.2}" r="3" fill="#236"/>"##,
            px(x),
            py(y)
        );
    }
    o.push_str("</svg>\n");
    Some(o)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}
