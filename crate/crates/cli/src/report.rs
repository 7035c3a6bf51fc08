//! Log-log paired-spectrum SVG rendering from emitted CSV artifacts.
//! Plots are rebuilt from files, never from in-memory state, so third
//! parties can regenerate them from the CSVs alone.

use std::fmt::Write as _;
use std::path::Path;

pub struct Curve {
    pub kind: String,
    pub points: Vec<(f64, f64)>, // (frequency_hz, value), positive only
}

pub struct Annotation {
    pub label: String,
    pub distance: f64,
    pub threshold: f64,
    pub stationary: bool,
}

pub fn read_spectra_csv(path: &Path) -> Result<Vec<Curve>, String> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let mut curves: Vec<Curve> = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| format!("{}: {e}", path.display()))?;
        let freq: f64 = row
            .get(0)
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| format!("{}: bad frequency field", path.display()))?;
        let value: f64 = row
            .get(1)
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| format!("{}: bad value field", path.display()))?;
        let kind = row.get(2).unwrap_or("").to_string();
        if freq <= 0.0 || value <= 0.0 {
            continue; // log axes cannot carry DC or non-positive bins
        }
        match curves.iter_mut().find(|c| c.kind == kind) {
            Some(c) => c.points.push((freq, value)),
            None => curves.push(Curve {
                kind,
                points: vec![(freq, value)],
            }),
        }
    }
    if curves.is_empty() {
        return Err(format!("{}: no plottable rows", path.display()));
    }
    Ok(curves)
}

const WIDTH: f64 = 820.0;
const HEIGHT: f64 = 560.0;
const ML: f64 = 70.0; // left margin
const MR: f64 = 25.0;
const MT: f64 = 40.0;
const MB: f64 = 55.0;
const COLORS: [&str; 4] = ["#1f6fb5", "#d95f02", "#2ca02c", "#7a4fa3"];

pub fn render_svg(curves: &[Curve], note: Option<&Annotation>, title: &str) -> String {
    let (mut x_lo, mut x_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y_lo, mut y_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for c in curves {
        for &(x, y) in &c.points {
            let (lx, ly) = (x.log10(), y.log10());
            x_lo = x_lo.min(lx);
            x_hi = x_hi.max(lx);
            y_lo = y_lo.min(ly);
            y_hi = y_hi.max(ly);
        }
    }
    if !(x_lo < x_hi) {
        x_hi = x_lo + 1.0;
    }
    if !(y_lo < y_hi) {
        y_hi = y_lo + 1.0;
    }
    // Pad the value axis a little so curves do not touch the frame.
    let pad = 0.05 * (y_hi - y_lo);
    y_lo -= pad;
    y_hi += pad;

    let pw = WIDTH - ML - MR;
    let ph = HEIGHT - MT - MB;
    let sx = |lx: f64| ML + (lx - x_lo) / (x_hi - x_lo) * pw;
    let sy = |ly: f64| MT + (y_hi - ly) / (y_hi - y_lo) * ph;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"13\">"
    );
    let _ = writeln!(svg, "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>");
    let _ = writeln!(
        svg,
        "<text x=\"{:.1}\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">{}</text>",
        ML + pw / 2.0,
        escape(title)
    );

    // Decade gridlines and tick labels.
    for d in (x_lo.floor() as i64)..=(x_hi.ceil() as i64) {
        let lx = d as f64;
        if lx < x_lo || lx > x_hi {
            continue;
        }
        let x = sx(lx);
        let _ = writeln!(
            svg,
            "<line x1=\"{x:.2}\" y1=\"{MT}\" x2=\"{x:.2}\" y2=\"{:.2}\" stroke=\"#ddd\"/>",
            MT + ph
        );
        let _ = writeln!(
            svg,
            "<text x=\"{x:.2}\" y=\"{:.2}\" text-anchor=\"middle\">1e{d}</text>",
            MT + ph + 18.0
        );
    }
    for d in (y_lo.floor() as i64)..=(y_hi.ceil() as i64) {
        let ly = d as f64;
        if ly < y_lo || ly > y_hi {
            continue;
        }
        let y = sy(ly);
        let _ = writeln!(
            svg,
            "<line x1=\"{ML}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" stroke=\"#ddd\"/>",
            ML + pw
        );
        let _ = writeln!(
            svg,
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">1e{d}</text>",
            ML - 8.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        svg,
        "<rect x=\"{ML}\" y=\"{MT}\" width=\"{pw:.1}\" height=\"{ph:.1}\" fill=\"none\" stroke=\"#333\"/>"
    );
    let _ = writeln!(
        svg,
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">frequency (Hz)</text>",
        ML + pw / 2.0,
        HEIGHT - 12.0
    );
    let _ = writeln!(
        svg,
        "<text x=\"18\" y=\"{:.1}\" text-anchor=\"middle\" transform=\"rotate(-90 18 {:.1})\">spectral value</text>",
        MT + ph / 2.0,
        MT + ph / 2.0
    );

    for (i, curve) in curves.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let mut path = String::new();
        for &(x, y) in &curve.points {
            let cmd = if path.is_empty() { 'M' } else { 'L' };
            let _ = write!(path, "{cmd}{:.2} {:.2} ", sx(x.log10()), sy(y.log10()));
        }
        let _ = writeln!(
            svg,
            "<path d=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>",
            path.trim_end()
        );
        let ly = MT + 16.0 + 18.0 * i as f64;
        let _ = writeln!(
            svg,
            "<line x1=\"{:.1}\" y1=\"{ly:.1}\" x2=\"{:.1}\" y2=\"{ly:.1}\" stroke=\"{color}\" stroke-width=\"2\"/>",
            ML + pw - 150.0,
            ML + pw - 120.0
        );
        let _ = writeln!(
            svg,
            "<text x=\"{:.1}\" y=\"{:.1}\">{}</text>",
            ML + pw - 112.0,
            ly + 4.0,
            escape(&curve.kind)
        );
    }

    if let Some(a) = note {
        let verdict = if a.stationary { "stationary" } else { "non-stationary" };
        let _ = writeln!(
            svg,
            "<text x=\"{:.1}\" y=\"{:.1}\">{}: distance = {:.4e} (threshold {:.4e}): {verdict}</text>",
            ML + 10.0,
            MT + ph - 12.0,
            escape(&a.label),
            a.distance,
            a.threshold
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
