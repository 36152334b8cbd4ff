//! Learning curves as a standalone SVG: teacher estimate `g` against
//! cumulative interactions, one polyline per (run, edge), with dashed
//! markers where an edge converged.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::{io_err, read_metrics_csv, HarnessError};
use crate::metrics::Event;

const WIDTH: f64 = 900.0;
const HEIGHT: f64 = 520.0;
const MARGIN: f64 = 60.0;
const LEGEND_W: f64 = 240.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2",
];

#[derive(Debug, Clone, PartialEq)]
pub struct PlotSummary {
    pub rows: usize,
    pub series: usize,
    pub convergences: usize,
}

type Series = BTreeMap<(String, String), Vec<(f64, f64)>>;

pub fn plot_curves(files: &[PathBuf], out: &Path) -> Result<PlotSummary, HarnessError> {
    let mut series: Series = BTreeMap::new();
    let mut converged: Vec<(f64, String)> = Vec::new();
    let mut rows = 0;
    for f in files {
        let file = std::fs::File::open(f).map_err(io_err(f))?;
        for r in read_metrics_csv(file)? {
            rows += 1;
            let x = r.cum_interactions as f64;
            match (r.event, r.g) {
                (Event::Step, Some(g)) => series
                    .entry((r.run_id, r.edge))
                    .or_default()
                    .push((x, g)),
                (Event::Converged, _) => converged.push((x, format!("{} {}", r.run_id, r.edge))),
                _ => {}
            }
        }
    }
    if series.is_empty() {
        return Err(HarnessError::EmptyMetrics);
    }
    let svg = render(&series, &converged);
    std::fs::write(out, svg).map_err(io_err(out))?;
    Ok(PlotSummary {
        rows,
        series: series.len(),
        convergences: converged.len(),
    })
}

fn render(series: &Series, converged: &[(f64, String)]) -> String {
    let x_max = series
        .values()
        .flatten()
        .map(|p| p.0)
        .chain(converged.iter().map(|c| c.0))
        .fold(1.0, f64::max);
    let plot_w = WIDTH - 2.0 * MARGIN - LEGEND_W;
    let plot_h = HEIGHT - 2.0 * MARGIN;
    let sx = |x: f64| MARGIN + x / x_max * plot_w;
    let sy = |y: f64| MARGIN + (1.0 - y.clamp(0.0, 1.0)) * plot_h;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let (x0, y0, x1, y1) = (sx(0.0), sy(0.0), sx(x_max), sy(1.0));
    let _ = writeln!(
        s,
        r#"<path d="M{x0:.1},{y1:.1} L{x0:.1},{y0:.1} L{x1:.1},{y0:.1}" stroke="black" fill="none"/>"#
    );
    for i in 0..=4 {
        let v = i as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{v:.2}</text>"#,
            x0 - 6.0,
            sy(v) + 4.0
        );
        let xv = x_max * v;
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            sx(xv),
            y0 + 16.0,
            xv.round()
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">environment interactions</text>"#,
        (x0 + x1) / 2.0,
        y0 + 36.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.1}" transform="rotate(-90 16 {:.1})" text-anchor="middle">teacher estimate g</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0
    );
    for (x, label) in converged {
        let _ = writeln!(
            s,
            r##"<line x1="{0:.1}" y1="{y1:.1}" x2="{0:.1}" y2="{y0:.1}" stroke="#888" stroke-dasharray="4 3"><title>converged: {1}</title></line>"##,
            sx(*x),
            escape(label)
        );
    }
    let lx = WIDTH - LEGEND_W - MARGIN / 2.0;
    for (i, ((run, edge), pts)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let d: Vec<String> = pts
            .iter()
            .map(|&(x, y)| format!("{:.1},{:.1}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" stroke="{color}" fill="none" stroke-width="1.5"/>"#,
            d.join(" ")
        );
        let ly = MARGIN + 14.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"/><text x="{:.1}" y="{:.1}">{} {}</text>"#,
            lx + 18.0,
            lx + 24.0,
            ly + 4.0,
            escape(run),
            escape(edge)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}
