//! Log-scale convergence chart of `err_xy` and `err_step` against `k`,
//! written as plain SVG 1.1.

use std::fmt::Write as _;
use std::io::Read;

/// One trace row reduced to what the chart needs.
#[derive(Clone, Debug, PartialEq)]
pub struct ErrorRow {
    pub k: u64,
    pub err_xy: Option<f64>,
    pub err_step: Option<f64>,
}

pub fn read_trace<R: Read>(input: R) -> Result<Vec<ErrorRow>, String> {
    let mut reader = csv::Reader::from_reader(input);
    let headers = reader.headers().map_err(|e| e.to_string())?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| format!("trace has no `{name}` column"))
    };
    let (ik, ixy, istep) = (col("k")?, col("err_xy")?, col("err_step")?);
    let mut rows = Vec::new();
    for (line, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| e.to_string())?;
        let field = |i: usize| rec.get(i).unwrap_or("");
        let real = |i: usize| -> Result<Option<f64>, String> {
            match field(i) {
                "" => Ok(None),
                s => s
                    .parse()
                    .map(Some)
                    .map_err(|_| format!("row {}: `{s}` is not a number", line + 1)),
            }
        };
        rows.push(ErrorRow {
            k: field(ik)
                .parse()
                .map_err(|_| format!("row {}: bad k `{}`", line + 1, field(ik)))?,
            err_xy: real(ixy)?,
            err_step: real(istep)?,
        });
    }
    if rows.is_empty() {
        return Err("trace has no rows".into());
    }
    Ok(rows)
}

pub fn plot_data_csv(rows: &[ErrorRow]) -> String {
    let mut out = String::from("k,err_xy,err_step\n");
    let fmt = |v: Option<f64>| v.map(|v| format!("{v:.16e}")).unwrap_or_default();
    for r in rows {
        let _ = writeln!(out, "{},{},{}", r.k, fmt(r.err_xy), fmt(r.err_step));
    }
    out
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 50.0;

struct Series<'a> {
    name: &'a str,
    color: &'a str,
    dash: &'a str,
    points: Vec<(f64, f64)>,
}

/// Nonpositive and missing values are left out: they have no place on a
/// log axis.
pub fn render_svg(rows: &[ErrorRow], title: &str) -> String {
    let positive = |v: Option<f64>| v.filter(|v| *v > 0.0 && v.is_finite());
    let series = [
        Series {
            name: "‖x − y‖",
            color: "#1f77b4",
            dash: "",
            points: rows
                .iter()
                .filter_map(|r| positive(r.err_xy).map(|v| (r.k as f64, v)))
                .collect(),
        },
        Series {
            name: "‖x − x_next‖",
            color: "#d62728",
            dash: " stroke-dasharray=\"6 3\"",
            points: rows
                .iter()
                .filter_map(|r| positive(r.err_step).map(|v| (r.k as f64, v)))
                .collect(),
        },
    ];

    let kmin = rows.iter().map(|r| r.k).min().unwrap_or(0) as f64;
    let mut kmax = rows.iter().map(|r| r.k).max().unwrap_or(0) as f64;
    if kmax <= kmin {
        kmax = kmin + 1.0;
    }
    let values = series.iter().flat_map(|s| s.points.iter().map(|p| p.1));
    let (vmin, vmax) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    let (mut dlo, mut dhi) = if vmin.is_finite() {
        (vmin.log10().floor(), vmax.log10().ceil())
    } else {
        (-1.0, 0.0)
    };
    if dhi <= dlo {
        dlo -= 1.0;
        dhi += 1.0;
    }

    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let sx = |k: f64| LEFT + (k - kmin) / (kmax - kmin) * plot_w;
    let sy = |v: f64| TOP + (dhi - v.log10()) / (dhi - dlo) * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"12\">"
    );
    let _ = writeln!(svg, "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>");
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"18\" text-anchor=\"middle\" font-size=\"14\">{}</text>",
        WIDTH / 2.0,
        escape(title)
    );

    // decade grid lines and labels
    let mut d = dlo;
    while d <= dhi + 1e-9 {
        let y = sy(10f64.powf(d));
        let _ = writeln!(
            svg,
            "<line x1=\"{LEFT}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" stroke=\"#dddddd\"/>\n<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">1e{}</text>",
            LEFT + plot_w,
            LEFT - 6.0,
            y + 4.0,
            d as i64
        );
        d += 1.0;
    }
    for i in 0..=4 {
        let k = kmin + (kmax - kmin) * i as f64 / 4.0;
        let x = sx(k);
        let _ = writeln!(
            svg,
            "<text x=\"{x:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{}</text>",
            TOP + plot_h + 18.0,
            k.round() as i64
        );
    }
    let _ = writeln!(
        svg,
        "<rect x=\"{LEFT}\" y=\"{TOP}\" width=\"{plot_w}\" height=\"{plot_h}\" fill=\"none\" stroke=\"black\"/>"
    );
    let _ = writeln!(
        svg,
        "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">k</text>",
        LEFT + plot_w / 2.0,
        HEIGHT - 10.0
    );

    for (i, s) in series.iter().enumerate() {
        if s.points.len() > 1 {
            let pts: Vec<String> = s
                .points
                .iter()
                .map(|&(k, v)| format!("{:.2},{:.2}", sx(k), sy(v)))
                .collect();
            let _ = writeln!(
                svg,
                "<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\"{} points=\"{}\"/>",
                s.color,
                s.dash,
                pts.join(" ")
            );
        }
        for &(k, v) in &s.points {
            let _ = writeln!(
                svg,
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"2\" fill=\"{}\"/>",
                sx(k),
                sy(v),
                s.color
            );
        }
        let ly = TOP + 16.0 + 16.0 * i as f64;
        let lx = LEFT + plot_w - 130.0;
        let _ = writeln!(
            svg,
            "<line x1=\"{lx}\" y1=\"{ly}\" x2=\"{}\" y2=\"{ly}\" stroke=\"{}\" stroke-width=\"1.5\"{}/>\n<text x=\"{}\" y=\"{}\">{}</text>",
            lx + 24.0,
            s.color,
            s.dash,
            lx + 30.0,
            ly + 4.0,
            s.name
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}
