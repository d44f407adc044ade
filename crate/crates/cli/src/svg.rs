//! Minimal SVG log-log line plots for the scaling benchmark.

use std::fmt::Write as _;
use std::path::Path;

use abdiv_core::Result;

pub struct Series {
    pub name: String,
    /// (x, y) pairs; both must be positive to land on a log-log plot.
    pub points: Vec<(f64, f64)>,
}

const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];
const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 440.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 130.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 55.0;

/// Renders series on log-scaled axes. Non-positive points are dropped.
pub fn log_log_plot(
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[Series],
) -> Result<String> {
    let pts: Vec<(f64, f64)> = series
        .iter()
        .flat_map(|s| s.points.iter().copied())
        .filter(|&(x, y)| x > 0.0 && y > 0.0)
        .collect();
    if pts.is_empty() {
        return Err(abdiv_core::Error::Validation(
            "nothing to plot: no positive points".into(),
        ));
    }
    let (mut x0, mut x1) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY);
    for (x, y) in &pts {
        x0 = x0.min(x.log10());
        x1 = x1.max(x.log10());
        y0 = y0.min(y.log10());
        y1 = y1.max(y.log10());
    }
    // Pad degenerate ranges so a single point still renders.
    if x1 - x0 < 1e-9 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    if y1 - y0 < 1e-9 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let plot_w = WIDTH - MARGIN_L - MARGIN_R;
    let plot_h = HEIGHT - MARGIN_T - MARGIN_B;
    let sx = move |x: f64| MARGIN_L + (x.log10() - x0) / (x1 - x0) * plot_w;
    let sy = move |y: f64| MARGIN_T + plot_h - (y.log10() - y0) / (y1 - y0) * plot_h;

    let mut out = String::new();
    let _ = write!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif">"#
    );
    let _ = write!(
        out,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = write!(
        out,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="16">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );

    // Axes frame.
    let _ = write!(
        out,
        r##"<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{plot_w}" height="{plot_h}" fill="none" stroke="#333"/>"##
    );

    // Decade ticks and gridlines.
    for d in x0.floor() as i64..=x1.ceil() as i64 {
        let v = 10f64.powi(d as i32);
        let lx = v.log10();
        if lx < x0 - 1e-9 || lx > x1 + 1e-9 {
            continue;
        }
        let px = MARGIN_L + (lx - x0) / (x1 - x0) * plot_w;
        let _ = write!(
            out,
            r##"<line x1="{px}" y1="{MARGIN_T}" x2="{px}" y2="{}" stroke="#ddd"/>"##,
            MARGIN_T + plot_h
        );
        let _ = write!(
            out,
            r#"<text x="{px}" y="{}" text-anchor="middle" font-size="11">{}</text>"#,
            MARGIN_T + plot_h + 18.0,
            format_decade(d)
        );
    }
    for d in y0.floor() as i64..=y1.ceil() as i64 {
        let v = 10f64.powi(d as i32);
        let ly = v.log10();
        if ly < y0 - 1e-9 || ly > y1 + 1e-9 {
            continue;
        }
        let py = MARGIN_T + plot_h - (ly - y0) / (y1 - y0) * plot_h;
        let _ = write!(
            out,
            r##"<line x1="{MARGIN_L}" y1="{py}" x2="{}" y2="{py}" stroke="#ddd"/>"##,
            MARGIN_L + plot_w
        );
        let _ = write!(
            out,
            r#"<text x="{}" y="{}" text-anchor="end" font-size="11">{}</text>"#,
            MARGIN_L - 6.0,
            py + 4.0,
            format_decade(d)
        );
    }

    // Axis labels.
    let _ = write!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle" font-size="13">{}</text>"#,
        MARGIN_L + plot_w / 2.0,
        HEIGHT - 12.0,
        escape(x_label)
    );
    let _ = write!(
        out,
        r#"<text x="16" y="{}" text-anchor="middle" font-size="13" transform="rotate(-90 16 {})">{}</text>"#,
        MARGIN_T + plot_h / 2.0,
        MARGIN_T + plot_h / 2.0,
        escape(y_label)
    );

    // Series polylines, markers, legend.
    for (i, s) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let visible: Vec<(f64, f64)> = s
            .points
            .iter()
            .copied()
            .filter(|&(x, y)| x > 0.0 && y > 0.0)
            .collect();
        if visible.len() > 1 {
            let path: Vec<String> = visible
                .iter()
                .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
                .collect();
            let _ = write!(
                out,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
                path.join(" ")
            );
        }
        for &(x, y) in &visible {
            let _ = write!(
                out,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#,
                sx(x),
                sy(y)
            );
        }
        let ly = MARGIN_T + 14.0 + i as f64 * 18.0;
        let lx = MARGIN_L + plot_w + 12.0;
        let _ = write!(
            out,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="1.5"/>"#,
            lx + 18.0
        );
        let _ = write!(
            out,
            r#"<text x="{}" y="{}" font-size="12">{}</text>"#,
            lx + 24.0,
            ly + 4.0,
            escape(&s.name)
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}

pub fn write_plot(
    path: impl AsRef<Path>,
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[Series],
) -> Result<()> {
    std::fs::write(path, log_log_plot(title, x_label, y_label, series)?)?;
    Ok(())
}

fn format_decade(d: i64) -> String {
    if (-3..=3).contains(&d) {
        format!("{}", 10f64.powi(d as i32))
    } else {
        format!("1e{d}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plot_contains_series_and_ticks() {
        let s = vec![
            Series {
                name: "one".into(),
                points: vec![(10.0, 0.001), (100.0, 0.01), (1000.0, 0.2)],
            },
            Series {
                name: "two".into(),
                points: vec![(10.0, 0.01), (100.0, 1.0)],
            },
        ];
        let svg = log_log_plot("runtimes", "n", "seconds", &s).unwrap();
        assert!(svg.contains("polyline"));
        assert!(svg.contains("one"));
        assert!(svg.contains("two"));
        assert!(svg.contains("runtimes"));
        assert!(svg.ends_with("</svg>\n"));
    }

    #[test]
    fn empty_plot_is_an_error() {
        assert!(log_log_plot("t", "x", "y", &[]).is_err());
        let s = vec![Series {
            name: "bad".into(),
            points: vec![(0.0, 1.0)],
        }];
        assert!(log_log_plot("t", "x", "y", &s).is_err());
    }
}
