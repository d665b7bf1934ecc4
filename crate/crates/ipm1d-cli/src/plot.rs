//! Minimal self-contained SVG line plots.
//!
//! Output is a fixed-size chart with axes, tick labels, a legend, and one
//! polyline per series. No external assets or scripts; the files open in
//! any browser. Rendering is deterministic for identical inputs.

use std::fmt::Write as _;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const MARGIN_LEFT: f64 = 72.0;
const MARGIN_RIGHT: f64 = 24.0;
const MARGIN_TOP: f64 = 42.0;
const MARGIN_BOTTOM: f64 = 52.0;
const TICKS: usize = 5;

const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
];

/// One named curve: `(x, y)` samples in data coordinates.
#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

impl Series {
    pub fn new(label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Series {
            label: label.into(),
            points,
        }
    }
}

/// Renders series as an SVG document.
///
/// With `log_y` the vertical axis is log10 and samples with `y <= 0` are
/// dropped; tick labels then show the exponent as `1e<k>`. Non-finite
/// samples are always dropped. A degenerate range is padded so single
/// points and constant curves still render.
pub fn line_chart(title: &str, x_label: &str, series: &[Series], log_y: bool) -> String {
    let mapped: Vec<(String, Vec<(f64, f64)>)> = series
        .iter()
        .map(|s| {
            let pts = s
                .points
                .iter()
                .filter(|&&(x, y)| x.is_finite() && y.is_finite() && (!log_y || y > 0.0))
                .map(|&(x, y)| (x, if log_y { y.log10() } else { y }))
                .collect();
            (s.label.clone(), pts)
        })
        .collect();

    let all = mapped.iter().flat_map(|(_, pts)| pts.iter().copied());
    let (mut x_min, mut x_max, mut y_min, mut y_max) = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    for (x, y) in all {
        x_min = x_min.min(x);
        x_max = x_max.max(x);
        y_min = y_min.min(y);
        y_max = y_max.max(y);
    }
    if !x_min.is_finite() {
        x_min = 0.0;
        x_max = 1.0;
        y_min = 0.0;
        y_max = 1.0;
    }
    if x_max - x_min < 1e-12 {
        x_min -= 0.5;
        x_max += 0.5;
    }
    if y_max - y_min < 1e-12 {
        y_min -= 0.5;
        y_max += 0.5;
    }

    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let sx = move |x: f64| MARGIN_LEFT + (x - x_min) / (x_max - x_min) * plot_w;
    let sy = move |y: f64| MARGIN_TOP + (1.0 - (y - y_min) / (y_max - y_min)) * plot_h;

    let mut doc = String::with_capacity(4096);
    let _ = writeln!(
        doc,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"13\">"
    );
    let _ = writeln!(
        doc,
        "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>"
    );
    let _ = writeln!(
        doc,
        "<text x=\"{:.1}\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">{}</text>",
        MARGIN_LEFT + plot_w / 2.0,
        escape(title)
    );

    for i in 0..=TICKS {
        let f = i as f64 / TICKS as f64;
        let xv = x_min + f * (x_max - x_min);
        let yv = y_min + f * (y_max - y_min);
        let px = sx(xv);
        let py = sy(yv);
        let _ = writeln!(
            doc,
            "<line x1=\"{px:.1}\" y1=\"{MARGIN_TOP:.1}\" x2=\"{px:.1}\" y2=\"{:.1}\" \
             stroke=\"#dddddd\"/>",
            MARGIN_TOP + plot_h
        );
        let _ = writeln!(
            doc,
            "<line x1=\"{MARGIN_LEFT:.1}\" y1=\"{py:.1}\" x2=\"{:.1}\" y2=\"{py:.1}\" \
             stroke=\"#dddddd\"/>",
            MARGIN_LEFT + plot_w
        );
        let _ = writeln!(
            doc,
            "<text x=\"{px:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>",
            MARGIN_TOP + plot_h + 18.0,
            tick_label(xv, false)
        );
        let _ = writeln!(
            doc,
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{}</text>",
            MARGIN_LEFT - 8.0,
            py + 4.0,
            tick_label(yv, log_y)
        );
    }
    let _ = writeln!(
        doc,
        "<rect x=\"{MARGIN_LEFT:.1}\" y=\"{MARGIN_TOP:.1}\" width=\"{plot_w:.1}\" \
         height=\"{plot_h:.1}\" fill=\"none\" stroke=\"#333333\"/>"
    );
    let _ = writeln!(
        doc,
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>",
        MARGIN_LEFT + plot_w / 2.0,
        HEIGHT - 12.0,
        escape(x_label)
    );

    for (i, (label, pts)) in mapped.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        if pts.len() > 1 {
            let mut path = String::with_capacity(16 * pts.len());
            for (x, y) in pts {
                let _ = write!(path, "{:.2},{:.2} ", sx(*x), sy(*y));
            }
            let _ = writeln!(
                doc,
                "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>",
                path.trim_end()
            );
        } else if let Some(&(x, y)) = pts.first() {
            let _ = writeln!(
                doc,
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"{color}\"/>",
                sx(x),
                sy(y)
            );
        }
        let ly = MARGIN_TOP + 14.0 + 18.0 * i as f64;
        let lx = MARGIN_LEFT + plot_w - 150.0;
        let _ = writeln!(
            doc,
            "<line x1=\"{lx:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"{color}\" \
             stroke-width=\"2\"/>",
            ly - 4.0,
            lx + 22.0,
            ly - 4.0
        );
        let _ = writeln!(
            doc,
            "<text x=\"{:.1}\" y=\"{ly:.1}\">{}</text>",
            lx + 28.0,
            escape(label)
        );
    }
    doc.push_str("</svg>\n");
    doc
}

fn tick_label(v: f64, log_axis: bool) -> String {
    if log_axis {
        return format!("1e{:.1}", v);
    }
    if v == 0.0 {
        return "0".into();
    }
    let mag = v.abs();
    if (1e-3..1e4).contains(&mag) {
        format!("{v:.3}")
    } else {
        format!("{v:.2e}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
