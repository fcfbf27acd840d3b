//! Standalone SVG line chart of silhouette against k.

use crate::clustering::Algorithm;

use super::SweepReport;

const WIDTH: f64 = 760.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 500.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 370.0;

const PALETTE: [&str; 9] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// One `<polyline>` per contiguous run of at least two scored cells; isolated
/// cells get a `<circle>` marker. Blank cells break the line.
pub fn render_chart_svg(r: &SweepReport) -> Vec<u8> {
    let mut algorithms: Vec<Algorithm> = Vec::new();
    for row in &r.rows {
        if !algorithms.contains(&row.algorithm) {
            algorithms.push(row.algorithm);
        }
    }
    let k_min = r.rows.iter().map(|row| row.k).min().unwrap_or(2);
    let k_max = r.rows.iter().map(|row| row.k).max().unwrap_or(k_min);
    let s_min = r.rows.iter().filter_map(|row| row.silhouette).fold(0.0f64, f64::min);
    let y_lo = if s_min < 0.0 { -1.0 } else { 0.0 };

    let x_of = |k: usize| {
        if k_max == k_min {
            (LEFT + RIGHT) / 2.0
        } else {
            LEFT + (RIGHT - LEFT) * (k - k_min) as f64 / (k_max - k_min) as f64
        }
    };
    let y_of = |s: f64| BOTTOM - (BOTTOM - TOP) * (s.clamp(y_lo, 1.0) - y_lo) / (1.0 - y_lo);

    let mut svg = format!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"12\">\n"
    );
    svg.push_str("<title>Silhouette score vs number of clusters</title>\n");
    svg.push_str(&format!(
        "<rect x=\"0\" y=\"0\" width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n<g class=\"axes\" stroke=\"black\">\n<line x1=\"{LEFT}\" y1=\"{BOTTOM}\" x2=\"{RIGHT}\" y2=\"{BOTTOM}\"/>\n<line x1=\"{LEFT}\" y1=\"{TOP}\" x2=\"{LEFT}\" y2=\"{BOTTOM}\"/>\n</g>\n"
    ));
    svg.push_str("<g class=\"ticks\">\n");
    if !r.rows.is_empty() {
        for k in k_min..=k_max {
            let x = x_of(k);
            svg.push_str(&format!("<text x=\"{x:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{k}</text>\n", BOTTOM + 16.0));
        }
    }
    let steps = if y_lo < 0.0 { 8 } else { 4 };
    for i in 0..=steps {
        let v = y_lo + (1.0 - y_lo) * i as f64 / steps as f64;
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{v:.2}</text>\n",
            LEFT - 6.0,
            y_of(v) + 4.0
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">Clusters</text>\n",
        (LEFT + RIGHT) / 2.0,
        BOTTOM + 40.0
    ));
    svg.push_str(&format!(
        "<text x=\"16\" y=\"{:.1}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {:.1})\">Silhouette score</text>\n</g>\n",
        (TOP + BOTTOM) / 2.0,
        (TOP + BOTTOM) / 2.0
    ));

    for algorithm in &algorithms {
        let color = PALETTE[algorithm.index() % PALETTE.len()];
        let mut rows: Vec<_> = r.rows.iter().filter(|row| row.algorithm == *algorithm).collect();
        rows.sort_by_key(|row| row.k);
        let mut segments: Vec<Vec<(f64, f64)>> = vec![Vec::new()];
        for row in rows {
            match row.silhouette {
                Some(s) => segments.last_mut().expect("non-empty").push((x_of(row.k), y_of(s))),
                None => segments.push(Vec::new()),
            }
        }
        svg.push_str(&format!("<g class=\"series\" data-algorithm=\"{}\">\n", escape(algorithm.display_name())));
        for seg in segments.iter().filter(|s| !s.is_empty()) {
            if seg.len() == 1 {
                let (x, y) = seg[0];
                svg.push_str(&format!("<circle cx=\"{x:.1}\" cy=\"{y:.1}\" r=\"4\" fill=\"{color}\"/>\n"));
            } else {
                let pts: Vec<String> = seg.iter().map(|(x, y)| format!("{x:.1},{y:.1}")).collect();
                svg.push_str(&format!(
                    "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"2\" points=\"{}\"/>\n",
                    pts.join(" ")
                ));
            }
        }
        svg.push_str("</g>\n");
    }

    svg.push_str("<g class=\"legend\">\n");
    for (i, algorithm) in algorithms.iter().enumerate() {
        let color = PALETTE[algorithm.index() % PALETTE.len()];
        let y = TOP + 18.0 * i as f64;
        svg.push_str(&format!(
            "<rect x=\"{:.1}\" y=\"{:.1}\" width=\"14\" height=\"4\" fill=\"{color}\"/>\n<text x=\"{:.1}\" y=\"{:.1}\">{}</text>\n",
            RIGHT + 20.0,
            y - 2.0,
            RIGHT + 40.0,
            y + 4.0,
            escape(algorithm.display_name())
        ));
    }
    svg.push_str("</g>\n</svg>\n");
    svg.into_bytes()
}
