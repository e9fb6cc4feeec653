//! Static SVG renderers for the two explanation views.

use shapbench_core::rng::StreamRng;
use shapbench_core::shapley::{BeeswarmRecord, GlobalImportance};

const WIDTH: f64 = 720.0;
const LABEL_X: f64 = 150.0;
const PLOT_LEFT: f64 = 160.0;
const PLOT_RIGHT: f64 = 690.0;

/// Format a value for bar labels: up to four decimals, trailing zeros
/// trimmed, always at least one decimal digit ("1.0", "0.054").
pub fn format_label(v: f64) -> String {
    let mut s = format!("{v:.4}");
    while s.ends_with('0') {
        s.pop();
    }
    if s.ends_with('.') {
        s.push('0');
    }
    s
}

fn svg_header(height: f64) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{height}\" \
         viewBox=\"0 0 {WIDTH} {height}\" font-family=\"sans-serif\" font-size=\"12\">\n"
    )
}

/// Horizontal global-importance bars, most important on top, numeric label
/// at each bar's end. Geometry depends only on the inputs.
pub fn importance_bar_svg(importance: &GlobalImportance, labels: &[String]) -> String {
    let order = importance.order();
    let row_h = 26.0;
    let height = 40.0 + order.len() as f64 * row_h;
    let max_score = importance
        .scores()
        .iter()
        .fold(0.0_f64, |a, &b| a.max(b.abs()));
    let span = PLOT_RIGHT - PLOT_LEFT;

    let mut out = svg_header(height);
    out.push_str("<text x=\"12\" y=\"20\" font-weight=\"bold\">mean(|shap value|)</text>\n");
    for (rank, &player) in order.iter().enumerate() {
        let score = importance.scores()[player];
        let y = 34.0 + rank as f64 * row_h;
        let w = if max_score > 0.0 {
            score / max_score * span
        } else {
            0.0
        };
        out.push_str(&format!(
            "<text x=\"{LABEL_X}\" y=\"{:.2}\" text-anchor=\"end\">{}</text>\n",
            y + 13.0,
            escape(&labels[player])
        ));
        out.push_str(&format!(
            "<rect class=\"bar\" x=\"{PLOT_LEFT}\" y=\"{y:.2}\" width=\"{w:.3}\" height=\"18\" fill=\"#1f77b4\"/>\n"
        ));
        out.push_str(&format!(
            "<text x=\"{:.3}\" y=\"{:.2}\">{}</text>\n",
            PLOT_LEFT + w + 6.0,
            y + 13.0,
            format_label(score)
        ));
    }
    out.push_str("</svg>\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Blue-to-red ramp over the normalized feature value.
fn ramp(t: f64) -> String {
    let t = t.clamp(0.0, 1.0);
    let lerp = |a: f64, b: f64| (a + (b - a) * t).round() as u8;
    format!("rgb({},{},{})", lerp(31.0, 214.0), lerp(119.0, 39.0), lerp(180.0, 40.0))
}

/// Beeswarm: one horizontal band per player (already importance-ordered in
/// the record table), dot x proportional to the attribution, vertical
/// jitter from a seeded stream so re-renders are byte-identical. Dots whose
/// entry was missing before imputation are filled gray.
pub fn beeswarm_svg(records: &[BeeswarmRecord], seed: u64) -> String {
    // Band order: first appearance order in the record table.
    let mut bands: Vec<(usize, String)> = Vec::new();
    for r in records {
        if !bands.iter().any(|(p, _)| *p == r.player) {
            bands.push((r.player, r.label.clone()));
        }
    }
    let band_h = 34.0;
    let height = 60.0 + bands.len() as f64 * band_h;
    let max_abs = records
        .iter()
        .fold(0.0_f64, |a, r| a.max(r.shap.abs()));
    let center = (PLOT_LEFT + PLOT_RIGHT) / 2.0;
    let half_span = (PLOT_RIGHT - PLOT_LEFT) / 2.0 - 8.0;

    let mut out = svg_header(height);
    out.push_str("<text x=\"12\" y=\"20\" font-weight=\"bold\">shap value</text>\n");
    out.push_str(&format!(
        "<line class=\"zero\" x1=\"{center}\" y1=\"30\" x2=\"{center}\" y2=\"{:.1}\" stroke=\"#999\" stroke-dasharray=\"3,3\"/>\n",
        height - 24.0
    ));
    for (rank, (_, label)) in bands.iter().enumerate() {
        let y = 34.0 + rank as f64 * band_h + band_h / 2.0;
        out.push_str(&format!(
            "<text x=\"{LABEL_X}\" y=\"{:.2}\" text-anchor=\"end\">{}</text>\n",
            y + 4.0,
            escape(label)
        ));
    }

    let mut jitter = StreamRng::derived(seed, "beeswarm-jitter", 0);
    for r in records {
        let rank = bands.iter().position(|(p, _)| *p == r.player).unwrap();
        let band_center = 34.0 + rank as f64 * band_h + band_h / 2.0;
        let cx = if max_abs > 0.0 {
            center + r.shap / max_abs * half_span
        } else {
            center
        };
        let cy = band_center + (jitter.uniform() - 0.5) * band_h * 0.55;
        let fill = if r.was_missing {
            "gray".to_string()
        } else {
            ramp(r.color_value)
        };
        out.push_str(&format!(
            "<circle cx=\"{cx:.3}\" cy=\"{cy:.3}\" r=\"3\" fill=\"{fill}\" fill-opacity=\"0.8\"/>\n"
        ));
    }
    out.push_str("</svg>\n");
    out
}
