//! Boxplot figure for a Monte Carlo run: one panel per metric, one box
//! per (filter, looks) combination.
//!
//! The output is a self-contained SVG string built with fixed-precision
//! coordinates, so identical records produce byte-identical figures.

use std::fmt::Write as _;

use despeck_core::metrics::MetricsRecord;

use crate::summary::{quantile, METRIC_NAMES};

const PANEL_COLS: usize = 3;
const PANEL_W: f64 = 300.0;
const PANEL_H: f64 = 300.0;
const PANEL_GAP: f64 = 12.0;
const MARGIN: f64 = 14.0;
/// Plot-area insets within a panel: left for tick labels, bottom for
/// group labels, top for the title.
const INSET_LEFT: f64 = 52.0;
const INSET_RIGHT: f64 = 12.0;
const INSET_TOP: f64 = 26.0;
const INSET_BOTTOM: f64 = 34.0;

/// Short series codes used in figure labels.
fn filter_code(name: &str) -> String {
    match name {
        "kl" => "KL".into(),
        "lee" => "L".into(),
        "mean" => "M".into(),
        other => other.to_uppercase(),
    }
}

fn format_looks(looks: f64) -> String {
    if looks.fract() == 0.0 && looks.abs() < 1e6 {
        format!("{}", looks as i64)
    } else {
        format!("{looks}")
    }
}

struct BoxStats {
    label: String,
    q1: f64,
    median: f64,
    q3: f64,
    whisker_lo: f64,
    whisker_hi: f64,
    outliers: Vec<f64>,
}

fn box_stats(label: String, values: &mut Vec<f64>) -> BoxStats {
    values.sort_by(|a, b| a.partial_cmp(b).expect("plotted values are finite"));
    let q1 = quantile(values, 0.25);
    let median = quantile(values, 0.5);
    let q3 = quantile(values, 0.75);
    let fence = 1.5 * (q3 - q1);
    let whisker_lo = values
        .iter()
        .copied()
        .find(|v| *v >= q1 - fence)
        .unwrap_or(q1);
    let whisker_hi = values
        .iter()
        .rev()
        .copied()
        .find(|v| *v <= q3 + fence)
        .unwrap_or(q3);
    let outliers = values
        .iter()
        .copied()
        .filter(|v| *v < whisker_lo || *v > whisker_hi)
        .collect();
    BoxStats {
        label,
        q1,
        median,
        q3,
        whisker_lo,
        whisker_hi,
        outliers,
    }
}

/// Renders the six-panel boxplot figure for a set of records.
pub fn emit_boxplots(records: &[MetricsRecord]) -> String {
    // Group keys in canonical (looks, filter) order.
    let mut keys: Vec<(f64, String)> = Vec::new();
    for r in records {
        let key = (r.looks, r.filter.clone());
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    keys.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .expect("looks levels are finite")
            .then_with(|| a.1.cmp(&b.1))
    });

    let rows = METRIC_NAMES.len().div_ceil(PANEL_COLS);
    let width = MARGIN * 2.0 + PANEL_COLS as f64 * PANEL_W + (PANEL_COLS - 1) as f64 * PANEL_GAP;
    let height = MARGIN * 2.0 + rows as f64 * PANEL_H + (rows - 1) as f64 * PANEL_GAP;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.0}\" height=\"{height:.0}\" \
         viewBox=\"0 0 {width:.0} {height:.0}\" font-family=\"sans-serif\">"
    );
    let _ = writeln!(
        svg,
        "<rect x=\"0\" y=\"0\" width=\"{width:.0}\" height=\"{height:.0}\" fill=\"white\"/>"
    );

    for (slot, metric) in METRIC_NAMES.iter().enumerate() {
        let px = MARGIN + (slot % PANEL_COLS) as f64 * (PANEL_W + PANEL_GAP);
        let py = MARGIN + (slot / PANEL_COLS) as f64 * (PANEL_H + PANEL_GAP);
        let plot_x = px + INSET_LEFT;
        let plot_y = py + INSET_TOP;
        let plot_w = PANEL_W - INSET_LEFT - INSET_RIGHT;
        let plot_h = PANEL_H - INSET_TOP - INSET_BOTTOM;

        let _ = writeln!(
            svg,
            "<rect x=\"{px:.1}\" y=\"{py:.1}\" width=\"{PANEL_W:.1}\" height=\"{PANEL_H:.1}\" \
             fill=\"none\" stroke=\"#444\" stroke-width=\"1\"/>"
        );
        let _ = writeln!(
            svg,
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-size=\"13\">{metric}</text>",
            px + PANEL_W / 2.0,
            py + 17.0
        );

        let mut boxes: Vec<BoxStats> = Vec::new();
        for (looks, filter) in &keys {
            let mut values: Vec<f64> = records
                .iter()
                .filter(|r| r.looks == *looks && r.filter == *filter)
                .map(|r| metric_value(r, slot))
                .filter(|v| v.is_finite())
                .collect();
            if values.is_empty() {
                continue;
            }
            let label = format!("{}-{}", filter_code(filter), format_looks(*looks));
            boxes.push(box_stats(label, &mut values));
        }
        if boxes.is_empty() {
            let _ = writeln!(
                svg,
                "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-size=\"11\" \
                 fill=\"#888\">no finite values</text>",
                px + PANEL_W / 2.0,
                py + PANEL_H / 2.0
            );
            continue;
        }

        // Panel scale spans every drawn feature, padded so strokes stay
        // inside the frame; a constant panel still gets a visible span.
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for b in &boxes {
            lo = lo.min(b.whisker_lo);
            hi = hi.max(b.whisker_hi);
            for v in &b.outliers {
                lo = lo.min(*v);
                hi = hi.max(*v);
            }
        }
        let mut pad = (hi - lo) * 0.06;
        if pad == 0.0 {
            pad = (lo.abs() * 0.05).max(0.5);
        }
        lo -= pad;
        hi += pad;
        let to_y = |v: f64| plot_y + plot_h * (hi - v) / (hi - lo);

        let _ = writeln!(
            svg,
            "<line x1=\"{plot_x:.1}\" y1=\"{plot_y:.1}\" x2=\"{plot_x:.1}\" y2=\"{:.1}\" \
             stroke=\"#444\" stroke-width=\"1\"/>",
            plot_y + plot_h
        );
        for (p, v) in [(0.0, lo), (0.5, (lo + hi) / 2.0), (1.0, hi)] {
            let y = plot_y + plot_h * (1.0 - p);
            let _ = writeln!(
                svg,
                "<line x1=\"{:.1}\" y1=\"{y:.1}\" x2=\"{plot_x:.1}\" y2=\"{y:.1}\" \
                 stroke=\"#444\" stroke-width=\"1\"/>",
                plot_x - 4.0
            );
            let _ = writeln!(
                svg,
                "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\" font-size=\"9\">{v:.3e}</text>",
                plot_x - 6.0,
                y + 3.0
            );
        }

        let slot_w = plot_w / boxes.len() as f64;
        let box_w = slot_w * 0.55;
        for (i, b) in boxes.iter().enumerate() {
            let cx = plot_x + slot_w * (i as f64 + 0.5);
            let x0 = cx - box_w / 2.0;
            let y_q1 = to_y(b.q1);
            let y_q3 = to_y(b.q3);
            let _ = writeln!(
                svg,
                "<line x1=\"{cx:.1}\" y1=\"{:.1}\" x2=\"{cx:.1}\" y2=\"{y_q3:.1}\" \
                 stroke=\"#222\" stroke-width=\"1\"/>",
                to_y(b.whisker_hi)
            );
            let _ = writeln!(
                svg,
                "<line x1=\"{cx:.1}\" y1=\"{y_q1:.1}\" x2=\"{cx:.1}\" y2=\"{:.1}\" \
                 stroke=\"#222\" stroke-width=\"1\"/>",
                to_y(b.whisker_lo)
            );
            for w in [b.whisker_lo, b.whisker_hi] {
                let y = to_y(w);
                let _ = writeln!(
                    svg,
                    "<line x1=\"{:.1}\" y1=\"{y:.1}\" x2=\"{:.1}\" y2=\"{y:.1}\" \
                     stroke=\"#222\" stroke-width=\"1\"/>",
                    cx - box_w * 0.3,
                    cx + box_w * 0.3
                );
            }
            let _ = writeln!(
                svg,
                "<rect x=\"{x0:.1}\" y=\"{y_q3:.1}\" width=\"{box_w:.1}\" height=\"{:.1}\" \
                 fill=\"#cfe2f3\" stroke=\"#222\" stroke-width=\"1\"/>",
                (y_q1 - y_q3).max(0.0)
            );
            let y_med = to_y(b.median);
            let _ = writeln!(
                svg,
                "<line x1=\"{x0:.1}\" y1=\"{y_med:.1}\" x2=\"{:.1}\" y2=\"{y_med:.1}\" \
                 stroke=\"#222\" stroke-width=\"1.5\"/>",
                x0 + box_w
            );
            for v in &b.outliers {
                let _ = writeln!(
                    svg,
                    "<circle cx=\"{cx:.1}\" cy=\"{:.1}\" r=\"2\" fill=\"none\" \
                     stroke=\"#222\" stroke-width=\"1\"/>",
                    to_y(*v)
                );
            }
            let _ = writeln!(
                svg,
                "<text x=\"{cx:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-size=\"10\">{}</text>",
                plot_y + plot_h + 16.0,
                b.label
            );
        }
    }
    let _ = writeln!(svg, "</svg>");
    svg
}

fn metric_value(record: &MetricsRecord, slot: usize) -> f64 {
    match slot {
        0 => record.nel,
        1 => record.line_pres,
        2 => record.edge_grad,
        3 => record.edge_var,
        4 => record.q_index,
        5 => record.beta_rho,
        _ => unreachable!("six metric slots"),
    }
}
