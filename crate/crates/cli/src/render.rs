//! Standalone SVG charts with fixed-precision coordinates.

use std::fmt::Write;

use upgrade_lens::stats::Histogram;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;

pub const HIGHLIGHT_COLOR: &str = "#d62728";
const POINT_COLOR: &str = "#1f77b4";

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            _ => out.push(c),
        }
    }
    out
}

fn open(title: &str) -> String {
    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    )
    .unwrap();
    writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#).unwrap();
    writeln!(
        s,
        r#"<text class="title" x="{:.2}" y="24" text-anchor="middle" font-family="sans-serif" font-size="16">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    )
    .unwrap();
    s
}

fn placeholder(title: &str) -> String {
    let mut s = open(title);
    writeln!(
        s,
        r#"<text class="placeholder" x="{:.2}" y="{:.2}" text-anchor="middle" font-family="sans-serif" font-size="14">no data</text>"#,
        WIDTH / 2.0,
        HEIGHT / 2.0
    )
    .unwrap();
    s.push_str("</svg>\n");
    s
}

fn axes(s: &mut String, x_lo: f64, x_hi: f64, y_lo: f64, y_hi: f64, y_label_int: bool) {
    let (x0, y0) = (LEFT, HEIGHT - BOTTOM);
    let (x1, y1) = (WIDTH - RIGHT, TOP);
    writeln!(s, r#"<line class="axis" x1="{x0:.2}" y1="{y0:.2}" x2="{x1:.2}" y2="{y0:.2}" stroke="black"/>"#).unwrap();
    writeln!(s, r#"<line class="axis" x1="{x0:.2}" y1="{y0:.2}" x2="{x0:.2}" y2="{y1:.2}" stroke="black"/>"#).unwrap();
    let label = |s: &mut String, x: f64, y: f64, anchor: &str, text: String| {
        writeln!(
            s,
            r#"<text class="tick" x="{x:.2}" y="{y:.2}" text-anchor="{anchor}" font-family="sans-serif" font-size="11">{text}</text>"#
        )
        .unwrap();
    };
    label(s, x0, y0 + 18.0, "start", format!("{x_lo:.4}"));
    label(s, x1, y0 + 18.0, "end", format!("{x_hi:.4}"));
    let fmt_y = |v: f64| if y_label_int { format!("{v:.0}") } else { format!("{v:.4}") };
    label(s, x0 - 6.0, y0, "end", fmt_y(y_lo));
    label(s, x0 - 6.0, y1 + 4.0, "end", fmt_y(y_hi));
}

/// One `bar` rectangle per bin, zero-count bins included; bar height is
/// proportional to the count.
pub fn render_histogram_svg(hist: &Histogram, title: &str) -> String {
    if hist.counts.is_empty() {
        return placeholder(title);
    }
    let mut s = open(title);
    let max = *hist.counts.iter().max().unwrap_or(&0);
    let (lo, hi) = (hist.edges[0], *hist.edges.last().unwrap());
    axes(&mut s, lo, hi, 0.0, max as f64, true);
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let bar_w = plot_w / hist.counts.len() as f64;
    for (i, &c) in hist.counts.iter().enumerate() {
        let h = if max == 0 { 0.0 } else { plot_h * c as f64 / max as f64 };
        writeln!(
            s,
            r#"<rect class="bar" x="{:.3}" y="{:.3}" width="{:.3}" height="{:.3}" fill="{POINT_COLOR}" stroke="white" data-count="{c}"/>"#,
            LEFT + bar_w * i as f64,
            HEIGHT - BOTTOM - h,
            bar_w,
            h
        )
        .unwrap();
    }
    s.push_str("</svg>\n");
    s
}

/// Scatter of `(x, y)` points; indices in `highlight` are drawn last, in red.
pub fn render_scatter_svg(points: &[(f64, f64)], highlight: &[usize], title: &str) -> String {
    if points.is_empty() {
        return placeholder(title);
    }
    let mut s = open(title);
    let range = |sel: fn(&(f64, f64)) -> f64| {
        let lo = points.iter().map(sel).fold(f64::INFINITY, f64::min);
        let hi = points.iter().map(sel).fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    };
    let (x_lo, x_hi) = range(|p| p.0);
    let (y_lo, y_hi) = range(|p| p.1);
    axes(&mut s, x_lo, x_hi, y_lo, y_hi, false);
    let plot_w = WIDTH - LEFT - RIGHT - 20.0;
    let plot_h = HEIGHT - TOP - BOTTOM - 20.0;
    let scale = |v: f64, lo: f64, hi: f64| if hi > lo { (v - lo) / (hi - lo) } else { 0.5 };
    let place = |p: &(f64, f64)| {
        (
            LEFT + 10.0 + plot_w * scale(p.0, x_lo, x_hi),
            HEIGHT - BOTTOM - 10.0 - plot_h * scale(p.1, y_lo, y_hi),
        )
    };
    let marked = |i: usize| highlight.contains(&i);
    for (i, p) in points.iter().enumerate().filter(|(i, _)| !marked(*i)) {
        let (cx, cy) = place(p);
        writeln!(
            s,
            r#"<circle class="point" data-id="{i}" cx="{cx:.3}" cy="{cy:.3}" r="3" fill="{POINT_COLOR}" fill-opacity="0.7"/>"#
        )
        .unwrap();
    }
    for (i, p) in points.iter().enumerate().filter(|(i, _)| marked(*i)) {
        let (cx, cy) = place(p);
        writeln!(
            s,
            r#"<circle class="highlight" data-id="{i}" cx="{cx:.3}" cy="{cy:.3}" r="5" fill="{HIGHLIGHT_COLOR}"/>"#
        )
        .unwrap();
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_bins_two_bars() {
        let h = Histogram {
            edges: vec![0.0, 0.5, 1.0],
            counts: vec![1, 1],
        };
        let svg = render_histogram_svg(&h, "t");
        assert_eq!(svg.matches(r#"class="bar""#).count(), 2);
    }

    #[test]
    fn zero_bins_still_drawn() {
        let h = Histogram {
            edges: vec![0.0, 1.0, 2.0, 3.0],
            counts: vec![2, 0, 1],
        };
        let svg = render_histogram_svg(&h, "t");
        assert_eq!(svg.matches(r#"class="bar""#).count(), 3);
        assert!(svg.contains(r#"height="0.000""#));
    }

    #[test]
    fn one_highlight() {
        let svg = render_scatter_svg(&[(0.0, 0.0), (1.0, 2.0), (3.0, 1.0)], &[1], "p");
        assert_eq!(svg.matches(r#"class="highlight""#).count(), 1);
        assert_eq!(svg.matches(r#"class="point""#).count(), 2);
    }

    #[test]
    fn empty_inputs_give_placeholder() {
        let h = Histogram {
            edges: vec![],
            counts: vec![],
        };
        assert!(render_histogram_svg(&h, "t").contains("no data"));
        assert!(render_scatter_svg(&[], &[], "t").contains("no data"));
    }

    #[test]
    fn title_is_escaped() {
        let svg = render_scatter_svg(&[(0.0, 0.0)], &[], "a<b & c");
        assert!(svg.contains("a&lt;b &amp; c"));
    }
}
