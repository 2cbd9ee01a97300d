//! Mean-accuracy vs. CV scatter plots as SVG.
//!
//! X is CV (growing rightward) and Y is mean accuracy (growing upward). Two
//! divider lines through the reference point split the plot into Group I
//! (upper left) to Group IV (lower right). Each point gets a mean marker, an
//! optional min–max whisker and an optional red ring at its clean-test
//! accuracy. Element order follows the input order and every coordinate is
//! printed with two decimals, so identical input gives identical bytes.
//!
//! Styling is our own choice: filled blue dots for runs, a black diamond for
//! the reference, grey whiskers, red rings, dashed dividers.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::report::RobustnessSummary;
use crate::stats::{identify_group, QuadrantLabel, ReferencePoint};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McvPoint {
    pub label: String,
    pub cv: f64,
    pub mean_accu: f64,
    pub min_accu: f64,
    pub max_accu: f64,
    pub clean_accu: f64,
    pub is_reference: bool,
}

impl McvPoint {
    pub fn from_summary(s: &RobustnessSummary, is_reference: bool) -> Self {
        McvPoint {
            label: s.label(),
            cv: s.cv,
            mean_accu: s.mean_accu,
            min_accu: s.min_accu,
            max_accu: s.max_accu,
            clean_accu: s.clean_accu,
            is_reference,
        }
    }

    fn values(&self) -> [f64; 5] {
        [self.cv, self.mean_accu, self.min_accu, self.max_accu, self.clean_accu]
    }
}

/// Points for `summaries`, flagging the one whose label is `reference_label`.
pub fn points_from_summaries(summaries: &[RobustnessSummary], reference_label: &str) -> Result<Vec<McvPoint>> {
    if !summaries.iter().any(|s| s.label() == reference_label) {
        return Err(Error::domain(format!("reference {reference_label:?} not among the runs")));
    }
    Ok(summaries
        .iter()
        .map(|s| McvPoint::from_summary(s, s.label() == reference_label))
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlotStyle {
    pub width: f64,
    pub height: f64,
    /// left, right, top, bottom
    pub margins: [f64; 4],
    /// Fixed CV axis range; `None` fits the data with 5% padding.
    pub x_range: Option<(f64, f64)>,
    /// Fixed mean-accuracy axis range; `None` fits the data with 5% padding.
    pub y_range: Option<(f64, f64)>,
    pub show_whiskers: bool,
    pub show_clean_ring: bool,
    pub marker_radius: f64,
    pub font_size: f64,
    pub title: Option<String>,
}

impl Default for PlotStyle {
    fn default() -> Self {
        PlotStyle {
            width: 800.0,
            height: 600.0,
            margins: [70.0, 30.0, 50.0, 60.0],
            x_range: None,
            y_range: None,
            show_whiskers: true,
            show_clean_ring: true,
            marker_radius: 4.0,
            font_size: 12.0,
            title: None,
        }
    }
}

/// Data-to-screen transform for one plot.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McvLayout {
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    /// left, top, right, bottom of the plot area in pixels.
    pub area: (f64, f64, f64, f64),
}

impl McvLayout {
    pub fn screen_x(&self, cv: f64) -> f64 {
        let (l, _, r, _) = self.area;
        l + (cv - self.x_range.0) / (self.x_range.1 - self.x_range.0) * (r - l)
    }

    pub fn screen_y(&self, accu: f64) -> f64 {
        let (_, t, _, b) = self.area;
        t + (self.y_range.1 - accu) / (self.y_range.1 - self.y_range.0) * (b - t)
    }

    pub fn screen(&self, cv: f64, accu: f64) -> (f64, f64) {
        (self.screen_x(cv), self.screen_y(accu))
    }
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    let span = hi - lo;
    let pad = if span > 0.0 { 0.05 * span } else { 0.05 * lo.abs().max(1.0) };
    (lo - pad, hi + pad)
}

fn check_fixed(range: (f64, f64), values: impl Iterator<Item = f64>, axis: &str) -> Result<(f64, f64)> {
    if !(range.0.is_finite() && range.1.is_finite() && range.0 < range.1) {
        return Err(Error::domain(format!("invalid {axis} range {range:?}")));
    }
    for v in values {
        if v < range.0 || v > range.1 {
            return Err(Error::domain(format!("{axis} value {v} outside fixed range {range:?}")));
        }
    }
    Ok(range)
}

fn validate(points: &[McvPoint], style: &PlotStyle) -> Result<usize> {
    if points.is_empty() {
        return Err(Error::domain("nothing to plot"));
    }
    let refs: Vec<usize> = points
        .iter()
        .enumerate()
        .filter(|(_, p)| p.is_reference)
        .map(|(i, _)| i)
        .collect();
    if refs.len() != 1 {
        return Err(Error::domain(format!("expected exactly one reference point, found {}", refs.len())));
    }
    if let Some(p) = points.iter().find(|p| p.values().iter().any(|v| !v.is_finite())) {
        return Err(Error::domain(format!("non-finite coordinate in point {:?}", p.label)));
    }
    let [l, r, t, b] = style.margins;
    if !(style.width > l + r && style.height > t + b) || style.margins.iter().any(|m| *m < 0.0) {
        return Err(Error::domain("canvas too small for its margins"));
    }
    Ok(refs[0])
}

pub fn layout(points: &[McvPoint], style: &PlotStyle) -> Result<McvLayout> {
    validate(points, style)?;
    let xs = || points.iter().map(|p| p.cv);
    let ys = || {
        points.iter().flat_map(|p| {
            let mut v = vec![p.mean_accu];
            if style.show_whiskers {
                v.extend([p.min_accu, p.max_accu]);
            }
            if style.show_clean_ring {
                v.push(p.clean_accu);
            }
            v
        })
    };
    let x_range = match style.x_range {
        Some(r) => check_fixed(r, xs(), "CV")?,
        None => padded(xs().fold(f64::INFINITY, f64::min), xs().fold(f64::NEG_INFINITY, f64::max)),
    };
    let y_range = match style.y_range {
        Some(r) => check_fixed(r, ys(), "accuracy")?,
        None => padded(ys().fold(f64::INFINITY, f64::min), ys().fold(f64::NEG_INFINITY, f64::max)),
    };
    let [l, r, t, b] = style.margins;
    Ok(McvLayout {
        x_range,
        y_range,
        area: (l, t, style.width - r, style.height - b),
    })
}

/// Quadrant of `point` relative to `reference`, exactly as the tabular
/// reports compute it.
pub fn quadrant_of_rendered_point(point: &McvPoint, reference: &McvPoint) -> QuadrantLabel {
    identify_group(
        point.mean_accu,
        point.cv,
        &ReferencePoint {
            mean_accu: reference.mean_accu,
            cv: reference.cv,
        },
    )
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

fn ticks(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..=n).map(move |i| lo + (hi - lo) * i as f64 / n as f64)
}

pub fn render_mcv(points: &[McvPoint], style: &PlotStyle) -> Result<String> {
    let ref_idx = validate(points, style)?;
    let lay = layout(points, style)?;
    let reference = &points[ref_idx];
    let (l, t, r, b) = lay.area;
    let fs = style.font_size;
    let mut s = String::new();

    // write! into a String cannot fail
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{:.2}" height="{:.2}" viewBox="0 0 {:.2} {:.2}" font-family="sans-serif" font-size="{:.2}">"#,
        style.width, style.height, style.width, style.height, fs
    );
    let _ = writeln!(s, r#"<rect class="background" x="0.00" y="0.00" width="{:.2}" height="{:.2}" fill="white"/>"#, style.width, style.height);
    let _ = writeln!(s, r#"<rect class="plot-area" x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#, l, t, r - l, b - t);
    if let Some(title) = &style.title {
        let _ = writeln!(s, r#"<text class="title" x="{:.2}" y="{:.2}" text-anchor="middle" font-size="{:.2}">{}</text>"#, (l + r) / 2.0, t / 2.0, fs * 1.25, escape(title));
    }

    for v in ticks(lay.x_range.0, lay.x_range.1, 5) {
        let x = lay.screen_x(v);
        let _ = writeln!(s, r#"<line class="tick" x1="{x:.2}" y1="{b:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/>"#, b + 5.0);
        let _ = writeln!(s, r#"<text class="tick-label" x="{x:.2}" y="{:.2}" text-anchor="middle">{v:.2}</text>"#, b + 5.0 + fs);
    }
    for v in ticks(lay.y_range.0, lay.y_range.1, 5) {
        let y = lay.screen_y(v);
        let _ = writeln!(s, r#"<line class="tick" x1="{:.2}" y1="{y:.2}" x2="{l:.2}" y2="{y:.2}" stroke="black"/>"#, l - 5.0);
        let _ = writeln!(s, r#"<text class="tick-label" x="{:.2}" y="{:.2}" text-anchor="end">{v:.2}</text>"#, l - 8.0, y + fs / 3.0);
    }
    let _ = writeln!(s, r#"<text class="axis-title" x="{:.2}" y="{:.2}" text-anchor="middle">Coefficient of variation (%)</text>"#, (l + r) / 2.0, style.height - fs);
    let _ = writeln!(s, r#"<text class="axis-title" x="{:.2}" y="{:.2}" text-anchor="middle" transform="rotate(-90 {:.2} {:.2})">Mean accuracy (%)</text>"#, fs * 1.5, (t + b) / 2.0, fs * 1.5, (t + b) / 2.0);

    let (rx, ry) = lay.screen(reference.cv, reference.mean_accu);
    let _ = writeln!(s, r#"<line class="divider divider-cv" x1="{rx:.2}" y1="{t:.2}" x2="{rx:.2}" y2="{b:.2}" stroke="gray" stroke-dasharray="6 4"/>"#);
    let _ = writeln!(s, r#"<line class="divider divider-accuracy" x1="{l:.2}" y1="{ry:.2}" x2="{r:.2}" y2="{ry:.2}" stroke="gray" stroke-dasharray="6 4"/>"#);
    let pad = 6.0;
    for (q, x, y, anchor) in [
        (QuadrantLabel::GroupI, l + pad, t + pad + fs, "start"),
        (QuadrantLabel::GroupII, r - pad, t + pad + fs, "end"),
        (QuadrantLabel::GroupIII, l + pad, b - pad, "start"),
        (QuadrantLabel::GroupIV, r - pad, b - pad, "end"),
    ] {
        let _ = writeln!(s, r#"<text class="quadrant-label" x="{x:.2}" y="{y:.2}" text-anchor="{anchor}" fill="gray">{q}</text>"#);
    }

    let radius = style.marker_radius;
    for (i, p) in points.iter().enumerate() {
        let (x, y) = lay.screen(p.cv, p.mean_accu);
        let quadrant = quadrant_of_rendered_point(p, reference);
        let _ = writeln!(
            s,
            r#"<g class="point" data-index="{i}" data-quadrant="{}">"#,
            serde_json::to_value(quadrant).ok().and_then(|v| v.as_str().map(str::to_owned)).unwrap_or_default()
        );
        if style.show_whiskers {
            let _ = writeln!(s, r#"<line class="whisker" x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="gray"/>"#, lay.screen_y(p.min_accu), lay.screen_y(p.max_accu));
        }
        if style.show_clean_ring {
            let _ = writeln!(s, r#"<circle class="clean-ring" cx="{x:.2}" cy="{:.2}" r="{:.2}" fill="none" stroke="red"/>"#, lay.screen_y(p.clean_accu), radius + 2.0);
        }
        if p.is_reference {
            let d = radius * 1.5;
            let _ = writeln!(
                s,
                r#"<path class="mean reference" data-x="{x:.2}" data-y="{y:.2}" d="M {x:.2} {:.2} L {:.2} {y:.2} L {x:.2} {:.2} L {:.2} {y:.2} Z" fill="black"/>"#,
                y - d, x + d, y + d, x - d
            );
        } else {
            let _ = writeln!(s, r#"<circle class="mean" cx="{x:.2}" cy="{y:.2}" r="{radius:.2}" fill="steelblue"/>"#);
        }
        // deterministic offset ladder against overlapping labels
        let dy = -(radius + 4.0) - (i % 3) as f64 * fs;
        let _ = writeln!(s, r#"<text class="point-label" x="{:.2}" y="{:.2}">{}</text>"#, x + radius + 3.0, y + dy, escape(&p.label));
        s.push_str("</g>\n");
    }
    s.push_str("</svg>\n");
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(label: &str, cv: f64, mean: f64, reference: bool) -> McvPoint {
        McvPoint {
            label: label.into(),
            cv,
            mean_accu: mean,
            min_accu: mean - 3.0,
            max_accu: mean + 2.0,
            clean_accu: mean + 1.0,
            is_reference: reference,
        }
    }

    #[test]
    fn minimal_plot() {
        let svg = render_mcv(&[pt("ref", 2.0, 85.0, true)], &PlotStyle::default()).unwrap();
        assert_eq!(svg.matches("class=\"divider").count(), 2);
        assert_eq!(svg.matches("class=\"point\"").count(), 1);
        assert!(svg.contains(">ref</text>"));
        roxmltree::Document::parse(&svg).unwrap();
    }

    #[test]
    fn reference_count_is_enforced() {
        let style = PlotStyle::default();
        assert!(render_mcv(&[], &style).is_err());
        assert!(render_mcv(&[pt("a", 1.0, 80.0, false)], &style).is_err());
        assert!(render_mcv(&[pt("a", 1.0, 80.0, true), pt("b", 1.0, 80.0, true)], &style).is_err());
        assert!(render_mcv(&[pt("a", f64::NAN, 80.0, true)], &style).is_err());
    }

    #[test]
    fn fixed_ranges_must_contain_points() {
        let style = PlotStyle {
            x_range: Some((0.0, 1.0)),
            ..PlotStyle::default()
        };
        assert!(render_mcv(&[pt("a", 2.0, 80.0, true)], &style).is_err());
    }

    #[test]
    fn labels_are_escaped() {
        let svg = render_mcv(&[pt("a<b>&\"c\"", 2.0, 85.0, true)], &PlotStyle::default()).unwrap();
        assert!(svg.contains("a&lt;b&gt;&amp;&quot;c&quot;"));
        roxmltree::Document::parse(&svg).unwrap();
    }

    #[test]
    fn optional_elements_follow_style() {
        let style = PlotStyle {
            show_whiskers: false,
            show_clean_ring: false,
            ..PlotStyle::default()
        };
        let svg = render_mcv(&[pt("r", 2.0, 85.0, true), pt("a", 1.0, 86.0, false)], &style).unwrap();
        assert!(!svg.contains("whisker"));
        assert!(!svg.contains("clean-ring"));
    }

    #[test]
    fn transform_is_order_preserving() {
        let pts = [pt("r", 2.0, 85.0, true), pt("a", 1.0, 90.0, false), pt("b", 3.0, 80.0, false)];
        let lay = layout(&pts, &PlotStyle::default()).unwrap();
        assert!(lay.screen_x(1.0) < lay.screen_x(2.0));
        assert!(lay.screen_y(90.0) < lay.screen_y(85.0));
        let (l, t, r, b) = lay.area;
        for p in &pts {
            let (x, y) = lay.screen(p.cv, p.mean_accu);
            assert!(x > l && x < r && y > t && y < b);
        }
    }
}
