//! Standalone SVG rendering: dendrograms with fusion-interval
//! rectangles, and descriptor sweep curves.
//!
//! Output is deterministic (identical inputs give byte-identical
//! documents); all coordinates are written with two decimals.

use crate::engine::{ClusterNode, Dendrogram};
use crate::prox::Kind;
use std::fmt::Write as _;

/// Vertical is the only supported orientation: leaves at the bottom,
/// heights growing upwards.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    Vertical,
}

/// Rendering options for [`render_dendrogram_svg`] (and, where
/// applicable, [`render_sweep_svg`]).
#[derive(Debug, Clone, PartialEq)]
pub struct PlotOptions {
    /// Fill color for the fusion-interval rectangles of tied merges;
    /// `None` hides the rectangles entirely.
    pub range_fill: Option<String>,
    /// Font size for leaf labels and axis annotations.
    pub label_size: f64,
    /// Explicit height-axis bounds `(lo, hi)` in proximity units, or
    /// `None` for automatic bounds. Must satisfy `lo < hi` when set.
    pub height_axis: Option<(f64, f64)>,
    /// Optional plot title.
    pub title: Option<String>,
    pub orientation: Orientation,
}

impl Default for PlotOptions {
    fn default() -> Self {
        PlotOptions {
            range_fill: Some("#c6c6e8".to_string()),
            label_size: 12.0,
            height_axis: None,
            title: None,
            orientation: Orientation::Vertical,
        }
    }
}

const MARGIN_LEFT: f64 = 56.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 32.0;
const MARGIN_BOTTOM: f64 = 42.0;
const PLOT_HEIGHT: f64 = 300.0;
const LEAF_SPACING: f64 = 44.0;

fn fmt2(v: f64) -> String {
    format!("{v:.2}")
}

/// Trim a tick value to a short decimal form.
fn fmt_tick(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e15 {
        format!("{v:.0}")
    } else {
        let s = format!("{v:.4}");
        let s = s.trim_end_matches('0').trim_end_matches('.');
        s.to_string()
    }
}

fn xml_escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Heights are plotted in "origin units" measured from the leaf line:
/// distances as-is, similarities as `1 - v` so the axis descends from
/// the anchor value 1.0.
fn origin_units(v: f64, kind: Kind) -> f64 {
    match kind {
        Kind::Distance => v,
        Kind::Similarity => 1.0 - v,
    }
}

struct Mapper {
    ulo: f64,
    uhi: f64,
    top: f64,
    height: f64,
}

impl Mapper {
    fn y(&self, u: f64) -> f64 {
        self.top + (1.0 - (u - self.ulo) / (self.uhi - self.ulo)) * self.height
    }
}

/// Render a dendrogram as a standalone SVG 1.1 document.
///
/// Leaves are equally spaced in canonical order (children sorted by
/// smallest contained label); each internal node sits at the mean of its
/// children's positions and draws a bracket at its trigger height. Tied
/// merges with `D_min < D_max` additionally draw a filled rectangle
/// spanning their children horizontally and the fusion interval
/// vertically, unless `range_fill` is `None`.
pub fn render_dendrogram_svg(d: &Dendrogram, opts: &PlotOptions) -> String {
    let Orientation::Vertical = opts.orientation;
    if let Some((lo, hi)) = opts.height_axis {
        assert!(lo < hi, "height_axis bounds must satisfy lo < hi");
    }
    let canon = d.canonicalized();
    let kind = d.kind;

    // Axis bounds in origin units.
    let (ulo, uhi) = match opts.height_axis {
        Some((lo, hi)) => match kind {
            Kind::Distance => (lo, hi),
            Kind::Similarity => (1.0 - hi, 1.0 - lo),
        },
        None => {
            let mut umax = f64::NEG_INFINITY;
            canon.root.walk(&mut |node| {
                if let Some((lo, hi)) = node.interval {
                    umax = umax
                        .max(origin_units(lo, kind))
                        .max(origin_units(hi, kind));
                }
            });
            if umax <= 0.0 {
                umax = 1.0;
            }
            (0.0, umax)
        }
    };

    let width = MARGIN_LEFT + d.n as f64 * LEAF_SPACING + MARGIN_RIGHT;
    let height = MARGIN_TOP + PLOT_HEIGHT + MARGIN_BOTTOM;
    let map = Mapper {
        ulo,
        uhi,
        top: MARGIN_TOP,
        height: PLOT_HEIGHT,
    };

    let mut rects = String::new();
    let mut lines = String::new();
    let mut labels = String::new();
    let mut next_leaf_x = MARGIN_LEFT + LEAF_SPACING / 2.0;

    // Returns (x, u) of the subtree root; emits shapes bottom-up.
    fn layout(
        node: &ClusterNode,
        kind: Kind,
        map: &Mapper,
        opts: &PlotOptions,
        next_leaf_x: &mut f64,
        rects: &mut String,
        lines: &mut String,
        labels: &mut String,
    ) -> (f64, f64) {
        if node.is_leaf() {
            let x = *next_leaf_x;
            *next_leaf_x += LEAF_SPACING;
            let _ = writeln!(
                labels,
                "  <text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"{}\">{}</text>",
                fmt2(x),
                fmt2(map.top + map.height + 16.0),
                fmt2(opts.label_size),
                xml_escape(node.label.as_deref().unwrap_or(""))
            );
            return (x, 0.0);
        }
        let placed: Vec<(f64, f64)> = node
            .children
            .iter()
            .map(|c| layout(c, kind, map, opts, next_leaf_x, rects, lines, labels))
            .collect();
        let (lo, hi) = node.interval.expect("internal node carries an interval");
        let u_node = origin_units(node.trigger_height(kind), kind);
        let x_first = placed.first().expect("children").0;
        let x_last = placed.last().expect("children").0;
        let x_node = placed.iter().map(|&(x, _)| x).sum::<f64>() / placed.len() as f64;

        if lo != hi {
            if let Some(fill) = &opts.range_fill {
                let (u_a, u_b) = (origin_units(lo, kind), origin_units(hi, kind));
                let (u_low, u_high) = (u_a.min(u_b), u_a.max(u_b));
                let _ = writeln!(
                    rects,
                    "  <rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{}\"/>",
                    fmt2(x_first),
                    fmt2(map.y(u_high)),
                    fmt2(x_last - x_first),
                    fmt2(map.y(u_low) - map.y(u_high)),
                    xml_escape(fill)
                );
            }
        }
        // Vertical stems from each child up to the join height, then the
        // horizontal bracket at the trigger height.
        for &(x, u_child) in &placed {
            let _ = writeln!(
                lines,
                "  <line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>",
                fmt2(x),
                fmt2(map.y(u_child)),
                fmt2(x),
                fmt2(map.y(u_node))
            );
        }
        let _ = writeln!(
            lines,
            "  <line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>",
            fmt2(x_first),
            fmt2(map.y(u_node)),
            fmt2(x_last),
            fmt2(map.y(u_node))
        );
        (x_node, u_node)
    }

    layout(
        &canon.root,
        kind,
        &map,
        opts,
        &mut next_leaf_x,
        &mut rects,
        &mut lines,
        &mut labels,
    );

    // Height axis with five ticks.
    let mut axis = String::new();
    let _ = writeln!(
        axis,
        "  <line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>",
        fmt2(MARGIN_LEFT - 8.0),
        fmt2(map.y(uhi)),
        fmt2(MARGIN_LEFT - 8.0),
        fmt2(map.y(ulo))
    );
    for k in 0..5 {
        let u = ulo + (uhi - ulo) * k as f64 / 4.0;
        let value = match kind {
            Kind::Distance => u,
            Kind::Similarity => 1.0 - u,
        };
        let _ = writeln!(
            axis,
            "  <line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>",
            fmt2(MARGIN_LEFT - 12.0),
            fmt2(map.y(u)),
            fmt2(MARGIN_LEFT - 8.0),
            fmt2(map.y(u))
        );
        let _ = writeln!(
            axis,
            "  <text x=\"{}\" y=\"{}\" text-anchor=\"end\" font-size=\"{}\">{}</text>",
            fmt2(MARGIN_LEFT - 16.0),
            fmt2(map.y(u) + 4.0),
            fmt2(opts.label_size),
            fmt_tick(value)
        );
    }

    let mut title = String::new();
    if let Some(text) = &opts.title {
        let _ = writeln!(
            title,
            "  <text x=\"{}\" y=\"20.00\" text-anchor=\"middle\" font-size=\"{}\">{}</text>",
            fmt2(width / 2.0),
            fmt2(opts.label_size + 2.0),
            xml_escape(text)
        );
    }

    format!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n\
         <svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" \
         width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n\
         {title}{rects}{lines}{axis}{labels}</svg>\n",
        w = fmt2(width),
        h = fmt2(height),
        title = title,
        rects = rects,
        lines = lines,
        axis = axis,
        labels = labels,
    )
}

/// Render a descriptor sweep as a polyline-with-markers SVG plot.
///
/// `points` are `(parameter, value)` pairs in plot order; values must be
/// finite, while parameters may include `±∞`, which are drawn at padded
/// axis ends with `-Inf` / `+Inf` tick labels. `measure_name` labels the
/// value axis; of the options only `label_size` and `title` apply.
pub fn render_sweep_svg(points: &[(f64, f64)], measure_name: &str, opts: &PlotOptions) -> String {
    assert!(points.len() >= 2, "sweep plot needs at least two points");
    assert!(
        points.iter().all(|&(_, v)| v.is_finite()),
        "sweep values must be finite"
    );

    const WIDTH: f64 = 480.0;
    const HEIGHT: f64 = 330.0;
    const LEFT: f64 = 64.0;
    const RIGHT: f64 = 24.0;
    const TOP: f64 = 34.0;
    const BOTTOM: f64 = 56.0;
    const INF_PAD: f64 = 44.0;
    let plot_w_left = LEFT;
    let plot_w_right = WIDTH - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;

    let has_neg_inf = points.iter().any(|&(p, _)| p == f64::NEG_INFINITY);
    let has_pos_inf = points.iter().any(|&(p, _)| p == f64::INFINITY);
    let finite: Vec<f64> = points.iter().map(|&(p, _)| p).filter(|p| p.is_finite()).collect();
    let (pmin, pmax) = match (
        finite.iter().copied().reduce(f64::min),
        finite.iter().copied().reduce(f64::max),
    ) {
        (Some(lo), Some(hi)) if lo < hi => (lo, hi),
        (Some(lo), Some(_)) => (lo - 0.5, lo + 0.5),
        _ => (-1.0, 1.0),
    };
    let fin_left = plot_w_left + if has_neg_inf { INF_PAD } else { 0.0 };
    let fin_right = plot_w_right - if has_pos_inf { INF_PAD } else { 0.0 };
    let x_of = |p: f64| -> f64 {
        if p == f64::NEG_INFINITY {
            plot_w_left
        } else if p == f64::INFINITY {
            plot_w_right
        } else {
            fin_left + (p - pmin) / (pmax - pmin) * (fin_right - fin_left)
        }
    };

    let vmin = points.iter().map(|&(_, v)| v).fold(f64::INFINITY, f64::min);
    let vmax = points.iter().map(|&(_, v)| v).fold(f64::NEG_INFINITY, f64::max);
    let (vmin, vmax) = if vmin < vmax {
        (vmin, vmax)
    } else {
        (vmin - 0.5, vmin + 0.5)
    };
    let y_of = |v: f64| TOP + (1.0 - (v - vmin) / (vmax - vmin)) * plot_h;

    let mut body = String::new();
    if let Some(text) = &opts.title {
        let _ = writeln!(
            body,
            "  <text x=\"{}\" y=\"20.00\" text-anchor=\"middle\" font-size=\"{}\">{}</text>",
            fmt2(WIDTH / 2.0),
            fmt2(opts.label_size + 2.0),
            xml_escape(text)
        );
    }

    // Axes.
    let _ = writeln!(
        body,
        "  <line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>",
        fmt2(plot_w_left),
        fmt2(TOP),
        fmt2(plot_w_left),
        fmt2(TOP + plot_h)
    );
    let _ = writeln!(
        body,
        "  <line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>",
        fmt2(plot_w_left),
        fmt2(TOP + plot_h),
        fmt2(plot_w_right),
        fmt2(TOP + plot_h)
    );

    // Value-axis ticks and label.
    for k in 0..5 {
        let v = vmin + (vmax - vmin) * k as f64 / 4.0;
        let _ = writeln!(
            body,
            "  <line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>",
            fmt2(plot_w_left - 4.0),
            fmt2(y_of(v)),
            fmt2(plot_w_left),
            fmt2(y_of(v))
        );
        let _ = writeln!(
            body,
            "  <text x=\"{}\" y=\"{}\" text-anchor=\"end\" font-size=\"{}\">{}</text>",
            fmt2(plot_w_left - 8.0),
            fmt2(y_of(v) + 4.0),
            fmt2(opts.label_size),
            fmt_tick(v)
        );
    }
    let _ = writeln!(
        body,
        "  <text x=\"{}\" y=\"{}\" text-anchor=\"start\" font-size=\"{}\">{}</text>",
        fmt2(8.0),
        fmt2(TOP - 10.0),
        fmt2(opts.label_size),
        xml_escape(measure_name)
    );

    // Parameter-axis ticks: finite endpoints and midpoint, plus padded
    // infinity ends when present.
    let mut ticks: Vec<(f64, String)> = Vec::new();
    if has_neg_inf {
        ticks.push((f64::NEG_INFINITY, "-Inf".to_string()));
    }
    for p in [pmin, (pmin + pmax) / 2.0, pmax] {
        ticks.push((p, fmt_tick(p)));
    }
    if has_pos_inf {
        ticks.push((f64::INFINITY, "+Inf".to_string()));
    }
    for (p, label) in ticks {
        let x = x_of(p);
        let _ = writeln!(
            body,
            "  <line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>",
            fmt2(x),
            fmt2(TOP + plot_h),
            fmt2(x),
            fmt2(TOP + plot_h + 4.0)
        );
        let _ = writeln!(
            body,
            "  <text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"{}\">{}</text>",
            fmt2(x),
            fmt2(TOP + plot_h + 18.0),
            fmt2(opts.label_size),
            xml_escape(&label)
        );
    }
    let _ = writeln!(
        body,
        "  <text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"{}\">parameter</text>",
        fmt2((plot_w_left + plot_w_right) / 2.0),
        fmt2(TOP + plot_h + 36.0),
        fmt2(opts.label_size)
    );

    // The curve itself: one polyline plus a marker per point.
    let coords: Vec<String> = points
        .iter()
        .map(|&(p, v)| format!("{},{}", fmt2(x_of(p)), fmt2(y_of(v))))
        .collect();
    let _ = writeln!(
        body,
        "  <polyline fill=\"none\" stroke=\"#335\" stroke-width=\"1.5\" points=\"{}\"/>",
        coords.join(" ")
    );
    for &(p, v) in points {
        let _ = writeln!(
            body,
            "  <circle cx=\"{}\" cy=\"{}\" r=\"3.00\" fill=\"#335\"/>",
            fmt2(x_of(p)),
            fmt2(y_of(v))
        );
    }

    format!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n\
         <svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" \
         width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n{body}</svg>\n",
        w = fmt2(WIDTH),
        h = fmt2(HEIGHT),
        body = body,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{cluster, GroupMode};
    use crate::linkage::{Method, MethodSpec, Weighting};
    use crate::prox::{parse_proximity, Format};

    fn toy_dendrogram() -> Dendrogram {
        let text = ",x1,x2,x3,x4\nx1,0,2,4,7\nx2,2,0,2,5\nx3,4,2,0,3\nx4,7,5,3,0\n";
        let m = parse_proximity(text, Format::LabeledSquareCsv, Kind::Distance).unwrap();
        let spec = MethodSpec::new(Method::Arithmetic, Weighting::Unweighted).unwrap();
        cluster(&m, &spec, GroupMode::Variable, None).unwrap()
    }

    #[test]
    fn toy_plot_has_one_interval_rectangle() {
        let svg = render_dendrogram_svg(&toy_dendrogram(), &PlotOptions::default());
        assert_eq!(svg.matches("<rect").count(), 1);
        // Axis runs 0..5 over 300 px: height 4 maps to y = 92, height 2
        // to y = 212, so the rectangle spans y 92..212.
        assert!(svg.contains("<rect x=\"78.00\" y=\"92.00\" width=\"88.00\" height=\"120.00\""));
    }

    #[test]
    fn hiding_range_fill_removes_rectangles() {
        let opts = PlotOptions {
            range_fill: None,
            ..PlotOptions::default()
        };
        let svg = render_dendrogram_svg(&toy_dendrogram(), &opts);
        assert_eq!(svg.matches("<rect").count(), 0);
        assert!(svg.matches("<line").count() > 0);
    }

    #[test]
    fn two_leaf_plot_is_one_bracket_and_two_labels() {
        let m = parse_proximity(",a,b\na,0,5\nb,5,0\n", Format::LabeledSquareCsv, Kind::Distance)
            .unwrap();
        let spec = MethodSpec::new(Method::Single, Weighting::Unweighted).unwrap();
        let d = cluster(&m, &spec, GroupMode::Variable, None).unwrap();
        let svg = render_dendrogram_svg(&d, &PlotOptions::default());
        // Two stems + one bracket + axis line + five ticks = 9 lines.
        assert_eq!(svg.matches("<line").count(), 9);
        assert!(svg.contains(">a</text>"));
        assert!(svg.contains(">b</text>"));
        assert_eq!(svg.matches("<rect").count(), 0);
    }

    #[test]
    fn similarity_axis_descends_from_one() {
        let text = "1,0.9,0.1\n0.9,1,0.2\n0.1,0.2,1\n";
        let m = parse_proximity(text, Format::SquareCsv, Kind::Similarity).unwrap();
        let spec = MethodSpec::new(Method::Arithmetic, Weighting::Unweighted).unwrap();
        let d = cluster(&m, &spec, GroupMode::Variable, None).unwrap();
        let svg = render_dendrogram_svg(&d, &PlotOptions::default());
        // Bottom tick shows the anchor value 1; top tick the axis floor.
        assert!(svg.contains(">1</text>"));
        assert!(svg.contains(">0.15</text>"));
    }

    #[test]
    fn rendering_is_deterministic() {
        let d = toy_dendrogram();
        let opts = PlotOptions {
            title: Some("toy".to_string()),
            ..PlotOptions::default()
        };
        assert_eq!(
            render_dendrogram_svg(&d, &opts),
            render_dendrogram_svg(&d, &opts)
        );
        let pts = [(0.0, 1.0), (1.0, 0.5), (2.0, 0.8)];
        assert_eq!(
            render_sweep_svg(&pts, "cor", &opts),
            render_sweep_svg(&pts, "cor", &opts)
        );
    }

    #[test]
    fn sweep_has_marker_per_point_and_one_polyline() {
        let pts = [(0.0, 1.0), (1.0, 0.75), (2.0, 0.5)];
        let svg = render_sweep_svg(&pts, "cor", &PlotOptions::default());
        assert_eq!(svg.matches("<polyline").count(), 1);
        assert_eq!(svg.matches("<circle").count(), 3);
        assert!(svg.contains(">cor</text>"));
    }

    #[test]
    fn infinite_params_get_labeled_end_ticks() {
        let pts = [
            (f64::NEG_INFINITY, 0.2),
            (-1.0, 0.4),
            (0.0, 0.9),
            (1.0, 0.6),
            (f64::INFINITY, 0.3),
        ];
        let svg = render_sweep_svg(&pts, "sdr", &PlotOptions::default());
        assert!(svg.contains(">-Inf</text>"));
        assert!(svg.contains(">+Inf</text>"));
        assert_eq!(svg.matches("<circle").count(), 5);
    }

    #[test]
    #[should_panic(expected = "at least two points")]
    fn sweep_rejects_single_point() {
        render_sweep_svg(&[(0.0, 1.0)], "cor", &PlotOptions::default());
    }
}
