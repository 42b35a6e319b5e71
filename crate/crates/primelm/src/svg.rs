//! Deterministic grouped-bar SVG charts for the adaptation-effect figures.
//! No plotting dependency: the bytes are a pure function of the inputs.

use crate::error::{Error, Result};

const WIDTH: f64 = 860.0;
const HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 30.0;
const MARGIN_TOP: f64 = 56.0;
const MARGIN_BOTTOM: f64 = 96.0;

const SERIES_COLORS: [&str; 4] = ["#4878a8", "#e0903f", "#6aa66a", "#b65c5c"];
const AXIS_COLOR: &str = "#333333";
const GRID_COLOR: &str = "#dddddd";

/// One bar per group, with symmetric-or-not error whiskers.
#[derive(Debug, Clone)]
pub struct BarSeries {
    pub label: String,
    pub values: Vec<f64>,
    /// (low, high) absolute whisker endpoints per value; may equal the value
    pub errors: Vec<(f64, f64)>,
}

fn fmt(v: f64) -> String {
    format!("{v:.3}")
}

fn escape_xml(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Renders a grouped bar chart. Every series must have one value and one
/// whisker pair per group.
pub fn plot_bars(title: &str, groups: &[String], series: &[BarSeries]) -> Result<String> {
    if groups.is_empty() || series.is_empty() {
        return Err(Error::Invalid("plot needs at least one group and one series".into()));
    }
    for s in series {
        if s.values.len() != groups.len() || s.errors.len() != groups.len() {
            return Err(Error::Invalid(format!(
                "series `{}` has {} values and {} whiskers for {} groups",
                s.label,
                s.values.len(),
                s.errors.len(),
                groups.len()
            )));
        }
        if s.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid(format!("series `{}` has non-finite values", s.label)));
        }
    }
    if series.len() > SERIES_COLORS.len() {
        return Err(Error::Invalid(format!("at most {} series supported", SERIES_COLORS.len())));
    }

    let mut lo = 0.0f64;
    let mut hi = 0.0f64;
    for s in series {
        for (&v, &(el, eh)) in s.values.iter().zip(&s.errors) {
            lo = lo.min(v).min(el);
            hi = hi.max(v).max(eh);
        }
    }
    if hi == lo {
        hi = lo + 1.0;
    }
    let pad = 0.08 * (hi - lo);
    let (lo, hi) = (lo - pad, hi + pad);

    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let y_of = |v: f64| MARGIN_TOP + plot_h * (1.0 - (v - lo) / (hi - lo));

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    svg.push_str(&format!(
        "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n"
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"30\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"17\" fill=\"{AXIS_COLOR}\">{}</text>\n",
        fmt(WIDTH / 2.0),
        escape_xml(title)
    ));

    // horizontal grid and y ticks
    for i in 0..=5 {
        let v = lo + (hi - lo) * i as f64 / 5.0;
        let y = y_of(v);
        svg.push_str(&format!(
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{GRID_COLOR}\" stroke-width=\"1\"/>\n",
            fmt(MARGIN_LEFT),
            fmt(y),
            fmt(WIDTH - MARGIN_RIGHT),
            fmt(y)
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\" fill=\"{AXIS_COLOR}\">{}</text>\n",
            fmt(MARGIN_LEFT - 8.0),
            fmt(y + 4.0),
            fmt(v)
        ));
    }

    // zero line when it is in range
    if lo < 0.0 && hi > 0.0 {
        let y = y_of(0.0);
        svg.push_str(&format!(
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{AXIS_COLOR}\" stroke-width=\"1\"/>\n",
            fmt(MARGIN_LEFT),
            fmt(y),
            fmt(WIDTH - MARGIN_RIGHT),
            fmt(y)
        ));
    }

    let group_w = plot_w / groups.len() as f64;
    let bar_w = group_w * 0.72 / series.len() as f64;
    let base_y = y_of(lo.max(0.0).min(hi)); // bars grow from zero when visible

    for (gi, group) in groups.iter().enumerate() {
        let group_x = MARGIN_LEFT + group_w * gi as f64;
        for (si, s) in series.iter().enumerate() {
            let v = s.values[gi];
            let x = group_x + group_w * 0.14 + bar_w * si as f64;
            let y_v = y_of(v);
            let (top, height) = if y_v <= base_y {
                (y_v, base_y - y_v)
            } else {
                (base_y, y_v - base_y)
            };
            svg.push_str(&format!(
                "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{}\"/>\n",
                fmt(x),
                fmt(top),
                fmt(bar_w * 0.92),
                fmt(height),
                SERIES_COLORS[si]
            ));
            let (el, eh) = s.errors[gi];
            if eh > el {
                let cx = x + bar_w * 0.46;
                svg.push_str(&format!(
                    "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{AXIS_COLOR}\" stroke-width=\"1.2\"/>\n",
                    fmt(cx),
                    fmt(y_of(eh)),
                    fmt(cx),
                    fmt(y_of(el))
                ));
                for e in [el, eh] {
                    svg.push_str(&format!(
                        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{AXIS_COLOR}\" stroke-width=\"1.2\"/>\n",
                        fmt(cx - 4.0),
                        fmt(y_of(e)),
                        fmt(cx + 4.0),
                        fmt(y_of(e))
                    ));
                }
            }
        }
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\" fill=\"{AXIS_COLOR}\" transform=\"rotate(-35 {} {})\">{}</text>\n",
            fmt(group_x + group_w / 2.0),
            fmt(HEIGHT - MARGIN_BOTTOM + 18.0),
            fmt(group_x + group_w / 2.0),
            fmt(HEIGHT - MARGIN_BOTTOM + 18.0),
            escape_xml(group)
        ));
    }

    // legend
    for (si, s) in series.iter().enumerate() {
        let x = MARGIN_LEFT + 140.0 * si as f64;
        let y = HEIGHT - 26.0;
        svg.push_str(&format!(
            "<rect x=\"{}\" y=\"{}\" width=\"14\" height=\"14\" fill=\"{}\"/>\n",
            fmt(x),
            fmt(y - 11.0),
            SERIES_COLORS[si]
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"13\" fill=\"{AXIS_COLOR}\">{}</text>\n",
            fmt(x + 20.0),
            fmt(y),
            escape_xml(&s.label)
        ));
    }

    svg.push_str("</svg>\n");
    Ok(svg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(label: &str, values: &[f64]) -> BarSeries {
        BarSeries {
            label: label.into(),
            values: values.to_vec(),
            errors: values.iter().map(|v| (v - 0.1, v + 0.1)).collect(),
        }
    }

    #[test]
    fn single_bar_renders_valid_svg() {
        let svg = plot_bars("t", &["g".into()], &[series("s", &[1.0])]).unwrap();
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("<rect"));
        assert_eq!(svg.matches("<svg").count(), 1);
    }

    #[test]
    fn seven_groups_two_series_has_fourteen_bars() {
        let groups: Vec<String> = (0..7).map(|i| format!("type{i}")).collect();
        let vals: Vec<f64> = (0..7).map(|i| 0.1 * i as f64).collect();
        let svg = plot_bars("fig", &groups, &[series("same", &vals), series("diff", &vals)])
            .unwrap();
        // one background rect + 14 bars + 2 legend swatches
        assert_eq!(svg.matches("<rect").count(), 1 + 14 + 2);
    }

    #[test]
    fn deterministic_bytes() {
        let groups = vec!["a".into(), "b".into()];
        let s = [series("x", &[0.2, -0.4])];
        assert_eq!(
            plot_bars("t", &groups, &s).unwrap(),
            plot_bars("t", &groups, &s).unwrap()
        );
    }

    #[test]
    fn rejects_empty_and_mismatched_inputs() {
        assert!(plot_bars("t", &[], &[series("s", &[])]).is_err());
        assert!(plot_bars("t", &["g".into()], &[]).is_err());
        let bad = BarSeries {
            label: "s".into(),
            values: vec![1.0, 2.0],
            errors: vec![(0.9, 1.1)],
        };
        assert!(plot_bars("t", &["g".into(), "h".into()], &[bad]).is_err());
        assert!(plot_bars("t", &["g".into()], &[series("s", &[f64::NAN])]).is_err());
    }

    #[test]
    fn escapes_markup_in_labels() {
        let svg = plot_bars("a<b>&c", &["g&h".into()], &[series("s", &[1.0])]).unwrap();
        assert!(!svg.contains("a<b>"));
        assert!(svg.contains("a&lt;b&gt;&amp;c"));
    }
}
