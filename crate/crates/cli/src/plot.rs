//! Self-contained SVG plots of sweep results against the dimensionless
//! ratio `I / ln n`. The numeric data behind every drawn point is embedded
//! in a `<metadata>` CDATA island so plots stay machine-readable.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};

use crate::sweep::SweepCell;
use crate::validation;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    /// Exact-match rate of bijective alignment, y in [0, 1].
    SuccessVsInformation,
    /// Mean false negatives and false positives of threshold alignment.
    ErrorsVsInformation,
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 62.0;
const RIGHT: f64 = 622.0;
const TOP: f64 = 36.0;
const BOTTOM: f64 = 370.0;

struct Frame {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
}

impl Frame {
    fn x(&self, v: f64) -> f64 {
        LEFT + (v - self.x_min) / (self.x_max - self.x_min) * (RIGHT - LEFT)
    }

    fn y(&self, v: f64) -> f64 {
        BOTTOM - (v - self.y_min) / (self.y_max - self.y_min) * (BOTTOM - TOP)
    }
}

struct Series<'a> {
    name: &'a str,
    color: &'a str,
    /// (x, y, half_width) sorted by x.
    points: Vec<(f64, f64, f64)>,
}

/// Largest of 1, 2, 5 times a power of ten not exceeding five steps per axis.
fn nice_step(span: f64) -> f64 {
    let raw = span / 5.0;
    let scale = 10f64.powf(raw.log10().floor());
    for multiple in [1.0, 2.0, 5.0, 10.0] {
        if scale * multiple >= raw {
            return scale * multiple;
        }
    }
    scale * 10.0
}

fn format_coordinate(v: f64) -> String {
    format!("{v:.2}")
}

fn format_tick(v: f64) -> String {
    let text = format!("{v:.2}");
    let trimmed = text.trim_end_matches('0').trim_end_matches('.');
    if trimmed.is_empty() { "0".to_string() } else { trimmed.to_string() }
}

fn collect_series(cells: &[SweepCell], kind: PlotKind) -> Vec<Series<'static>> {
    let mut ordered: Vec<&SweepCell> = cells.iter().collect();
    ordered.sort_by(|a, b| {
        a.i_over_ln_n.total_cmp(&b.i_over_ln_n).then(a.cell.cmp(&b.cell))
    });
    let pick = |value: Option<f64>, hw: Option<f64>| -> Option<(f64, f64)> {
        value.map(|v| (v, hw.filter(|w| w.is_finite()).unwrap_or(0.0)))
    };
    match kind {
        PlotKind::SuccessVsInformation => {
            let points = ordered
                .iter()
                .filter_map(|c| {
                    pick(c.map_success_rate, c.map_success_half_width)
                        .map(|(v, w)| (c.i_over_ln_n, v, w))
                })
                .collect();
            vec![Series { name: "success", color: "steelblue", points }]
        }
        PlotKind::ErrorsVsInformation => {
            let fns = ordered
                .iter()
                .filter_map(|c| {
                    pick(c.bht_mean_fn, c.bht_mean_fn_half_width)
                        .map(|(v, w)| (c.i_over_ln_n, v, w))
                })
                .collect();
            let fps = ordered
                .iter()
                .filter_map(|c| {
                    pick(c.bht_mean_fp, c.bht_mean_fp_half_width)
                        .map(|(v, w)| (c.i_over_ln_n, v, w))
                })
                .collect();
            vec![
                Series { name: "false negatives", color: "crimson", points: fns },
                Series { name: "false positives", color: "darkorange", points: fps },
            ]
        }
    }
}

/// Renders the plot as an SVG document string.
pub fn render(cells: &[SweepCell], kind: PlotKind) -> Result<String> {
    let series = collect_series(cells, kind);
    if series.iter().all(|s| s.points.is_empty()) {
        return validation("no cells carry data for the requested plot");
    }

    let xs: Vec<f64> =
        series.iter().flat_map(|s| s.points.iter().map(|p| p.0)).filter(|v| v.is_finite()).collect();
    if xs.is_empty() {
        return validation("no finite x coordinates to plot");
    }
    let data_min = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let data_max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    // The domain always shows both reference lines.
    let mut x_min = data_min.min(1.0);
    let mut x_max = data_max.max(2.0);
    let pad = 0.05 * (x_max - x_min);
    x_min -= pad;
    x_max += pad;

    let (y_min, y_max, y_step, y_label) = match kind {
        PlotKind::SuccessVsInformation => (0.0, 1.0, 0.5, "exact-match rate"),
        PlotKind::ErrorsVsInformation => {
            let top = series
                .iter()
                .flat_map(|s| s.points.iter().map(|&(_, y, w)| y + w))
                .fold(0.0f64, f64::max);
            let top = if top > 0.0 { top } else { 1.0 };
            (0.0, top * 1.05, nice_step(top), "mean errors per trial")
        }
    };
    let frame = Frame { x_min, x_max, y_min, y_max };

    // The x grid keeps half-unit ticks until the span would overcrowd them,
    // then widens to a half-unit multiple.
    let x_step = {
        let span = x_max - x_min;
        0.5 * ((span / (0.5 * 12.0)).ceil().max(1.0))
    };

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"12\">\n"
    ));

    svg.push_str("<metadata><![CDATA[\nseries,i_over_ln_n,value,half_width\n");
    for s in &series {
        for &(x, y, w) in &s.points {
            svg.push_str(&format!("{},{x},{y},{w}\n", s.name));
        }
    }
    svg.push_str("]]></metadata>\n");

    svg.push_str(&format!(
        "<rect x=\"0\" y=\"0\" width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n"
    ));

    // Axes.
    svg.push_str(&format!(
        "<line x1=\"{LEFT}\" y1=\"{BOTTOM}\" x2=\"{RIGHT}\" y2=\"{BOTTOM}\" stroke=\"black\"/>\n"
    ));
    svg.push_str(&format!(
        "<line x1=\"{LEFT}\" y1=\"{TOP}\" x2=\"{LEFT}\" y2=\"{BOTTOM}\" stroke=\"black\"/>\n"
    ));

    // X ticks on the half-unit grid.
    let mut tick = (x_min / x_step).ceil() * x_step;
    while tick <= x_max + 1e-9 {
        let px = frame.x(tick);
        svg.push_str(&format!(
            "<line x1=\"{0}\" y1=\"{BOTTOM}\" x2=\"{0}\" y2=\"{1}\" stroke=\"black\"/>\n",
            format_coordinate(px),
            format_coordinate(BOTTOM + 5.0)
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
            format_coordinate(px),
            format_coordinate(BOTTOM + 18.0),
            format_tick(tick)
        ));
        tick += x_step;
    }

    // Y ticks.
    let mut tick = y_min;
    while tick <= y_max + 1e-9 * y_step {
        let py = frame.y(tick);
        svg.push_str(&format!(
            "<line x1=\"{1}\" y1=\"{0}\" x2=\"{LEFT}\" y2=\"{0}\" stroke=\"black\"/>\n",
            format_coordinate(py),
            format_coordinate(LEFT - 5.0)
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>\n",
            format_coordinate(LEFT - 8.0),
            format_coordinate(py + 4.0),
            format_tick(tick)
        ));
        tick += y_step;
    }

    // Reference lines at I = ln n and I = 2 ln n.
    for (value, label) in [(1.0, "I = ln n"), (2.0, "I = 2 ln n")] {
        let px = frame.x(value);
        svg.push_str(&format!(
            "<line x1=\"{0}\" y1=\"{TOP}\" x2=\"{0}\" y2=\"{BOTTOM}\" stroke=\"gray\" \
             stroke-dasharray=\"5,4\"/>\n",
            format_coordinate(px)
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" fill=\"gray\">{label}</text>\n",
            format_coordinate(px),
            format_coordinate(TOP - 6.0)
        ));
    }

    // Series: confidence bars behind the polyline, markers on top.
    for s in &series {
        for &(x, y, w) in &s.points {
            if w > 0.0 {
                let px = format_coordinate(frame.x(x));
                let upper = frame.y((y + w).min(y_max));
                let lower = frame.y((y - w).max(y_min));
                svg.push_str(&format!(
                    "<line x1=\"{px}\" y1=\"{}\" x2=\"{px}\" y2=\"{}\" stroke=\"{}\" \
                     stroke-width=\"1.5\" opacity=\"0.6\"/>\n",
                    format_coordinate(upper),
                    format_coordinate(lower),
                    s.color
                ));
            }
        }
        if s.points.len() > 1 {
            let path: Vec<String> = s
                .points
                .iter()
                .map(|&(x, y, _)| {
                    format!("{},{}", format_coordinate(frame.x(x)), format_coordinate(frame.y(y)))
                })
                .collect();
            svg.push_str(&format!(
                "<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\"/>\n",
                path.join(" "),
                s.color
            ));
        }
        for &(x, y, _) in &s.points {
            svg.push_str(&format!(
                "<circle cx=\"{}\" cy=\"{}\" r=\"3\" fill=\"{}\"/>\n",
                format_coordinate(frame.x(x)),
                format_coordinate(frame.y(y)),
                s.color
            ));
        }
    }

    // Legend only when there is more than one series.
    if series.len() > 1 {
        for (i, s) in series.iter().enumerate() {
            let y = TOP + 16.0 * i as f64 + 8.0;
            svg.push_str(&format!(
                "<line x1=\"{}\" y1=\"{y}\" x2=\"{}\" y2=\"{y}\" stroke=\"{}\" stroke-width=\"2\"/>\n",
                format_coordinate(RIGHT - 150.0),
                format_coordinate(RIGHT - 126.0),
                s.color
            ));
            svg.push_str(&format!(
                "<text x=\"{}\" y=\"{}\">{}</text>\n",
                format_coordinate(RIGHT - 120.0),
                format_coordinate(y + 4.0),
                s.name
            ));
        }
    }

    // Axis labels.
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">I / ln n</text>\n",
        format_coordinate((LEFT + RIGHT) / 2.0),
        format_coordinate(HEIGHT - 12.0)
    ));
    svg.push_str(&format!(
        "<text x=\"16\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">{}</text>\n",
        format_coordinate((TOP + BOTTOM) / 2.0),
        format_coordinate((TOP + BOTTOM) / 2.0),
        y_label
    ));

    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Renders and writes the plot.
pub fn emit_plot(path: &Path, cells: &[SweepCell], kind: PlotKind) -> Result<()> {
    let svg = render(cells, kind)?;
    fs::write(path, svg).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sweep::Algorithm;

    fn base_cell(index: usize, ratio: f64) -> SweepCell {
        SweepCell {
            cell: index,
            algorithm: Algorithm::Both,
            n: 100,
            d: 50,
            rho: "0.5".to_string(),
            trials: 10,
            errors: 0,
            i_xy: ratio * (100f64).ln(),
            sigma_xy: 1.0,
            i_over_ln_n: ratio,
            achievability_verdict: "gap".to_string(),
            achievability_margin: 0.0,
            converse_verdict: None,
            converse_margin: None,
            bht_error_floor: 0.0,
            window_status: None,
            tau: None,
            map_success_rate: None,
            map_success_half_width: None,
            map_mean_errors: None,
            map_mean_errors_half_width: None,
            bht_mean_fn: None,
            bht_mean_fn_half_width: None,
            bht_mean_fp: None,
            bht_mean_fp_half_width: None,
        }
    }

    fn success_cell(index: usize, ratio: f64, rate: f64) -> SweepCell {
        let mut cell = base_cell(index, ratio);
        cell.map_success_rate = Some(rate);
        cell.map_success_half_width = Some(0.05);
        cell
    }

    #[test]
    fn success_plot_shows_reference_lines_points_and_data() {
        let cells = vec![
            success_cell(0, 0.8, 0.1),
            success_cell(1, 1.6, 0.7),
            success_cell(2, 2.4, 1.0),
        ];
        let svg = render(&cells, PlotKind::SuccessVsInformation).unwrap();
        assert!(svg.contains("I = ln n"));
        assert!(svg.contains("I = 2 ln n"));
        assert!(svg.contains("<polyline"));
        assert_eq!(svg.matches("<circle").count(), 3);
        assert!(svg.contains("<![CDATA["));
        assert!(svg.contains("success,0.8,0.1,0.05"));
        assert!(svg.contains("exact-match rate"));
    }

    #[test]
    fn error_plot_draws_both_series_with_a_legend() {
        let mut low = base_cell(0, 1.2);
        low.bht_mean_fn = Some(4.0);
        low.bht_mean_fn_half_width = Some(1.0);
        low.bht_mean_fp = Some(2.0);
        low.bht_mean_fp_half_width = Some(0.5);
        let mut high = base_cell(1, 2.5);
        high.bht_mean_fn = Some(0.5);
        high.bht_mean_fn_half_width = Some(0.25);
        high.bht_mean_fp = Some(0.25);
        high.bht_mean_fp_half_width = Some(0.25);
        let svg = render(&[low, high], PlotKind::ErrorsVsInformation).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("crimson"));
        assert!(svg.contains("darkorange"));
        assert!(svg.contains("false negatives"));
        assert!(svg.contains("false positives"));
        assert!(svg.contains("mean errors per trial"));
    }

    #[test]
    fn points_are_sorted_by_the_information_ratio() {
        let cells = vec![success_cell(0, 2.2, 0.9), success_cell(1, 0.7, 0.2)];
        let svg = render(&cells, PlotKind::SuccessVsInformation).unwrap();
        let island_start = svg.find("<![CDATA[").unwrap();
        let island_end = svg.find("]]>").unwrap();
        let island = &svg[island_start..island_end];
        let first = island.find("success,0.7").unwrap();
        let second = island.find("success,2.2").unwrap();
        assert!(first < second);
    }

    #[test]
    fn cells_without_plot_data_are_rejected() {
        let cells = vec![base_cell(0, 1.0)];
        let err = render(&cells, PlotKind::SuccessVsInformation).unwrap_err();
        assert_eq!(crate::exit_code(&err), 2);
    }

    #[test]
    fn infinite_half_widths_never_reach_the_drawing() {
        let mut cell = success_cell(0, 1.5, 0.5);
        cell.map_success_half_width = Some(f64::INFINITY);
        let svg = render(&[cell], PlotKind::SuccessVsInformation).unwrap();
        assert!(!svg.contains("inf"));
        assert!(!svg.contains("NaN"));
    }

    #[test]
    fn wide_domains_widen_the_tick_step_to_a_half_unit_multiple() {
        let cells = vec![success_cell(0, 0.5, 0.1), success_cell(1, 36.0, 1.0)];
        let svg = render(&cells, PlotKind::SuccessVsInformation).unwrap();
        let ticks = svg.matches("text-anchor=\"middle\"").count();
        // Ticks, two reference labels and the x axis label; keeps the axis
        // legible instead of drawing seventy half-unit ticks.
        assert!(ticks < 20, "{ticks} middle-anchored labels");
    }
}
