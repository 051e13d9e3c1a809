//! Deterministic SVG rendering of plot data.
//!
//! Every document uses a fixed 800×500 viewBox with embedded CSS and
//! generic font families only, so identical input yields identical bytes.

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::viz::charts::{ControlChart, DependencePlot};
use crate::viz::ifs::{FractalSeries, Window};
use crate::viz::patterns::{PatternHistogram, RateEvolution};

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const PALETTE: [&str; 8] = [
    "#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02", "#a6761d", "#666666",
];

pub const NOMINAL_CAVEAT: &str = "Categories are nominal: the vertical order is arbitrary.";

/// Everything `render_svg` can draw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PlotData {
    TimeSeries { codes: Vec<usize>, symbols: Vec<String> },
    RateEvolution(RateEvolution),
    Histogram(PatternHistogram),
    Ifs { series: FractalSeries, window: Option<Window> },
    Dependence(DependencePlot),
    ControlChart(ControlChart),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StyleOptions {
    pub title: Option<String>,
    /// Marker radius for scatter plots.
    pub point_radius: Option<f64>,
}

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn new(x: (f64, f64), y: (f64, f64)) -> Self {
        let widen = |(lo, hi): (f64, f64)| {
            if hi > lo {
                (lo, hi)
            } else {
                (lo - 0.5, hi + 0.5)
            }
        };
        Frame { x: widen(x), y: widen(y) }
    }

    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - BOTTOM - (y - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - TOP - BOTTOM)
    }
}

fn num(v: f64) -> String {
    let s = format!("{v:.2}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.into() }
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn tick_label(v: f64, step: f64) -> String {
    let digits = (-step.log10().floor()).max(0.0) as usize;
    let s = format!("{v:.digits$}");
    if s.trim_start_matches('-').chars().all(|c| c == '0' || c == '.') { "0".into() } else { s }
}

fn ticks(lo: f64, hi: f64) -> (Vec<f64>, f64) {
    let raw = (hi - lo) / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|&s| s >= raw)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    ((first..=last).map(|k| k as f64 * step).collect(), step)
}

fn range(values: impl IntoIterator<Item = f64>) -> Option<(f64, f64)> {
    values
        .into_iter()
        .filter(|v| v.is_finite())
        .fold(None, |acc, v| match acc {
            None => Some((v, v)),
            Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
        })
}

struct Doc {
    out: String,
}

impl Doc {
    fn new(title: &str) -> Self {
        let mut out = String::new();
        out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
        let _ = writeln!(
            out,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">"
        );
        out.push_str(
            "<style>\ntext{font-family:sans-serif;font-size:12px;fill:#222}\n.title{font-size:16px}\n\
             .axis{stroke:#222;stroke-width:1}\n.grid{stroke:#ddd;stroke-width:0.5}\n\
             .limit{stroke:#c00;stroke-width:1;stroke-dasharray:6 4;fill:none}\n\
             .series{fill:none;stroke-width:1.2}\n.stem{stroke:#222;stroke-width:2}\n\
             .bar{fill:#7570b3}\n.alarm{fill:#c00}\n.note{font-style:italic;fill:#666}\n</style>\n",
        );
        out.push_str("<rect width=\"800\" height=\"500\" fill=\"#fff\"/>\n");
        let _ = writeln!(
            out,
            "<text class=\"title\" x=\"{}\" y=\"24\" text-anchor=\"middle\">{}</text>",
            WIDTH / 2.0,
            esc(title)
        );
        Doc { out }
    }

    fn axes(&mut self, f: &Frame, xlabel: &str, ylabel: &str) {
        let (xt, xs) = ticks(f.x.0, f.x.1);
        for v in xt {
            let x = num(f.px(v));
            let _ = writeln!(
                self.out,
                "<line class=\"grid\" x1=\"{x}\" y1=\"{}\" x2=\"{x}\" y2=\"{}\"/><text x=\"{x}\" y=\"{}\" text-anchor=\"middle\">{}</text>",
                TOP,
                HEIGHT - BOTTOM,
                num(HEIGHT - BOTTOM + 16.0),
                tick_label(v, xs)
            );
        }
        let (yt, ys) = ticks(f.y.0, f.y.1);
        for v in yt {
            let y = num(f.py(v));
            let _ = writeln!(
                self.out,
                "<line class=\"grid\" x1=\"{}\" y1=\"{y}\" x2=\"{}\" y2=\"{y}\"/><text x=\"{}\" y=\"{y}\" text-anchor=\"end\" dy=\"4\">{}</text>",
                LEFT,
                WIDTH - RIGHT,
                num(LEFT - 6.0),
                tick_label(v, ys)
            );
        }
        self.frame_box();
        let _ = writeln!(
            self.out,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>",
            num((LEFT + WIDTH - RIGHT) / 2.0),
            num(HEIGHT - 12.0),
            esc(xlabel)
        );
        let _ = writeln!(
            self.out,
            "<text x=\"18\" y=\"{0}\" text-anchor=\"middle\" transform=\"rotate(-90 18 {0})\">{1}</text>",
            num((TOP + HEIGHT - BOTTOM) / 2.0),
            esc(ylabel)
        );
    }

    fn frame_box(&mut self) {
        let _ = writeln!(
            self.out,
            "<rect class=\"axis\" fill=\"none\" x=\"{LEFT}\" y=\"{TOP}\" width=\"{}\" height=\"{}\"/>",
            WIDTH - LEFT - RIGHT,
            HEIGHT - TOP - BOTTOM
        );
    }

    fn polyline(&mut self, f: &Frame, pts: &[(f64, f64)], color: &str, class: &str) {
        let coords: Vec<String> = pts
            .iter()
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|&(x, y)| format!("{},{}", num(f.px(x)), num(f.py(y))))
            .collect();
        let _ = writeln!(
            self.out,
            "<polyline class=\"{class}\" stroke=\"{color}\" points=\"{}\"/>",
            coords.join(" ")
        );
    }

    fn hline(&mut self, f: &Frame, y: f64) {
        let _ = writeln!(
            self.out,
            "<line class=\"limit\" x1=\"{}\" y1=\"{y}\" x2=\"{}\" y2=\"{y}\"/>",
            LEFT,
            WIDTH - RIGHT,
            y = num(f.py(y))
        );
    }

    fn legend(&mut self, labels: &[String]) {
        for (k, label) in labels.iter().enumerate() {
            let y = TOP + 14.0 + 16.0 * k as f64;
            let _ = writeln!(
                self.out,
                "<rect x=\"{}\" y=\"{}\" width=\"10\" height=\"10\" fill=\"{}\"/><text x=\"{}\" y=\"{}\">{}</text>",
                num(WIDTH - RIGHT - 110.0),
                num(y - 9.0),
                PALETTE[k % PALETTE.len()],
                num(WIDTH - RIGHT - 95.0),
                num(y),
                esc(label)
            );
        }
    }

    fn note(&mut self, text: &str) {
        let _ = writeln!(
            self.out,
            "<text class=\"note\" x=\"{}\" y=\"{}\">{}</text>",
            LEFT,
            num(TOP - 6.0),
            esc(text)
        );
    }

    fn finish(mut self) -> String {
        self.out.push_str("</svg>\n");
        self.out
    }
}

fn empty(what: &str) -> crate::Error {
    invalid(format!("nothing to plot: empty {what}"))
}

pub fn render_svg(data: &PlotData, style: &StyleOptions) -> Result<String> {
    let title = |default: &str| style.title.clone().unwrap_or_else(|| default.to_string());
    match data {
        PlotData::TimeSeries { codes, symbols } => {
            if codes.is_empty() {
                return Err(empty("series"));
            }
            let mut doc = Doc::new(&title("Time series"));
            let f = Frame::new((1.0, codes.len() as f64), (0.0, symbols.len().saturating_sub(1) as f64));
            doc.axes(&f, "t", "category");
            for (k, s) in symbols.iter().enumerate() {
                let _ = writeln!(
                    doc.out,
                    "<text x=\"{}\" y=\"{}\" text-anchor=\"start\" dy=\"4\">{}</text>",
                    num(LEFT + 4.0),
                    num(f.py(k as f64)),
                    esc(s)
                );
            }
            let mut pts = Vec::with_capacity(2 * codes.len());
            for (t, &c) in codes.iter().enumerate() {
                if t > 0 {
                    pts.push(((t + 1) as f64, codes[t - 1] as f64));
                }
                pts.push(((t + 1) as f64, c as f64));
            }
            doc.polyline(&f, &pts, PALETTE[2], "series");
            doc.note(NOMINAL_CAVEAT);
            Ok(doc.finish())
        }
        PlotData::RateEvolution(rate) => {
            let last = rate.cumulative.last().ok_or_else(|| empty("rate evolution"))?;
            let mut doc = Doc::new(&title("Rate evolution"));
            let top = last.iter().copied().max().unwrap_or(0) as f64;
            let f = Frame::new((1.0, rate.cumulative.len() as f64), (0.0, top));
            doc.axes(&f, "t", "cumulated count");
            for i in 0..rate.symbols.len() {
                let pts: Vec<(f64, f64)> = rate
                    .cumulative
                    .iter()
                    .enumerate()
                    .map(|(t, row)| ((t + 1) as f64, row[i] as f64))
                    .collect();
                doc.polyline(&f, &pts, PALETTE[i % PALETTE.len()], "series");
            }
            doc.legend(&rate.symbols);
            Ok(doc.finish())
        }
        PlotData::Histogram(hist) => {
            let (&max_len, _) = hist.counts.iter().next_back().ok_or_else(|| empty("histogram"))?;
            let top = hist.counts.values().copied().max().unwrap_or(0) as f64;
            let mut doc = Doc::new(&title(&format!("Cycle lengths of {}", hist.symbol)));
            let f = Frame::new((0.5, max_len as f64 + 0.5), (0.0, top));
            doc.axes(&f, "cycle length", "count");
            let width = (f.px(1.0) - f.px(0.0)) * 0.8;
            for (&len, &count) in &hist.counts {
                let _ = writeln!(
                    doc.out,
                    "<rect class=\"bar\" x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\"/>",
                    num(f.px(len as f64) - width / 2.0),
                    num(f.py(count as f64)),
                    num(width),
                    num(f.py(0.0) - f.py(count as f64))
                );
            }
            Ok(doc.finish())
        }
        PlotData::Ifs { series, window } => {
            let shown: Vec<([f64; 2], usize)> = series
                .points
                .iter()
                .copied()
                .zip(series.codes.iter().copied())
                .filter(|(p, _)| window.is_none_or(|w| w.contains(*p)))
                .collect();
            if series.points.is_empty() {
                return Err(empty("fractal series"));
            }
            let (x, y) = match window {
                Some(w) => ((w.x0, w.x1), (w.y0, w.y1)),
                None => (
                    range(series.points.iter().map(|p| p[0])).unwrap_or((0.0, 1.0)),
                    range(series.points.iter().map(|p| p[1])).unwrap_or((0.0, 1.0)),
                ),
            };
            let mut doc = Doc::new(&title("IFS circle transformation"));
            let f = Frame::new(x, y);
            doc.axes(&f, "x", "y");
            let radius = num(style.point_radius.unwrap_or(1.5));
            for (p, c) in shown {
                let _ = writeln!(
                    doc.out,
                    "<circle cx=\"{}\" cy=\"{}\" r=\"{radius}\" fill=\"{}\"/>",
                    num(f.px(p[0])),
                    num(f.py(p[1])),
                    PALETTE[c % PALETTE.len()]
                );
            }
            Ok(doc.finish())
        }
        PlotData::Dependence(plot) => {
            if plot.lags.is_empty() {
                return Err(empty("dependence plot"));
            }
            let mut ys: Vec<f64> = plot.estimates.clone();
            ys.push(plot.critical_upper);
            ys.extend(plot.critical_lower);
            ys.push(0.0);
            let (lo, hi) = range(ys).unwrap_or((0.0, 1.0));
            let max_lag = *plot.lags.iter().max().unwrap_or(&1) as f64;
            let name = match plot.family {
                crate::inference::TestFamily::CramersV => "Cramer's v",
                crate::inference::TestFamily::CohensKappa => "Cohen's kappa",
            };
            let mut doc = Doc::new(&title(&format!("Serial dependence plot ({name})")));
            let f = Frame::new((0.5, max_lag + 0.5), (lo, hi));
            doc.axes(&f, "lag", name);
            for (&lag, &est) in plot.lags.iter().zip(&plot.estimates) {
                let x = num(f.px(lag as f64));
                let _ = writeln!(
                    doc.out,
                    "<line class=\"stem\" x1=\"{x}\" y1=\"{}\" x2=\"{x}\" y2=\"{}\"/>",
                    num(f.py(0.0)),
                    num(f.py(if est.is_finite() { est } else { 0.0 }))
                );
            }
            doc.hline(&f, plot.critical_upper);
            if let Some(lower) = plot.critical_lower {
                doc.hline(&f, lower);
            }
            Ok(doc.finish())
        }
        PlotData::ControlChart(chart) => {
            if chart.times.is_empty() || chart.lines.is_empty() {
                return Err(empty("control chart"));
            }
            let values = chart.lines.iter().flat_map(|l| l.values.iter().copied());
            let (lo, hi) = range(values.chain([-1.0, 1.0])).unwrap_or((-1.0, 1.0));
            let first = *chart.times.first().unwrap_or(&1) as f64;
            let last = *chart.times.last().unwrap_or(&1) as f64;
            let mut doc = Doc::new(&title("Control chart"));
            let f = Frame::new((first, last), (lo.max(-10.0), hi.min(10.0)));
            doc.axes(&f, "t", "standardized statistic");
            for (k, line) in chart.lines.iter().enumerate() {
                let color = PALETTE[k % PALETTE.len()];
                let pts: Vec<(f64, f64)> = chart
                    .times
                    .iter()
                    .zip(&line.values)
                    .map(|(&t, &v)| (t as f64, v.clamp(f.y.0, f.y.1)))
                    .collect();
                doc.polyline(&f, &pts, color, "series");
                for ((&t, &v), &alarm) in chart.times.iter().zip(&line.values).zip(&line.alarms) {
                    if alarm {
                        let _ = writeln!(
                            doc.out,
                            "<circle class=\"alarm\" cx=\"{}\" cy=\"{}\" r=\"3\"/>",
                            num(f.px(t as f64)),
                            num(f.py(v.clamp(f.y.0, f.y.1)))
                        );
                    }
                }
            }
            doc.hline(&f, 1.0);
            doc.hline(&f, -1.0);
            doc.legend(&chart.lines.iter().map(|l| l.label.clone()).collect::<Vec<_>>());
            Ok(doc.finish())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inference::TestFamily;
    use crate::viz::charts::dependence_plot_data;
    use crate::viz::ifs::ifs_circle_transform;
    use crate::viz::patterns::{cycle_lengths, rate_evolution};
    use crate::CategoricalSeries;

    fn s1() -> CategoricalSeries {
        CategoricalSeries::from_one_based(&[1, 2, 1, 1, 2], 2).unwrap()
    }

    #[test]
    fn deterministic_output() {
        let data = PlotData::RateEvolution(rate_evolution(&s1()));
        let a = render_svg(&data, &StyleOptions::default()).unwrap();
        let b = render_svg(&data, &StyleOptions::default()).unwrap();
        assert_eq!(a, b);
        assert!(a.contains("viewBox=\"0 0 800 500\""));
        assert!(a.contains("<style>"));
        assert!(!a.contains("@font-face") && !a.contains("@import"));
        assert_eq!(a.matches("<polyline").count(), 2);
    }

    #[test]
    fn histogram_has_two_equal_bars() {
        let data = PlotData::Histogram(cycle_lengths(&s1(), 0).unwrap());
        let svg = render_svg(&data, &StyleOptions::default()).unwrap();
        let heights: Vec<&str> = svg
            .lines()
            .filter(|l| l.starts_with("<rect class=\"bar\""))
            .map(|l| l.split("height=\"").nth(1).unwrap().split('"').next().unwrap())
            .collect();
        assert_eq!(heights.len(), 2);
        assert_eq!(heights[0], heights[1]);
    }

    #[test]
    fn dependence_plot_stems_and_limits() {
        let codes: Vec<usize> = (0..200).map(|t| (t * 7 + t / 3) % 3 + 1).collect();
        let s = CategoricalSeries::from_one_based(&codes, 3).unwrap();
        let kappa = dependence_plot_data(&s, TestFamily::CohensKappa, 10, 0.05).unwrap();
        let svg = render_svg(&PlotData::Dependence(kappa), &StyleOptions::default()).unwrap();
        assert_eq!(svg.matches("class=\"stem\"").count(), 10);
        assert_eq!(svg.matches("<line class=\"limit\"").count(), 2);
        let v = dependence_plot_data(&s, TestFamily::CramersV, 6, 0.05).unwrap();
        let svg = render_svg(&PlotData::Dependence(v), &StyleOptions::default()).unwrap();
        assert_eq!(svg.matches("class=\"stem\"").count(), 6);
        assert_eq!(svg.matches("<line class=\"limit\"").count(), 1);
    }

    #[test]
    fn time_series_carries_caveat() {
        let s = s1();
        let data = PlotData::TimeSeries {
            codes: s.codes().to_vec(),
            symbols: s.alphabet().symbols().to_vec(),
        };
        let svg = render_svg(&data, &StyleOptions::default()).unwrap();
        assert!(svg.contains(NOMINAL_CAVEAT));
    }

    #[test]
    fn ifs_window_filters_points() {
        let s = CategoricalSeries::from_one_based(&[1, 1, 1, 2, 1, 1, 1], 2).unwrap();
        let fs = ifs_circle_transform(&s, 0.17, 0.10, [0.0, 0.0]).unwrap();
        let w = Window { x0: 0.117, x1: 0.120, y0: -0.025, y1: 0.025 };
        let inside = fs.count_in(&w);
        let svg = render_svg(&PlotData::Ifs { series: fs, window: Some(w) }, &StyleOptions::default()).unwrap();
        assert_eq!(svg.matches("<circle").count(), inside);
    }

    #[test]
    fn empty_data_is_rejected() {
        let data = PlotData::TimeSeries { codes: vec![], symbols: vec!["a".into()] };
        assert!(render_svg(&data, &StyleOptions::default()).is_err());
        let rate = RateEvolution { symbols: vec!["a".into()], cumulative: vec![] };
        assert!(render_svg(&PlotData::RateEvolution(rate), &StyleOptions::default()).is_err());
    }

    #[test]
    fn titles_are_escaped() {
        let style = StyleOptions { title: Some("a<b & c".into()), point_radius: None };
        let svg = render_svg(&PlotData::RateEvolution(rate_evolution(&s1())), &style).unwrap();
        assert!(svg.contains("a&lt;b &amp; c"));
    }
}
